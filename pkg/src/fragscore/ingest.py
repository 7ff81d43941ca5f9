"""Turn raw HTML pages into clean, deduplicated, split-assigned entries.

The pipeline per page: pull the summary out of page metadata, extract
the main body text with a block-scoring heuristic, canonicalize the
URL, then drop pairs whose summary is an automated copy of the article
lede. Dedup keeps the earliest snapshot per canonical URL and the
train/dev/test/unreleased split is a pure function of the canonical
URL, so the whole pipeline is reproducible byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import threading
import time
from datetime import datetime, timezone
from hashlib import sha256
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Iterator
from urllib.parse import urlsplit

from .config import Config
from .errors import ExtractionError, FetchError, SchemaError, UrlError
from .fragments import extract_fragments
from .text_core import TokenSeq, is_word_token, tokenize

SPLIT_TRAIN = "train"
SPLIT_DEV = "dev"
SPLIT_TEST = "test"
SPLIT_UNRELEASED = "unreleased"

SUMMARY_SOURCES = ("og", "twitter", "description")

_ENTRY_FIELDS = (
    "url",
    "canonical_url",
    "date",
    "title",
    "text",
    "summary",
    "summary_source",
    "publication",
    "split",
)

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclasses.dataclass
class RawPage:
    url: str
    timestamp: datetime
    html: str


@dataclasses.dataclass
class Entry:
    url: str
    canonical_url: str
    date: datetime
    title: str
    text: str
    summary: str
    summary_source: str
    publication: str
    split: str

    def to_json(self) -> str:
        row = {name: getattr(self, name) for name in _ENTRY_FIELDS}
        row["date"] = format_timestamp(self.date)
        return json.dumps(row, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Entry":
        try:
            row = json.loads(line)
            row = {name: row[name] for name in _ENTRY_FIELDS}
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise SchemaError(f"bad entry row: {exc}") from exc
        row["date"] = parse_timestamp(row["date"])
        return cls(**row)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(value: str) -> datetime:
    """Accept archive-style YYYYMMDDhhmmss or ISO-8601; naive values are
    taken as UTC."""
    value = value.strip()
    try:
        if value.isdigit() and len(value) == 14:
            parsed = datetime.strptime(value, "%Y%m%d%H%M%S")
        else:
            parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise SchemaError(f"unparseable timestamp {value!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


# --- URL handling -----------------------------------------------------------


def canonicalize_url(url: str) -> str:
    """Reduce a URL to host + path: lowercased host; scheme, port, query
    and fragment dropped; trailing slashes stripped; path case kept."""
    if not url or not url.strip():
        raise UrlError("cannot canonicalize an empty URL")
    candidate = url.strip()
    if "://" not in candidate:
        candidate = "http://" + candidate
    try:
        parsed = urlsplit(candidate)
        host = parsed.hostname
    except ValueError as exc:
        raise UrlError(f"cannot canonicalize {url!r}: {exc}") from exc
    if not host:
        raise UrlError(f"cannot canonicalize {url!r}: no host")
    return host + parsed.path.rstrip("/")


def publication_for(canonical_url: str) -> str:
    """Grouping key for per-publication analysis: the host with any
    leading 'www.' stripped."""
    host = canonical_url.split("/", 1)[0]
    return host[4:] if host.startswith("www.") else host


def assign_split(canonical_url: str, config: Config | None = None) -> str:
    """Stable split assignment: first 8 bytes of SHA-256 of the
    canonical URL, big-endian, mod 100. The bucket boundaries come from
    the configured percentages (default 76/8/8/8)."""
    if not canonical_url:
        raise UrlError("assign_split requires a nonempty canonical URL")
    cfg = config or Config()
    if cfg.split_hash != "sha256-64":
        raise SchemaError(f"unknown split hash identity {cfg.split_hash!r}")
    digest = sha256(canonical_url.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:8], "big") % 100
    if bucket < cfg.split_train_pct:
        return SPLIT_TRAIN
    if bucket < cfg.split_train_pct + cfg.split_dev_pct:
        return SPLIT_DEV
    if bucket < cfg.split_train_pct + cfg.split_dev_pct + cfg.split_test_pct:
        return SPLIT_TEST
    return SPLIT_UNRELEASED


# --- HTML parsing -----------------------------------------------------------

_SKIP_TAGS = frozenset(
    {
        "script", "style", "noscript", "template", "svg", "iframe",
        "form", "button", "select", "option", "nav", "header", "footer",
        "aside", "figure", "figcaption",
    }
)

_BLOCK_TAGS = frozenset(
    {
        "p", "div", "section", "article", "main", "li", "ul", "ol",
        "blockquote", "pre", "table", "tr", "td", "th", "br",
        "h1", "h2", "h3", "h4", "h5", "h6",
    }
)

_VOID_TAGS = frozenset({"br", "hr", "img", "meta", "link", "input", "source", "wbr", "area", "base", "embed", "col", "param", "track"})


class _PageParser(HTMLParser):
    """One pass over the page: meta tags, title, and text blocks with
    per-block link-character counts for the density penalty."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.meta: dict[str, str] = {}
        self.title_parts: list[str] = []
        self.h1_parts: list[str] = []
        self.canonical_href: str = ""
        self.blocks: list[tuple[str, int]] = []
        self._buffer: list[str] = []
        self._link_chars = 0
        self._skip_depth = 0
        self._in_title = False
        self._in_h1 = False
        self._link_depth = 0

    # -- bookkeeping

    def _flush_block(self):
        text = _collapse_ws("".join(self._buffer))
        if text:
            self.blocks.append((text, self._link_chars))
        self._buffer = []
        self._link_chars = 0

    def handle_starttag(self, tag, attrs):
        if tag in _VOID_TAGS:
            if tag == "meta":
                self._handle_meta(dict(attrs))
            elif tag == "link":
                attr_map = {k.lower(): (v or "") for k, v in attrs}
                if attr_map.get("rel", "").lower() == "canonical":
                    self.canonical_href = attr_map.get("href", "")
            elif tag == "br":
                self._flush_block()
            return
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = True
        elif tag == "h1":
            self._in_h1 = True
            self._flush_block()
        elif tag == "a":
            self._link_depth += 1
        elif tag in _BLOCK_TAGS:
            self._flush_block()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = False
        elif tag == "h1":
            self._in_h1 = False
            self._flush_block()
        elif tag == "a":
            self._link_depth = max(0, self._link_depth - 1)
        elif tag in _BLOCK_TAGS:
            self._flush_block()

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title_parts.append(data)
            return
        if self._in_h1:
            # Page headline: feeds the title fallback, never the body.
            self.h1_parts.append(data)
            return
        self._buffer.append(data)
        if self._link_depth:
            self._link_chars += len(data.strip())

    def close(self):
        super().close()
        self._flush_block()

    def _handle_meta(self, attrs):
        attrs = {str(k).lower(): (v or "") for k, v in attrs.items()}
        key = (attrs.get("property") or attrs.get("name") or "").strip().lower()
        content = _collapse_ws(attrs.get("content", ""))
        if key and content and key not in self.meta:
            self.meta[key] = content


def _collapse_ws(text: str) -> str:
    return " ".join(text.split())


def _parse_page(html: str) -> _PageParser:
    parser = _PageParser()
    parser.feed(html)
    parser.close()
    return parser


def extract_summary_metadata(html: str) -> tuple[str, str] | None:
    """Return (summary, source) from page metadata, trying
    og:description, then twitter:description, then description. None
    when no field holds nonempty text."""
    parser = _parse_page(html)
    for key, source in (
        ("og:description", "og"),
        ("twitter:description", "twitter"),
        ("description", "description"),
    ):
        value = parser.meta.get(key, "")
        if value:
            return value, source
    return None


def extract_body(
    html: str,
    min_paragraph_words: int = 5,
    max_link_density: float = 0.5,
) -> tuple[str, str]:
    """Extract (title, body text) from a page.

    Text blocks survive when they carry at least min_paragraph_words
    word tokens and their link-text share stays under max_link_density;
    boilerplate containers (nav, header, footer, ...) are skipped during
    parsing. Raises ExtractionError when nothing survives.
    """
    parser = _parse_page(html)
    kept = []
    for text, link_chars in parser.blocks:
        total_chars = len(text)
        if total_chars == 0:
            continue
        if link_chars / total_chars > max_link_density:
            continue
        words = sum(1 for tok in tokenize(text).tokens if is_word_token(tok))
        if words < min_paragraph_words:
            continue
        kept.append(text)
    if not kept:
        raise ExtractionError("no-body: no paragraph passed extraction filters")
    title = _collapse_ws("".join(parser.title_parts)) or _collapse_ws("".join(parser.h1_parts))
    return title, "\n\n".join(kept)


def page_url_hint(html: str) -> str:
    """Best-effort URL recorded inside the page itself (og:url or a
    canonical link); empty string when absent."""
    parser = _parse_page(html)
    return parser.meta.get("og:url", "") or parser.canonical_href


# --- pair filtering ---------------------------------------------------------


def filter_reason(
    article: TokenSeq,
    summary: TokenSeq,
    lede_window_tokens: int = 100,
    verbatim_coverage_threshold: float = 0.99,
) -> str | None:
    """Reason to drop an automated lede-copy pair, or None to keep it.

    Two triggers: the whole summary occurs contiguously inside the
    article's opening window, or a single fragment anchored in that
    window covers (nearly) the whole summary. Verbatim reuse from deep
    in the article is deliberate quoting, not boilerplate, and is kept.
    """
    if len(summary) == 0 or len(article) == 0:
        return None
    window = article.tokens[: lede_window_tokens]
    if _occurs_contiguously(summary.tokens, window):
        return "copied-lede"
    fset = extract_fragments(article, summary)
    if (
        len(fset.fragments) == 1
        and fset.fragments[0].length >= verbatim_coverage_threshold * len(summary)
        and fset.fragments[0].article_start < lede_window_tokens
    ):
        return "verbatim-summary"
    return None


def filter_pair(entry: Entry, config: Config | None = None) -> str | None:
    cfg = config or Config()
    return filter_reason(
        tokenize(entry.text),
        tokenize(entry.summary),
        lede_window_tokens=cfg.lede_window_tokens,
        verbatim_coverage_threshold=cfg.verbatim_coverage_threshold,
    )


def _occurs_contiguously(needle: list[str], haystack: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    first = needle[0]
    for start in range(len(haystack) - len(needle) + 1):
        if haystack[start] == first and haystack[start : start + len(needle)] == needle:
            return True
    return False


# --- deduplication ----------------------------------------------------------


def dedup(entries: Iterable[Entry]) -> list[Entry]:
    """One entry per canonical URL: the earliest snapshot wins, ties on
    timestamp break toward the lexicographically smallest raw URL.
    Output keeps the first-seen order of canonical URLs."""
    winners: dict[str, Entry] = {}
    order: list[str] = []
    for entry in entries:
        key = entry.canonical_url
        current = winners.get(key)
        if current is None:
            winners[key] = entry
            order.append(key)
        elif (entry.date, entry.url) < (current.date, current.url):
            winners[key] = entry
    return [winners[key] for key in order]


# --- snapshot fetching ------------------------------------------------------

ARCHIVE_URL_TEMPLATE = "https://web.archive.org/web/{timestamp}/{url}"

_host_lock = threading.Lock()
_last_request: dict[str, float] = {}


def _respect_delay(host: str, delay_seconds: float) -> None:
    with _host_lock:
        now = time.monotonic()
        wait = _last_request.get(host, -delay_seconds) + delay_seconds - now
        if wait > 0:
            time.sleep(wait)
            now = time.monotonic()
        _last_request[host] = now


def fetch_snapshot(url: str, timestamp: datetime, config: Config | None = None, session=None) -> RawPage:
    """Fetch one archived snapshot of a URL.

    Transient failures (connection errors, 5xx) get a single retry;
    anything else fails immediately with the HTTP status attached.
    Requests to the archive host are spaced by the configured delay.
    """
    cfg = config or Config()
    if not cfg.network_enabled:
        raise FetchError(
            "network fetching is disabled; set network_enabled=true in the "
            "config or ingest from an offline fixture directory"
        )
    import requests

    archive_url = ARCHIVE_URL_TEMPLATE.format(
        timestamp=timestamp.astimezone(timezone.utc).strftime("%Y%m%d%H%M%S"), url=url
    )
    client = session or requests
    last_error: Exception | None = None
    for attempt in range(2):
        _respect_delay("web.archive.org", cfg.archive_delay_seconds)
        try:
            response = client.get(archive_url, timeout=60)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if response.status_code == 200:
            return RawPage(url=url, timestamp=timestamp, html=response.text)
        if response.status_code >= 500:
            last_error = FetchError(f"archive returned {response.status_code} for {url}", status=response.status_code)
            continue
        raise FetchError(f"archive returned {response.status_code} for {url}", status=response.status_code)
    status = getattr(last_error, "status", None)
    raise FetchError(f"snapshot fetch failed for {url}: {last_error}", status=status)


# --- input sources ----------------------------------------------------------


def iter_fixture_dir(path: str | Path) -> Iterator[RawPage]:
    """Read every .html file under a directory as a snapshot. The page
    URL comes from og:url or the canonical link when present, otherwise
    from the filename; timestamps default to the epoch so reruns are
    byte-identical."""
    root = Path(path)
    for file in sorted(root.glob("*.html")):
        html = file.read_text(encoding="utf-8", errors="replace")
        url = page_url_hint(html) or f"file://{file.stem}"
        yield RawPage(url=url, timestamp=EPOCH, html=html)


def iter_manifest(path: str | Path, config: Config | None = None) -> Iterator[RawPage]:
    """Read a TSV manifest: url<TAB>timestamp[<TAB>html-file]. Rows with
    a file column load from disk (relative to the manifest); the rest
    are fetched from the archive."""
    manifest = Path(path)
    for lineno, raw in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise SchemaError(f"{manifest}:{lineno}: expected url<TAB>timestamp[<TAB>file]")
        url, stamp = parts[0], parse_timestamp(parts[1])
        if len(parts) == 3:
            html = (manifest.parent / parts[2]).read_text(encoding="utf-8", errors="replace")
            yield RawPage(url=url, timestamp=stamp, html=html)
        else:
            yield fetch_snapshot(url, stamp, config)


# --- page -> entry ----------------------------------------------------------


def process_page(page: RawPage, config: Config | None = None) -> Entry:
    """Extract one Entry from a snapshot; raises ExtractionError with a
    reason when the page must be excluded."""
    cfg = config or Config()
    found = extract_summary_metadata(page.html)
    if found is None:
        raise ExtractionError("no-summary: page has no description metadata")
    summary, source = found
    title, text = extract_body(
        page.html,
        min_paragraph_words=cfg.min_paragraph_words,
        max_link_density=cfg.max_link_density,
    )
    canonical = canonicalize_url(page.url)
    entry = Entry(
        url=page.url,
        canonical_url=canonical,
        date=page.timestamp,
        title=title,
        text=text,
        summary=summary,
        summary_source=source,
        publication=publication_for(canonical),
        split=assign_split(canonical, cfg),
    )
    reason = filter_pair(entry, cfg)
    if reason is not None:
        raise ExtractionError(f"filtered:{reason}")
    return entry


def ingest_pages(
    pages: Iterable[RawPage], config: Config | None = None
) -> tuple[list[Entry], list[tuple[str, str]]]:
    """Run the full per-page pipeline plus dedup. Returns the kept
    entries and a list of (url, reason) for every skipped page."""
    entries: list[Entry] = []
    skipped: list[tuple[str, str]] = []
    for page in pages:
        try:
            entries.append(process_page(page, config))
        except (ExtractionError, UrlError) as exc:
            skipped.append((page.url, str(exc)))
    return dedup(entries), skipped
