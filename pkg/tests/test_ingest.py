from collections import Counter
from datetime import datetime, timezone
from pathlib import Path

import pytest

from fragscore.config import Config
from fragscore.errors import ExtractionError, FetchError, SchemaError, UrlError
from fragscore.ingest import (
    Entry,
    RawPage,
    assign_split,
    canonicalize_url,
    dedup,
    extract_body,
    extract_summary_metadata,
    fetch_snapshot,
    filter_reason,
    ingest_pages,
    iter_fixture_dir,
    iter_manifest,
    page_url_hint,
    parse_timestamp,
    process_page,
    publication_for,
)
from fragscore.text_core import tokenize

DATA = Path(__file__).parent / "data"

UTC = timezone.utc


def make_page_html(summary="An editor-written summary of the story.", n_paragraphs=2, url=""):
    paragraphs = "\n".join(
        f"<p>Paragraph {k} of the story body carries well over five words of content.</p>"
        for k in range(n_paragraphs)
    )
    og_url = f'<meta property="og:url" content="{url}">' if url else ""
    meta = f'<meta property="og:description" content="{summary}">' if summary else ""
    return f"""<html><head><title>Story Title</title>{meta}{og_url}</head>
    <body><nav><a href="/">Home</a> <a href="/x">More</a></nav>
    <article>{paragraphs}</article>
    <footer>About us and other site boilerplate links and legal text</footer></body></html>"""


# --- canonicalize_url -------------------------------------------------------


def test_canonicalize_strips_scheme_port_query_fragment():
    assert canonicalize_url("HTTP://Example.com:80/A/b?x=1#top") == "example.com/A/b"


def test_canonicalize_idempotent():
    urls = [
        "https://News.site.com/Path/To/Item/",
        "http://a.b.c:8080/x?q=1",
        "site.org/plain",
    ]
    for url in urls:
        once = canonicalize_url(url)
        assert canonicalize_url(once) == once


def test_canonicalize_merges_scheme_and_slash_variants():
    assert canonicalize_url("https://site.com/path/") == canonicalize_url("http://site.com/path")


def test_canonicalize_preserves_path_case():
    assert canonicalize_url("https://Site.com/CamelCase/Path") == "site.com/CamelCase/Path"


def test_canonicalize_rejects_garbage():
    for bad in ("", "   ", "http://", "///nothing"):
        with pytest.raises(UrlError):
            canonicalize_url(bad)


def test_publication_for():
    assert publication_for("www.example.com/a/b") == "example.com"
    assert publication_for("news.example.co.uk/a") == "news.example.co.uk"


# --- assign_split -----------------------------------------------------------


def test_assign_split_deterministic():
    url = "example.com/news/42"
    assert assign_split(url) == assign_split(url)


def test_assign_split_empty_errors():
    with pytest.raises(UrlError):
        assign_split("")


def test_assign_split_distribution():
    counts = Counter()
    n = 100_000
    for k in range(n):
        counts[assign_split(f"s{k % 23}.com/a/{k}")] += 1
    assert abs(counts["train"] / n - 0.76) < 0.01
    for split in ("dev", "test", "unreleased"):
        assert abs(counts[split] / n - 0.08) < 0.01


def test_assign_split_golden_vector():
    for line in (DATA / "split_golden.tsv").read_text(encoding="utf-8").splitlines():
        url, expected = line.split("\t")
        assert assign_split(url) == expected, url


def test_assign_split_unknown_hash_identity():
    cfg = Config()
    cfg.split_hash = "md5-32"
    with pytest.raises(SchemaError):
        assign_split("example.com/a", cfg)


# --- metadata extraction ----------------------------------------------------


def test_metadata_priority_og_wins():
    html = """<head>
    <meta name="description" content="plain description">
    <meta name="twitter:description" content="twitter text">
    <meta property="og:description" content="og text">
    </head>"""
    assert extract_summary_metadata(html) == ("og text", "og")


def test_metadata_twitter_then_description():
    html = '<meta name="twitter:description" content="tw"><meta name="description" content="d">'
    assert extract_summary_metadata(html) == ("tw", "twitter")
    assert extract_summary_metadata('<meta name="description" content="only d">') == (
        "only d",
        "description",
    )


def test_metadata_empty_fields_are_skipped():
    html = """<meta property="og:description" content="">
    <meta name="twitter:description" content="  ">
    <meta name="description" content="">"""
    assert extract_summary_metadata(html) is None
    assert extract_summary_metadata("<html><body><p>no meta</p></body></html>") is None


def test_metadata_entities_and_whitespace():
    html = '<meta property="og:description" content="Tom &amp; Jerry   ran\n home">'
    assert extract_summary_metadata(html) == ("Tom & Jerry ran home", "og")


def test_metadata_empty_og_falls_through():
    html = '<meta property="og:description" content=""><meta name="description" content="fallback">'
    assert extract_summary_metadata(html) == ("fallback", "description")


# --- body extraction --------------------------------------------------------


def test_body_minimal_article():
    html = "<html><body><article><p>" + " ".join(f"word{k}" for k in range(20)) + "</p></article></body></html>"
    title, text = extract_body(html)
    assert text == " ".join(f"word{k}" for k in range(20))


def test_body_short_paragraphs_excluded():
    html = "<body><p>Three words only.</p><p>Another tiny one.</p></body>"
    with pytest.raises(ExtractionError):
        extract_body(html)


def test_body_five_word_threshold():
    html = "<body><p>One two three four five.</p><p>One two three four.</p></body>"
    title, text = extract_body(html)
    assert text == "One two three four five."


def test_body_golden_fixture():
    html = (DATA / "fixture_article.html").read_text(encoding="utf-8")
    title, text = extract_body(html)
    paragraphs = text.split("\n\n")
    assert title == "Council Approves New Transit Plan"
    assert len(paragraphs) == 2
    assert paragraphs[0].startswith("The city council voted on Tuesday")
    assert paragraphs[1].startswith("Construction of the first corridor")
    assert "Subscribe" not in text
    assert "navigation" not in text.lower()


def test_body_link_density_filter():
    links = " ".join(f'<a href="/{k}">Linked text piece number {k} here</a>' for k in range(4))
    html = f"<body><div>{links}</div><p>A real paragraph with plenty of ordinary words in it.</p></body>"
    title, text = extract_body(html)
    assert text == "A real paragraph with plenty of ordinary words in it."


def test_body_title_fallback_to_h1():
    html = "<body><h1>Headline Here</h1><p>Body paragraph with more than five words total.</p></body>"
    title, text = extract_body(html)
    assert title == "Headline Here"
    assert "Headline" not in text


def test_page_url_hint():
    assert page_url_hint('<meta property="og:url" content="https://x.com/a">') == "https://x.com/a"
    assert page_url_hint('<link rel="canonical" href="https://y.com/b">') == "https://y.com/b"
    assert page_url_hint("<p>nothing</p>") == ""


# --- pair filtering ---------------------------------------------------------


def _words(n, prefix="w"):
    return " ".join(f"{prefix}{k}" for k in range(n))


def test_filter_copied_lede():
    lede = "The council approved the plan on Tuesday after a long debate."
    article = tokenize(lede + " " + _words(120))
    assert filter_reason(article, tokenize(lede)) == "copied-lede"


def test_filter_verbatim_overflowing_lede_window():
    # One fragment covering the whole summary, anchored at token 80 but
    # running past token 100: the contiguous-in-window rule misses it,
    # the verbatim rule catches it.
    body = _words(200)
    summary = tokenize(" ".join(body.split()[80:150]))
    assert filter_reason(tokenize(body), summary) == "verbatim-summary"


def test_filter_keeps_abstractive_pair():
    article = tokenize(_words(150))
    summary = tokenize("w1 w2 fresh language mostly new here")
    assert filter_reason(article, summary) is None


def test_filter_keeps_deep_verbatim_quote():
    body = _words(600)
    summary = tokenize(" ".join(body.split()[500:530]))
    assert filter_reason(tokenize(body), summary) is None


def test_filter_empty_sides_keep():
    assert filter_reason(tokenize(""), tokenize("a b")) is None
    assert filter_reason(tokenize("a b"), tokenize("")) is None


# --- dedup ------------------------------------------------------------------


def _entry(url, canonical, when):
    return Entry(
        url=url,
        canonical_url=canonical,
        date=when,
        title="t",
        text="body",
        summary="s",
        summary_source="og",
        publication=publication_for(canonical),
        split=assign_split(canonical),
    )


def test_dedup_earliest_wins():
    early = _entry("http://a.com/x?v=1", "a.com/x", datetime(2010, 1, 1, tzinfo=UTC))
    late = _entry("http://a.com/x?v=2", "a.com/x", datetime(2012, 1, 1, tzinfo=UTC))
    assert dedup([late, early]) == [early]


def test_dedup_distinct_urls_pass_through():
    entries = [
        _entry(f"http://a.com/{k}", f"a.com/{k}", datetime(2010, 1, 1, tzinfo=UTC)) for k in range(5)
    ]
    assert dedup(entries) == entries


def test_dedup_timestamp_tie_lexicographic():
    when = datetime(2011, 6, 1, tzinfo=UTC)
    b = _entry("http://a.com/x?b", "a.com/x", when)
    a = _entry("http://a.com/x?a", "a.com/x", when)
    assert dedup([b, a]) == [a]


# --- timestamps -------------------------------------------------------------


def test_parse_timestamp_formats():
    archive = parse_timestamp("20130405060708")
    assert archive == datetime(2013, 4, 5, 6, 7, 8, tzinfo=UTC)
    iso = parse_timestamp("2013-04-05T06:07:08Z")
    assert iso == archive
    naive = parse_timestamp("2013-04-05 06:07:08")
    assert naive == archive
    with pytest.raises(SchemaError):
        parse_timestamp("not-a-time")


def test_entry_json_round_trip():
    entry = _entry("http://a.com/x", "a.com/x", datetime(2010, 2, 3, 4, 5, 6, tzinfo=UTC))
    line = entry.to_json()
    assert '"date":"2010-02-03T04:05:06Z"' in line
    assert Entry.from_json(line) == entry
    with pytest.raises(SchemaError):
        Entry.from_json('{"url": "only"}')


# --- fetch_snapshot ---------------------------------------------------------


def test_fetch_disabled_by_default():
    with pytest.raises(FetchError, match="disabled"):
        fetch_snapshot("http://example.com/a", datetime(2012, 1, 1, tzinfo=UTC))


class _FakeResponse:
    def __init__(self, status_code, text=""):
        self.status_code = status_code
        self.text = text


class _FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get(self, url, timeout=None):
        self.calls.append(url)
        return self.responses.pop(0)


def _network_cfg():
    cfg = Config()
    cfg.network_enabled = True
    cfg.archive_delay_seconds = 0.0
    return cfg


def test_fetch_snapshot_success_and_url_shape():
    session = _FakeSession([_FakeResponse(200, "<html>ok</html>")])
    when = datetime(2012, 3, 4, 5, 6, 7, tzinfo=UTC)
    page = fetch_snapshot("http://example.com/a", when, _network_cfg(), session=session)
    assert page.html == "<html>ok</html>"
    assert page.url == "http://example.com/a"
    assert page.timestamp == when
    assert session.calls == ["https://web.archive.org/web/20120304050607/http://example.com/a"]


def test_fetch_snapshot_404_no_retry():
    session = _FakeSession([_FakeResponse(404)])
    with pytest.raises(FetchError) as info:
        fetch_snapshot("http://example.com/a", datetime(2012, 1, 1, tzinfo=UTC), _network_cfg(), session=session)
    assert info.value.status == 404
    assert len(session.calls) == 1


def test_fetch_snapshot_retries_server_error_once():
    session = _FakeSession([_FakeResponse(503), _FakeResponse(200, "fine")])
    page = fetch_snapshot("http://example.com/a", datetime(2012, 1, 1, tzinfo=UTC), _network_cfg(), session=session)
    assert page.html == "fine"
    assert len(session.calls) == 2

    session = _FakeSession([_FakeResponse(503), _FakeResponse(502)])
    with pytest.raises(FetchError) as info:
        fetch_snapshot("http://example.com/a", datetime(2012, 1, 1, tzinfo=UTC), _network_cfg(), session=session)
    assert info.value.status == 502
    assert len(session.calls) == 2


# --- page -> entry pipeline -------------------------------------------------


def test_process_page_full():
    page = RawPage(
        url="https://www.news-site.com/2013/story?utm=1",
        timestamp=datetime(2013, 5, 6, tzinfo=UTC),
        html=make_page_html(),
    )
    entry = process_page(page)
    assert entry.canonical_url == "www.news-site.com/2013/story"
    assert entry.publication == "news-site.com"
    assert entry.summary == "An editor-written summary of the story."
    assert entry.summary_source == "og"
    assert entry.title == "Story Title"
    assert entry.split == assign_split(entry.canonical_url)
    assert "Paragraph 0" in entry.text and "Paragraph 1" in entry.text
    assert "Home" not in entry.text


def test_process_page_missing_summary():
    page = RawPage("http://x.com/a", datetime(2013, 1, 1, tzinfo=UTC), make_page_html(summary=""))
    with pytest.raises(ExtractionError, match="no-summary"):
        process_page(page)


def test_process_page_filtered_lede_copy():
    body_sentence = "The mayor announced a citywide initiative to modernize public transit service."
    html = f"""<html><head><meta property="og:description" content="{body_sentence}"></head>
    <body><p>{body_sentence}</p><p>Further coverage follows with several more words of reporting detail.</p></body></html>"""
    page = RawPage("http://x.com/a", datetime(2013, 1, 1, tzinfo=UTC), html)
    with pytest.raises(ExtractionError, match="filtered:copied-lede"):
        process_page(page)


def test_ingest_pages_dedup_and_skips(tmp_path):
    good = RawPage("http://a.com/story", datetime(2013, 1, 2, tzinfo=UTC), make_page_html())
    dup = RawPage("https://a.com/story/", datetime(2014, 1, 2, tzinfo=UTC), make_page_html())
    bad = RawPage("http://b.com/empty", datetime(2013, 1, 2, tzinfo=UTC), make_page_html(summary=""))
    entries, skipped = ingest_pages([good, dup, bad])
    assert [e.url for e in entries] == ["http://a.com/story"]
    assert skipped == [("http://b.com/empty", "no-summary: page has no description metadata")]


def test_iter_fixture_dir(tmp_path):
    (tmp_path / "b_page.html").write_text(make_page_html(url="https://b.com/x"), encoding="utf-8")
    (tmp_path / "a_page.html").write_text(make_page_html(), encoding="utf-8")
    pages = list(iter_fixture_dir(tmp_path))
    assert [p.url for p in pages] == ["file://a_page", "https://b.com/x"]
    assert all(p.timestamp == datetime(1970, 1, 1, tzinfo=UTC) for p in pages)


def test_iter_manifest_offline(tmp_path):
    (tmp_path / "page1.html").write_text(make_page_html(), encoding="utf-8")
    manifest = tmp_path / "manifest.tsv"
    manifest.write_text(
        "# url timestamp file\nhttp://m.com/one\t20120304050607\tpage1.html\n",
        encoding="utf-8",
    )
    pages = list(iter_manifest(manifest))
    assert len(pages) == 1
    assert pages[0].url == "http://m.com/one"
    assert pages[0].timestamp == datetime(2012, 3, 4, 5, 6, 7, tzinfo=UTC)

    manifest.write_text("justonecolumn\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        list(iter_manifest(manifest))


def test_manifest_without_file_requires_network(tmp_path):
    manifest = tmp_path / "manifest.tsv"
    manifest.write_text("http://m.com/one\t20120304050607\n", encoding="utf-8")
    with pytest.raises(FetchError, match="disabled"):
        list(iter_manifest(manifest))
