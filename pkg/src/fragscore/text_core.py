"""Deterministic tokenization and sentence segmentation.

Every other module counts tokens the same way: a token is either a
maximal run of letters/digits (internal apostrophes and hyphens kept)
or a single non-space character. Punctuation tokens count toward all
length-based measures. Matching happens on the case-folded form;
emitted text uses the original-case form.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path

# Word: alphanumeric runs joined by internal apostrophes/hyphens
# ("don't", "state-of-the-art", "3-4"). Anything else non-space is a
# single-character token. Underscore is excluded from word characters.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’‘-][^\W_]+)*|\S", re.UNICODE)

_WS_RE = re.compile(r"\s+")

# Terminator run, optional closing quotes/brackets, whitespace, then an
# upper-case letter or digit opening the next sentence.
_BOUNDARY_RE = re.compile(r"([.?!]+)([\"'”’)\]]*)(\s+)(?=[\"'“‘(\[]*[A-Z0-9])")

_PARAGRAPH_RE = re.compile(r"\n\s*\n")

# Token (possibly dotted, e.g. "U.S") immediately preceding a period.
_ABBREV_TAIL_RE = re.compile(r"([^\W\d_]+(?:\.[^\W\d_]+)*)$", re.UNICODE)

DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "rev", "gen",
        "sen", "rep", "gov", "capt", "col", "lt", "maj", "sgt", "dept",
        "univ", "inc", "ltd", "co", "corp", "vs", "etc", "approx", "fig",
        "no", "op", "vol", "e.g", "i.e", "u.s", "u.k", "u.n", "a.m", "p.m",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
        "oct", "nov", "dec",
    }
)


@dataclasses.dataclass
class TokenSeq:
    """A tokenized text: normalized tokens, their raw forms, and the
    half-open token ranges of its sentences (a partition of [0, len))."""

    tokens: list[str]
    raw_tokens: list[str]
    sentence_bounds: list[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.tokens)

    def sentence_tokens(self, index: int) -> list[str]:
        start, end = self.sentence_bounds[index]
        return self.tokens[start:end]


def normalize_token(token: str) -> str:
    return token.casefold()


def is_word_token(token: str) -> bool:
    """True for tokens carrying at least one letter or digit; false for
    pure punctuation. Used for word budgets and paragraph-length rules,
    not for the overlap measures (those count every token)."""
    return any(ch.isalnum() for ch in token)


def word_count(text: str) -> int:
    return sum(1 for tok in _TOKEN_RE.findall(text) if is_word_token(tok))


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Read a stop-list file: one lowercase abbreviation per line, '#'
    starts a comment, trailing periods ignored."""
    entries = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip().lower()
        if line:
            entries.add(line.rstrip("."))
    return frozenset(entries)


def split_sentences(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split text into sentences on [.?!] followed by whitespace and an
    upper-case letter or digit. A period whose preceding word is in the
    abbreviation stop-list does not end a sentence. Paragraph breaks
    (blank lines) always end one. Sentences come back stripped with
    internal whitespace collapsed, so joining them with single spaces
    reproduces the whitespace-collapsed input.
    """
    sentences = []
    for block in _PARAGRAPH_RE.split(text):
        sentences.extend(_split_block(block, abbreviations))
    return sentences


def _split_block(block: str, abbreviations: frozenset[str]) -> list[str]:
    pieces = []
    start = 0
    for match in _BOUNDARY_RE.finditer(block):
        terminators = match.group(1)
        if terminators.endswith(".") and _is_abbreviation(block, match.start(1) + len(terminators) - 1, abbreviations):
            continue
        cut = match.end(2)
        pieces.append(block[start:cut])
        start = match.end(3)
    pieces.append(block[start:])
    return [_WS_RE.sub(" ", piece).strip() for piece in pieces if piece.strip()]


def _is_abbreviation(text: str, dot_index: int, abbreviations: frozenset[str]) -> bool:
    # Abbreviations are short; a bounded look-back keeps scanning linear.
    tail = _ABBREV_TAIL_RE.search(text, max(0, dot_index - 40), dot_index)
    if tail is None:
        return False
    return tail.group(1).lower() in abbreviations


def tokenize(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> TokenSeq:
    """Tokenize text into a TokenSeq with sentence boundaries.

    Tokens never span whitespace and sentence splits only happen at
    whitespace, so tokenizing sentence by sentence yields the same token
    stream as tokenizing the whole text.
    """
    raw_tokens: list[str] = []
    bounds: list[tuple[int, int]] = []
    for sentence in split_sentences(text, abbreviations):
        start = len(raw_tokens)
        raw_tokens.extend(_TOKEN_RE.findall(sentence))
        if len(raw_tokens) > start:
            bounds.append((start, len(raw_tokens)))
    tokens = [normalize_token(tok) for tok in raw_tokens]
    return TokenSeq(tokens=tokens, raw_tokens=raw_tokens, sentence_bounds=bounds)
