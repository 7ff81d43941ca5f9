"""Greedy extractive-fragment matching between an article and a summary.

Walk the summary left to right. At each position, take the longest
summary prefix that occurs contiguously anywhere in the article and
emit it as a fragment; if the current token never occurs in the
article, it is abstractive and the walk advances one token. Among
equal-length article matches the earliest occurrence wins, which fixes
article positions deterministically without affecting any
length-derived measure.
"""

from __future__ import annotations

import dataclasses
from collections import defaultdict

from .text_core import TokenSeq


@dataclasses.dataclass(frozen=True)
class Fragment:
    """A shared token run: summary[summary_start : summary_start+length]
    equals article[article_start : article_start+length]."""

    summary_start: int
    article_start: int
    length: int


@dataclasses.dataclass
class FragmentSet:
    fragments: list[Fragment]
    summary_len: int
    article_len: int

    def lengths(self) -> list[int]:
        return [f.length for f in self.fragments]

    def covered_tokens(self) -> int:
        return sum(f.length for f in self.fragments)


def extract_fragments(article: TokenSeq, summary: TokenSeq) -> FragmentSet:
    """Compute the fragment decomposition of a summary against an article.

    Matching runs over normalized tokens. An inverted index from article
    token to positions keeps the scan near O(|summary| * occurrences)
    instead of rescanning the whole article at every position.
    """
    a = article.tokens
    s = summary.tokens
    n = len(a)
    m = len(s)

    positions: dict[str, list[int]] = defaultdict(list)
    for j, token in enumerate(a):
        positions[token].append(j)

    fragments: list[Fragment] = []
    i = 0
    while i < m:
        best_len = 0
        best_start = -1
        for j in positions.get(s[i], ()):
            k = 1
            while i + k < m and j + k < n and s[i + k] == a[j + k]:
                k += 1
            if k > best_len:  # strict: earliest occurrence wins ties
                best_len = k
                best_start = j
        if best_len > 0:
            fragments.append(Fragment(i, best_start, best_len))
            i += best_len
        else:
            i += 1
    return FragmentSet(fragments=fragments, summary_len=m, article_len=n)


def dump_fragments(fset: FragmentSet, summary: TokenSeq) -> str:
    """Debug dump, one fragment per line:
    summary_start<TAB>article_start<TAB>length<TAB>text"""
    lines = []
    for f in fset.fragments:
        text = " ".join(summary.raw_tokens[f.summary_start : f.summary_start + f.length])
        lines.append(f"{f.summary_start}\t{f.article_start}\t{f.length}\t{text}")
    return "\n".join(lines)
