"""Self-contained ROUGE-1 / ROUGE-2 / ROUGE-L scoring.

Single reference, no stemming, no stopword removal; ROUGE-L runs one
LCS over the whole token sequence. Degenerate inputs (either side
empty) score zero instead of raising, so corpus runs never abort on a
bad row.
"""

from __future__ import annotations

import dataclasses
from collections import Counter

from .text_core import TokenSeq

VARIANTS = ("R1", "R2", "RL")


@dataclasses.dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    variant: str


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _score(matches: float, candidate_total: int, reference_total: int, variant: str) -> RougeScore:
    precision = matches / candidate_total if candidate_total else 0.0
    recall = matches / reference_total if reference_total else 0.0
    return RougeScore(precision=precision, recall=recall, f1=_f1(precision, recall), variant=variant)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(reference: TokenSeq, candidate: TokenSeq, n: int) -> RougeScore:
    """Clipped n-gram overlap: each n-gram counts at most min(candidate
    count, reference count) times."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    ref_counts = _ngrams(reference.tokens, n)
    cand_counts = _ngrams(candidate.tokens, n)
    matches = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    return _score(matches, sum(cand_counts.values()), sum(ref_counts.values()), f"R{n}")


def rouge_l(reference: TokenSeq, candidate: TokenSeq) -> RougeScore:
    """LCS-based score over the full token sequences."""
    lcs = _lcs_length(reference.tokens, candidate.tokens)
    return _score(lcs, len(candidate.tokens), len(reference.tokens), "RL")


def _lcs_length(xs: list[str], ys: list[str]) -> int:
    # Rolling single-row DP; O(len(xs) * len(ys)) time, O(len(ys)) space.
    if not xs or not ys:
        return 0
    row = [0] * (len(ys) + 1)
    for x in xs:
        prev = 0
        for j, y in enumerate(ys, start=1):
            cur = row[j]
            if x == y:
                row[j] = prev + 1
            elif row[j - 1] > row[j]:
                row[j] = row[j - 1]
            prev = cur
    return row[len(ys)]


def score_all(reference: TokenSeq, candidate: TokenSeq) -> dict[str, RougeScore]:
    return {
        "R1": rouge_n(reference, candidate, 1),
        "R2": rouge_n(reference, candidate, 2),
        "RL": rouge_l(reference, candidate),
    }
