"""Overlap measures on fragment decompositions and corpus binning.

Coverage is the fraction of summary tokens inside any fragment. Density
weights each fragment by its squared length, so long verbatim runs push
it up even when coverage is flat. Compression is the article/summary
token ratio. All three use the shared token convention from text_core
(punctuation included).
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Iterable, Sequence

from .errors import MeasurementError, SchemaError
from .fragments import FragmentSet, extract_fragments
from .text_core import TokenSeq

BIN_ABSTRACTIVE = "abstractive"
BIN_MIXED = "mixed"
BIN_EXTRACTIVE = "extractive"
BIN_UNASSIGNED = "unassigned"

BIN_FIELDS = ("density", "coverage", "compression")

_RECORD_FIELDS = (
    "url",
    "coverage",
    "density",
    "compression",
    "article_len",
    "summary_len",
    "fragment_lengths",
    "bin",
)


@dataclasses.dataclass
class AnalysisRecord:
    url: str
    coverage: float
    density: float
    compression: float
    article_len: int
    summary_len: int
    fragment_lengths: list[int]
    bin: str = BIN_UNASSIGNED

    def to_json(self) -> str:
        row = {name: getattr(self, name) for name in _RECORD_FIELDS}
        return json.dumps(row, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "AnalysisRecord":
        try:
            row = json.loads(line)
            return cls(**{name: row[name] for name in _RECORD_FIELDS})
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise SchemaError(f"bad analysis record row: {exc}") from exc


def coverage(fset: FragmentSet) -> float:
    if fset.summary_len == 0:
        raise MeasurementError("coverage undefined for a zero-length summary")
    return fset.covered_tokens() / fset.summary_len


def density(fset: FragmentSet) -> float:
    if fset.summary_len == 0:
        raise MeasurementError("density undefined for a zero-length summary")
    return sum(f.length ** 2 for f in fset.fragments) / fset.summary_len


def compression(article: TokenSeq, summary: TokenSeq) -> float:
    if len(summary) == 0:
        raise MeasurementError("compression undefined for a zero-length summary")
    return len(article) / len(summary)


def analyze_pair(article: TokenSeq, summary: TokenSeq, url: str = "") -> AnalysisRecord:
    """Fragment-match one pair and compute all three measures.

    The bin label is left unassigned; bin_corpus fills it in later from
    corpus-level thresholds.
    """
    fset = extract_fragments(article, summary)
    return AnalysisRecord(
        url=url,
        coverage=coverage(fset),
        density=density(fset),
        compression=compression(article, summary),
        article_len=len(article),
        summary_len=len(summary),
        fragment_lengths=fset.lengths(),
    )


def quantile(sorted_values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile of pre-sorted values (the common
    h = (n-1)q definition)."""
    if not sorted_values:
        raise MeasurementError("quantile of empty data")
    if len(sorted_values) == 1:
        return float(sorted_values[0])
    h = (len(sorted_values) - 1) * q
    lo = math.floor(h)
    hi = math.ceil(h)
    if lo == hi:
        return float(sorted_values[lo])
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


def bin_corpus(
    records: list[AnalysisRecord],
    mode: str = "tercile",
    field: str = "density",
    t1: float | None = None,
    t2: float | None = None,
) -> tuple[list[AnalysisRecord], tuple[float, float]]:
    """Label records as abstractive / mixed / extractive.

    Tercile mode cuts at the 1/3 and 2/3 empirical quantiles of the
    chosen field; fixed mode uses the supplied thresholds. A value equal
    to a threshold goes to the lower bin. Returns the records (labels
    set in place) and the thresholds used.
    """
    if not records:
        raise MeasurementError("bin_corpus needs at least one record")
    if field not in BIN_FIELDS:
        raise MeasurementError(f"unknown binning field {field!r}; expected one of {BIN_FIELDS}")

    if mode == "tercile":
        values = sorted(getattr(r, field) for r in records)
        t1 = quantile(values, 1 / 3)
        t2 = quantile(values, 2 / 3)
    elif mode == "fixed":
        if t1 is None or t2 is None:
            raise MeasurementError("fixed mode needs both thresholds")
        if not t1 < t2:
            raise MeasurementError(f"fixed thresholds must satisfy t1 < t2, got {t1} >= {t2}")
    else:
        raise MeasurementError(f"unknown binning mode {mode!r}")

    for record in records:
        value = getattr(record, field)
        if value <= t1:
            record.bin = BIN_ABSTRACTIVE
        elif value <= t2:
            record.bin = BIN_MIXED
        else:
            record.bin = BIN_EXTRACTIVE
    return records, (t1, t2)


def read_records(lines: Iterable[str]) -> list[AnalysisRecord]:
    return [AnalysisRecord.from_json(line) for line in lines if line.strip()]
