"""Corpus-level aggregation: grouped statistics, 2-D histogram grids
for coverage/density plots, ROUGE report tables, and the human-rating
task pack (export and aggregation).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import random
import statistics
from collections import defaultdict
from pathlib import Path

from .errors import ConfigError, MeasurementError, UrlError
from .ingest import canonicalize_url, publication_for
from .measures import BIN_ABSTRACTIVE, BIN_EXTRACTIVE, BIN_MIXED, AnalysisRecord

log = logging.getLogger(__name__)

RATING_DIMENSIONS = ("INF", "REL", "FLU", "COH")
RATERS_PER_PAIR = 3

DEFAULT_PROMPTS = {
    # Operator-editable placeholders; replace with the wording used by
    # your rating protocol before exporting tasks to raters.
    "INF": "How informative is the summary? Rate on the given scale.",
    "REL": "How relevant is the summary to the article? Rate on the given scale.",
    "FLU": "How fluent are the sentences of the summary? Rate on the given scale.",
    "COH": "How coherent is the summary as a whole? Rate on the given scale.",
}

GROUP_CHOICES = ("publication", "bin", "none")

# Canonical display order for extractiveness bins in grouped reports.
BIN_ORDER = (BIN_EXTRACTIVE, BIN_MIXED, BIN_ABSTRACTIVE)

TASK_COLUMNS = ("task_id", "article_text", "summary_text", "dimension", "prompt", "rating")
KEY_COLUMNS = ("task_id", "system", "url", "dimension", "rater_slot")


# --- 2-D histogram ----------------------------------------------------------


@dataclasses.dataclass
class Histogram2D:
    """Coverage x density counts on a fixed grid: coverage in [0,1]
    split into uniform bins, density in [0, density_cap) with the top
    bin catching everything at or above the cap."""

    coverage_bins: int
    density_bins: int
    density_cap: float
    counts: list[list[float]]  # counts[coverage_bin][density_bin]
    normalization: str = "count"

    @classmethod
    def from_records(
        cls,
        records: list[AnalysisRecord],
        coverage_bins: int = 50,
        density_bins: int = 50,
        density_cap: float = 5.0,
    ) -> "Histogram2D":
        counts = [[0.0] * density_bins for _ in range(coverage_bins)]
        for record in records:
            x = min(int(record.coverage * coverage_bins), coverage_bins - 1)
            y = min(int(record.density / density_cap * density_bins), density_bins - 1)
            counts[x][y] += 1
        return cls(coverage_bins, density_bins, density_cap, counts)

    def total(self) -> float:
        return sum(sum(row) for row in self.counts)

    def to_probability(self) -> "Histogram2D":
        total = self.total()
        if total == 0:
            raise MeasurementError("cannot normalize an empty histogram")
        scaled = [[value / total for value in row] for row in self.counts]
        return Histogram2D(self.coverage_bins, self.density_bins, self.density_cap, scaled, "probability")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["coverage_bin", "density_bin", "value"])
        for x in range(self.coverage_bins):
            for y in range(self.density_bins):
                value = self.counts[x][y]
                writer.writerow([x, y, int(value) if self.normalization == "count" else value])
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "coverage_bins": self.coverage_bins,
                "density_bins": self.density_bins,
                "density_cap": self.density_cap,
                "normalization": self.normalization,
                "counts": self.counts,
            },
            separators=(",", ":"),
        )


# --- grouped statistics -----------------------------------------------------


def _group_key(record: AnalysisRecord, group_by: str) -> str:
    if group_by == "none":
        return "all"
    if group_by == "bin":
        return record.bin
    if group_by == "publication":
        try:
            return publication_for(canonicalize_url(record.url))
        except UrlError:
            return record.url or "unknown"
    raise MeasurementError(f"unknown grouping {group_by!r}; expected one of {GROUP_CHOICES}")


def group_records(records: list[AnalysisRecord], group_by: str) -> dict[str, list[AnalysisRecord]]:
    groups: dict[str, list[AnalysisRecord]] = defaultdict(list)
    for record in records:
        groups[_group_key(record, group_by)].append(record)
    return dict(groups)


def corpus_stats(records: list[AnalysisRecord], group_by: str = "none") -> list[dict]:
    """Per-group count, mean and median of each measure, sorted by
    median compression ascending (group name breaks ties)."""
    if not records:
        raise MeasurementError("corpus_stats needs at least one record")
    rows = []
    for group, members in group_records(records, group_by).items():
        row = {"group": group, "n": len(members)}
        for field in ("coverage", "density", "compression"):
            values = [getattr(r, field) for r in members]
            row[f"{field}_mean"] = statistics.fmean(values)
            row[f"{field}_median"] = statistics.median(values)
        rows.append(row)
    rows.sort(key=lambda row: (row["compression_median"], row["group"]))
    return rows


def stats_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    fields = [
        "group", "n",
        "coverage_mean", "coverage_median",
        "density_mean", "density_median",
        "compression_mean", "compression_median",
    ]
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def plot_data(
    records: list[AnalysisRecord],
    group_by: str = "none",
    normalization: str = "count",
    **grid_kwargs,
) -> dict[str, Histogram2D]:
    """One histogram per group. Groups that end up empty are skipped
    with a warning instead of failing the run."""
    if not records:
        raise MeasurementError("plot_data needs at least one record")
    grids: dict[str, Histogram2D] = {}
    for group, members in sorted(group_records(records, group_by).items()):
        if not members:
            log.warning("plot-data: group %r is empty, skipped", group)
            continue
        grid = Histogram2D.from_records(members, **grid_kwargs)
        grids[group] = grid.to_probability() if normalization == "probability" else grid
    return grids


# --- ROUGE report tables ----------------------------------------------------


def long_report_rows(per_system: dict[str, dict[str, tuple[float, float, float, int]]]) -> list[dict]:
    """Flatten {system: {variant: (p, r, f1, n)}} into the report rows:
    one row per (system, variant)."""
    rows = []
    for system in sorted(per_system):
        for variant in ("R1", "R2", "RL"):
            precision, recall, f1, n_pairs = per_system[system][variant]
            rows.append(
                {
                    "system": system,
                    "variant": variant,
                    "precision": precision,
                    "recall": recall,
                    "f1": f1,
                    "n_pairs": n_pairs,
                }
            )
    return rows


def long_report_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(
        out, fieldnames=["system", "variant", "precision", "recall", "f1", "n_pairs"], lineterminator="\n"
    )
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def group_order(groups: list[str]) -> list[str]:
    """Bins come out in their canonical order; anything else sorts."""
    ordered = [g for g in BIN_ORDER if g in groups]
    ordered.extend(sorted(g for g in groups if g not in BIN_ORDER))
    return ordered


def wide_report_csv(per_group: dict[str, dict[str, dict[str, tuple[float, float, float, int]]]]) -> str:
    """Systems-by-groups table: rows are systems, one column group per
    data subset, columns R1/R2/RL F1."""
    groups = group_order(list(per_group))
    systems = sorted({system for stats in per_group.values() for system in stats})
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["system"]
    for group in groups:
        header.extend([f"{group}_R1", f"{group}_R2", f"{group}_RL"])
    writer.writerow(header)
    for system in systems:
        row = [system]
        for group in groups:
            stats = per_group.get(group, {}).get(system)
            for variant in ("R1", "R2", "RL"):
                row.append(stats[variant][2] if stats else "")
        writer.writerow(row)
    return out.getvalue()


# --- human-eval pack --------------------------------------------------------


def load_prompts(path: str | Path | None) -> dict[str, str]:
    """Prompt file: DIMENSION=prompt text, '#' comments. Missing
    dimensions keep their placeholder default."""
    prompts = dict(DEFAULT_PROMPTS)
    if not path:
        return prompts
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected DIMENSION=prompt")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in RATING_DIMENSIONS:
            raise ConfigError(f"{path}:{lineno}: unknown dimension {key!r}")
        prompts[key] = value
    return prompts


def make_eval_pack(
    predictions: dict[tuple[str, str], str],
    articles: dict[str, str],
    bins: dict[str, str],
    n_per_bin: int = 20,
    seed: int = 0,
    prompts: dict[str, str] | None = None,
) -> tuple[list[dict], list[dict]]:
    """Build the blinded rating-task rows and the separate unblinding key.

    predictions: (system, url) -> summary text; articles: url -> article
    text; bins: url -> bin label. Samples n_per_bin articles from each
    extractiveness bin with a seeded RNG, then emits one task row per
    (system, article, dimension, rater slot). Task ids are assigned
    after a seeded shuffle so their order leaks nothing; the key rows
    map them back to systems.
    """
    prompts = prompts or DEFAULT_PROMPTS
    systems = sorted({system for system, _ in predictions})
    if not systems:
        raise MeasurementError("eval pack needs at least one system prediction")
    rng = random.Random(seed)

    sampled: list[str] = []
    for bin_label in BIN_ORDER:
        candidates = sorted(
            url
            for url, label in bins.items()
            if label == bin_label
            and url in articles
            and all((system, url) in predictions for system in systems)
        )
        if len(candidates) < n_per_bin:
            raise MeasurementError(
                f"bin {bin_label!r} has {len(candidates)} usable articles, need {n_per_bin}"
            )
        sampled.extend(rng.sample(candidates, n_per_bin))

    pairs = [
        (system, url, dimension, slot)
        for url in sampled
        for system in systems
        for dimension in RATING_DIMENSIONS
        for slot in range(1, RATERS_PER_PAIR + 1)
    ]
    rng.shuffle(pairs)

    tasks: list[dict] = []
    key: list[dict] = []
    width = len(str(len(pairs)))
    for index, (system, url, dimension, slot) in enumerate(pairs, start=1):
        task_id = f"t{index:0{width}d}"
        tasks.append(
            {
                "task_id": task_id,
                "article_text": articles[url],
                "summary_text": predictions[(system, url)],
                "dimension": dimension,
                "prompt": prompts[dimension],
                "rating": "",
            }
        )
        key.append(
            {"task_id": task_id, "system": system, "url": url, "dimension": dimension, "rater_slot": slot}
        )
    return tasks, key


def write_csv(path: str | Path, rows: list[dict], columns: tuple[str, ...]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def aggregate_ratings(
    task_rows: list[dict],
    key_rows: list[dict],
    scale_min: int = 1,
    scale_max: int = 5,
) -> tuple[list[dict], list[dict], float]:
    """Mean rating per (system, dimension) plus the across-dimension
    mean per system.

    Rows with missing or out-of-scale ratings are reported, never
    imputed; aggregation proceeds on the valid rows and the returned
    completeness is valid/total.
    """
    if not task_rows:
        raise MeasurementError("no rating rows to aggregate")
    system_for = {row["task_id"]: row["system"] for row in key_rows}
    valid: dict[tuple[str, str], list[float]] = defaultdict(list)
    errors: list[dict] = []
    for row in task_rows:
        task_id = row.get("task_id", "")
        system = system_for.get(task_id)
        problem = None
        if system is None:
            problem = "task_id not present in key file"
        else:
            raw = (row.get("rating") or "").strip()
            if not raw:
                problem = "missing rating"
            else:
                try:
                    value = float(raw)
                except ValueError:
                    problem = f"non-numeric rating {raw!r}"
                else:
                    if not scale_min <= value <= scale_max:
                        problem = f"rating {value} outside scale [{scale_min}, {scale_max}]"
        if problem is not None:
            errors.append({"task_id": task_id, "problem": problem})
            continue
        valid[(system, row["dimension"])].append(value)
    if not valid:
        raise MeasurementError("no valid ratings to aggregate")

    results = []
    for system in sorted({system for system, _ in valid}):
        row = {"system": system}
        dimension_means = []
        for dimension in RATING_DIMENSIONS:
            values = valid.get((system, dimension), [])
            mean = statistics.fmean(values) if values else None
            row[dimension] = mean
            if mean is not None:
                dimension_means.append(mean)
        row["overall"] = statistics.fmean(dimension_means) if dimension_means else None
        results.append(row)
    completeness = (len(task_rows) - len(errors)) / len(task_rows)
    return results, errors, completeness


def ratings_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    fields = ["system", *RATING_DIMENSIONS, "overall"]
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()
