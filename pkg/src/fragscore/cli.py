"""fragscore: one executable for the whole pipeline.

    ingest -> analyze -> partition -> baseline -> evaluate -> stats /
    plot-data / eval-pack / aggregate-ratings / tune-textrank

Every command is re-runnable: identical inputs (and seed) produce
byte-identical outputs, gzip included. The analyzer streams JSONL with
bounded memory and an order-preserving worker pool, so corpora larger
than RAM are fine.

Exit codes: 2 usage, 3 input/output, 4 schema or data errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import gzip
import io
import json
import logging
import os
import sys
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import ingest as ingest_mod
from . import report as report_mod
from .config import ENV_CONFIG_VAR, Config
from .errors import (
    ConfigError,
    FetchError,
    FragscoreError,
    MeasurementError,
    SchemaError,
    UrlError,
)
from .measures import AnalysisRecord, analyze_pair, bin_corpus
from .rouge import score_all
from .systems import (
    SYSTEM_FRAGMENTS,
    SYSTEM_LEDE3,
    SYSTEM_TEXTRANK,
    build_sentence_graph,
    lede3,
    oracle_fragments,
    power_iteration,
    select_by_budget,
    textrank,
)
from .text_core import split_sentences, tokenize

log = logging.getLogger("fragscore")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SCHEMA = 4

COMMANDS = (
    "ingest",
    "analyze",
    "partition",
    "baseline",
    "evaluate",
    "stats",
    "plot-data",
    "eval-pack",
    "aggregate-ratings",
    "tune-textrank",
)


# --- file helpers -----------------------------------------------------------


@contextlib.contextmanager
def open_text_read(path):
    if str(path).endswith(".gz"):
        with gzip.open(path, "rt", encoding="utf-8") as handle:
            yield handle
    else:
        with open(path, "r", encoding="utf-8") as handle:
            yield handle


@contextlib.contextmanager
def open_text_write(path):
    # mtime pinned to 0 so rewriting the same content is byte-identical.
    if str(path).endswith(".gz"):
        with open(path, "wb") as raw:
            with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
                wrapper = io.TextIOWrapper(gz, encoding="utf-8", newline="\n")
                try:
                    yield wrapper
                finally:
                    wrapper.flush()
                    wrapper.detach()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            yield handle


def read_jsonl_objects(path):
    with open_text_read(path) as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


def load_records(path) -> list[AnalysisRecord]:
    records = []
    with open_text_read(path) as handle:
        for line in handle:
            if line.strip():
                records.append(AnalysisRecord.from_json(line))
    return records


# --- parallel map (order-preserving, bounded memory) ------------------------


def _apply_chunk(fn, chunk):
    return [fn(item) for item in chunk]


def ordered_parallel_map(fn, items, jobs: int, chunksize: int = 64):
    """Map fn over items preserving order. jobs <= 1 runs inline;
    otherwise a process pool with a bounded window of in-flight chunks
    keeps memory flat on corpora larger than RAM."""
    if jobs <= 1:
        for item in items:
            yield fn(item)
        return
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        pending = deque()
        max_pending = jobs * 4
        chunk = []
        for item in items:
            chunk.append(item)
            if len(chunk) >= chunksize:
                pending.append(executor.submit(_apply_chunk, fn, chunk))
                chunk = []
                while len(pending) >= max_pending:
                    yield from pending.popleft().result()
        if chunk:
            pending.append(executor.submit(_apply_chunk, fn, chunk))
        while pending:
            yield from pending.popleft().result()


# --- row schemas ------------------------------------------------------------


def _require_fields(row: dict, fields: tuple[str, ...], what: str) -> None:
    missing = [f for f in fields if f not in row]
    if missing:
        raise SchemaError(f"{what} row missing fields {missing}: keys={sorted(row)}")


def analyze_entry_line(line: str) -> str:
    """Worker: one dataset JSONL line -> one analysis-record line."""
    try:
        row = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON row: {exc}") from exc
    _require_fields(row, ("text", "summary"), "dataset")
    summary = tokenize(row["summary"])
    if len(summary) == 0:
        raise SchemaError(f"row {row.get('url', '?')!r} has an empty summary")
    record = analyze_pair(tokenize(row["text"]), summary, url=row.get("url", ""))
    return record.to_json()


# --- commands ---------------------------------------------------------------


def cmd_ingest(args, cfg: Config) -> int:
    source = Path(args.inp)
    if source.is_dir():
        pages = ingest_mod.iter_fixture_dir(source)
    elif source.is_file():
        pages = ingest_mod.iter_manifest(source, cfg)
    else:
        raise FileNotFoundError(f"ingest input not found: {source}")
    entries, skipped = ingest_mod.ingest_pages(pages, cfg)
    for url, reason in skipped:
        log.info("skipped %s: %s", url, reason)
    with open_text_write(args.out) as out:
        for entry in entries:
            out.write(entry.to_json() + "\n")
    log.info("ingest: kept %d entries, skipped %d pages", len(entries), len(skipped))
    return EXIT_OK


def cmd_analyze(args, cfg: Config) -> int:
    start = time.perf_counter()
    count = 0
    with open_text_read(args.inp) as inp, open_text_write(args.out) as out:
        lines = (line for line in inp if line.strip())
        for result in ordered_parallel_map(analyze_entry_line, lines, args.jobs):
            out.write(result + "\n")
            count += 1
    log.info("analyze: %d pairs in %.1fs (jobs=%d)", count, time.perf_counter() - start, args.jobs)
    return EXIT_OK


def _parse_partition_mode(mode: str, cfg: Config):
    """tercile[:field] or fixed:t1,t2[:field]."""
    parts = mode.split(":")
    if parts[0] == "tercile":
        field = parts[1] if len(parts) > 1 else cfg.bin_field
        return "tercile", field, None, None
    if parts[0] == "fixed":
        if len(parts) >= 2 and parts[1]:
            try:
                t1_str, t2_str = parts[1].split(",")
                t1, t2 = float(t1_str), float(t2_str)
            except ValueError as exc:
                raise SchemaError(f"fixed mode expects fixed:t1,t2 - got {mode!r}") from exc
        elif cfg.bin_t1 is not None and cfg.bin_t2 is not None:
            t1, t2 = cfg.bin_t1, cfg.bin_t2
        else:
            raise SchemaError("fixed mode needs thresholds (fixed:t1,t2 or bin_t1/bin_t2 in config)")
        field = parts[2] if len(parts) > 2 else cfg.bin_field
        return "fixed", field, t1, t2
    raise SchemaError(f"unknown partition mode {mode!r}")


def cmd_partition(args, cfg: Config) -> int:
    mode, field, t1, t2 = _parse_partition_mode(args.mode or "tercile", cfg)
    records = load_records(args.inp)
    records, (t1, t2) = bin_corpus(records, mode=mode, field=field, t1=t1, t2=t2)
    with open_text_write(args.out) as out:
        for record in records:
            out.write(record.to_json() + "\n")
    sidecar = Path(str(args.out) + ".thresholds.json")
    sidecar.write_text(
        json.dumps({"mode": mode, "field": field, "t1": t1, "t2": t2}, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    log.info("partition: field=%s t1=%.6g t2=%.6g (%s)", field, t1, t2, mode)
    return EXIT_OK


def cmd_baseline(args, cfg: Config) -> int:
    system = args.mode or SYSTEM_LEDE3
    if system not in (SYSTEM_LEDE3, SYSTEM_FRAGMENTS, SYSTEM_TEXTRANK):
        raise SchemaError(f"unknown baseline {system!r}")
    count = 0
    with open_text_write(args.out) as out:
        for row in read_jsonl_objects(args.data):
            _require_fields(row, ("url", "text", "summary"), "dataset")
            if system == SYSTEM_LEDE3:
                summary = lede3(row["text"])
                if not summary:
                    log.warning("lede3: empty article for %s", row["url"])
            elif system == SYSTEM_FRAGMENTS:
                summary = oracle_fragments(tokenize(row["text"]), tokenize(row["summary"]))
            else:
                summary = textrank(
                    row["text"],
                    max_words=cfg.textrank_max_words,
                    damping=cfg.textrank_damping,
                    tol=cfg.textrank_tol,
                    max_iter=cfg.textrank_max_iter,
                )
            out.write(
                json.dumps(
                    {"url": row["url"], "system": system, "summary": summary},
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )
            count += 1
    log.info("baseline %s: %d summaries", system, count)
    return EXIT_OK


def _mean_scores(pairs: list) -> dict[str, tuple[float, float, float, int]]:
    """Corpus score = mean of per-pair precision/recall/F1."""
    totals = {variant: [0.0, 0.0, 0.0] for variant in ("R1", "R2", "RL")}
    for reference, candidate in pairs:
        for variant, score in score_all(reference, candidate).items():
            totals[variant][0] += score.precision
            totals[variant][1] += score.recall
            totals[variant][2] += score.f1
    n = len(pairs)
    return {
        variant: (sums[0] / n, sums[1] / n, sums[2] / n, n) if n else (0.0, 0.0, 0.0, 0)
        for variant, sums in totals.items()
    }


def cmd_evaluate(args, cfg: Config) -> int:
    references = {}
    for row in read_jsonl_objects(args.data):
        _require_fields(row, ("url", "summary"), "dataset")
        references[row["url"]] = tokenize(row["summary"])

    bins = {}
    if args.group_by == "bin":
        if not args.inp:
            raise SchemaError("evaluate --group-by bin needs --in <labeled records.jsonl>")
        for record in load_records(args.inp):
            bins[record.url] = record.bin

    per_system_pairs: dict[str, list] = {}
    per_group_pairs: dict[str, dict[str, list]] = {}
    missing = 0
    for row in read_jsonl_objects(args.pred):
        _require_fields(row, ("url", "system", "summary"), "prediction")
        reference = references.get(row["url"])
        if reference is None:
            missing += 1
            continue
        candidate = tokenize(row["summary"])
        per_system_pairs.setdefault(row["system"], []).append((reference, candidate))
        if args.group_by == "bin":
            group = bins.get(row["url"], "unassigned")
            per_group_pairs.setdefault(group, {}).setdefault(row["system"], []).append((reference, candidate))
    if missing:
        log.warning("evaluate: %d predictions had no matching reference url", missing)
    if not per_system_pairs:
        raise SchemaError("no (prediction, reference) pairs matched on url")

    if args.mode == "wide":
        if args.group_by == "bin":
            per_group = {
                group: {system: _mean_scores(pairs) for system, pairs in systems.items()}
                for group, systems in per_group_pairs.items()
            }
        else:
            per_group = {"all": {system: _mean_scores(pairs) for system, pairs in per_system_pairs.items()}}
        payload = report_mod.wide_report_csv(per_group)
    else:
        per_system = {system: _mean_scores(pairs) for system, pairs in per_system_pairs.items()}
        payload = report_mod.long_report_csv(report_mod.long_report_rows(per_system))
    with open_text_write(args.out) as out:
        out.write(payload)
    return EXIT_OK


def cmd_stats(args, cfg: Config) -> int:
    rows = report_mod.corpus_stats(load_records(args.inp), args.group_by or "none")
    with open_text_write(args.out) as out:
        out.write(report_mod.stats_csv(rows))
    return EXIT_OK


def cmd_plot_data(args, cfg: Config) -> int:
    grids = report_mod.plot_data(
        load_records(args.inp),
        group_by=args.group_by or "none",
        normalization=args.mode or "count",
    )
    if (args.group_by or "none") == "none":
        with open_text_write(args.out) as out:
            out.write(grids["all"].to_csv())
    else:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for group, grid in grids.items():
            safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in group)
            (out_dir / f"{safe}.csv").write_text(grid.to_csv(), encoding="utf-8")
    return EXIT_OK


def cmd_eval_pack(args, cfg: Config) -> int:
    predictions = {}
    for row in read_jsonl_objects(args.pred):
        _require_fields(row, ("url", "system", "summary"), "prediction")
        predictions[(row["system"], row["url"])] = row["summary"]
    articles = {}
    for row in read_jsonl_objects(args.data):
        _require_fields(row, ("url", "text"), "dataset")
        articles[row["url"]] = row["text"]
    bins = {record.url: record.bin for record in load_records(args.inp)}
    tasks, key = report_mod.make_eval_pack(
        predictions,
        articles,
        bins,
        n_per_bin=cfg.eval_pack_n_per_bin,
        seed=args.seed,
        prompts=report_mod.load_prompts(cfg.prompts_path or None),
    )
    report_mod.write_csv(args.out, tasks, report_mod.TASK_COLUMNS)
    key_path = Path(str(args.out)).with_suffix(".key.csv")
    report_mod.write_csv(key_path, key, report_mod.KEY_COLUMNS)
    log.info("eval-pack: %d task rows, key written to %s", len(tasks), key_path)
    return EXIT_OK


def _read_csv_rows(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def cmd_aggregate_ratings(args, cfg: Config) -> int:
    task_rows = _read_csv_rows(args.inp)
    key_rows = _read_csv_rows(args.data)
    results, errors, completeness = report_mod.aggregate_ratings(
        task_rows, key_rows, scale_min=cfg.rating_scale_min, scale_max=cfg.rating_scale_max
    )
    for failure in errors:
        log.warning("rating row %s: %s", failure["task_id"] or "<blank>", failure["problem"])
    log.info("aggregate-ratings: completeness %.3f (%d bad rows)", completeness, len(errors))
    with open_text_write(args.out) as out:
        out.write(report_mod.ratings_csv(results))
    return EXIT_OK


def cmd_tune_textrank(args, cfg: Config) -> int:
    """Sweep the word budget and report mean ROUGE-1 F1 per budget.

    Sentence ranking is budget-independent, so each document is ranked
    once and only the selection step reruns per budget."""
    import numpy as np

    if args.min < 1 or args.max < args.min:
        raise SchemaError(f"budget sweep needs 1 <= min <= max, got {args.min}..{args.max}")
    docs = []
    for row in read_jsonl_objects(args.data):
        _require_fields(row, ("text", "summary"), "dataset")
        graph = build_sentence_graph(split_sentences(row["text"]))
        graph.scores = power_iteration(
            graph.weights, damping=cfg.textrank_damping, tol=cfg.textrank_tol, max_iter=cfg.textrank_max_iter
        )
        order = np.argsort(-graph.scores, kind="stable")
        docs.append((graph, order, tokenize(row["summary"])))
    if not docs:
        raise SchemaError("tune-textrank: no documents in --data")
    with open_text_write(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["max_words", "mean_rouge1_f1"])
        for budget in range(args.min, args.max + 1):
            total = 0.0
            for graph, order, reference in docs:
                chosen = select_by_budget(graph, order, budget)
                candidate = tokenize(" ".join(graph.texts[i] for i in chosen))
                total += score_all(reference, candidate)["R1"].f1
            writer.writerow([budget, total / len(docs)])
    return EXIT_OK


# --- argument parsing / dispatch --------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fragscore",
        description="Corpus analytics for article-summary pairs: extraction, "
        "overlap measures, partitioning, baselines, and evaluation.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--in", dest="inp", help="input file or directory")
    parser.add_argument("--out", help="output file (or directory for grouped plot-data)")
    parser.add_argument("--config", help=f"config file (fallback: ${ENV_CONFIG_VAR})")
    parser.add_argument("--mode", help="command-specific mode selector")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for sampling commands")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    parser.add_argument("--pred", help="prediction JSONL (url, system, summary)")
    parser.add_argument("--data", help="dataset JSONL with reference text/summaries")
    parser.add_argument("--group-by", dest="group_by", choices=["publication", "bin", "none"])
    parser.add_argument("--min", type=int, default=1, help="sweep lower bound")
    parser.add_argument("--max", type=int, default=200, help="sweep upper bound")
    parser.add_argument("--quiet", action="store_true", help="errors only")
    parser.add_argument("--json-logs", dest="json_logs", action="store_true", help="one JSON object per log line")
    return parser


class _JsonLogFormatter(logging.Formatter):
    def format(self, record):
        payload = {"level": record.levelname.lower(), "msg": record.getMessage()}
        return json.dumps(payload, ensure_ascii=False)


def _setup_logging(quiet: bool, json_logs: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLogFormatter() if json_logs else logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.ERROR if quiet else logging.INFO)


_REQUIRED = {
    "ingest": ("inp", "out"),
    "analyze": ("inp", "out"),
    "partition": ("inp", "out"),
    "baseline": ("data", "out"),
    "evaluate": ("pred", "data", "out"),
    "stats": ("inp", "out"),
    "plot-data": ("inp", "out"),
    "eval-pack": ("pred", "data", "inp", "out"),
    "aggregate-ratings": ("inp", "data", "out"),
    "tune-textrank": ("data", "out"),
}

_HANDLERS = {
    "ingest": cmd_ingest,
    "analyze": cmd_analyze,
    "partition": cmd_partition,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
    "plot-data": cmd_plot_data,
    "eval-pack": cmd_eval_pack,
    "aggregate-ratings": cmd_aggregate_ratings,
    "tune-textrank": cmd_tune_textrank,
}

_FLAG_NAMES = {"inp": "--in", "out": "--out", "pred": "--pred", "data": "--data"}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.quiet, args.json_logs)
    for field in _REQUIRED[args.command]:
        if getattr(args, field) in (None, ""):
            parser.error(f"{args.command} requires {_FLAG_NAMES.get(field, '--' + field)}")
    config_path = args.config or os.environ.get(ENV_CONFIG_VAR) or None
    cfg = Config.load(config_path)
    return _HANDLERS[args.command](args, cfg)


def main(argv=None) -> int:
    try:
        return run(argv)
    except (SchemaError, ConfigError, MeasurementError, UrlError) as exc:
        log.error("%s", exc)
        return EXIT_SCHEMA
    except (FileNotFoundError, IsADirectoryError, PermissionError, FetchError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except FragscoreError as exc:
        log.error("%s", exc)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
