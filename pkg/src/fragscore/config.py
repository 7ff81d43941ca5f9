"""Run configuration: one flat key=value file, '#' comments, typed defaults.

Every tunable threshold in the pipeline lives here so dataset
reconstruction variants have a single audit point.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import ConfigError

ENV_CONFIG_VAR = "FRAGSCORE_CONFIG"


@dataclasses.dataclass
class Config:
    # URL hashing / split assignment. The hash identity is pinned: the
    # first 8 bytes of SHA-256, big-endian. Changing it changes every split.
    split_hash: str = "sha256-64"
    split_train_pct: int = 76
    split_dev_pct: int = 8
    split_test_pct: int = 8

    # Ingest filtering.
    lede_window_tokens: int = 100
    verbatim_coverage_threshold: float = 0.99
    min_paragraph_words: int = 5
    max_link_density: float = 0.5

    # Sentence splitting.
    abbreviations_path: str = ""

    # Snapshot fetching.
    network_enabled: bool = False
    archive_delay_seconds: float = 2.0

    # TextRank.
    textrank_damping: float = 0.85
    textrank_tol: float = 1e-6
    textrank_max_iter: int = 100
    textrank_max_words: int = 50

    # Corpus binning. Persisted thresholds keep dev/test on the cuts
    # computed from the training split.
    bin_field: str = "density"
    bin_t1: float | None = None
    bin_t2: float | None = None

    # Human-eval pack.
    eval_pack_n_per_bin: int = 20
    rating_scale_min: int = 1
    rating_scale_max: int = 5
    prompts_path: str = ""

    @classmethod
    def load(cls, path: str | Path | None) -> "Config":
        cfg = cls()
        if path is None:
            return cfg
        cfg.apply_file(path)
        return cfg

    def apply_file(self, path: str | Path) -> None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            self.set(key, value, where=f"{path}:{lineno}")

    def set(self, key: str, value: str, where: str = "<override>") -> None:
        field_map = {f.name: f for f in dataclasses.fields(self)}
        if key not in field_map:
            raise ConfigError(f"{where}: unknown config key {key!r}")
        field = field_map[key]
        try:
            setattr(self, key, _coerce(value, field.type))
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key}: {exc}") from exc


def _coerce(value: str, declared: str):
    declared = str(declared)
    if "str" in declared:
        return value
    if "bool" in declared:
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    if "int" in declared and "float" not in declared:
        return int(value)
    if "float" in declared:
        if value.lower() in ("", "none"):
            return None
        return float(value)
    raise ValueError(f"unsupported config type {declared!r}")
