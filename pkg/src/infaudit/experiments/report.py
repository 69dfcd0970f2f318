"""Experiment reports and their on-disk formats.

A report is written as a JSON document with sorted keys and a format
version; per-distance AUCs are also written as a two-column TSV table for
external plotting.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

REPORT_FORMAT = "infaudit.report/1"


@dataclasses.dataclass
class ExperimentReport:
    kind: str  # mi | smi | ai | aai | sweep | theorem1 | dr | train
    seed: int
    config: dict = dataclasses.field(default_factory=dict)
    advantage: float | None = None
    auc: float | None = None
    auc_by_distance: dict = dataclasses.field(default_factory=dict)
    auc_by_class: dict = dataclasses.field(default_factory=dict)
    ties: dict = dataclasses.field(default_factory=dict)
    trials: int = 0
    metrics: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.advantage is not None and not -1.0 <= self.advantage <= 1.0:
            raise ValueError(f"advantage outside [-1, 1]: {self.advantage}")
        if self.auc is not None and not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"AUC outside [0, 1]: {self.auc}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["format"] = REPORT_FORMAT
        return _plain(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        if self.auc_by_distance:
            write_plot_table(path.with_suffix(".auc.tsv"), self.auc_by_distance, ("distance", "auc"))
        return path

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentReport:
        if d.get("format") != REPORT_FORMAT:
            raise ValueError(f"unsupported report format {d.get('format')!r}")
        fields = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in fields})

    @classmethod
    def read(cls, path: str | Path) -> ExperimentReport:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _plain(obj: Any) -> Any:
    """Converts numpy scalars/arrays and tuple keys into JSON-friendly values."""
    if isinstance(obj, dict):
        return {_key(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else v
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value  # enums
    return obj


def _key(k: Any) -> str:
    if isinstance(k, tuple):
        return "/".join(str(_plain(p)) for p in k)
    return str(_plain(k))


def write_plot_table(path: str | Path, table: dict, header: tuple[str, str]) -> Path:
    path = Path(path)
    rows = sorted(table.items(), key=lambda kv: float(kv[0]))
    lines = ["\t".join(header)] + [f"{k}\t{float(v):.10g}" for k, v in rows]
    path.write_text("\n".join(lines) + "\n")
    return path
