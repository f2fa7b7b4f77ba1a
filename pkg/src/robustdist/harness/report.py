"""Risk reports and their CSV/JSON serialisation.

Serialised reports carry no wall-clock time, so equal experiments produce
byte-identical files. ``RiskReport.wall_clock`` is kept in memory only and is
printed by the CLI to stderr.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

CSV_COLUMNS = (
    "task",
    "k",
    "n",
    "ell",
    "epsilon",
    "gamma",
    "attack",
    "metric",
    "value",
    "stderr",
    "trials",
    "bound_upper",
    "bound_lower",
    "seed",
)

# "empirical risk under listed sources": the sup over p and over attacks is not computed
RISK_LABEL = "empirical risk under listed sources and the named attack (not minimax)"


@dataclass(frozen=True)
class RiskRow:
    task: str
    k: int
    n: int
    ell: Optional[int]
    epsilon: Optional[float]
    gamma: float
    attack: str
    metric: str
    value: float
    stderr: float
    trials: int
    bound_upper: float
    bound_lower: float
    seed: int
    config_hash: str = ""

    def csv_cells(self) -> list:
        return ["" if getattr(self, c) is None else _fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class RiskReport:
    config: dict
    config_hash: str
    rows: list = field(default_factory=list)
    wall_clock: Optional[float] = field(default=None, compare=False)
    label: str = RISK_LABEL

    def metric(self, name: str, gamma: Optional[float] = None) -> list:
        return [r for r in self.rows if r.metric == name and (gamma is None or r.gamma == gamma)]

    def value(self, name: str, gamma: float) -> float:
        (row,) = self.metric(name, gamma)
        return row.value

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "config_hash": self.config_hash,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RiskReport":
        names = {f.name for f in fields(RiskRow)}
        rows = [RiskRow(**{k: v for k, v in r.items() if k in names}) for r in d.get("rows", [])]
        return cls(d.get("config", {}), d.get("config_hash", ""), rows, label=d.get("label", RISK_LABEL))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RiskReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(r.csv_cells())
        return buf.getvalue()


def concat_reports(reports) -> RiskReport:
    """One report holding every row; an empty input gives an empty report.
    Each row keeps the hash of the config that produced it."""
    reports = list(reports)
    if not reports:
        return RiskReport({}, "", [])
    rows = [r for rep in reports for r in rep.rows]
    configs = [rep.config for rep in reports]
    hashes = [rep.config_hash for rep in reports]
    return RiskReport({"sweep": configs}, ",".join(hashes), rows)


def emit_report(report: RiskReport, fmt: str, path=None) -> str:
    """Serialise ``report`` as csv or json; write to ``path`` if given. Returns the text."""
    if fmt == "csv":
        text = report.to_csv()
    elif fmt == "json":
        text = report.to_json()
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    if path is not None:
        path = Path(path)
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def rates_in_unit_interval(report: RiskReport) -> bool:
    rate_metrics = ("yes_rate_null", "no_rate_alt")
    return all(0 <= r.value <= 1 for r in report.rows if r.metric in rate_metrics and not math.isnan(r.value))
