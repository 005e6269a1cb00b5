from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from statistics import fmean
from typing import Any, Sequence

SCHEMA = "fso-metrics/1"

SHARED = ("requests", "local_enrollments", "global_enrollments", "exceptions", "sons_formed", "unfulfilled")
SPECIFIC = {
    "fire": ("houses_ignited", "houses_burned_down", "houses_saved"),
    "healthcare": ("patients", "treated", "untreated", "mean_wait_ticks"),
    "falls": (
        "alarms", "true_falls", "false_positives", "dispatches", "verified_dismissals",
        "alarms_handled", "timeouts", "mean_response_ticks",
    ),
}
LEAD = ("schema", "scenario", "seed", "cooperation")


def columns(scenario: str) -> tuple[str, ...]:
    """Frozen CSV column order for one scenario kind."""
    return LEAD + SPECIFIC[scenario] + SHARED + ("trace_sha256",)


@dataclass
class Metrics:
    scenario: str
    seed: int
    cooperation: bool
    values: dict[str, Any] = field(default_factory=dict)
    trace_sha256: str = ""

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"schema": SCHEMA, "scenario": self.scenario, "seed": self.seed, "cooperation": self.cooperation}
        for key in SPECIFIC[self.scenario] + SHARED:
            out[key] = self.values.get(key)
        out["trace_sha256"] = self.trace_sha256
        return out

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Metrics":
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported metrics schema {doc.get('schema')!r}")
        scenario = doc["scenario"]
        values = {k: doc[k] for k in SPECIFIC[scenario] + SHARED if k in doc}
        return cls(scenario, doc["seed"], doc["cooperation"], values, doc.get("trace_sha256", ""))

    def csv_row(self) -> list[str]:
        d = self.to_dict()
        return ["" if d[c] is None else str(d[c]).lower() if isinstance(d[c], bool) else str(d[c]) for c in columns(self.scenario)]


def to_csv(runs: Sequence[Metrics], header: bool = True) -> str:
    if not runs:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(columns(runs[0].scenario))
    for m in runs:
        w.writerow(m.csv_row())
    return buf.getvalue()


class ScenarioMismatch(ValueError):
    pass


def _numeric(m: Metrics) -> dict[str, float]:
    return {
        k: v for k, v in m.values.items()
        if isinstance(v, (int, float)) and not isinstance(v, bool)
    }


def compare_runs(a: Metrics | Sequence[Metrics], b: Metrics | Sequence[Metrics]) -> dict[str, Any]:
    """Signed deltas ``b - a`` per counter.

    Given two equal-length run lists (paired by index, i.e. by seed) the
    report also carries per-pair deltas and the means of both sides.
    """
    if isinstance(a, Metrics) and isinstance(b, Metrics):
        if a.scenario != b.scenario:
            raise ScenarioMismatch(f"cannot compare {a.scenario!r} with {b.scenario!r}")
        va, vb = _numeric(a), _numeric(b)
        return {"scenario": a.scenario, "delta": {k: vb[k] - va[k] for k in va if k in vb}}
    a, b = list(a), list(b)
    if len(a) != len(b) or not a:
        raise ValueError("paired comparison needs two non-empty run lists of equal length")
    pairs = [compare_runs(x, y)["delta"] for x, y in zip(a, b)]
    keys = [k for k in pairs[0] if all(k in p for p in pairs)]
    mean_a = {k: fmean(_numeric(m)[k] for m in a) for k in keys}
    mean_b = {k: fmean(_numeric(m)[k] for m in b) for k in keys}
    return {
        "scenario": a[0].scenario,
        "pairs": pairs,
        "mean_a": mean_a,
        "mean_b": mean_b,
        "delta": {k: mean_b[k] - mean_a[k] for k in keys},
    }
