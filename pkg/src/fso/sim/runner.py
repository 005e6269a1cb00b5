from __future__ import annotations

from typing import Any, Iterable

from .config import ScenarioConfig
from .metrics import Metrics
from .scenarios import SIMULATIONS, Simulation


def simulate(config: ScenarioConfig) -> Simulation:
    sim = SIMULATIONS[config.scenario](config)
    sim.metrics = sim.run()
    return sim


def run_scenario(config: ScenarioConfig) -> tuple[Metrics, list[str]]:
    """Run one configuration to its horizon; returns metrics and trace lines."""
    sim = simulate(config)
    return sim.metrics, sim.trace.lines()


def paired_sweep(config: ScenarioConfig, seeds: Iterable[int]) -> list[tuple[Metrics, Metrics]]:
    """(cooperation off, cooperation on) runs sharing each seed."""
    out = []
    for seed in seeds:
        off = simulate(config.with_(seed=seed, cooperation=False)).metrics
        on = simulate(config.with_(seed=seed, cooperation=True)).metrics
        out.append((off, on))
    return out


def audit_capacity(records: Iterable[dict[str, Any]]) -> list[str]:
    """Replay advertise/bind/release records; list every capacity violation.

    Also reports any (actor, role) slot left bound at the end.
    """
    capacity: dict[tuple[str, str], int] = {}
    used: dict[tuple[str, str], int] = {}
    problems = []
    for r in records:
        kind = r["kind"]
        if kind == "advertise":
            capacity[(r["actor"], r["role"])] = r["capacity"]
        elif kind in ("bind", "release"):
            key = (r["actor"], r["role"])
            used[key] = used.get(key, 0) + (1 if kind == "bind" else -1)
            if used[key] < 0:
                problems.append(f"seq {r['seq']}: {key} released below zero")
            elif used[key] > capacity.get(key, 0):
                problems.append(f"seq {r['seq']}: {key} holds {used[key]} > capacity {capacity.get(key, 0)}")
    problems.extend(f"end: {k} still bound {v}" for k, v in sorted(used.items()) if v)
    return problems


def audit_notified_before_bind(records: Iterable[dict[str, Any]]) -> list[str]:
    """Every actor bound into a SON must have been notified for that role first."""
    records = list(records)
    notified: set[tuple[str, str, str]] = set()
    binds: dict[str, list[dict[str, Any]]] = {}
    problems = []
    for r in records:
        if r["kind"] == "notify":
            notified.add((r["request_id"], r["actor"], r["role"]))
        elif r["kind"] == "bind":
            if (r["request_id"], r["actor"], r["role"]) not in notified:
                problems.append(f"seq {r['seq']}: {r['actor']} bound to {r['request_id']} as {r['role']} unnotified")
            binds.setdefault(r["request_id"], []).append(r)
        elif r["kind"] == "son-formed" and r["roles"] and r["request_id"] not in binds:
            problems.append(f"seq {r['seq']}: SON for {r['request_id']} without bind records")
    return problems


def audit_causality(records: Iterable[dict[str, Any]]) -> list[str]:
    problems = []
    for i, r in enumerate(records):
        if r["seq"] != i:
            problems.append(f"record {i} carries seq {r['seq']}")
        if "cause" in r and not r["cause"] < r["seq"]:
            problems.append(f"seq {r['seq']}: cause {r['cause']} does not precede it")
    return problems


def audit_sons(records: Iterable[dict[str, Any]]) -> list[str]:
    formed, dissolved = set(), set()
    for r in records:
        if r["kind"] == "son-formed":
            formed.add(r["request_id"])
        elif r["kind"] == "son-dissolved":
            dissolved.add(r["request_id"])
    return [f"SON for {rid} never dissolved" for rid in sorted(formed - dissolved)]
