"""``fso`` command line: validate hierarchies, run and sweep scenarios, check
mutualistic preconditions, report metrics.

Exit codes: 0 ok, 2 usage, 3 parse failure, 4 validation failure,
5 runtime/IO failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .mutualism import MutualismError, check_chain_mp, check_mp, parse_model
from .sim.config import ConfigError, ScenarioConfig
from .sim.metrics import SCHEMA, Metrics, ScenarioMismatch, compare_runs, to_csv
from .sim.runner import paired_sweep, simulate
from .topology import FsoError, build_fso, summarize

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3, 4, 5


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_json(path: str) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliFailure(EXIT_USAGE, f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliFailure(EXIT_PARSE, f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None


def _load_config(path: str) -> ScenarioConfig:
    doc = _read_json(path)
    try:
        return ScenarioConfig.from_dict(doc, Path(path).parent)
    except ConfigError as exc:
        raise CliFailure(EXIT_INVALID, f"{path}: {exc}") from None


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliFailure(EXIT_RUNTIME, f"cannot write {path}: {exc.strerror or exc}") from None


def _simulate(config: ScenarioConfig):
    try:
        return simulate(config)
    except FsoError as exc:
        raise CliFailure(EXIT_INVALID, f"hierarchy: {exc}") from None


def _summary(m: Metrics) -> str:
    coop = "on" if m.cooperation else "off"
    body = " ".join(f"{k}={v}" for k, v in m.to_dict().items() if k not in ("schema", "scenario", "seed", "cooperation", "trace_sha256"))
    return f"{m.scenario} seed={m.seed} cooperation={coop} {body} trace={m.trace_sha256[:12]}"


def cmd_validate(args: argparse.Namespace) -> int:
    doc = _read_json(args.spec)
    try:
        fso = build_fso(doc)
    except FsoError as exc:
        raise CliFailure(EXIT_INVALID, f"{args.spec}: {exc}") from None
    print(f"valid: {summarize(fso)}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = config.with_(seed=args.seed)
    sim = _simulate(config)
    m = sim.metrics
    if args.out:
        out = Path(args.out)
        _write(out, json.dumps(m.to_dict(), indent=2) + "\n")
        _write(out.with_suffix(".csv"), to_csv([m]))
    if args.trace:
        _write(Path(args.trace), "".join(line + "\n" for line in sim.trace.lines()))
    print(_summary(m))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.seeds < 1:
        raise CliFailure(EXIT_USAGE, "--seeds must be at least 1")
    config = _load_config(args.config)
    try:
        pairs = paired_sweep(config, range(config.seed, config.seed + args.seeds))
    except FsoError as exc:
        raise CliFailure(EXIT_INVALID, f"hierarchy: {exc}") from None
    offs = [p[0] for p in pairs]
    ons = [p[1] for p in pairs]
    report = compare_runs(offs, ons)
    keys = list(report["delta"])
    print("seed\t" + "\t".join(f"d_{k}" for k in keys))
    for m, delta in zip(offs, report["pairs"]):
        print(f"{m.seed}\t" + "\t".join(_fmt(delta.get(k)) for k in keys))
    print("mean_off\t" + "\t".join(_fmt(report["mean_a"][k]) for k in keys))
    print("mean_on\t" + "\t".join(_fmt(report["mean_b"][k]) for k in keys))
    print("delta\t" + "\t".join(_fmt(report["delta"][k]) for k in keys))
    if args.out:
        _write(Path(args.out), to_csv([m for pair in pairs for m in pair]))
    return EXIT_OK


def _fmt(v: Any) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def cmd_mp_check(args: argparse.Namespace) -> int:
    doc = _read_json(args.model)
    try:
        model = parse_model(doc)
        if args.chain:
            systems, links = model.chain()
            w = check_chain_mp(systems, links)
            label = "chain " + " -> ".join(s.id for s in systems)
            results = [(label, w)]
        else:
            results = [
                (f"{a.domain} -> {a.range}", check_mp(model.systems[a.domain], model.systems[a.range], a))
                for a in model.actions
            ]
    except MutualismError as exc:
        raise CliFailure(EXIT_INVALID, f"{args.model}: {exc}") from None
    for label, w in results:
        if w is None:
            print(f"{label}: no MP")
        else:
            print(f"{label}: MP holds (forward={w.forward_behavior}, backward={w.backward_behavior})")
    return EXIT_OK


def _load_metrics(path: str) -> Metrics:
    doc = _read_json(path)
    try:
        return Metrics.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliFailure(EXIT_INVALID, f"{path}: not a metrics file ({exc})") from None


def cmd_report(args: argparse.Namespace) -> int:
    runs = [_load_metrics(p) for p in args.metrics]
    if len(runs) == 1:
        for k, v in runs[0].to_dict().items():
            print(f"{k}\t{_fmt(v)}")
        return EXIT_OK
    base = runs[0]
    for other in runs[1:]:
        try:
            delta = compare_runs(base, other)["delta"]
        except ScenarioMismatch as exc:
            raise CliFailure(EXIT_INVALID, str(exc)) from None
        print(json.dumps({"schema": SCHEMA, "base": args.metrics[0], "delta": delta}, sort_keys=True))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise CliFailure(EXIT_USAGE, f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fso", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"fso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a hierarchy spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="metrics JSON path; a .csv row is written next to it")
    p.add_argument("--trace", help="write the NDJSON event trace here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="paired cooperation off/on runs over seeds")
    p.add_argument("config")
    p.add_argument("--seeds", type=int, required=True)
    p.add_argument("--toggle", choices=["cooperation"], default="cooperation")
    p.add_argument("--out", help="CSV with one row per run")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mp-check", help="check mutualistic preconditions of a behavior model")
    p.add_argument("model")
    p.add_argument("--chain", action="store_true", help="test the systems as one chain in file order")
    p.set_defaults(func=cmd_mp_check)

    p = sub.add_parser("report", help="print a metrics file, or deltas against the first one")
    p.add_argument("metrics", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
