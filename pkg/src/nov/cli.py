"""Command-line entry point: ``nov synth | run | bench``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .sim import ScenarioConfig, run_scenario, synth_reference, synth_updates
from .sim.bench import bench, write_csv


def _load_shape(path: str) -> tuple[list[int], dict]:
    """A shape file is a JSON list of layer sizes or an object with ``shape``."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, list):
        return [int(k) for k in data], {}
    if isinstance(data, dict) and "shape" in data:
        return [int(k) for k in data["shape"]], data
    raise ValueError(f"{path}: expected a list of layer sizes or an object with 'shape'")


def cmd_synth(args) -> int:
    shape, extra = _load_shape(args.shape)
    clients = args.clients or int(extra.get("clients", 10))
    t_m = float(extra.get("t_m", args.t_m))
    reference = synth_reference(args.seed, shape)
    updates = synth_updates(args.seed, shape, clients, reference, t_m)
    Path(args.out).write_text(json.dumps([{"layers": u} for u in updates]))
    print(f"wrote {clients} updates of {sum(shape)} parameters to {args.out}")
    return 0


def _load_updates(path: str) -> list[list[list[float]]]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list) or not all(isinstance(u, dict) and "layers" in u for u in data):
        raise ValueError(f"{path}: expected an array of {{\"layers\": [...]}} objects")
    return [u["layers"] for u in data]


def cmd_run(args) -> int:
    config = ScenarioConfig.load(args.config)
    updates = _load_updates(args.updates) if args.updates else None
    report = run_scenario(config, updates)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    summary = f"status={report.status} U_B={report.u_b} removed={sorted(report.removed)}"
    if not report.ok:
        summary += f" aborted in {report.abort_phase}: {report.abort_cause}"
    print(summary, file=sys.stderr)
    return 0 if report.ok else 1


def cmd_bench(args) -> int:
    params = [int(p) for p in args.params.split(",") if p.strip()]
    rows = bench(params, n=args.clients, t=args.threshold, layer_size=args.layer_size,
                 seed=args.seed, attacker=not args.no_attacker, repeats=args.repeats)
    if args.out:
        write_csv(rows, args.out)
    for r in rows:
        line = f"p={r.params:>7} time={r.round_seconds:8.2f}s bytes={r.total_bytes:>12}"
        if r.stepx_extra_seconds is not None:
            line += f" stepx+={r.stepx_extra_seconds:.2f}s"
        if r.reference_seconds is not None:
            line += f"  (reference: {r.reference_seconds}s, {r.reference_mb} MB, +{r.reference_stepx_seconds}s)"
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nov", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate benign client updates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", required=True, help="JSON file: list of layer sizes or {\"shape\": [...]}")
    p.add_argument("--clients", type=int, default=None)
    p.add_argument("--t-m", type=float, default=1.0, help="norm bound the updates stay under")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run one aggregation round")
    p.add_argument("--config", required=True, help="scenario.json")
    p.add_argument("--updates", help="updates.json (synthesized from the seed if omitted)")
    p.add_argument("--out", help="report.json (stdout if omitted)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time and bandwidth per parameter count")
    p.add_argument("--params", default="250,500,1000")
    p.add_argument("--clients", type=int, default=3)
    p.add_argument("--threshold", type=int, default=2)
    p.add_argument("--layer-size", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--no-attacker", action="store_true", help="skip the step-x timing round")
    p.add_argument("--out", help="bench.csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"nov: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
