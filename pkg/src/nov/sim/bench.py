"""Per-round time and bandwidth as the parameter count grows."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, replace
from typing import Sequence

from ..elgamal import dlog_table
from ..group import gens
from .adversary import WrongShareToVictim
from .scenario import AdversarySpec, ScenarioConfig, run_scenario

# Reference figures for three model sizes: (seconds, MB, step-x extra seconds).
# Reported next to our numbers for context only; hardware and proof system differ.
REFERENCE_OVERHEAD = {
    22000: (121.7, 46.7, 3.0),
    62000: (276.8, 126.7, 8.9),
    272000: (1334.8, 557.0, 39.7),
}


@dataclass
class BenchRow:
    params: int
    clients: int
    round_seconds: float
    total_bytes: int
    stepx_extra_seconds: float | None
    reference_seconds: float | None = None
    reference_mb: float | None = None
    reference_stepx_seconds: float | None = None


def layer_shape(params: int, layer_size: int = 50) -> list[int]:
    full, rest = divmod(params, layer_size)
    return [layer_size] * full + ([rest] if rest else [])


def bench(
    params: Sequence[int] = (250, 500, 1000),
    n: int = 3,
    t: int = 2,
    layer_size: int = 50,
    seed: int = 0,
    attacker: bool = True,
    repeats: int = 1,
) -> list[BenchRow]:
    """One honest round per point (best of ``repeats``), plus one round with a
    share-corrupting attacker to time step x.

    Repeats are interleaved across points so a slow stretch of the machine
    does not land on a single parameter count.
    """
    gens()
    dlog_table()  # one-off tables stay out of the timings
    configs = {p: ScenarioConfig(n=n, t=t, shape=layer_shape(p, layer_size), seed=seed, t_s=1.0) for p in params}
    best = {}
    for _ in range(max(1, repeats)):
        for p, cfg in configs.items():
            report = run_scenario(cfg)
            if not report.ok:
                raise RuntimeError(f"honest bench round aborted at p={p}: {report.abort_cause}")
            if p not in best or report.total_seconds < best[p].total_seconds:
                best[p] = report
    rows = []
    for p, cfg in configs.items():
        stepx = None
        if attacker:
            adv = AdversarySpec(n, WrongShareToVictim(victim=1))
            stepx = run_scenario(replace(cfg, adversaries=[adv])).stepx_seconds
        ref = REFERENCE_OVERHEAD.get(p, (None, None, None))
        rows.append(BenchRow(p, n, best[p].total_seconds, best[p].total_bytes, stepx, *ref))
    return rows


def write_csv(rows: Sequence[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(BenchRow.__dataclass_fields__))
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))
