"""Synthetic reference models and benign client updates.

Stands in for local training. Every benign update is, per layer, a positive
multiple of the reference layer direction plus noise orthogonal to it, so its
inner product with the reference is strictly positive; the whole update is
then rescaled to a norm well below ``t_m``. Clients differ in per-layer
alignment and overall scale.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

Model = list[list[float]]


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def synth_reference(seed: int, shape: Sequence[int], scale: float = 0.1) -> Model:
    rng = _rng(seed, 0)
    return [rng.normal(0.0, scale, size=k).tolist() for k in shape]


def synth_update(
    seed: int,
    client: int,
    reference: Sequence[Sequence[float]],
    t_m: float = 1.0,
    norm_range: tuple[float, float] = (0.3, 0.8),
) -> Model:
    rng = _rng(seed, 1, client)
    layers = []
    for ref in reference:
        ref = np.asarray(ref, dtype=np.float64)
        noise = rng.normal(0.0, 1.0 / np.sqrt(len(ref)), size=len(ref))
        ref_norm = np.linalg.norm(ref)
        if ref_norm == 0:
            layers.append(noise)
            continue
        r = ref / ref_norm
        noise -= (noise @ r) * r
        layers.append(rng.uniform(0.5, 1.5) * r + noise)
    total = np.sqrt(sum(float(layer @ layer) for layer in layers))
    target = t_m * rng.uniform(*norm_range)
    return [(layer * (target / total)).tolist() for layer in layers]


def synth_updates(
    seed: int,
    shape: Sequence[int],
    count: int,
    reference: Sequence[Sequence[float]] | None = None,
    t_m: float = 1.0,
) -> list[Model]:
    """``count`` benign updates, deterministic in ``seed``."""
    if reference is None:
        reference = synth_reference(seed, shape)
    if [len(layer) for layer in reference] != list(shape):
        raise ValueError("reference does not match the layer shape")
    return [synth_update(seed, k, reference, t_m) for k in range(count)]


def l2_norm(update: Sequence[Sequence[float]]) -> float:
    return float(np.sqrt(sum(np.dot(layer, layer) for layer in update)))
