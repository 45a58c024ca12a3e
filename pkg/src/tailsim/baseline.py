"""Plain Monte Carlo baseline: sample the whole box, keep the tail hits."""

from __future__ import annotations

import numpy as np

from .core import JointModel, RejectionStats, TailSpec, TargetFunction, WeightedPoint, points_from_arrays


def run_standard_mc(
    f: TargetFunction, model: JointModel, spec: TailSpec, m: int, rng
) -> tuple[list[WeightedPoint], RejectionStats]:
    """``m`` unconstrained draws; accepted tail hits carry score 1."""
    if m < 1:
        raise ValueError("sample size m must be at least 1")
    x = model.sample(rng, m)
    z = np.asarray(f.evaluate(x), dtype=float)
    hit = spec.contains(z)
    k = int(hit.sum())
    points = points_from_arrays(z[hit], np.ones(k), x[hit])
    return points, RejectionStats(m, k, float(m), float(k))
