"""Sequential truncated simulation: every draw lands in the tail.

Each variable is drawn from its conditional distribution truncated to the
widest interval ``(L_i, U_i]`` that still lets the remaining, unsimulated
variables complete a tail point. The product of the truncation masses is the
importance score of the draw.
"""

from __future__ import annotations

import numpy as np

from .core import (
    LEFT,
    JointModel,
    RejectionStats,
    TailSpec,
    TargetFunction,
    WeightedPoint,
    normalize,
    points_from_arrays,
)
from .errors import InfeasiblePrefixError


def _complete(prefix: np.ndarray, i: int, t, tail: np.ndarray) -> np.ndarray:
    """Full points ``(prefix, t, tail)`` for a batch of prefixes."""
    m = prefix.shape[0]
    x = np.empty((m, prefix.shape[1] + 1 + tail.size))
    x[:, :i] = prefix
    x[:, i] = t
    x[:, i + 1 :] = tail
    return x


def sequential_bounds(
    f: TargetFunction, model: JointModel, spec: TailSpec, i: int, prefix, strict: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Truncation interval ``(L_i, U_i]`` for variable ``i`` given the prefix.

    ``prefix`` holds ``x_0..x_{i-1}``, either one row or a batch ``(m, i)``.
    The extrema over the unsimulated variables are attained at box corners
    picked by the monotone signs, so each bound is one coordinate inversion.
    With ``strict=False`` an empty slice comes back as ``L == U`` instead of
    raising.
    """
    prefix = np.asarray(prefix, dtype=float)
    single = prefix.ndim == 1
    if single:
        prefix = prefix.reshape(1, i)
    a, b = model.lower, model.upper
    lo_corner = f.min_corner(a, b)
    hi_corner = f.max_corner(a, b)
    fut_hi = hi_corner[i + 1 :]
    fut_lo = lo_corner[i + 1 :]

    if spec.side == LEFT:
        # keep h above the prefix-conditional minimum and below z_min + eps
        floor_level = f.evaluate(_complete(prefix, i, lo_corner[i], fut_lo))
        ceil_level = np.full(prefix.shape[0], spec.edge)
    else:
        floor_level = np.full(prefix.shape[0], spec.edge)
        ceil_level = f.evaluate(_complete(prefix, i, hi_corner[i], fut_hi))

    # h(prefix, t, fut_hi) > floor_level  and  h(prefix, t, fut_lo) <= ceil_level
    t_floor = f.coordinate_inverse(i, _complete(prefix, i, 0.0, fut_hi), floor_level)
    t_ceil = f.coordinate_inverse(i, _complete(prefix, i, 0.0, fut_lo), ceil_level)
    if f.signs[i] > 0:
        lo, hi = t_floor, t_ceil
    else:
        lo, hi = t_ceil, t_floor
    # NaN (0/0 inversions) leaves the box bound in place
    L = np.fmax(lo, a[i])
    U = np.fmin(hi, b[i])
    if not strict:
        U = np.fmax(U, L)
    elif np.any(~(L < U)):
        bad = int(np.argmax(~(L < U)))
        raise InfeasiblePrefixError(
            f"infeasible prefix {prefix[bad].tolist()} for variable {i}: L={L[bad]!r} >= U={U[bad]!r}"
        )
    if single:
        return float(L[0]), float(U[0])
    return L, U


def truncated_draw(var, prefix: np.ndarray, L, U, u) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-CDF draw on ``(L, U]`` from ``u`` in ``(0, 1]``; returns ``(x, mass)``."""
    return var.truncated_draw(prefix, L, U, u)


def simulate_arrays(
    f: TargetFunction, model: JointModel, spec: TailSpec, m: int, rng
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised core of the sampler: ``(z, scores, x)`` for ``m`` draws."""
    g, g_spec, flipped = normalize(f, spec)
    x = np.empty((m, model.n))
    w = np.ones(m)
    for i, var in enumerate(model.variables):
        prefix = x[:, :i]
        L, U = sequential_bounds(g, model, g_spec, i, prefix)
        u = 1.0 - rng.random(m)
        x[:, i], mass = truncated_draw(var, prefix, L, U, u)
        w *= mass
    z = np.asarray(f.evaluate(x), dtype=float)
    return z, w, x


def draw_sample(f: TargetFunction, model: JointModel, spec: TailSpec, rng) -> WeightedPoint:
    z, w, x = simulate_arrays(f, model, spec, 1, rng)
    return points_from_arrays(z, w, x)[0]


def run_tail_simulation(
    f: TargetFunction, model: JointModel, spec: TailSpec, m: int, rng
) -> tuple[list[WeightedPoint], RejectionStats]:
    """``m`` tail draws; this sampler never rejects."""
    if m < 1:
        raise ValueError("sample size m must be at least 1")
    z, w, x = simulate_arrays(f, model, spec, m, rng)
    total = float(w.sum())
    return points_from_arrays(z, w, x), RejectionStats(m, m, total, total)
