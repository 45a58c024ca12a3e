"""Sequential tail sampling with identical scores for every draw.

Variable ``i`` is drawn with density proportional to ``f(x_i) V_{i+1}(x_i)``,
where ``V_{i+1}`` is the probability that the remaining variables can still
complete a tail point. The scores of the stages then telescope to the single
constant ``V_1``, the tail probability itself.

The slice masses ``V_i`` are tabulated backward in probability coordinates
``p = F(x)`` with composite Simpson quadrature, and sampled through a
monotone piecewise-cubic interpolant of the node values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from .core import (
    JointModel,
    RejectionStats,
    TailSpec,
    TargetFunction,
    WeightedPoint,
    normalize,
    points_from_arrays,
)
from .errors import QuadratureError
from .no_rejection import sequential_bounds, truncated_draw

MAX_DIMENSION = 4
MIN_RESOLUTION = 8


@dataclass(frozen=True)
class GTables:
    """Stage-1 tabulation plus everything needed to build later stages lazily.

    ``nodes`` are ``s = (p - F(L_1)) / (F(U_1) - F(L_1))`` on ``[0, 1]`` and
    ``values`` the stage-2 slice masses there. ``score`` is the quadrature
    value of ``G_1(U_1) - G_1(L_1)`` shared by every draw.
    """

    target: TargetFunction
    model: JointModel
    spec: TailSpec
    resolution: int
    nodes: np.ndarray
    values: np.ndarray
    lower: float
    upper: float
    score: float


def _stage_values(g, model, spec, i, prefix, L, U, FL, width, R):
    """Slice masses of stage ``i + 1`` at the ``R + 1`` quadrature nodes of stage ``i``."""
    k = prefix.shape[0]
    s = np.linspace(0.0, 1.0, R + 1)
    rep = np.repeat(prefix, R + 1, axis=0)
    p = (FL[:, None] + width[:, None] * s).ravel()
    x = model.variables[i].quantile(rep, p)
    x = np.clip(x, np.repeat(L, R + 1), np.repeat(U, R + 1))
    vals = _slice_mass(g, model, spec, i + 1, np.column_stack([rep, x]), R).reshape(k, R + 1)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError(f"quadrature failure: non-finite slice mass at stage {i + 1}")
    return vals


def _slice_mass(g, model, spec, i, prefix, R):
    """Probability that variables ``i..n-1`` complete a tail point, per prefix row."""
    var = model.variables[i]
    L, U = sequential_bounds(g, model, spec, i, prefix, strict=False)
    FL = var.cdf(prefix, L)
    width = var.cdf(prefix, U) - FL
    if i == model.n - 1:
        return width
    vals = _stage_values(g, model, spec, i, prefix, L, U, FL, width, R)
    return simpson(vals, dx=1.0 / R, axis=1) * width


def build_sampling_tables(f: TargetFunction, model: JointModel, spec: TailSpec, resolution: int = 32) -> GTables:
    """Backward tabulation of the stage densities for one ``(f, model, spec)``."""
    if model.n > MAX_DIMENSION:
        raise ValueError(f"equal-score sampling supports at most {MAX_DIMENSION} variables, got {model.n}")
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution!r}")
    R = int(resolution)
    g, g_spec, _ = normalize(f, spec)
    empty = np.empty((1, 0))
    L, U = sequential_bounds(g, model, g_spec, 0, empty)
    var = model.variables[0]
    FL = var.cdf(empty, L)
    width = var.cdf(empty, U) - FL
    if model.n == 1:
        nodes = values = np.empty(0)
        score = float(width[0])
    else:
        values = _stage_values(g, model, g_spec, 0, empty, L, U, FL, width, R)[0]
        nodes = np.linspace(0.0, 1.0, R + 1)
        score = float(simpson(values, dx=1.0 / R) * width[0])
    if not (np.isfinite(score) and score > 0):
        raise QuadratureError(f"quadrature failure: stage-1 mass {score!r}")
    return GTables(f, model, spec, R, nodes, values, float(L[0]), float(U[0]), score)


def _invert_cumulative(vals: np.ndarray, u: np.ndarray, iters: int = 60):
    """Inverse of the normalised antiderivative of the row-wise pchip interpolants.

    Returns ``(s, density_ratio)``: the solution on ``[0, 1]`` and
    ``integral / interpolant(s)``, the per-stage factor of the exact
    importance weight.
    """
    R = vals.shape[1] - 1
    s_nodes = np.linspace(0.0, 1.0, R + 1)
    interp = PchipInterpolator(s_nodes, vals, axis=1)
    anti = interp.antiderivative()
    cum = anti(s_nodes)
    total = cum[:, -1]
    target = u * total
    rows = np.arange(vals.shape[0])
    seg = np.clip((cum[:, 1:] < target[:, None]).sum(axis=1), 0, R - 1)
    coef = anti.c[:, seg, rows]
    left = s_nodes[seg]

    def local(t):
        acc = np.zeros_like(t)
        for c in coef:
            acc = acc * t + c
        return acc

    lo = np.zeros(len(rows))
    hi = np.full(len(rows), 1.0 / R)
    goal = target - cum[rows, seg]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = local(mid) < goal
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    s = np.clip(left + 0.5 * (lo + hi), 0.0, 1.0)
    dens = _row_eval(interp, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dens > 0, total / dens, np.inf)
    return s, ratio


def _row_eval(interp: PchipInterpolator, s: np.ndarray) -> np.ndarray:
    # evaluate row r of a multi-row interpolant at s[r] without forming the k x k grid
    x = interp.x
    seg = np.clip(np.searchsorted(x, s, side="right") - 1, 0, len(x) - 2)
    coef = interp.c[:, seg, np.arange(len(s))]
    t = s - x[seg]
    acc = np.zeros_like(s)
    for c in coef:
        acc = acc * t + c
    return acc


def draw_equal_score_arrays(tables: GTables, m: int, rng):
    """``(z, scores, x, audit)`` for ``m`` draws from prebuilt tables.

    ``scores`` all equal ``tables.score``. ``audit`` holds the exact
    importance weights of the draws under the interpolated densities; they
    agree with the constant score up to quadrature and interpolation error.
    """
    f, model, R = tables.target, tables.model, tables.resolution
    g, g_spec, _ = normalize(f, tables.spec)
    x = np.empty((m, model.n))
    audit = np.ones(m)
    empty = np.empty((m, 0))
    var = model.variables[0]
    L = np.full(m, tables.lower)
    U = np.full(m, tables.upper)
    FL = var.cdf(empty, L)
    width = var.cdf(empty, U) - FL
    vals = np.broadcast_to(tables.values, (m, R + 1)) if model.n > 1 else None
    for i in range(model.n):
        var = model.variables[i]
        prefix = x[:, :i]
        if i > 0:
            L, U = sequential_bounds(g, model, g_spec, i, prefix)
            FL = var.cdf(prefix, L)
            width = var.cdf(prefix, U) - FL
        if i == model.n - 1:
            x[:, i], mass = truncated_draw(var, prefix, L, U, 1.0 - rng.random(m))
            audit *= mass
            break
        if i > 0:
            vals = _stage_values(g, model, g_spec, i, prefix, L, U, FL, width, R)
        s, ratio = _invert_cumulative(np.ascontiguousarray(vals), 1.0 - rng.random(m))
        x[:, i] = np.clip(var.quantile(prefix, FL + width * s), L, U)
        audit *= ratio * width
    z = np.asarray(f.evaluate(x), dtype=float)
    return z, np.full(m, tables.score), x, audit


def draw_equal_score_sample(tables: GTables, rng) -> WeightedPoint:
    z, w, x, _ = draw_equal_score_arrays(tables, 1, rng)
    return points_from_arrays(z, w, x)[0]


def run_equal_scores(
    f: TargetFunction, model: JointModel, spec: TailSpec, m: int, rng, resolution: int = 32, tables: GTables | None = None
) -> tuple[list[WeightedPoint], RejectionStats]:
    """``m`` equal-score tail draws; like the no-rejection sampler it never rejects."""
    if m < 1:
        raise ValueError("sample size m must be at least 1")
    if tables is None:
        tables = build_sampling_tables(f, model, spec, resolution)
    z, w, x, _ = draw_equal_score_arrays(tables, m, rng)
    total = float(w.sum())
    return points_from_arrays(z, w, x), RejectionStats(m, m, total, total)
