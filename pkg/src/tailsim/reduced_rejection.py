"""Reduced-rejection sampling through an easy superset of the tail.

The tail preimage is enclosed in a region that is cheap to simulate
sequentially: the half-space cut off by a tangent or secant hyperplane, or
the min-corner set for left tails of products. Draws outside the true tail
are rejected but still count towards the sample size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .core import (
    LEFT,
    RIGHT,
    JointModel,
    ProductTarget,
    RejectionStats,
    TailSpec,
    TargetFunction,
    WeightedPoint,
    normalize,
    points_from_arrays,
)
from .errors import RegionConstructionError, TangencyError
from .no_rejection import truncated_draw

TANGENT = "tangent"
SECANT = "secant"
MIN_CORNER = "min_corner"
REGION_KINDS = (TANGENT, SECANT, MIN_CORNER)


class Curvature(enum.Enum):
    NEGATIVE_DEFINITE = "negative_definite"
    INDEFINITE = "indefinite"
    POSITIVE_DEFINITE = "positive_definite"


@dataclass(frozen=True)
class HyperplaneRegion:
    """Half-space ``normal . (x - point) {>,<} 0`` on the side of ``corner``.

    ``point`` is the tangency point for a tangent cut and an edge
    intersection for a secant cut.
    """

    point: np.ndarray
    normal: np.ndarray
    corner: np.ndarray
    kind: str = TANGENT

    @property
    def side(self) -> str:
        return ">" if float(self.normal @ (self.corner - self.point)) >= 0 else "<"

    @property
    def offset(self) -> float:
        """Right-hand side ``c`` of the plane written as ``normal . x = c``."""
        return float(self.normal @ self.point)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        s = 1.0 if self.side == ">" else -1.0
        d = s * (np.asarray(x, dtype=float) - self.point) @ self.normal
        return d >= -tol * max(1.0, abs(self.offset))


@dataclass(frozen=True)
class MinCornerRegion:
    """``min(x) < threshold``; encloses ``x1...xn <= eps`` when ``threshold = eps^(1/n)``."""

    threshold: float

    def contains(self, x) -> np.ndarray:
        return np.min(np.asarray(x, dtype=float), axis=-1) < self.threshold


def _corner_and_level(f: TargetFunction, lower, upper, epsilon: float, side: str):
    if side == RIGHT:
        corner = f.max_corner(lower, upper)
        return corner, float(f.evaluate(corner)) - epsilon
    corner = f.min_corner(lower, upper)
    return corner, float(f.evaluate(corner)) + epsilon


def tangency_point(
    f: TargetFunction, corner, epsilon: float, side: str, max_iter: int = 100, tol: float = 1e-10
) -> np.ndarray:
    """Point on the level set ``h = h(corner) -/+ eps`` whose gradient is parallel to ``grad h(corner)``.

    ``side`` names the tail at ``corner``: ``right`` when the corner is the
    maximum (level below it), ``left`` when it is the minimum. Solved by
    damped Newton on ``grad h(x) = lam * grad h(corner)``, ``h(x) = level``.
    """
    corner = np.asarray(corner, dtype=float)
    n = corner.size
    h_c = float(f.evaluate(corner))
    level = h_c - epsilon if side == RIGHT else h_c + epsilon
    g_c = np.asarray(f.gradient_at(corner), dtype=float)
    scale = max(1.0, float(np.max(np.abs(g_c))))

    def residual(y):
        x, lam = y[:n], y[n]
        return np.concatenate([(f.gradient_at(x) - lam * g_c) / scale, [float(f.evaluate(x)) - level]])

    y = np.concatenate([corner, [1.0]])
    r = residual(y)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return y[:n]
        x = y[:n]
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = f.hessian_at(x) / scale
        jac[:n, n] = -g_c / scale
        jac[n, :n] = f.gradient_at(x)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        t = 1.0
        while True:
            cand = y + t * step
            r_new = residual(cand)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < np.linalg.norm(r):
                break
            t /= 2.0
            if t < 1e-10:
                raise TangencyError("tangency failure: line search stalled")
        y, r = cand, r_new
    if np.max(np.abs(r)) < tol:
        return y[:n]
    raise TangencyError(f"tangency failure: no convergence in {max_iter} iterations")


def projected_hessian(f: TargetFunction, corner, side: str) -> np.ndarray:
    """Hessian at ``corner``, oriented towards the tail and restricted to the tangent plane.

    Orientation flips the sign for left tails so that a convex tail side
    always shows up as a negative definite form.
    """
    corner = np.asarray(corner, dtype=float)
    g = np.asarray(f.gradient_at(corner), dtype=float)
    hess = np.asarray(f.hessian_at(corner), dtype=float)
    if side == LEFT:
        hess = -hess
    if np.linalg.norm(g) < 1e-14:
        return hess
    basis = null_space(g[None, :])
    return basis.T @ hess @ basis


def check_curvature(f: TargetFunction, corner, side: str, tol: float = 1e-10) -> Curvature:
    """Classify the tail-oriented quadratic form at ``corner``.

    ``NEGATIVE_DEFINITE`` certifies that, for small ``eps``, the tail lies
    entirely on the corner side of the tangent hyperplane. Forms with zero
    eigenvalues (flat level sets) come back ``INDEFINITE``.
    """
    form = projected_hessian(f, corner, side)
    if form.size == 0:
        return Curvature.NEGATIVE_DEFINITE
    eig = np.linalg.eigvalsh(0.5 * (form + form.T))
    if np.all(eig < -tol):
        return Curvature.NEGATIVE_DEFINITE
    if np.all(eig > tol):
        return Curvature.POSITIVE_DEFINITE
    return Curvature.INDEFINITE


def tangent_hyperplane(f: TargetFunction, corner, epsilon: float, side: str) -> HyperplaneRegion:
    corner = np.asarray(corner, dtype=float)
    x0 = tangency_point(f, corner, epsilon, side)
    return HyperplaneRegion(x0, np.asarray(f.gradient_at(corner), dtype=float), corner, TANGENT)


def secant_hyperplane(
    f: TargetFunction, corner, epsilon: float, side: str, lower=None, upper=None
) -> HyperplaneRegion:
    """Plane through the points where the level set crosses the box edges at ``corner``.

    Each crossing is one coordinate inversion with the other variables held
    at the corner.
    """
    corner = np.asarray(corner, dtype=float)
    n = corner.size
    h_c = float(f.evaluate(corner))
    if epsilon == 0:
        return HyperplaneRegion(corner.copy(), np.asarray(f.gradient_at(corner), dtype=float), corner, SECANT)
    level = h_c - epsilon if side == RIGHT else h_c + epsilon
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    steps = np.empty(n)
    for i in range(n):
        t = float(f.coordinate_inverse(i, corner, level))
        if not (np.isfinite(t) and lo[i] <= t <= hi[i]) or t == corner[i]:
            raise RegionConstructionError(
                f"secant construction failure: level set misses the edge along coordinate {i}"
            )
        steps[i] = t - corner[i]
    normal = 1.0 / steps
    normal /= np.max(np.abs(normal))
    if normal @ f.gradient_at(corner) < 0:
        normal = -normal
    point = corner.copy()
    point[0] += steps[0]
    return HyperplaneRegion(point, normal, corner, SECANT)


def hyperplane_bounds(region: HyperplaneRegion, i: int, prefix, lower, upper):
    """Interval for variable ``i`` with later variables pinned to the corner.

    Returns ``(L, U)``; rows with ``L >= U`` have an empty slice and are to be
    rejected by the caller.
    """
    prefix = np.asarray(prefix, dtype=float)
    single = prefix.ndim == 1
    if single:
        prefix = prefix.reshape(1, i)
    g, x0, c = region.normal, region.point, region.corner
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if g[i] == 0.0:
        L = np.full(prefix.shape[0], lower[i])
        U = np.full(prefix.shape[0], upper[i])
    else:
        before = (prefix - x0[:i]) @ g[:i]
        after = float((c[i + 1 :] - x0[i + 1 :]) @ g[i + 1 :])
        bound = x0[i] - (before + after) / g[i]
        L = np.maximum(np.minimum(c[i], bound), lower[i])
        U = np.minimum(np.maximum(c[i], bound), upper[i])
    if single:
        return float(L[0]), float(U[0])
    return L, U


def min_corner_region_draw(n: int, epsilon: float, rng) -> tuple[np.ndarray, float]:
    """One draw from ``min(x) < eps^(1/n)`` on the unit cube, with its score."""
    x, w = _min_corner_batch(n, epsilon, 1, rng)
    return x[0], float(w[0])


def _min_corner_batch(n: int, epsilon: float, m: int, rng):
    t = epsilon ** (1.0 / n)
    x = np.empty((m, n))
    x[:, : n - 1] = rng.random((m, n - 1))
    free = np.any(x[:, : n - 1] < t, axis=1)
    width = np.where(free, 1.0, t)
    x[:, n - 1] = width * (1.0 - rng.random(m))
    return x, width


def build_region(f: TargetFunction, model: JointModel, spec: TailSpec, kind: str):
    """Simulation region of the requested kind, in the normalised (increasing) frame."""
    g, g_spec, _ = normalize(f, spec)
    a, b = model.lower, model.upper
    corner, _ = _corner_and_level(g, a, b, g_spec.epsilon, g_spec.side)
    if kind in (TANGENT, SECANT):
        if np.linalg.norm(g.gradient_at(corner)) < 1e-14:
            raise RegionConstructionError(f"{kind} hyperplane undefined: the gradient vanishes at the corner")
        form = projected_hessian(g, corner, g_spec.side)
        flat = np.allclose(form, 0.0, atol=1e-10)
        # a tangent plane needs the level set to bend towards the corner, a secant plane away from it
        wanted = Curvature.NEGATIVE_DEFINITE if kind == TANGENT else Curvature.POSITIVE_DEFINITE
        if not flat and check_curvature(g, corner, g_spec.side) is not wanted:
            other = "secant" if kind == TANGENT else "tangent"
            raise RegionConstructionError(
                f"{kind} hyperplane does not enclose the tail here; use a {other} or min-corner region"
            )
        if kind == TANGENT:
            return tangent_hyperplane(g, corner, g_spec.epsilon, g_spec.side)
        return secant_hyperplane(g, corner, g_spec.epsilon, g_spec.side, a, b)
    if kind == MIN_CORNER:
        unit = np.all(a == 0.0) and np.all(b == 1.0)
        if not (isinstance(g, ProductTarget) and unit and g_spec.side == LEFT):
            raise RegionConstructionError("min-corner region needs a left tail of a product of U(0,1)")
        return MinCornerRegion(g_spec.epsilon ** (1.0 / g.n))
    raise ValueError(f"unknown region kind {kind!r}; expected one of {REGION_KINDS}")


def reduced_rejection_arrays(f, model, spec, m: int, rng, region_kind: str):
    """Vectorised core: ``(z, scores, x, accepted_mask, stats)`` for ``m`` draws."""
    region = build_region(f, model, spec, region_kind)
    a, b = model.lower, model.upper
    if isinstance(region, MinCornerRegion):
        x, w = _min_corner_batch(model.n, spec.epsilon, m, rng)
        alive = np.ones(m, dtype=bool)
    else:
        x = np.full((m, model.n), np.nan)
        w = np.ones(m)
        alive = np.ones(m, dtype=bool)
        for i, var in enumerate(model.variables):
            L, U = hyperplane_bounds(region, i, x[:, :i], a, b)
            alive &= L < U
            u = 1.0 - rng.random(m)
            idx = np.flatnonzero(alive)
            xi, mass = truncated_draw(var, x[idx, :i], L[idx], U[idx], u[idx])
            x[idx, i] = xi
            w[idx] *= mass
        w[~alive] = 0.0
    z = np.full(m, np.nan)
    z[alive] = f.evaluate(x[alive])
    accepted = alive & spec.contains(z)
    stats = RejectionStats(m, int(accepted.sum()), float(w[alive].sum()), float(w[accepted].sum()))
    return z, w, x, accepted, stats


def run_reduced_rejection(
    f: TargetFunction, model: JointModel, spec: TailSpec, m: int, rng, region_kind: str = TANGENT
) -> tuple[list[WeightedPoint], RejectionStats]:
    """``m`` draws from the region; only tail hits are returned, all are counted."""
    if m < 1:
        raise ValueError("sample size m must be at least 1")
    z, w, x, accepted, stats = reduced_rejection_arrays(f, model, spec, m, rng, region_kind)
    return points_from_arrays(z[accepted], w[accepted], x[accepted]), stats
