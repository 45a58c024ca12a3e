"""Exact CDFs, region volumes and brute-force ground truth.

Everything here is independent of the samplers: closed forms are written out
directly and the brute-force routines only evaluate the target, never its
inverses or the sequential bounds.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

from .core import (
    LEFT,
    RIGHT,
    JointModel,
    ProductTarget,
    ReliabilityTarget,
    SumTarget,
    TailSpec,
    TargetFunction,
)
from .errors import OracleUnderpoweredError, OutsidePieceError
from .estimator import TailCdf, assemble_arrays


def _irwin_hall_lower(n: int, x: float) -> float:
    return sum((-1) ** r * math.comb(n, r) * (x - r) ** n for r in range(int(math.floor(x)) + 1)) / math.factorial(n)


def irwin_hall_cdf(n: int, x: float) -> float:
    """CDF of the sum of ``n`` independent ``U(0, 1)`` variables.

    Alternating-sign Irwin-Hall sum; the upper half is taken from the
    symmetry ``F(x) = 1 - F(n - x)`` so that tail values near ``n`` keep
    full relative accuracy.
    """
    if x <= 0:
        return 0.0
    if x >= n:
        return 1.0
    if x > n / 2:
        return 1.0 - _irwin_hall_lower(n, n - x)
    return _irwin_hall_lower(n, x)


def irwin_hall_sf(n: int, x: float) -> float:
    """``1 - irwin_hall_cdf(n, x)`` without cancellation in the upper tail."""
    if x <= 0:
        return 1.0
    if x >= n:
        return 0.0
    if x > n / 2:
        return _irwin_hall_lower(n, n - x)
    return 1.0 - _irwin_hall_lower(n, x)


def product_uniform_cdf(n: int, x: float) -> float:
    """CDF of the product of ``n`` independent ``U(0, 1)`` variables."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    y = -math.log(x)
    return x * sum(y**i / math.factorial(i) for i in range(n))


def product_uniform_sf(n: int, x: float) -> float:
    """Survival function of the uniform product, via the regularised gamma."""
    if x <= 0:
        return 1.0
    if x >= 1:
        return 0.0
    return float(special.gammainc(n, -math.log(x)))


def _simplex_exp_integral(v: float) -> float:
    # integral_0^v e^s s^2 / 2 ds, summed as a series for small v
    if v > 0.5:
        return math.exp(v) * (v * v / 2 - v + 1) - 1
    total, term, j = 0.0, 1.0, 0
    while True:
        add = v ** (j + 3) / (2 * (j + 3)) * term
        total += add
        if add <= 1e-18 * total or j > 60:
            return total
        j += 1
        term /= j


def product_beta_uniform_cdf(u: float, beta: float) -> float:
    """CDF of ``x1 x2 x3`` with ``x_i`` iid ``U(beta, 1)``, on ``[beta^3, beta^2)``.

    Algebraically identical to the closed form in ``u`` and ``log(beta)``, but
    written in ``v = log(u / beta^3)`` so that the ``(1 - beta)^3`` denominator
    does not amplify cancellation when ``beta`` is close to 1.
    """
    b3 = beta**3
    if u < b3 * (1 - 1e-12) or u >= beta**2:
        raise OutsidePieceError(f"u={u!r} outside supported piece [beta^3, beta^2) for beta={beta!r}")
    v = max(math.log(u) - 3.0 * math.log(beta), 0.0)
    return b3 / (1.0 - beta) ** 3 * _simplex_exp_integral(v)


def reliability_cdf(z: float, alpha: float, beta: float) -> float:
    """CDF of the unavailability ``1 - alpha x1 x2 x3`` near its maximum."""
    z_lo, z_hi = 1.0 - alpha, 1.0 - alpha * beta**3
    if not z_lo <= z <= z_hi * (1 + 1e-12):
        raise OutsidePieceError(f"z={z!r} outside [{z_lo}, {z_hi}]")
    if z >= z_hi:
        return 1.0
    return 1.0 - product_beta_uniform_cdf((1.0 - z) / alpha, beta)


def reliability_quantile(p: float, alpha: float, beta: float) -> float:
    """Solve ``reliability_cdf(z) = p`` by bracketing root search."""
    z_hi = 1.0 - alpha * beta**3
    # lowest z still inside the supported piece
    z_lo = 1.0 - alpha * beta**2 * (1 - 1e-15)
    f_lo = reliability_cdf(z_lo, alpha, beta)
    if not f_lo <= p <= 1.0:
        raise OutsidePieceError(f"p={p} below the supported piece (F={f_lo})")
    return float(optimize.brentq(lambda z: reliability_cdf(z, alpha, beta) - p, z_lo, z_hi, xtol=1e-16, rtol=1e-15))


def product_region_volumes(epsilon: float, side: str) -> tuple[float, float]:
    """``(tail volume, simulated-region volume)`` for the product of three uniforms.

    Right tail: hyperplane cut ``x1 + x2 + x3 > 3 (1 - eps)^(1/3)``. Left tail:
    min-corner region ``min(x) < eps^(1/3)``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if side == RIGHT:
        vol_tail = product_uniform_sf(3, 1.0 - epsilon)
        vol_region = 27.0 * (1.0 - (1.0 - epsilon) ** (1.0 / 3.0)) ** 3 / 6.0
    elif side == LEFT:
        le = math.log(epsilon)
        vol_tail = epsilon * (2.0 - 2.0 * le + le * le) / 2.0
        vol_region = 1.0 - (1.0 - epsilon ** (1.0 / 3.0)) ** 3
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return vol_tail, vol_region


def asymptotic_rejection(epsilon: float) -> float:
    """Small-epsilon rejection share of the tangent-cut region (valid to about 0.2)."""
    return epsilon / 4.0 + 4.0 * epsilon**2 / 45.0


# ---------------------------------------------------------------------------
# Target-level oracles
# ---------------------------------------------------------------------------


def exact_cdf_for(f: TargetFunction, model: JointModel):
    """Closed-form CDF for a built-in target on its standard model, else ``None``."""
    a, b = model.lower, model.upper
    unit = np.all(a == 0.0) and np.all(b == 1.0)
    if isinstance(f, SumTarget) and unit:
        return np.vectorize(lambda z: irwin_hall_cdf(f.n, z))
    if isinstance(f, ProductTarget) and unit:
        return np.vectorize(lambda z: product_uniform_cdf(f.n, z))
    if isinstance(f, ReliabilityTarget) and np.all(a == f.beta) and np.all(b == 1.0):
        return np.vectorize(lambda z: reliability_cdf(z, f.alpha, f.beta))
    return None


def exact_tail_mass(f: TargetFunction, model: JointModel, spec: TailSpec) -> float | None:
    """Exact probability of the tail for a built-in target, else ``None``."""
    a, b = model.lower, model.upper
    unit = np.all(a == 0.0) and np.all(b == 1.0)
    if isinstance(f, SumTarget) and unit:
        if spec.side == LEFT:
            return irwin_hall_cdf(f.n, spec.edge)
        return irwin_hall_sf(f.n, spec.edge)
    if isinstance(f, ProductTarget) and unit:
        if spec.side == LEFT:
            return product_uniform_cdf(f.n, spec.edge)
        return product_uniform_sf(f.n, spec.edge)
    if isinstance(f, ReliabilityTarget) and spec.side == RIGHT:
        return 1.0 - reliability_cdf(spec.edge, f.alpha, f.beta)
    return None


def conditional_oracle(cdf_fn, spec: TailSpec, tail_mass: float):
    """Turn an absolute CDF into the CDF conditional on the tail."""
    if spec.side == LEFT:
        return lambda z: np.asarray(cdf_fn(z), dtype=float) / tail_mass
    base = 1.0 - tail_mass
    return lambda z: (np.asarray(cdf_fn(z), dtype=float) - base) / tail_mass


def brute_force_tail_cdf(
    f: TargetFunction, model: JointModel, spec: TailSpec, M: int, rng, chunk: int = 1_000_000
) -> TailCdf:
    """Plain Monte Carlo over the whole model, keeping the tail hits.

    The returned CDF carries unit scores and ``m_total = M``, so its
    ``tail_mass`` and ``stderr`` are the hit fraction and its binomial error.
    """
    hits = []
    done = 0
    while done < M:
        k = min(chunk, M - done)
        z = np.asarray(f.evaluate(model.sample(rng, k)), dtype=float)
        hits.append(z[spec.contains(z)])
        done += k
    z = np.concatenate(hits)
    if z.size < 100:
        raise OracleUnderpoweredError(f"oracle underpowered: only {z.size} tail hits in {M} draws")
    return assemble_arrays(z, np.ones(z.size), M, spec.side)


def tail_bounding_box(f: TargetFunction, model: JointModel, spec: TailSpec) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box containing every tail point, found by root search on ``f``.

    Along coordinate ``i`` the other variables sit at the corner most
    favourable to the tail; whatever fails there fails everywhere.
    """
    a, b = model.lower, model.upper
    corner = f.max_corner(a, b) if spec.side == RIGHT else f.min_corner(a, b)
    lo, hi = a.astype(float).copy(), b.astype(float).copy()
    for i in range(model.n):
        def along(t, i=i):
            x = corner.copy()
            x[i] = t
            return float(f.evaluate(x)) - spec.edge

        in_a = bool(spec.contains(along(a[i]) + spec.edge))
        in_b = bool(spec.contains(along(b[i]) + spec.edge))
        if in_a and in_b:
            continue
        if not (in_a or in_b):
            raise ValueError(f"tail is empty along coordinate {i}")
        root = optimize.brentq(along, a[i], b[i], xtol=1e-15)
        pad = 1e-12 * max(1.0, abs(root))
        if in_b:
            lo[i] = max(a[i], root - pad)
        else:
            hi[i] = min(b[i], root + pad)
    return lo, hi


def brute_force_tail_points(
    f: TargetFunction, model: JointModel, spec: TailSpec, count: int, rng, chunk: int = 200_000
) -> np.ndarray:
    """``count`` exact draws from the tail preimage, shape ``(count, n)``.

    Draws the model restricted to :func:`tail_bounding_box` and keeps the
    points in the tail. Requires independent variables.
    """
    lo, hi = tail_bounding_box(f, model, spec)
    out, got = [], 0
    while got < count:
        x = np.empty((chunk, model.n))
        for i, var in enumerate(model.variables):
            FL = var.cdf(x[:, :i], np.full(chunk, lo[i]))
            FU = var.cdf(x[:, :i], np.full(chunk, hi[i]))
            x[:, i] = var.quantile(x[:, :i], FL + rng.random(chunk) * (FU - FL))
        keep = x[spec.contains(f.evaluate(x))]
        out.append(keep)
        got += keep.shape[0]
    return np.concatenate(out)[:count]
