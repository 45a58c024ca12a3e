"""Bounded variable models, monotone target functions and tail specifications.

Targets are evaluated on arrays whose last axis holds the ``n`` basic
variables, so every built-in target broadcasts over batches of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CoordinateInactiveError, EvaluationError

LEFT = "left"
RIGHT = "right"


# ---------------------------------------------------------------------------
# Basic variables
# ---------------------------------------------------------------------------


class BoundedVariable:
    """A basic variable on ``[lower, upper]`` with a conditional distribution.

    ``cdf`` and ``quantile`` receive the already simulated prefix
    ``x_1..x_{i-1}`` as an array of shape ``(m, i-1)`` together with ``m``
    abscissae or probabilities. Independent variables simply ignore it.
    """

    def __init__(self, lower: float, upper: float):
        lower, upper = float(lower), float(upper)
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ValueError("variable bounds must be finite")
        if not lower < upper:
            raise ValueError(f"lower bound {lower} must be below upper bound {upper}")
        self.lower = lower
        self.upper = upper

    def cdf(self, prefix: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def quantile(self, prefix: np.ndarray, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def truncated_draw(self, prefix, L, U, u) -> tuple[np.ndarray, np.ndarray]:
        """Inverse-CDF draw restricted to ``(L, U]`` from ``u`` in ``(0, 1]``; returns ``(x, mass)``."""
        FL = self.cdf(prefix, L)
        mass = self.cdf(prefix, U) - FL
        return np.clip(self.quantile(prefix, FL + u * mass), L, U), mass

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.lower!r}, {self.upper!r})"


class UniformVariable(BoundedVariable):
    """Independent uniform variable on ``[lower, upper]``."""

    def cdf(self, prefix, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lower) / (self.upper - self.lower), 0.0, 1.0)

    def quantile(self, prefix, p):
        p = np.asarray(p, dtype=float)
        return self.lower + p * (self.upper - self.lower)


class TruncatedVariable(BoundedVariable):
    """Independent continuous scipy distribution truncated to ``[lower, upper]``."""

    def __init__(self, dist, lower: float, upper: float):
        super().__init__(lower, upper)
        self.dist = dist
        self._flo = float(dist.cdf(self.lower))
        self._mass = float(dist.cdf(self.upper)) - self._flo
        if not self._mass > 0:
            raise ValueError("distribution puts no mass on the truncation interval")

    def cdf(self, prefix, x):
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        return np.clip((self.dist.cdf(x) - self._flo) / self._mass, 0.0, 1.0)

    def quantile(self, prefix, p):
        p = np.asarray(p, dtype=float)
        x = self.dist.ppf(self._flo + p * self._mass)
        return np.clip(x, self.lower, self.upper)

    def truncated_draw(self, prefix, L, U, u):
        # slices in the upper half are measured with the survival function,
        # where the CDF would round masses far out in the tail to zero
        L = np.clip(np.asarray(L, dtype=float), self.lower, self.upper)
        U = np.clip(np.asarray(U, dtype=float), self.lower, self.upper)
        u = np.asarray(u, dtype=float)
        FL, FU = self.dist.cdf(L), self.dist.cdf(U)
        SL, SU = self.dist.sf(L), self.dist.sf(U)
        upper = FL > 0.5
        mass = np.where(upper, SL - SU, FU - FL) / self._mass
        with np.errstate(invalid="ignore"):
            x = np.where(upper, self.dist.isf(SL - u * (SL - SU)), self.dist.ppf(FL + u * (FU - FL)))
        return np.clip(x, L, U), mass


@dataclass(frozen=True)
class JointModel:
    """Ordered basic variables; variable ``i`` may only condition on ``0..i-1``."""

    variables: tuple[BoundedVariable, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(self.variables) < 1:
            raise ValueError("a joint model needs at least one variable")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables])

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Unconstrained sequential draws, shape ``(m, n)``."""
        x = np.empty((m, self.n))
        for i, var in enumerate(self.variables):
            x[:, i] = var.quantile(x[:, :i], rng.random(m))
        return x


def uniform_model(lower: Sequence[float], upper: Sequence[float]) -> JointModel:
    return JointModel(tuple(UniformVariable(a, b) for a, b in zip(lower, upper)))


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


def _replace(x: np.ndarray, i: int, value) -> np.ndarray:
    y = np.array(x, dtype=float, copy=True)
    y[..., i] = value
    return y


class TargetFunction:
    """A target ``z = h(x)`` that is monotone in every coordinate.

    Subclasses provide ``evaluate`` and ``signs`` (``+1`` increasing,
    ``-1`` decreasing per coordinate). ``coordinate_inverse`` defaults to
    the two-evaluation multilinear solve; derivatives default to finite
    differences.
    """

    n: int
    signs: tuple[int, ...]

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)

    def coordinate_inverse(self, i: int, x, z):
        """Value ``t`` with ``h(x with x_i := t) = z``; other coordinates from ``x``."""
        return multilinear_coordinate_inverse(self, i, x, z)

    def gradient_at(self, p) -> np.ndarray:
        return numeric_derivatives(self, p)[0]

    def hessian_at(self, p) -> np.ndarray:
        return numeric_derivatives(self, p)[1]

    def min_corner(self, lower, upper) -> np.ndarray:
        s = np.asarray(self.signs)
        return np.where(s > 0, lower, upper).astype(float)

    def max_corner(self, lower, upper) -> np.ndarray:
        s = np.asarray(self.signs)
        return np.where(s > 0, upper, lower).astype(float)


class SumTarget(TargetFunction):
    """``h(x) = x_1 + ... + x_n``."""

    def __init__(self, n: int):
        self.n = int(n)
        self.signs = (1,) * self.n

    def evaluate(self, x):
        return np.sum(np.asarray(x, dtype=float), axis=-1)

    def coordinate_inverse(self, i, x, z):
        x = np.asarray(x, dtype=float)
        others = np.sum(x, axis=-1) - x[..., i]
        return np.asarray(z, dtype=float) - others

    def gradient_at(self, p):
        return np.ones(self.n)

    def hessian_at(self, p):
        return np.zeros((self.n, self.n))

    def __repr__(self):
        return f"SumTarget(n={self.n})"


class ProductTarget(TargetFunction):
    """``h(x) = x_1 x_2 ... x_n`` on a non-negative box.

    Inverting against a zero cofactor yields ``+inf`` (any ``x_i`` works),
    which the sequential bounds then clip to the box.
    """

    def __init__(self, n: int):
        self.n = int(n)
        self.signs = (1,) * self.n

    def evaluate(self, x):
        return np.prod(np.asarray(x, dtype=float), axis=-1)

    def coordinate_inverse(self, i, x, z):
        x = np.asarray(x, dtype=float)
        others = np.prod(np.delete(x, i, axis=-1), axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(z, dtype=float) / others

    def gradient_at(self, p):
        p = np.asarray(p, dtype=float)
        return np.array([np.prod(np.delete(p, k)) for k in range(self.n)])

    def hessian_at(self, p):
        p = np.asarray(p, dtype=float)
        h = np.zeros((self.n, self.n))
        for j in range(self.n):
            for k in range(self.n):
                if j != k:
                    h[j, k] = np.prod(np.delete(p, [j, k]))
        return h

    def __repr__(self):
        return f"ProductTarget(n={self.n})"


class ReliabilityTarget(TargetFunction):
    """Standby-system unavailability ``1 - alpha * x1 * x2 * x3``.

    The ``x_i`` are no-failure probabilities living in ``[beta, 1]``. The
    product is accumulated in log space and recombined with ``expm1`` so
    that values a few ``1e-5`` apart stay resolvable.
    """

    n = 3
    signs = (-1, -1, -1)

    def __init__(self, alpha: float, beta: float):
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        self.alpha = float(alpha)
        self.beta = float(beta)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logs = np.log1p(x - 1.0).sum(axis=-1)
        return -np.expm1(math.log(self.alpha) + logs)

    def coordinate_inverse(self, i, x, z):
        x = np.asarray(x, dtype=float)
        others = np.prod(np.delete(x, i, axis=-1), axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (1.0 - np.asarray(z, dtype=float)) / (self.alpha * others)

    def gradient_at(self, p):
        p = np.asarray(p, dtype=float)
        return np.array([-self.alpha * np.prod(np.delete(p, k)) for k in range(3)])

    def hessian_at(self, p):
        p = np.asarray(p, dtype=float)
        h = np.zeros((3, 3))
        for j in range(3):
            for k in range(3):
                if j != k:
                    h[j, k] = -self.alpha * np.prod(np.delete(p, [j, k]))
        return h

    def model(self) -> JointModel:
        """Three iid ``U(beta, 1)`` no-failure probabilities."""
        return uniform_model([self.beta] * 3, [1.0] * 3)

    @property
    def z_range(self) -> tuple[float, float]:
        return 1.0 - self.alpha, 1.0 - self.alpha * self.beta**3

    def __repr__(self):
        return f"ReliabilityTarget(alpha={self.alpha!r}, beta={self.beta!r})"


class CustomTarget(TargetFunction):
    """User-supplied monotone target.

    ``func`` must accept arrays with the variables on the last axis. Without
    an explicit ``inverse`` the target is assumed affine in each coordinate
    (as network marginals are in their parameters) and inverted from two
    evaluations.
    """

    def __init__(
        self,
        func: Callable,
        signs: Sequence[int],
        inverse: Callable | None = None,
        gradient: Callable | None = None,
        hessian: Callable | None = None,
    ):
        self.func = func
        self.signs = tuple(int(np.sign(s)) for s in signs)
        if any(s == 0 for s in self.signs):
            raise ValueError("monotone signs must be +1 or -1")
        self.n = len(self.signs)
        self._inverse = inverse
        self._gradient = gradient
        self._hessian = hessian

    def evaluate(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def coordinate_inverse(self, i, x, z):
        if self._inverse is None:
            return multilinear_coordinate_inverse(self, i, x, z)
        return self._inverse(i, x, z)

    def gradient_at(self, p):
        if self._gradient is None:
            return super().gradient_at(p)
        return np.asarray(self._gradient(p), dtype=float)

    def hessian_at(self, p):
        if self._hessian is None:
            return super().hessian_at(p)
        return np.asarray(self._hessian(p), dtype=float)


class NegatedTarget(TargetFunction):
    """``g(x) = -f(x)`` with flipped monotone signs."""

    def __init__(self, base: TargetFunction):
        self.base = base
        self.n = base.n
        self.signs = tuple(-s for s in base.signs)

    def evaluate(self, x):
        return -self.base.evaluate(x)

    def coordinate_inverse(self, i, x, z):
        return self.base.coordinate_inverse(i, x, -np.asarray(z, dtype=float))

    def gradient_at(self, p):
        return -self.base.gradient_at(p)

    def hessian_at(self, p):
        return -self.base.hessian_at(p)

    def __repr__(self):
        return f"NegatedTarget({self.base!r})"


def negate_target(f: TargetFunction) -> TargetFunction:
    """Return ``-f``; negating twice hands back the original object."""
    if isinstance(f, NegatedTarget):
        return f.base
    return NegatedTarget(f)


def multilinear_coordinate_inverse(f: TargetFunction, i: int, x, z):
    """Solve ``f(x with x_i := t) = z`` for a target affine in ``x_i``.

    Uses exactly two evaluations, at ``x_i = 0`` and ``x_i = 1``.
    """
    x = np.asarray(x, dtype=float)
    c0 = np.asarray(f.evaluate(_replace(x, i, 0.0)), dtype=float)
    c1 = np.asarray(f.evaluate(_replace(x, i, 1.0)), dtype=float) - c0
    if np.any(np.abs(c1) < 1e-14):
        raise CoordinateInactiveError(f"coordinate {i} inactive: target does not vary with it")
    return (np.asarray(z, dtype=float) - c0) / c1


def numeric_derivatives(
    f: TargetFunction, p, lower=None, upper=None
) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference gradient and Hessian of ``f`` at ``p``.

    Gradient steps are ``max(1e-6, 1e-6 |p_k|)``; the Hessian uses
    ``max(1e-4, 1e-4 |p_k|)`` because second differences lose about
    ``eps / h**2`` to rounding. Steps that would leave ``[lower, upper]``
    become one-sided.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)

    def ev(q):
        v = float(f.evaluate(q))
        if not math.isfinite(v):
            raise EvaluationError(f"evaluation failure at probe point {q.tolist()}")
        return v

    def centre(k, h):
        # shift the stencil inwards when a step would cross a face
        up, down = p[k] + h <= hi[k], p[k] - h >= lo[k]
        if up and down:
            return p[k]
        if up:
            return p[k] + h
        if down:
            return p[k] - h
        raise EvaluationError(f"box too narrow for a difference step along {k}")

    grad = np.empty(n)
    for k in range(n):
        h = max(1e-6, 1e-6 * abs(p[k]))
        c = centre(k, h)
        qp, qm = p.copy(), p.copy()
        qp[k], qm[k] = c + h, c - h
        grad[k] = (ev(qp) - ev(qm)) / (2.0 * h)

    steps = np.maximum(1e-4, 1e-4 * np.abs(p))
    centres = np.array([centre(k, steps[k]) for k in range(n)])

    def probe(shifts):
        q = p.copy()
        for k, s in shifts.items():
            q[k] = centres[k] + s * steps[k]
        return ev(q)

    hess = np.empty((n, n))
    for j in range(n):
        hess[j, j] = (probe({j: 1}) - 2.0 * probe({j: 0}) + probe({j: -1})) / steps[j] ** 2
        for k in range(j + 1, n):
            acc = sum(
                sj * sk * probe({j: sj, k: sk}) for sj, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1))
            )
            hess[j, k] = acc / (4.0 * steps[j] * steps[k])
    hess = np.triu(hess) + np.triu(hess, 1).T
    return grad, 0.5 * (hess + hess.T)


def check_monotone(f: TargetFunction, lower, upper, rng, pairs: int = 200) -> bool:
    """Spot-check the declared monotone signs on random coordinate pairs."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    for i, s in enumerate(f.signs):
        x = rng.uniform(lower, upper, size=(pairs, f.n))
        y = x.copy()
        y[:, i] = rng.uniform(x[:, i], upper[i])
        diff = s * (f.evaluate(y) - f.evaluate(x))
        if np.any(diff < -1e-12 * np.maximum(1.0, np.abs(f.evaluate(x)))):
            return False
    return True


# ---------------------------------------------------------------------------
# Tail specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailSpec:
    """Which tail of ``z`` to simulate and how deep.

    Left tail is ``(z_min, z_min + epsilon]``, right tail is
    ``(z_max - epsilon, z_max]``. ``epsilon`` equal to the full range is
    accepted and covers the whole support.
    """

    side: str
    epsilon: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be below z_max")
        width = self.z_max - self.z_min
        if not 0.0 < self.epsilon <= width * (1 + 1e-12):
            raise ValueError(f"epsilon must lie in (0, {width}], got {self.epsilon}")

    @classmethod
    def for_target(cls, f: TargetFunction, model: JointModel, side: str, epsilon: float) -> "TailSpec":
        z_min = float(f.evaluate(f.min_corner(model.lower, model.upper)))
        z_max = float(f.evaluate(f.max_corner(model.lower, model.upper)))
        return cls(side, float(epsilon), z_min, z_max)

    @property
    def edge(self) -> float:
        """Inner boundary of the tail."""
        if self.side == LEFT:
            return self.z_min + self.epsilon
        return self.z_max - self.epsilon

    @property
    def interval(self) -> tuple[float, float]:
        if self.side == LEFT:
            return self.z_min, self.edge
        return self.edge, self.z_max

    def contains(self, z):
        z = np.asarray(z, dtype=float)
        if self.side == LEFT:
            return z <= self.edge
        return z > self.edge

    def negated(self) -> "TailSpec":
        side = RIGHT if self.side == LEFT else LEFT
        return TailSpec(side, self.epsilon, -self.z_max, -self.z_min)


def normalize(f: TargetFunction, spec: TailSpec) -> tuple[TargetFunction, TailSpec, bool]:
    """Flip a decreasing target to increasing form.

    Returns ``(g, g_spec, flipped)``; when ``flipped`` the original values are
    ``-g(x)``. Mixed-sign targets are left alone, the bound computations
    handle them coordinate by coordinate.
    """
    if all(s < 0 for s in f.signs):
        return negate_target(f), spec.negated(), True
    return f, spec, False


# ---------------------------------------------------------------------------
# Draw records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedPoint:
    """A simulated target value with its importance score."""

    z: float
    score: float
    x: tuple[float, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class RejectionStats:
    """Draw counts of one run.

    The optional score sums give the probability-weighted share of the
    simulated region lying outside the tail, ``volume_rejection``.
    """

    m_total: int
    m_accepted: int
    score_total: float | None = None
    score_accepted: float | None = None

    def __post_init__(self):
        if not 0 <= self.m_accepted <= self.m_total:
            raise ValueError("need 0 <= m_accepted <= m_total")

    @property
    def count_rejection(self) -> float:
        if self.m_total == 0:
            return 0.0
        return (self.m_total - self.m_accepted) / self.m_total

    @property
    def volume_rejection(self) -> float | None:
        if self.score_total is None or self.score_accepted is None or self.score_total <= 0:
            return None
        return 1.0 - self.score_accepted / self.score_total

    def __add__(self, other: "RejectionStats") -> "RejectionStats":
        def plus(a, b):
            return None if a is None or b is None else a + b

        return RejectionStats(
            self.m_total + other.m_total,
            self.m_accepted + other.m_accepted,
            plus(self.score_total, other.score_total),
            plus(self.score_accepted, other.score_accepted),
        )


def points_from_arrays(z, w, x) -> list[WeightedPoint]:
    return [
        WeightedPoint(float(zi), float(wi), tuple(float(v) for v in xi))
        for zi, wi, xi in zip(z, w, x)
    ]
