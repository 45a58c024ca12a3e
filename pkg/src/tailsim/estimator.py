"""Weighted tail CDFs, extreme quantiles and one-sided intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import LEFT, RIGHT, WeightedPoint
from .errors import NoTailHitsError, QuantileRangeError


@dataclass(frozen=True)
class TailCdf:
    """Sorted tail values with their cumulative probability estimates.

    ``weights`` are the (tie-merged) scores, ``m_total`` counts every draw
    of the run, rejected ones included. For a left tail ``cdf[-1]`` equals
    ``tail_mass``; for a right tail the CDF just below ``z[0]`` is
    ``1 - tail_mass``.
    """

    z: np.ndarray
    cdf: np.ndarray
    weights: np.ndarray
    side: str
    m_total: int
    weight_sq_sum: float

    @property
    def tail_mass(self) -> float:
        return float(self.weights.sum() / self.m_total)

    @property
    def stderr(self) -> float:
        """Standard error of ``tail_mass`` over the ``m_total`` draws."""
        m = self.m_total
        if m < 2:
            return float("nan")
        mean = self.tail_mass
        var = (self.weight_sq_sum / m - mean * mean) * m / (m - 1)
        return float(np.sqrt(max(var, 0.0) / m))

    @property
    def effective_size(self) -> float:
        """Kish effective sample size of the tail scores."""
        return float(self.weights.sum() ** 2 / self.weight_sq_sum)

    def conditional(self) -> "TailCdf":
        """Self-normalised version: the CDF of ``z`` given that it is in the tail.

        Scores are rescaled to sum to ``m_total`` so the result has unit tail mass.
        """
        scale = self.m_total / self.weights.sum()
        w = self.weights * scale
        return TailCdf(
            self.z, _accumulate(w, self.m_total, self.side), w, self.side, self.m_total,
            self.weight_sq_sum * scale * scale,
        )

    def __call__(self, z) -> np.ndarray:
        """Right-continuous step function of the estimate, defined on the whole line."""
        z = np.asarray(z, dtype=float)
        base = 0.0 if self.side == LEFT else 1.0 - self.tail_mass
        idx = np.searchsorted(self.z, z, side="right") - 1
        return np.where(idx >= 0, self.cdf[np.maximum(idx, 0)], base)

    def __len__(self) -> int:
        return len(self.z)


def _accumulate(w: np.ndarray, m_total: int, side: str) -> np.ndarray:
    csum = np.cumsum(w)
    if side == LEFT:
        cdf = csum / m_total
    else:
        cdf = 1.0 - (csum[-1] - csum) / m_total
    return np.clip(cdf, 0.0, 1.0)


def assemble_arrays(z, w, m_total: int, side: str) -> TailCdf:
    """Sort the ``(z, w)`` pairs, merge ties and accumulate scores."""
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.size == 0:
        raise NoTailHitsError("no tail hits to assemble")
    if m_total < z.size:
        raise ValueError("m_total must count at least the accepted points")
    weight_sq_sum = float(np.sum(w * w))
    order = np.argsort(z, kind="stable")
    z, w = z[order], w[order]
    uz, start = np.unique(z, return_index=True)
    if uz.size != z.size:
        w = np.add.reduceat(w, start)
        z = uz
    return TailCdf(z, _accumulate(w, m_total, side), w, side, int(m_total), weight_sq_sum)


def assemble_tail_cdf(points: Sequence[WeightedPoint], m_total: int, side: str) -> TailCdf:
    z = np.fromiter((p.z for p in points), dtype=float, count=len(points))
    w = np.fromiter((p.score for p in points), dtype=float, count=len(points))
    return assemble_arrays(z, w, m_total, side)


def merge_tail_cdfs(a: TailCdf, b: TailCdf) -> TailCdf:
    """Combine two independent runs as if they were one run of ``a.m + b.m`` draws."""
    if a.side != b.side:
        raise ValueError("cannot merge CDFs of different tails")
    t = assemble_arrays(
        np.concatenate([a.z, b.z]), np.concatenate([a.weights, b.weights]), a.m_total + b.m_total, a.side
    )
    return TailCdf(t.z, t.cdf, t.weights, t.side, t.m_total, a.weight_sq_sum + b.weight_sq_sum)


def quantile(cdf: TailCdf, p: float) -> float:
    """Linearly interpolated ``z`` at which the estimated CDF reaches ``p``."""
    lo, hi = float(cdf.cdf[0]), float(cdf.cdf[-1])
    if not lo <= p <= hi:
        raise QuantileRangeError(f"quantile outside simulated tail: p={p} not in [{lo}, {hi}]")
    return float(np.interp(p, cdf.cdf, cdf.z))


def one_sided_interval(cdf: TailCdf, level: float) -> tuple[float, float]:
    """Upper confidence bound ``(0, z*)`` with ``P(Z <= z*) ~= level``."""
    if cdf.side != RIGHT:
        raise ValueError("one-sided upper bounds need a right-tail CDF")
    return 0.0, quantile(cdf, level)


def cdf_gap(a: TailCdf, b: TailCdf) -> float:
    """Sup distance between two estimated step CDFs over the union of their jumps."""
    grid = np.union1d(a.z, b.z)
    return float(np.max(np.abs(a(grid) - b(grid))))


def sup_distance(cdf: TailCdf, oracle: Callable) -> float:
    """Largest absolute gap between the estimate and ``oracle`` at the sample points."""
    try:
        ref = np.asarray(oracle(cdf.z), dtype=float)
        if ref.shape != cdf.z.shape:
            raise ValueError
    except (TypeError, ValueError):
        ref = np.array([float(oracle(float(v))) for v in cdf.z])
    return float(np.max(np.abs(cdf.cdf - ref)))
