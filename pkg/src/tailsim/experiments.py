"""Named experiment configurations and their block-seeded execution.

A run of ``m`` draws is cut into blocks of :data:`~tailsim.rng.BLOCK_SIZE`
draws, each with its own child seed, so the result is the same whether the
blocks run in one process or many.
"""

from __future__ import annotations

import functools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baseline import run_standard_mc
from .core import (
    JointModel,
    ProductTarget,
    RejectionStats,
    ReliabilityTarget,
    SumTarget,
    TailSpec,
    TargetFunction,
    uniform_model,
)
from .equal_scores import build_sampling_tables, draw_equal_score_arrays
from .errors import TailSimError
from .estimator import TailCdf, assemble_arrays
from .no_rejection import simulate_arrays
from .reduced_rejection import build_region, reduced_rejection_arrays
from .rng import block_sizes, make_rng

TARGETS = ("sum-uniform", "product-uniform", "reliability")
METHODS = ("no-rejection", "equal-scores", "reduced", "mc")
REGIONS = ("tangent", "secant", "min-corner")


@dataclass(frozen=True)
class Experiment:
    target: str = "sum-uniform"
    n: int = 4
    alpha: float = 0.999
    beta: float = 0.9999
    tail: str = "right"
    epsilon: float = 0.12
    samples: int = 1000
    seed: int = 0
    method: str = "no-rejection"
    region: str = "tangent"
    resolution: int = 32

    def problem(self) -> tuple[TargetFunction, JointModel, TailSpec]:
        """Target, variable model and tail specification (raises ``ValueError`` if invalid)."""
        if self.target == "reliability":
            f = ReliabilityTarget(self.alpha, self.beta)
            model = f.model()
        elif self.target in ("sum-uniform", "product-uniform"):
            if self.n < 1:
                raise ValueError(f"n must be at least 1, got {self.n}")
            f = SumTarget(self.n) if self.target == "sum-uniform" else ProductTarget(self.n)
            model = uniform_model([0.0] * self.n, [1.0] * self.n)
        else:
            raise ValueError(f"unknown target {self.target!r}; expected one of {TARGETS}")
        return f, model, TailSpec.for_target(f, model, self.tail, self.epsilon)

    def validate(self) -> None:
        """Reject settings that cannot run; every failure is a ``ValueError``."""
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.region not in REGIONS:
            raise ValueError(f"unknown region {self.region!r}; expected one of {REGIONS}")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        f, model, spec = self.problem()
        if self.method == "equal-scores":
            if model.n > 4 or self.resolution < 8:
                raise ValueError("equal-scores needs n <= 4 and resolution >= 8")
        if self.method == "reduced":
            try:
                build_region(f, model, spec, self.region.replace("-", "_"))
            except TailSimError as exc:  # region failures are configuration problems here
                raise ValueError(f"{self.region} region unavailable: {exc}") from exc


@dataclass(frozen=True)
class RunResult:
    z: np.ndarray
    weights: np.ndarray
    stats: RejectionStats
    side: str
    seconds: float

    def tail_cdf(self) -> TailCdf:
        return assemble_arrays(self.z, self.weights, self.stats.m_total, self.side)

    @property
    def tail_mass(self) -> float:
        return float(self.weights.sum() / self.stats.m_total)


@functools.lru_cache(maxsize=8)
def _tables(key: Experiment):
    f, model, spec = key.problem()
    return build_sampling_tables(f, model, spec, key.resolution)


def run_block(exp: Experiment, seed: np.random.SeedSequence, size: int):
    """Accepted ``(z, w)`` and stats of one block of draws."""
    f, model, spec = exp.problem()
    rng = make_rng(seed)
    if exp.method == "no-rejection":
        z, w, _ = simulate_arrays(f, model, spec, size, rng)
        total = float(w.sum())
        return z, w, RejectionStats(size, size, total, total)
    if exp.method == "equal-scores":
        tables = _tables(replace(exp, samples=1, seed=0))
        z, w, _, _ = draw_equal_score_arrays(tables, size, rng)
        total = float(w.sum())
        return z, w, RejectionStats(size, size, total, total)
    if exp.method == "reduced":
        z, w, _, ok, stats = reduced_rejection_arrays(f, model, spec, size, rng, exp.region.replace("-", "_"))
        return z[ok], w[ok], stats
    points, stats = run_standard_mc(f, model, spec, size, rng)
    return np.array([p.z for p in points], dtype=float), np.ones(len(points)), stats


def run_experiment(exp: Experiment, jobs: int = 1) -> RunResult:
    """Execute ``exp``; the output depends only on ``exp``, never on ``jobs``."""
    _, _, spec = exp.problem()
    sizes = block_sizes(exp.samples)
    seeds = np.random.SeedSequence(exp.seed).spawn(len(sizes))
    start = time.perf_counter()
    if jobs > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run_block, [exp] * len(sizes), seeds, sizes))
    else:
        parts = [run_block(exp, s, k) for s, k in zip(seeds, sizes)]
    seconds = time.perf_counter() - start
    stats = parts[0][2]
    for p in parts[1:]:
        stats = stats + p[2]
    z = np.concatenate([p[0] for p in parts])
    w = np.concatenate([p[1] for p in parts])
    return RunResult(z, w, stats, spec.side, seconds)


@dataclass(frozen=True)
class ReportRow:
    method: str
    runs: int
    samples: int
    tail_samples: tuple[int, ...]
    tail_mass: float
    tail_mass_se: float
    count_rejection: float
    seconds: float
    note: str = ""

    @property
    def mean_tail_samples(self) -> float:
        return float(np.mean(self.tail_samples)) if self.tail_samples else 0.0


def _replicate(exp: Experiment) -> tuple[int, float, float, float]:
    res = run_experiment(exp)
    return res.stats.m_accepted, res.tail_mass, res.stats.count_rejection, res.seconds


def method_report(base: Experiment, methods, seeds: int, jobs: int = 1) -> list[ReportRow]:
    """One row per method, replicated over seeds ``base.seed .. base.seed + seeds - 1``."""
    rows = []
    for method in methods:
        exp = replace(base, method=method)
        try:
            exp.validate()
        except ValueError as exc:
            rows.append(ReportRow(method, 0, exp.samples, (), math.nan, math.nan, math.nan, 0.0, str(exc)))
            continue
        reps = [replace(exp, seed=exp.seed + k) for k in range(seeds)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                out = list(pool.map(_replicate, reps))
        else:
            out = [_replicate(r) for r in reps]
        hits, mass, rej, secs = (np.array(c) for c in zip(*out))
        se = float(mass.std(ddof=1) / np.sqrt(len(mass))) if len(mass) > 1 else math.nan
        rows.append(
            ReportRow(method, seeds, exp.samples, tuple(int(h) for h in hits), float(mass.mean()), se,
                      float(rej.mean()), float(secs.sum()))
        )
    return rows

