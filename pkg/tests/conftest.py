"""Shared fixtures and independent reference computations for the test suite.

The quadrature references below integrate the acceptance probability of the
reduced-rejection schemes directly from their definitions. They use only
scipy and closed-form conditionals, never the package's sampling code.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from tailsim.core import LEFT, RIGHT, ProductTarget, ReliabilityTarget, SumTarget, TailSpec, uniform_model

ALPHA, BETA, REL_EPS = 0.999, 0.9999, 5e-5


@pytest.fixture
def sum4():
    f = SumTarget(4)
    model = uniform_model([0.0] * 4, [1.0] * 4)
    return f, model, TailSpec.for_target(f, model, RIGHT, 0.12)


@pytest.fixture
def sum3():
    f = SumTarget(3)
    model = uniform_model([0.0] * 3, [1.0] * 3)
    return f, model, TailSpec.for_target(f, model, RIGHT, 0.1)


@pytest.fixture
def product_left():
    f = ProductTarget(3)
    model = uniform_model([0.0] * 3, [1.0] * 3)
    return f, model, TailSpec.for_target(f, model, LEFT, 0.001)


@pytest.fixture
def product_right():
    f = ProductTarget(3)
    model = uniform_model([0.0] * 3, [1.0] * 3)
    return f, model, TailSpec.for_target(f, model, RIGHT, 0.1)


@pytest.fixture
def reliability():
    f = ReliabilityTarget(ALPHA, BETA)
    model = f.model()
    return f, model, TailSpec.for_target(f, model, RIGHT, REL_EPS)


def all_builtin_cases():
    """``(label, f, model, spec)`` for every built-in target in its worked configuration."""
    unit3 = uniform_model([0.0] * 3, [1.0] * 3)
    unit4 = uniform_model([0.0] * 4, [1.0] * 4)
    rel = ReliabilityTarget(ALPHA, BETA)
    s4, p3 = SumTarget(4), ProductTarget(3)
    return [
        ("sum4-right", s4, unit4, TailSpec.for_target(s4, unit4, RIGHT, 0.12)),
        ("sum4-left", s4, unit4, TailSpec.for_target(s4, unit4, LEFT, 0.12)),
        ("product3-left", p3, unit3, TailSpec.for_target(p3, unit3, LEFT, 0.001)),
        ("product3-right", p3, unit3, TailSpec.for_target(p3, unit3, RIGHT, 0.1)),
        ("reliability-right", rel, rel.model(), TailSpec.for_target(rel, rel.model(), RIGHT, REL_EPS)),
    ]


def _inner_quad(func, lo, hi, kinks):
    pts = sorted(p for p in kinks if lo < p < hi)
    val, _ = integrate.quad(func, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def tangent_scheme_acceptance(eps: float) -> float:
    """P(accept) of the tangent-plane scheme for the right tail of x1 x2 x3 on the unit cube.

    x1 ~ U(3 t - 2, 1), x2 ~ U(3 t - 1 - x1, 1), x3 ~ U(3 t - x1 - x2, 1) with
    t = (1 - eps)^(1/3); a draw is kept when x1 x2 x3 > 1 - eps. The x3 step
    is done analytically; the x2 integral is split where the acceptance
    bound changes form.
    """
    c = 3.0 * (1.0 - eps) ** (1.0 / 3.0)
    level = 1.0 - eps
    b1 = c - 2.0

    def given_x1(x1):
        b2 = c - 1.0 - x1

        def acc(x2):
            b3 = c - x1 - x2
            return max(0.0, 1.0 - max(b3, level / (x1 * x2))) / (1.0 - b3)

        # level / (x1 x2) = c - x1 - x2 and level / (x1 x2) = 1
        s = c - x1
        disc = s * s - 4.0 * level / x1
        kinks = [level / x1]
        if disc > 0:
            kinks += [(s - math.sqrt(disc)) / 2.0, (s + math.sqrt(disc)) / 2.0]
        return _inner_quad(acc, b2, 1.0, kinks) / (1.0 - b2)

    return _inner_quad(given_x1, b1, 1.0, [level]) / (1.0 - b1)


def min_corner_scheme_acceptance(eps: float) -> float:
    """P(accept) of the min-corner scheme for the left tail of x1 x2 x3.

    x1, x2 ~ U(0, 1); x3 ~ U(0, 1) if min(x1, x2) < t else U(0, t), with
    t = eps^(1/3); a draw is kept when x1 x2 x3 <= eps. The x3 step is done
    analytically and both outer integrals are split at the kinks.
    """
    t = eps ** (1.0 / 3.0)

    def given_x1(x1):
        def acc(x2):
            q = eps / (x1 * x2)
            if min(x1, x2) < t:
                return min(1.0, q)
            return min(t, q) / t

        return _inner_quad(acc, 0.0, 1.0, [t, eps / x1, eps / (x1 * t)])

    return _inner_quad(given_x1, 0.0, 1.0, [eps, t, eps / t])


def irwin_hall_conditional(n: int, edge: float):
    """Conditional CDF of a sum of uniforms above ``edge`` near its maximum, by symmetry."""

    def corner(s):
        # P(sum > n - s) for s <= 1 is s^n / n!
        return s**n / math.factorial(n)

    tail = corner(n - edge)
    return lambda z: 1.0 - corner(n - np.asarray(z, dtype=float)) / tail
