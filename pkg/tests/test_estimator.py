import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailsim.core import LEFT, RIGHT, WeightedPoint
from tailsim.errors import NoTailHitsError, QuantileRangeError
from tailsim.estimator import (
    assemble_arrays,
    assemble_tail_cdf,
    cdf_gap,
    merge_tail_cdfs,
    one_sided_interval,
    quantile,
    sup_distance,
)

sides = st.sampled_from([LEFT, RIGHT])


@st.composite
def weighted_samples(draw, min_size=1, max_size=40):
    k = draw(st.integers(min_size, max_size))
    # a coarse grid of z values makes ties likely
    z = draw(st.lists(st.integers(0, 15).map(lambda v: v / 8), min_size=k, max_size=k))
    w = draw(st.lists(st.floats(1e-6, 1.0), min_size=k, max_size=k))
    extra = draw(st.integers(0, 50))
    return np.array(z), np.array(w), k + extra


@settings(max_examples=80, deadline=None)
@given(sample=weighted_samples(), side=sides)
def test_cdf_shape_invariants(sample, side):
    z, w, m = sample
    cdf = assemble_arrays(z, w, m, side)
    assert np.all(np.diff(cdf.z) > 0)
    assert np.all(np.diff(cdf.cdf) >= -1e-15)
    assert cdf.weights.sum() == pytest.approx(w.sum())
    if side == LEFT:
        assert cdf.cdf[-1] == pytest.approx(cdf.tail_mass)
    else:
        assert cdf.cdf[-1] == pytest.approx(1.0)
        assert cdf.cdf[0] == pytest.approx(1 - cdf.tail_mass + cdf.weights[0] / m)


@settings(max_examples=60, deadline=None)
@given(sample=weighted_samples(), side=sides, seed=st.integers(0, 2**32 - 1))
def test_order_invariance(sample, side, seed):
    z, w, m = sample
    perm = np.random.default_rng(seed).permutation(z.size)
    a = assemble_arrays(z, w, m, side)
    b = assemble_arrays(z[perm], w[perm], m, side)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_allclose(a.cdf, b.cdf, rtol=0, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(a=weighted_samples(), b=weighted_samples(), c=weighted_samples(), side=sides)
def test_merge_is_associative_and_matches_pooling(a, b, c, side):
    ta, tb, tc = (assemble_arrays(*s, side) for s in (a, b, c))
    left = merge_tail_cdfs(merge_tail_cdfs(ta, tb), tc)
    right = merge_tail_cdfs(ta, merge_tail_cdfs(tb, tc))
    pooled = assemble_arrays(
        np.concatenate([a[0], b[0], c[0]]), np.concatenate([a[1], b[1], c[1]]), a[2] + b[2] + c[2], side
    )
    for t in (left, right):
        np.testing.assert_array_equal(t.z, pooled.z)
        np.testing.assert_allclose(t.cdf, pooled.cdf, atol=1e-13)
        assert t.m_total == pooled.m_total
        assert t.weight_sq_sum == pytest.approx(pooled.weight_sq_sum)


def test_ties_are_merged():
    cdf = assemble_arrays([0.5, 0.2, 0.5], [0.1, 0.2, 0.3], 10, LEFT)
    np.testing.assert_array_equal(cdf.z, [0.2, 0.5])
    np.testing.assert_allclose(cdf.weights, [0.2, 0.4])
    np.testing.assert_allclose(cdf.cdf, [0.02, 0.06])


def test_points_and_arrays_agree():
    pts = [WeightedPoint(0.3, 0.5), WeightedPoint(0.1, 0.25)]
    a = assemble_tail_cdf(pts, 4, RIGHT)
    b = assemble_arrays([0.3, 0.1], [0.5, 0.25], 4, RIGHT)
    np.testing.assert_allclose(a.cdf, b.cdf)


def test_empty_and_invalid_input():
    with pytest.raises(NoTailHitsError):
        assemble_arrays([], [], 10, LEFT)
    with pytest.raises(ValueError):
        assemble_arrays([1.0, 2.0], [1.0, 1.0], 1, LEFT)
    with pytest.raises(ValueError):
        assemble_arrays([1.0], [1.0], 1, "up")


def test_unit_weights_give_binomial_errors():
    m, k = 1000, 37
    cdf = assemble_arrays(np.arange(k, dtype=float), np.ones(k), m, LEFT)
    p = k / m
    assert cdf.tail_mass == pytest.approx(p)
    assert cdf.stderr == pytest.approx(math.sqrt(p * (1 - p) / (m - 1)))
    assert cdf.effective_size == pytest.approx(k)


def test_conditional_has_unit_mass():
    cdf = assemble_arrays([1.0, 2.0, 3.0], [1e-6, 3e-6, 1e-6], 100, LEFT).conditional()
    assert cdf.tail_mass == pytest.approx(1.0)
    np.testing.assert_allclose(cdf.cdf, [0.2, 0.8, 1.0])
    right = assemble_arrays([1.0, 2.0, 3.0], [1e-6, 3e-6, 1e-6], 100, RIGHT).conditional()
    np.testing.assert_allclose(right.cdf, [0.2, 0.8, 1.0])
    assert right.effective_size == pytest.approx(25 / 11)


def test_quantile_and_interval():
    cdf = assemble_arrays([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 1.0], 4, RIGHT)
    np.testing.assert_allclose(cdf.cdf, [0.25, 0.5, 0.75, 1.0])
    assert quantile(cdf, 0.5) == pytest.approx(2.0)
    assert quantile(cdf, 0.6) == pytest.approx(2.4)
    assert one_sided_interval(cdf, 0.75) == (0.0, pytest.approx(3.0))
    with pytest.raises(QuantileRangeError, match="outside simulated tail"):
        quantile(cdf, 0.1)
    with pytest.raises(ValueError):
        one_sided_interval(assemble_arrays([1.0], [1.0], 1, LEFT), 0.5)


def test_step_function_and_distances():
    cdf = assemble_arrays([1.0, 2.0], [1.0, 1.0], 4, RIGHT)
    np.testing.assert_allclose(cdf([0.5, 1.0, 1.5, 2.0, 9.0]), [0.5, 0.75, 0.75, 1.0, 1.0])
    assert cdf_gap(cdf, cdf) == 0.0
    other = assemble_arrays([1.5], [2.0], 4, RIGHT)
    assert cdf_gap(cdf, other) == pytest.approx(0.25)
    vec = sup_distance(cdf, lambda z: np.full(np.shape(z), 0.8))
    scalar = sup_distance(cdf, lambda z: 0.8)
    assert vec == scalar == pytest.approx(0.2)
