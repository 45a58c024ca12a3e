import numpy as np
import pytest

from tailsim.baseline import run_standard_mc
from tailsim.oracles import exact_tail_mass
from tailsim.rng import make_rng


def test_deep_sum_tail_is_rarely_hit(sum4):
    # the tail holds 8.64e-6 of the mass, so 10^4 draws expect 0.09 hits
    hits = []
    for seed in range(10):
        points, stats = run_standard_mc(*sum4, 10_000, make_rng(seed))
        assert stats.m_total == 10_000
        assert stats.m_accepted == len(points)
        hits.append(len(points))
    assert sum(h <= 2 for h in hits) >= 9


def test_hits_are_in_the_tail_with_unit_scores(product_left):
    points, stats = run_standard_mc(*product_left, 50_000, make_rng(1))
    spec = product_left[2]
    assert points
    assert all(spec.contains(p.z) and p.score == 1.0 for p in points)
    assert stats.count_rejection == pytest.approx(1 - len(points) / 50_000)


def test_hit_rate_estimates_tail_mass(product_left):
    m = 200_000
    points, _ = run_standard_mc(*product_left, m, make_rng(2))
    p = exact_tail_mass(*product_left)
    assert abs(len(points) / m - p) < 4 * np.sqrt(p * (1 - p) / m)


def test_zero_samples_is_an_error(sum4):
    with pytest.raises(ValueError):
        run_standard_mc(*sum4, 0, make_rng(0))
