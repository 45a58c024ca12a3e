import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from tailsim.core import LEFT, RIGHT, ProductTarget, SumTarget, TailSpec, uniform_model
from tailsim.errors import OracleUnderpoweredError, OutsidePieceError
from tailsim.oracles import (
    asymptotic_rejection,
    brute_force_tail_cdf,
    brute_force_tail_points,
    exact_tail_mass,
    irwin_hall_cdf,
    irwin_hall_sf,
    product_beta_uniform_cdf,
    product_region_volumes,
    product_uniform_cdf,
    product_uniform_sf,
    reliability_cdf,
    reliability_quantile,
    tail_bounding_box,
)
from tailsim.rng import make_rng

from conftest import ALPHA, BETA, REL_EPS


def _quad(f, a, b, pts=()):
    inner = sorted(p for p in pts if a < p < b)
    return integrate.quad(f, a, b, points=inner or None, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def sum_cdf_by_quadrature(n, z):
    # F_k(z) = int_0^1 F_{k-1}(z - x) dx
    if n == 1:
        return min(max(z, 0.0), 1.0)
    return _quad(lambda x: sum_cdf_by_quadrature(n - 1, z - x), 0.0, 1.0, [z - k for k in range(n)])


def product_cdf_by_quadrature(n, z):
    # F_k(z) = int_0^1 F_{k-1}(z / x) dx
    if n == 1:
        return min(max(z, 0.0), 1.0)
    return _quad(lambda x: product_cdf_by_quadrature(n - 1, z / x), 0.0, 1.0, [z])


@pytest.mark.parametrize("z", [0.3, 1.7, 2.5, 3.88, 3.95])
def test_irwin_hall_matches_quadrature(z):
    assert irwin_hall_cdf(4, z) == pytest.approx(sum_cdf_by_quadrature(4, z), abs=1e-8)


@pytest.mark.parametrize("z", [0.001, 0.05, 0.5, 0.9])
def test_product_cdf_matches_quadrature(z):
    assert product_uniform_cdf(3, z) == pytest.approx(product_cdf_by_quadrature(3, z), abs=1e-8)


def test_frozen_reference_values():
    assert irwin_hall_cdf(4, 3.88) == pytest.approx(0.99999136, abs=1e-12)
    assert irwin_hall_sf(4, 3.88) == pytest.approx(0.12**4 / 24, rel=1e-10)
    assert product_uniform_cdf(3, 0.001) == pytest.approx(0.0317663, abs=5e-8)
    assert product_uniform_cdf(3, 0.9) == pytest.approx(0.99981984, abs=5e-9)


def test_product_sf_is_accurate_near_one():
    eps = 1e-6
    mpmath.mp.dps = 50
    x = mpmath.mpf(1) - mpmath.mpf(eps)
    y = -mpmath.log(x)
    exact = 1 - x * (1 + y + y**2 / 2)
    assert product_uniform_sf(3, 1 - eps) == pytest.approx(float(exact), rel=1e-8)


def test_irwin_hall_symmetry():
    for z in np.linspace(0.1, 3.9, 9):
        assert irwin_hall_cdf(4, z) == pytest.approx(1 - irwin_hall_cdf(4, 4 - z), abs=1e-14)


def _product_beta_cdf_literal(u, beta):
    # the textbook closed form in u and log(beta), evaluated in high precision
    mpmath.mp.dps = 60
    u, b = mpmath.mpf(u), mpmath.mpf(beta)
    lb = mpmath.log(b)
    lu = mpmath.log(u / b**2)
    num = -(b**3) + u + u * lb + u * lb**2 / 2 + u * lu**2 / 2 - (u + u * lb) * lu
    return float(num / (1 - b) ** 3)


@pytest.mark.parametrize("frac", [0.0, 0.1, 0.5, 0.9, 0.999])
def test_product_beta_cdf_matches_high_precision_literal(frac):
    lo, hi = BETA**3, BETA**2
    u = lo + frac * (hi - lo)
    assert product_beta_uniform_cdf(u, BETA) == pytest.approx(_product_beta_cdf_literal(u, BETA), abs=1e-10)


def test_product_beta_cdf_matches_quadrature():
    beta = 0.9
    u = 0.75

    def cdf2(v):
        # P(y1 y2 <= v) for y ~ U(beta, 1)
        def slice_(y1):
            t = v / y1
            return min(max((t - beta) / (1 - beta), 0.0), 1.0)

        return _quad(slice_, beta, 1.0, [v / beta, v]) / (1 - beta)

    ref = _quad(lambda y: cdf2(u / y), beta, 1.0, [u / beta, u / beta**2]) / (1 - beta)
    assert product_beta_uniform_cdf(u, beta) == pytest.approx(ref, abs=1e-8)


def test_product_beta_cdf_outside_piece():
    with pytest.raises(OutsidePieceError):
        product_beta_uniform_cdf(BETA**2 + 1e-9, BETA)


def test_reliability_quantities():
    z_max = 1 - ALPHA * BETA**3
    edge = z_max - REL_EPS
    assert z_max == pytest.approx(0.00129967, abs=5e-9)
    assert 1 - reliability_cdf(edge, ALPHA, BETA) == pytest.approx(0.0209077, abs=5e-7)
    assert reliability_cdf(z_max, ALPHA, BETA) == 1.0
    q = reliability_quantile(0.98, ALPHA, BETA)
    assert q == pytest.approx(0.00125040, abs=5e-9)
    assert reliability_cdf(q, ALPHA, BETA) == pytest.approx(0.98, abs=1e-12)


def test_reliability_cdf_against_brute_force():
    from tailsim.core import ReliabilityTarget

    f = ReliabilityTarget(ALPHA, BETA)
    model = f.model()
    spec = TailSpec.for_target(f, model, RIGHT, REL_EPS)
    brute = brute_force_tail_cdf(f, model, spec, 2_000_000, make_rng(4))
    assert brute.tail_mass == pytest.approx(exact_tail_mass(f, model, spec), abs=4 * brute.stderr)


def test_region_volumes_right_tail():
    vol_tail, vol_region = product_region_volumes(0.1, RIGHT)
    assert vol_tail == pytest.approx(1.801587e-4, rel=1e-6)
    assert vol_region == pytest.approx(1.849569e-4, rel=1e-6)
    ratio = 1 - vol_tail / vol_region
    assert ratio == pytest.approx(0.0259425, abs=1e-7)
    # the small-eps expansion is close but not exact at eps = 0.1
    assert asymptotic_rejection(0.1) == pytest.approx(0.0258889, abs=1e-7)
    assert abs(ratio - asymptotic_rejection(0.1)) < 1e-4


def test_region_volumes_left_tail():
    vol_tail, vol_region = product_region_volumes(0.01, LEFT)
    assert vol_tail == pytest.approx(product_uniform_cdf(3, 0.01), rel=1e-12)
    assert vol_tail == pytest.approx(0.16208966, abs=1e-8)
    assert vol_region == pytest.approx(0.51708274, abs=1e-8)
    assert 1 - vol_tail / vol_region == pytest.approx(0.6865, abs=1e-3)


def test_region_volumes_reject_bad_input():
    with pytest.raises(ValueError):
        product_region_volumes(0.0, LEFT)
    with pytest.raises(ValueError):
        product_region_volumes(0.1, "middle")


def test_brute_force_underpowered():
    f = SumTarget(4)
    model = uniform_model([0] * 4, [1] * 4)
    spec = TailSpec.for_target(f, model, RIGHT, 0.12)
    with pytest.raises(OracleUnderpoweredError, match="underpowered"):
        brute_force_tail_cdf(f, model, spec, 10_000, make_rng(0))


def test_brute_force_cdf_matches_exact_at_large_scale():
    f = ProductTarget(3)
    model = uniform_model([0] * 3, [1] * 3)
    spec = TailSpec.for_target(f, model, LEFT, 0.01)
    brute = brute_force_tail_cdf(f, model, spec, 10_000_000, make_rng(1))
    ref = np.array([product_uniform_cdf(3, z) for z in brute.z[::500]])
    # binomial noise of a CDF estimated from 10^7 draws
    assert np.max(np.abs(brute.cdf[::500] - ref)) < 5 * math.sqrt(0.16 / 1e7)


def test_tail_points_are_exact_tail_draws():
    f = SumTarget(4)
    model = uniform_model([0] * 4, [1] * 4)
    spec = TailSpec.for_target(f, model, RIGHT, 0.12)
    lo, hi = tail_bounding_box(f, model, spec)
    np.testing.assert_allclose(lo, 0.88, atol=1e-10)
    pts = brute_force_tail_points(f, model, spec, 5000, make_rng(2))
    assert pts.shape == (5000, 4)
    assert spec.contains(f(pts)).all()
    # conditional mean of each coordinate in the corner simplex is 1 - eps / 5
    np.testing.assert_allclose(pts.mean(axis=0), 1 - 0.12 / 5, atol=3e-3)
