"""Stats primitives against independent numerical oracles."""

import math
import random

import pytest
import scipy.integrate
import scipy.stats
from hypothesis import given, strategies as st

from isatrain.stats import (ZeroVarianceError, normal_cdf, pearson,
                            regularized_incomplete_beta, student_t_two_tailed)


def _phi_quadrature(z: float) -> float:
    # Independent oracle: integrate the standard normal density from 0 to z.
    pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    area, _ = scipy.integrate.quad(pdf, 0.0, z, epsabs=1e-12)
    return 0.5 + area


def test_cdf_at_zero_is_exactly_half():
    assert abs(normal_cdf(0.0) - 0.5) <= 1e-9


def test_cdf_matches_quadrature_on_grid():
    z = -6.0
    while z <= 6.0 + 1e-12:
        assert abs(normal_cdf(z) - _phi_quadrature(z)) <= 1e-6
        z += 0.01


def test_cdf_known_values_from_quadrature():
    # Frozen from the quadrature oracle above.
    assert normal_cdf(1.0) * 100 == pytest.approx(84.1345, abs=1e-3)
    assert normal_cdf(-1.0) * 100 == pytest.approx(15.8655, abs=1e-3)


def test_cdf_symmetry_and_monotonicity():
    zs = [i * 0.01 for i in range(-600, 601)]
    for z in zs:
        assert abs(normal_cdf(z) + normal_cdf(-z) - 1.0) <= 2e-7
    values = [normal_cdf(z) for z in zs]
    assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_cdf_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        normal_cdf(bad)


def test_incomplete_beta_matches_scipy():
    rng = random.Random(11)
    for _ in range(200):
        a = rng.uniform(0.5, 30)
        b = rng.uniform(0.5, 30)
        x = rng.random()
        assert regularized_incomplete_beta(a, b, x) == pytest.approx(
            scipy.stats.beta.cdf(x, a, b), abs=1e-9)


def test_t_two_tailed_matches_scipy():
    rng = random.Random(13)
    for _ in range(100):
        t = rng.uniform(0, 8)
        df = rng.randrange(1, 120)
        expected = 2 * scipy.stats.t.sf(t, df)
        assert student_t_two_tailed(t, df) == pytest.approx(expected, abs=1e-9)


def _pearson_bruteforce(x, y):
    # Double-loop product-moment computation, no shared code with the impl.
    n = len(x)
    mx = my = 0.0
    for v in x:
        mx += v / n
    for v in y:
        my += v / n
    sxy = sxx = syy = 0.0
    for a, b in zip(x, y):
        sxy += (a - mx) * (b - my)
        sxx += (a - mx) ** 2
        syy += (b - my) ** 2
    return sxy / math.sqrt(sxx * syy)


def test_pearson_matches_bruteforce_on_random_fixtures():
    rng = random.Random(1234)
    for _ in range(100):
        n = rng.randrange(3, 40)
        x = [rng.uniform(-10, 10) for _ in range(n)]
        y = [rng.uniform(-10, 10) for _ in range(n)]
        r, _ = pearson(x, y)
        assert abs(r - _pearson_bruteforce(x, y)) <= 1e-12


def test_pearson_hand_example():
    r, _ = pearson([1, 2, 3], [1, 2, 4])
    assert r == pytest.approx(9 / math.sqrt(84), abs=1e-12)


def test_pearson_perfect_lines():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson(x, x)[0] == 1.0
    assert pearson(x, [-v for v in x])[0] == -1.0
    assert pearson(x, x)[1] == 0.0


def test_pearson_p_matches_scipy():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randrange(5, 60)
        x = [rng.gauss(0, 1) for _ in range(n)]
        y = [xi * 0.5 + rng.gauss(0, 1) for xi in x]
        r, p = pearson(x, y)
        ref = scipy.stats.pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, abs=1e-9)


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2])
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(ZeroVarianceError):
        pearson([1, 1, 1], [1, 2, 3])


@given(st.lists(st.floats(-50, 50), min_size=3, max_size=50),
       st.randoms(use_true_random=False))
def test_pearson_bounded_and_symmetric(xs, rnd):
    ys = [x * rnd.uniform(-2, 2) + rnd.uniform(-1, 1) for x in xs]
    try:
        r, p = pearson(xs, ys)
    except ZeroVarianceError:
        return
    assert -1.0 <= r <= 1.0
    assert 0.0 <= p <= 1.0
    r2, p2 = pearson(ys, xs)
    assert r2 == pytest.approx(r, abs=1e-12)
    assert p2 == pytest.approx(p, abs=1e-12)
