import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwl import effective as ef
from pwl import stats as sx
from pwl.rng import Stream


def test_binomial_estimate():
    e = sx.binomial_estimate(25, 100, seed=3, k=4)
    assert e.value == 0.25 and e.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    assert e.meta == {"k": "4"} and e.seed == 3
    with pytest.raises(ValueError):
        sx.binomial_estimate(0, 0)


def test_estimator_calibration_against_exact_law():
    L, n = 3, 3
    exact = ef.exit_time_dp(L, n).survival(n)
    N = 1000

    def sampler(seed, i):
        return ef.exit_time(L, Stream(seed, i)).eta >= n

    inside = 0
    for rep in range(100):
        e = sx.estimate_event_probability(sampler, N, 1000 + rep)
        inside += abs(e.value - exact) <= 4 * e.stderr
    assert inside >= 99


@given(slope=st.floats(min_value=-3, max_value=-0.2), c=st.floats(min_value=0.01, max_value=10))
def test_tail_fit_exact_on_power_law(slope, c):
    k = [4, 8, 16, 32, 64]
    p = [c * x**slope for x in k]
    fit = sx.fit_tail_exponent(k, p)
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert fit.intercept == pytest.approx(math.log(c), abs=1e-8)
    assert fit.n_dropped == 0 and fit.r_squared == pytest.approx(1.0)


def test_tail_fit_drops_zeros():
    fit = sx.fit_tail_exponent([1, 2, 4, 8], [1.0, 0.5, 0.25, 0.0])
    assert fit.n_dropped == 1 and fit.slope == pytest.approx(-1.0)
    with pytest.raises(sx.InsufficientData):
        sx.fit_tail_exponent([1, 2, 4], [1.0, 0.0, 0.0])


def uniform_cdf(x):
    return min(max(x, 0.0), 1.0)


def test_ks_examples():
    assert sx.ks_distance([0.5], uniform_cdf) == pytest.approx(0.5)
    assert sx.ks_distance([0.0], uniform_cdf) == pytest.approx(1.0)
    x = Stream(5, 0).random(10**4)
    # Kolmogorov bound: P(sqrt(n) D > 2) < 0.001
    assert sx.ks_distance(x, uniform_cdf) < 0.02
    with pytest.raises(ValueError):
        sx.ks_distance([], uniform_cdf)


def test_tv_distance():
    assert sx.tv_distance([0.5, 0.5], [1.0, 0.0]) == 0.5
    assert sx.tv_distance([0.2, 0.8], [0.2, 0.8]) == 0.0


def test_energy_distance_examples():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(300, 2))
    assert sx.energy_distance_2d(A, A) == pytest.approx(0.0, abs=1e-12)
    assert sx.energy_distance_2d(A + [1.0, 0.0], A) > 0.0
    B = rng.normal(size=(1000, 2))
    C = rng.normal(size=(1000, 2))
    assert sx.energy_distance_2d(B, C) < 0.05
    with pytest.raises(ValueError):
        sx.energy_distance_2d(np.empty((0, 2)), A)


def test_energy_distance_subsamples_deterministically():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(2500, 2))
    B = rng.normal(size=(100, 2))
    assert sx.energy_distance_2d(A, B, seed=4) == sx.energy_distance_2d(A, B, seed=4)


def test_energy_permutation_null_calibration():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(100, 2))
    B = rng.normal(size=(100, 2))
    null = sx.energy_permutation_null(A, B, 200, seed=0)
    assert null.shape == (200,) and np.all(null > -1e-12)
    assert sx.energy_distance_2d(A + [2.0, 0.0], B) > np.quantile(null, 0.95)


def test_nonincreasing():
    assert sx.nonincreasing([3, 2, 2, 1])
    assert not sx.nonincreasing([1, 1, 1])
    assert sx.nonincreasing([1, 1, 1], strict_overall=False)
    assert not sx.nonincreasing([1, 2, 0])
