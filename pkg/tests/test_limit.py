import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwl import limit as lm
from pwl.coupling import build_coupled_walk, coupled_walk
from pwl.lattice import E1_3D, E3_3D


def test_brownian_path_shape_and_scale():
    W = lm.sample_brownian(2.0, 1e-3, 5, 0)
    assert W.values[0] == 0.0 and W.values.size == 2001
    assert W.horizon == pytest.approx(2.0)
    inc = np.diff(W.values)
    assert inc.var() == pytest.approx(1e-3, rel=0.1)
    assert np.array_equal(W.values, lm.sample_brownian(2.0, 1e-3, 5, 0).values)
    with pytest.raises(ValueError):
        lm.sample_brownian(1.0, 2.0, 0)


def test_standard_normals_moments():
    z = lm.standard_normals(200000, 1)
    assert np.all(np.isfinite(z))
    assert abs(z.mean()) < 0.01 and z.std() == pytest.approx(1.0, abs=0.01)


def test_occupation_trivial_paths():
    zero = lm.BrownianPath(0.5, np.zeros(5))
    assert lm.occupation_integrals(zero) == (0.0, 2.0, 0.0)
    pos = lm.BrownianPath(0.5, np.ones(5))
    assert lm.occupation_integrals(pos) == (0.0, 0.0, 2.0)
    neg = lm.BrownianPath(0.25, -np.ones(9))
    assert lm.occupation_integrals(neg, 1.1) == pytest.approx((1.1, 0.0, 0.0))


@given(seed=st.integers(min_value=0, max_value=10**6), h=st.floats(min_value=0.01, max_value=1.0))
def test_occupation_conserves_time(seed, h):
    W = lm.sample_brownian(1.0, 1e-3, seed)
    occ = lm.occupation_integrals(W, h)
    assert min(occ) >= 0.0
    assert sum(occ) == pytest.approx(h, abs=1e-12)


def test_occupation_horizon_check():
    W = lm.sample_brownian(1.0, 0.1, 0)
    with pytest.raises(lm.HorizonExceeded):
        lm.occupation_integrals(W, 1.5)


def test_z_functional_linearity_and_norm():
    W = lm.sample_brownian(3.0, 1e-3, 2)
    s = (0.7, 1.3, 2.1)
    z = lm.z_functional(W, s, 1.5, 2.0)
    parts = [lm.z_functional(W, p, 1.5, 2.0) for p in ((s[0], 0, 0), (0, s[1], 0), (0, 0, s[2]))]
    assert np.array_equal(sum(np.array(p.value) for p in parts), np.array(z.value))
    assert lm.z_functional(W, (0, 0, 0), 1.5, 2.0).value == (0.0, 0.0, 0.0)
    z1 = lm.z_functional(W, (1, 1, 1), 1.5, 2.0)
    assert sum(abs(c) for c in z1.value) == pytest.approx(3.0, abs=1e-12)
    v = z1.vector()
    assert v == pytest.approx(z1.value[0] * np.array(E1_3D) + z1.value[1] * np.array((math.sqrt(3) / 2, -0.5, 0)) + z1.value[2] * np.array(E3_3D))
    assert z1.planar() == pytest.approx((v[0], v[1]))
    with pytest.raises(lm.HorizonExceeded):
        lm.z_functional(W, (1, 1, 1), 2.0, 2.0)


def test_z_samples_streams():
    zs = lm.z_samples(3, 1.0, 2.0, 1e-2, 9)
    assert zs[0].value != zs[1].value
    again = lm.z_functional(lm.sample_brownian(2.0, 1e-2, 9, 1), (1, 1, 1), 1.0, 2.0)
    assert zs[1].value == again.value


def test_arcsine_cdf():
    assert lm.arcsine_cdf(0.0) == 0.0
    assert lm.arcsine_cdf(0.5) == pytest.approx(0.5)
    assert lm.arcsine_cdf(1.0) == pytest.approx(1.0)
    assert lm.arcsine_cdf(0.25) == pytest.approx(1 / 3)
    with pytest.raises(lm.DomainError):
        lm.arcsine_cdf(1.2)


V = ((0.0, 1.0), (0.5, 0.5), (1.0, 0.0))


@given(st.lists(st.integers(min_value=-5, max_value=5), max_size=40))
def test_gamma_series_matches_direct_sum(signs):
    g = lm.gamma_series(signs, V)
    acc = np.zeros(2)
    assert np.array_equal(g[0], acc)
    for i, s in enumerate(signs, start=1):
        acc = acc + np.array(V[(s > 0) - (s < 0) + 1])
        assert g[i] == pytest.approx(acc)


def test_gamma_m():
    cw = build_coupled_walk([0, 1, 2, 3])
    assert lm.gamma_m(cw, 0, V) == (0.0, 0.0)
    assert lm.gamma_m(cw, 3, V) == (3.0, 0.0)
    with pytest.raises(ValueError):
        lm.gamma_m(cw, 4, V)
    assert len(lm.default_step_vectors("tri")) == 3
    assert lm.default_step_vectors("tri")[2] == (0.0, 0.0)


def test_growth_times():
    # every step grows the box
    assert lm.growth_times([0, 1, 2, 3], [0, 0, 0, 0]).tolist() == [1, 2, 3]
    # a three-step stall along the box side after t=2
    a = [0, 1, 1, 0, 0, 0]
    b = [0, 0, 1, 1, 0, -1]
    assert lm.growth_times(a, b).tolist() == [1, 2, 5]


def test_ols_slope_recovers_synthetic_slope():
    x = np.arange(1, 1001)
    noise = np.sin(x * 12.9898) * 0.3
    assert lm.ols_slope(x, 2.0 * x + 5 + noise) == pytest.approx(2.0, abs=1e-3)
    assert lm.ols_slope([1, 2, 3], [2, 4, 6]) == pytest.approx(2.0, abs=1e-15)


def test_alpha_from_slopes():
    v, se = lm.alpha_from_slopes([2.0] * 10, 0)
    assert v == 2.0 and se == 0.0
    rng = np.random.default_rng(0)
    s = rng.normal(2.3, 0.1, 400)
    v, se = lm.alpha_from_slopes(s, 1)
    assert se == pytest.approx(0.1 / 20, rel=0.15)


def test_estimate_alpha_small():
    est = lm.estimate_alpha("square", 3000, 6, 1)
    assert est.n_runs + est.n_trapped == 6
    assert 1.5 < est.value < 3.0 and est.ci_low < est.value < est.ci_high


def test_lemma_statistics():
    cw = coupled_walk(1000, 3, 0)
    assert lm.lemma3_statistic(1000, 3, 0) == np.max(np.abs(cw.S - cw.S_hat))
    up = lm.lemma4_statistic(1000, 0.1, coupled=cw)
    lo = lm.lemma4_statistic(1000, 0.1, coupled=cw, side="lower")
    assert 0.0 <= up <= 1.0 and 0.0 <= lo <= 1.0
    with pytest.raises(ValueError):
        lm.lemma4_statistic(10, 0.1, coupled=cw, side="left")
    assert lm.lemma5_statistic(0, 1) == 0.0


def test_lemma4_hand_example():
    # S_hat >= 0 throughout, S never above n^(1/3) + delta
    cw = build_coupled_walk([0, 0, 1, 0, 1])
    assert lm.lemma4_statistic(4, 0.1, coupled=cw) == pytest.approx(1.0)


def test_paired_paths_share_uniforms():
    S, sB = lm.paired_paths(2000, 4, 0)
    dS, dB = np.diff(S), np.diff(sB)
    # both increments are monotone images of the same uniform
    order = np.argsort(dB)
    assert np.all(np.diff(dS[order]) >= 0)


def test_lemma5_variance_matching():
    n = 10**4
    m2 = np.median([lm.lemma5_statistic(n, 5, i, sigma=2.0) for i in range(40)])
    m1 = np.median([lm.lemma5_statistic(n, 5, i, sigma=1.0) for i in range(40)])
    assert m2 < m1


def test_occupation_fraction():
    assert lm.occupation_fraction([0, 1, -1, 0, 2], 4) == 0.75
