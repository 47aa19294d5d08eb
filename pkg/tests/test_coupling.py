import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwl import coupling as cp
from pwl.lattice import LatticePoint, embed
from pwl.prudent import PrudentPath, decompose_excursions, simulate, walk_arrays

small = st.integers(min_value=-20, max_value=20)


def brute_corner(a, b, a_lo, a_hi, b_lo, b_hi):
    corners = [(x, y) for x in (a_lo, a_hi) for y in (b_lo, b_hi)]
    # smallest distance, then larger a, then larger b
    return min(corners, key=lambda c: (abs(c[0] - a) + abs(c[1] - b), -c[0], -c[1]))


@given(st.lists(small, min_size=2, max_size=2), st.lists(small, min_size=2, max_size=2), st.data())
def test_nearest_corner_brute_force(xs, ys, data):
    a_lo, a_hi = sorted(xs)
    b_lo, b_hi = sorted(ys)
    a = data.draw(st.integers(min_value=a_lo, max_value=a_hi))
    b = data.draw(st.integers(min_value=b_lo, max_value=b_hi))
    got = cp.nearest_corner(a, b, a_lo, a_hi, b_lo, b_hi)
    assert (int(got[0]), int(got[1])) == brute_corner(a, b, a_lo, a_hi, b_lo, b_hi)


@pytest.mark.parametrize("kind", ["square", "tri"])
def test_corner_trace_and_sup_distance(kind):
    path = simulate(kind, 400, 12, 0)
    tr = cp.corner_trace(path)
    assert len(tr) == 401 and (tr.a[0], tr.b[0]) == (0, 0)
    a, b = path.arrays()
    d = cp.distance_series(kind, a, b, tr)
    assert d[0] == 0.0
    for t in (0, 1, 17, 400):
        want = 0.0 if t == 0 else max(
            np.hypot(*(np.subtract(embed(kind, (tr.a[s], tr.b[s])), embed(kind, (a[s], b[s]))))) for s in range(t + 1)
        ) / t
        assert cp.sup_distance(path, tr, t) == pytest.approx(want, abs=1e-12)
    curve = cp.sup_distance_curve(kind, a, b, [0, 1, 17, 400])
    assert np.allclose(curve, [cp.sup_distance(path, tr, t) for t in (0, 1, 17, 400)])
    assert tr.corners[5] == embed(kind, (tr.a[5], tr.b[5]))
    with pytest.raises(ValueError):
        cp.sup_distance(path, tr, 401)


def test_straight_path_stays_on_its_corner():
    a = np.arange(10)
    b = np.zeros(10, dtype=np.int64)
    tr = cp.corner_trace_arrays("square", a, b)
    assert np.array_equal(tr.a, a) and np.all(tr.b == 0)


@given(st.lists(st.tuples(small, small), min_size=0, max_size=30), st.integers(min_value=0, max_value=25),
       st.sampled_from(["vertical", "horizontal"]))
def test_truncation_is_longest_prefix(sites, cap, axis):
    out = cp.truncate_excursion(sites, cap, axis)
    j = 1 if axis == "vertical" else 0
    assert out == sites[: len(out)]
    if sites:
        assert all(abs(s[j] - sites[0][j]) <= cap for s in out)
        if len(out) < len(sites):
            assert abs(sites[len(out)][j] - sites[0][j]) > cap
    span = max((abs(s[j] - sites[0][j]) for s in sites), default=0)
    assert (out == sites) == (span <= cap)


def test_truncation_arguments():
    assert cp.truncate_excursion([(0, 0), (0, 1)], cp.TruncationCap(0)) == [(0, 0)]
    with pytest.raises(ValueError):
        cp.truncate_excursion([(0, 0)], -1)
    with pytest.raises(ValueError):
        cp.truncate_excursion([(0, 0)], 1, "diagonal")


def test_running_caps():
    assert cp.running_caps([5, 3, 4, 1, 2]).tolist() == [5, 3, 3, 1, 1]
    with pytest.raises(ValueError):
        cp.running_caps([1, -1])


@pytest.mark.parametrize("kind", ["square", "tri"])
def test_coupling_equality(kind):
    path = simulate(kind, 3000, 8, 1)
    recs = decompose_excursions(path)
    complete = [r for r in recs if r.complete]
    spans = [s for r in complete for s in (r.vertical_span, r.horizontal_span)]
    rep = cp.coupling_equality_check(path, max(spans) + 1, recs)
    assert rep.n_altered == 0 and rep.n_excursions == 2 * len(complete)
    rep0 = cp.coupling_equality_check(path, 0)
    assert rep0.n_altered == sum(s > 0 for s in spans)
    caps = cp.running_caps(np.arange(len(complete), 0, -1))
    rep_run = cp.coupling_equality_check(path, caps)
    assert rep_run.n_altered == sum(
        int(r.vertical_span > c) + int(r.horizontal_span > c) for r, c in zip(complete, caps)
    )


def naive_stopping(S):
    taus, deltas = [0], []
    down = True
    for n in range(1, len(S)):
        ref = S[taus[-1]]
        if (down and S[n] < ref) or (not down and S[n] > ref):
            step = S[n] - S[taus[-1]]
            deltas.append((-1 - step) if down else (1 - step))
            taus.append(n)
            down = not down
    S_hat = []
    for n in range(len(S)):
        S_hat.append(S[n] + sum(d for t, d in zip(taus[1:], deltas) if t <= n))
    return taus, deltas, S_hat


def test_coupled_walk_example():
    cw = cp.build_coupled_walk([0, -3])
    assert cw.ledger.taus.tolist() == [0, 1]
    assert cw.ledger.deltas.tolist() == [2]
    assert cw.S_hat.tolist() == [0, -1]


def test_coupled_walk_no_crossing():
    cw = cp.build_coupled_walk([0, 0, 1, 2])
    assert cw.ledger.taus.tolist() == [0] and cw.S_hat.tolist() == [0, 0, 1, 2]


@given(st.lists(st.integers(min_value=-6, max_value=6), min_size=0, max_size=60))
def test_coupled_walk_matches_naive(xi):
    S = np.concatenate([[0], np.cumsum(xi)]).astype(np.int64)
    cw = cp.build_coupled_walk(S)
    taus, deltas, S_hat = naive_stopping(S.tolist())
    assert cw.ledger.taus.tolist() == taus
    assert cw.ledger.deltas.tolist() == deltas
    assert cw.S_hat.tolist() == S_hat
    # S_hat moves by exactly -1, +1, -1, ... between consecutive stopping times
    d = np.diff(cw.S_hat[cw.ledger.taus])
    assert d.tolist() == [(-1 if j % 2 == 0 else 1) for j in range(d.size)]


def test_ledger_ndjson():
    cw = cp.build_coupled_walk([0, -3, 2, 1])
    lines = [json.loads(x) for x in cw.ledger.ndjson_lines()]
    assert lines == [{"j": 1, "tau": 1, "delta": 2}, {"j": 2, "tau": 2, "delta": -4}, {"j": 3, "tau": 3, "delta": 0}]


def test_coupled_walk_seeded():
    a = cp.coupled_walk(500, 3, 4)
    b = cp.coupled_walk(500, 3, 4)
    assert np.array_equal(a.S_hat, b.S_hat)
    with pytest.raises(ValueError):
        cp.build_coupled_walk([])
