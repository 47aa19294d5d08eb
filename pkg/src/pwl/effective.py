"""The effective one-dimensional walk and its exit times.

Between box-growth steps the prudent walker slides along one side of its
box. Sampled at growth steps, its transverse position is a random walk
``S_n`` with i.i.d. increments

    P[xi = k] = (1/3) * (1/2)**|k|,   k in Z,

and the number of growth steps in a phase is the exit time of ``S`` from
``[0, L-1]`` started at the corner ``S_0 = 0``.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numba as nb
import numpy as np
from scipy import stats

from .lattice import LatticeKind
from .rng import new_state, next_double

VARIANCE = 4.0
EXIT_CAP = 10**9

BELOW = 0
ABOVE = 1


class ScaleExceeded(ValueError):
    pass


class InsufficientSamples(RuntimeError):
    pass


def pmf(k: int) -> float:
    return (1.0 / 3.0) * 2.0 ** (-abs(int(k)))


def pmf_exact(k: int) -> Fraction:
    return Fraction(1, 3 * 2 ** abs(int(k)))


def tail_ge(k: int) -> float:
    """``P[xi >= k]`` in closed form (the law is symmetric)."""
    k = int(k)
    if k <= 0:
        return 1.0 - tail_ge(1 - k)
    return (1.0 / 3.0) * 2.0 ** (1 - k)


@nb.njit(cache=True, nogil=True)
def increment_from_uniform(u):
    """Inverse-CDF draw of one increment.

    ``[1/3, 2/3)`` maps to 0; the outer thirds are the negative and positive
    half-laws, each a Geometric(1/2) magnitude.
    """
    if u < 1.0 / 3.0:
        j = 1
        thr = 1.0 / 6.0
        while u < thr:
            j += 1
            thr *= 0.5
        return -j
    if u < 2.0 / 3.0:
        return 0
    v = 1.0 - u
    j = 1
    thr = 1.0 / 6.0
    while v <= thr:
        j += 1
        thr *= 0.5
    return j


@nb.njit(cache=True, nogil=True)
def _sample_increments(state, out):
    for i in range(out.shape[0]):
        out[i] = increment_from_uniform(next_double(state))


@nb.njit(cache=True, nogil=True)
def increments_from_uniforms(u):
    out = np.empty(u.shape[0], dtype=np.int64)
    for i in range(u.shape[0]):
        out[i] = increment_from_uniform(u[i])
    return out


def sample_increments(n: int, seed: int, stream: int = 0) -> np.ndarray:
    state = new_state(np.uint64(seed), np.uint64(stream))
    out = np.empty(n, dtype=np.int64)
    _sample_increments(state, out)
    return out


def sample_increment(rng) -> int:
    """One increment drawn with a :class:`pwl.rng.Stream`."""
    return int(increment_from_uniform(rng.random()))


@dataclass(frozen=True)
class EffectiveTrajectory:
    values: np.ndarray
    increments: np.ndarray
    seed: int = 0
    stream: int = 0

    def __len__(self) -> int:
        return self.values.size - 1


def simulate_effective(n: int, seed: int, stream: int = 0) -> EffectiveTrajectory:
    if n < 0:
        raise ValueError("n must be >= 0")
    xi = sample_increments(n, seed, stream)
    values = np.concatenate([[0], np.cumsum(xi)]).astype(np.int64)
    return EffectiveTrajectory(values, xi, seed, stream)


class ExitSample(NamedTuple):
    L: int
    eta: int
    exit_side: int  # BELOW or ABOVE
    overshoot: int


@nb.njit(cache=True, nogil=True)
def _exit_one(L, state):
    s = 0
    n = 0
    while True:
        s += increment_from_uniform(next_double(state))
        n += 1
        if s < 0:
            return n, 0, -1 - s
        if s > L - 1:
            return n, 1, s - L
        if n >= EXIT_CAP:
            return -1, -1, -1


@nb.njit(cache=True, nogil=True)
def _exit_batch(L, state, eta, side, over):
    for i in range(eta.shape[0]):
        e, sd, o = _exit_one(L, state)
        eta[i] = e
        side[i] = sd
        over[i] = o


def exit_time(L: int, rng) -> ExitSample:
    """First exit of the effective walk from ``[0, L-1]``, started at 0."""
    if L < 1:
        raise ValueError("L must be >= 1")
    e, sd, o = _exit_one(L, rng.state)
    if e < 0:
        raise RuntimeError(f"exit time exceeded {EXIT_CAP} steps")
    return ExitSample(L, int(e), int(sd), int(o))


def exit_times(L: int, n: int, seed: int, stream: int = 0):
    """``n`` i.i.d. exit samples as arrays ``(eta, side, overshoot)``."""
    if L < 1:
        raise ValueError("L must be >= 1")
    state = new_state(np.uint64(seed), np.uint64(stream))
    eta = np.empty(n, dtype=np.int64)
    side = np.empty(n, dtype=np.int64)
    over = np.empty(n, dtype=np.int64)
    _exit_batch(L, state, eta, side, over)
    if n and eta.min() < 0:
        raise RuntimeError(f"exit time exceeded {EXIT_CAP} steps")
    return eta, side, over


def transition_matrix(L: int) -> np.ndarray:
    """Sub-stochastic kernel of the walk killed on leaving ``[0, L-1]``."""
    idx = np.arange(L)
    diff = idx[None, :] - idx[:, None]
    return (1.0 / 3.0) * np.exp2(-np.abs(diff).astype(np.float64))


def exit_mass(L: int) -> np.ndarray:
    """Per-site probability of leaving ``[0, L-1]`` in one step.

    ``P[xi < -i] + P[xi > L-1-i]``, both geometric tails in closed form.
    """
    i = np.arange(L)
    return (1.0 / 3.0) * (np.exp2(-i.astype(np.float64)) + np.exp2(-(L - 1 - i).astype(np.float64)))


class ExitDistribution(NamedTuple):
    L: int
    p: np.ndarray  # p[m-1] = P(eta_L = m), m = 1..n_max
    tail: float  # P(eta_L > n_max)

    def survival(self, n: int) -> float:
        """``P(eta_L >= n)``."""
        if n <= 1:
            return 1.0
        return float(self.p[n - 1 :].sum() + self.tail)


def exit_time_dp(L: int, n_max: int) -> ExitDistribution:
    """Exact law of ``eta_L`` up to ``n_max`` by propagating the occupation vector."""
    if not (1 <= L <= 64) or not (1 <= n_max <= 10**4):
        raise ScaleExceeded(f"oracle limited to 1 <= L <= 64, n_max <= 1e4 (got L={L}, n_max={n_max})")
    K = transition_matrix(L)
    out = exit_mass(L)
    occ = np.zeros(L)
    occ[0] = 1.0
    p = np.empty(n_max)
    for m in range(n_max):
        p[m] = occ @ out
        occ = occ @ K
    return ExitDistribution(L, p, float(occ.sum()))


class GamblersRuin(NamedTuple):
    L: int
    n: int
    value: float
    stderr: float
    n_samples: int
    exact: float | None


def gamblers_ruin_estimate(L: int, n: int, N: int, seed: int, stream: int = 0) -> GamblersRuin:
    """Monte Carlo ``P(eta_L >= n)`` with its binomial standard error."""
    if N < 1:
        raise ValueError("N must be >= 1")
    eta, _, _ = exit_times(L, N, seed, stream)
    p = float(np.mean(eta >= n))
    exact = None
    if L <= 64 and n <= 10**4:
        exact = exit_time_dp(L, max(n, 1)).survival(n)
    return GamblersRuin(L, n, p, float(np.sqrt(p * (1 - p) / N)), N, exact)


def pooled_bins(expected: np.ndarray, min_expected: float = 5.0) -> list[slice]:
    """Group consecutive cells so every group expects at least ``min_expected``.

    Leftover small cells at the end are merged into the last group.
    """
    groups = []
    start = 0
    acc = 0.0
    for i, e in enumerate(expected):
        acc += e
        if acc >= min_expected:
            groups.append(slice(start, i + 1))
            start = i + 1
            acc = 0.0
    if start < len(expected):
        if groups:
            groups[-1] = slice(groups[-1].start, len(expected))
        else:
            groups.append(slice(0, len(expected)))
    return groups


def chi_square_vs_exit_law(counts: np.ndarray, L: int):
    """Chi-square of observed exit-time counts against the exact law.

    ``counts[m-1]`` is the number of observations equal to ``m``; the last
    cell is treated as the tail ``eta >= len(counts)``. Returns
    ``(statistic, dof)``.
    """
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    M = counts.size
    dist = exit_time_dp(L, M)
    probs = np.append(dist.p[: M - 1], dist.p[M - 1 :].sum() + dist.tail)
    expected = n * probs
    stat = 0.0
    groups = pooled_bins(expected)
    for g in groups:
        o = counts[g].sum()
        e = expected[g].sum()
        stat += (o - e) ** 2 / e
    return stat, len(groups) - 1


_LEMMA1_BATCH = 2000


class Lemma1Report(NamedTuple):
    kind: str
    heights: tuple
    statistic: float
    dof: int
    p_value: float
    n_events: int
    n_walks: int
    n_trapped: int
    per_height: dict
    counts: dict  # height -> counts[x] for x = 0..max_m (last cell is the tail)


def lemma1_check(
    kind,
    height,
    N: int,
    seed: int,
    n_steps: int = 1000,
    max_m: int = 60,
    stream0: int = 0,
) -> Lemma1Report:
    """Compare the law of ``X_k`` given ``H_{T_k} = h`` with the exit law of ``eta_h``.

    ``height`` is an int or an iterable of ints; several heights pool their
    chi-square statistics and degrees of freedom. Excursion ``k = 0`` is
    skipped: at the origin all directions are open, so the corner reduction
    only starts at ``T_1``.
    """
    from .prudent import observe_walks

    kind = LatticeKind.parse(kind)
    heights = (int(height),) if np.isscalar(height) else tuple(int(h) for h in height)
    for h in heights:
        if not 1 <= h <= 8:
            raise ValueError("height must lie in 1..8")
    counts = {h: np.zeros(max_m + 1, dtype=np.int64) for h in heights}
    trapped = 0
    for start in range(0, N, _LEMMA1_BATCH):
        n = min(_LEMMA1_BATCH, N - start)
        obs = observe_walks(kind, n, n_steps, n_steps, seed, stream0 + start)
        trapped += int(obs.trapped.sum())
        keep = ~obs.trapped
        _accumulate_observed(obs.H_at_T[keep], obs.W_at_T[keep], obs.W_at_U[keep], obs.U[keep] >= 0, counts, max_m)
    n_events = int(sum(c.sum() for c in counts.values()))
    if n_events < 100:
        raise InsufficientSamples(f"only {n_events} conditioning events")
    stat = 0.0
    dof = 0
    per = {}
    for h in heights:
        if counts[h].sum() == 0:
            continue
        s, d = chi_square_vs_exit_law(counts[h][1:], h)
        if counts[h][0]:
            s = float("inf")
        per[h] = (s, d, int(counts[h].sum()))
        stat += s
        dof += d
    p = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return Lemma1Report(kind.value, heights, float(stat), int(dof), p, n_events, N, trapped, per, counts)


def _accumulate_lemma1(a, b, counts, max_m, excursion_times, box_series):
    T, U = excursion_times(a, b)
    if U.size < 2:
        return
    a_lo, a_hi, b_lo, b_hi = box_series(a, b)
    W = a_hi - a_lo + 1
    H = b_hi - b_lo + 1
    ks = np.arange(1, U.size)
    h = H[T[ks]]
    x = W[U[ks]] - W[T[ks]]
    for hh, xx in zip(h, x):
        c = counts.get(int(hh))
        if c is not None:
            # cell 0 holds X = 0, which the exit law gives probability 0
            c[min(int(xx), max_m)] += 1


def _accumulate_observed(H_T, W_T, W_U, reached, counts, max_m):
    # excursion 0 starts from the origin, not from a box corner
    sel = reached[:, 1:]
    h = H_T[:, 1:][sel]
    x = W_U[:, 1:][sel] - W_T[:, 1:][sel]
    for hh, c in counts.items():
        xs = np.minimum(x[h == hh], max_m)
        c += np.bincount(xs, minlength=max_m + 1)
