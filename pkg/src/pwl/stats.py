"""Monte Carlo estimators, log-log tail fits and distribution distances."""

import math
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .rng import Stream


class InsufficientData(ValueError):
    pass


class Estimate(NamedTuple):
    value: float
    stderr: float
    n_samples: int
    seed: int = 0
    meta: dict = {}


def binomial_estimate(successes: int, N: int, seed: int = 0, **meta) -> Estimate:
    if N < 1:
        raise ValueError("N must be >= 1")
    p = successes / N
    return Estimate(p, math.sqrt(p * (1.0 - p) / N), N, seed, {k: str(v) for k, v in meta.items()})


def estimate_event_probability(sampler: Callable[[int, int], bool], N: int, seed: int) -> Estimate:
    """Binomial estimate of ``P(sampler(seed, i))`` over streams ``i = 0..N-1``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    hits = sum(bool(sampler(seed, i)) for i in range(N))
    return binomial_estimate(hits, N, seed)


class TailFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float
    k_values: list
    estimates: list
    n_dropped: int


def fit_tail_exponent(k_values: Sequence[float], estimates: Sequence) -> TailFit:
    """Least squares of ``log p`` on ``log k``; zero estimates are dropped and counted."""
    p = np.array([e.value if isinstance(e, Estimate) else float(e) for e in estimates])
    k = np.asarray(k_values, dtype=np.float64)
    keep = p > 0
    if keep.sum() < 3:
        raise InsufficientData(f"need 3 positive estimates, got {int(keep.sum())}")
    x = np.log(k[keep])
    y = np.log(p[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return TailFit(float(slope), float(intercept), r2, list(k_values), list(estimates), int((~keep).sum()))


def ks_distance(sample, cdf: Callable[[float], float]) -> float:
    """One-sample Kolmogorov-Smirnov statistic ``sup |F_n - F|``."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if n == 0:
        raise ValueError("sample must be nonempty")
    F = np.array([cdf(v) for v in x])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p - q).sum())


def _mean_pairwise(X, Y) -> float:
    d = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=-1))
    return float(d.mean())


def _subsample(X, max_points, rng):
    if X.shape[0] <= max_points:
        return X
    idx = np.sort(np.argsort(rng.random(X.shape[0]))[:max_points])
    return X[idx]


def energy_distance_2d(A, B, max_points: int = 2000, seed: int = 0) -> float:
    """``2 E|a-b| - E|a-a'| - E|b-b'|`` over all pairs (V-statistic).

    Samples larger than ``max_points`` are thinned with a seeded subsample.
    """
    A = np.asarray(A, dtype=np.float64).reshape(-1, 2)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("both samples must be nonempty")
    rng = Stream(seed, 0xE4E7)
    A = _subsample(A, max_points, rng)
    B = _subsample(B, max_points, rng)
    return 2.0 * _mean_pairwise(A, B) - _mean_pairwise(A, A) - _mean_pairwise(B, B)


def energy_permutation_null(A, B, n_perm: int = 200, seed: int = 0) -> np.ndarray:
    """Energy distances of random relabellings of the pooled sample."""
    A = np.asarray(A, dtype=np.float64).reshape(-1, 2)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2)
    pooled = np.concatenate([A, B])
    D = np.sqrt(((pooled[:, None, :] - pooled[None, :, :]) ** 2).sum(axis=-1))
    n, m = A.shape[0], B.shape[0]
    rng = Stream(seed, 0x9E47)
    out = np.empty(n_perm)
    for r in range(n_perm):
        perm = np.argsort(rng.random(n + m))
        ia, ib = perm[:n], perm[n:]
        out[r] = 2.0 * D[np.ix_(ia, ib)].mean() - D[np.ix_(ia, ia)].mean() - D[np.ix_(ib, ib)].mean()
    return out


def nonincreasing(values, strict_overall: bool = True) -> bool:
    """Each value is at most the previous one (and the last below the first)."""
    v = list(values)
    ok = all(b <= a for a, b in zip(v, v[1:]))
    if strict_overall and len(v) > 1:
        ok = ok and v[-1] < v[0]
    return ok
