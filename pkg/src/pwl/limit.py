"""Brownian limit objects and the diagnostics comparing them with the walks.

The limit functional is

    Z_{u,alpha}^{s1,s2,s3} = int_0^{alpha u} [ s1 1{W<0} e1 + s2 1{W=0} e2 + s3 1{W>0} e3 ] ds

for a standard Brownian motion ``W``. It is computed on a uniform grid with
left-endpoint indicator sums. :class:`LimitFunctional` keeps the three
coefficients along ``(e1, e2, e3)``; :meth:`LimitFunctional.vector` expands
them in the ambient 3-space and :meth:`LimitFunctional.planar` drops the
out-of-plane part.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .coupling import build_coupled_walk, coupled_walk
from .effective import VARIANCE, increments_from_uniforms
from .lattice import E1_3D, E2_3D, E3_3D, LatticeKind, PlanePoint
from .rng import Stream

SIGMA = math.sqrt(VARIANCE)
_HALF_ULP = 2.0**-54


class HorizonExceeded(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BrownianPath:
    grid_step: float
    values: np.ndarray  # W(0) = 0, W(g), W(2g), ...
    seed: int = 0
    stream: int = 0

    @property
    def horizon(self) -> float:
        return self.grid_step * (self.values.size - 1)


def standard_normals(n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Inverse-CDF normals, one Philox uniform each (shifted off 0)."""
    return ndtri(Stream(seed, stream).random(n) + _HALF_ULP)


def sample_brownian(horizon: float, grid_step: float, seed: int, stream: int = 0) -> BrownianPath:
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if not 0 < grid_step <= horizon:
        raise ValueError("grid_step must lie in (0, horizon]")
    n = math.ceil(horizon / grid_step - 1e-9)
    z = standard_normals(n, seed, stream)
    values = np.concatenate([[0.0], np.cumsum(z * math.sqrt(grid_step))])
    return BrownianPath(float(grid_step), values, seed, stream)


class Occupation(NamedTuple):
    below: float
    at_zero: float
    above: float


def occupation_integrals(W: BrownianPath, horizon: float | None = None) -> Occupation:
    """Left-endpoint time spent below, at and above zero on ``[0, horizon]``.

    Each grid cell goes to exactly one class, so the three parts add up to
    ``horizon`` (up to rounding). ``W(0) = 0`` puts the first cell at zero;
    otherwise ``at_zero`` only collects exact zeros.
    """
    g = W.grid_step
    if horizon is None:
        horizon = W.horizon
    if horizon < 0 or horizon > W.horizon * (1 + 1e-12):
        raise HorizonExceeded(f"horizon {horizon} outside [0, {W.horizon}]")
    full = min(int(math.floor(horizon / g + 1e-9)), W.values.size - 1)
    rest = max(horizon - full * g, 0.0)
    v = W.values[:full]
    nb_ = int(np.count_nonzero(v < 0))
    na = int(np.count_nonzero(v > 0))
    nz = full - nb_ - na
    below = nb_ * g
    above = na * g
    at_zero = nz * g
    if rest > 0:
        last = W.values[full]
        if last < 0:
            below += rest
        elif last > 0:
            above += rest
        else:
            at_zero += rest
    return Occupation(below, at_zero, above)


@dataclass(frozen=True)
class LimitFunctional:
    """Coefficients of ``Z`` along ``(e1, e2, e3)``."""

    value: tuple
    u: float
    alpha: float
    sigma: tuple

    def vector(self) -> np.ndarray:
        c = self.value
        return c[0] * np.array(E1_3D) + c[1] * np.array(E2_3D) + c[2] * np.array(E3_3D)

    def planar(self) -> PlanePoint:
        v = self.vector()
        return PlanePoint(float(v[0]), float(v[1]))


def z_functional(W: BrownianPath, sigma, u: float, alpha: float) -> LimitFunctional:
    s1, s2, s3 = (float(x) for x in sigma)
    h = alpha * u
    if h > W.horizon * (1 + 1e-12):
        raise HorizonExceeded(f"alpha*u = {h} exceeds the path horizon {W.horizon}")
    occ = occupation_integrals(W, h)
    return LimitFunctional((s1 * occ.below, s2 * occ.at_zero, s3 * occ.above), float(u), float(alpha), (s1, s2, s3))


def z_samples(n: int, u: float, alpha: float, grid_step: float, seed: int, stream0: int = 0, sigma=(1, 1, 1)):
    """``n`` independent functionals; sample ``i`` uses stream ``stream0 + i``."""
    out = []
    for i in range(n):
        W = sample_brownian(alpha * u, grid_step, seed, stream0 + i)
        out.append(z_functional(W, sigma, u, alpha))
    return out


def arcsine_cdf(x: float) -> float:
    """``P(fraction of [0,1] a Brownian path spends above 0 <= x)``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"arcsine law lives on [0, 1], got {x}")
    return 2.0 / math.pi * math.asin(math.sqrt(x))


# ---------------------------------------------------------------------------
# discrete approximants


def gamma_series(signs, step_vectors) -> np.ndarray:
    """Partial sums ``Gamma_0..Gamma_m`` of step vectors picked by sign.

    ``step_vectors`` is ``(v_neg, v_zero, v_pos)``, each a planar pair;
    entry ``i`` of ``signs`` (for ``i = 1..m``) selects the vector of step
    ``i``. Returns an ``(m + 1, 2)`` array with ``Gamma_0 = 0``.
    """
    signs = np.sign(np.asarray(signs))
    V = np.asarray(step_vectors, dtype=np.float64)
    steps = V[signs.astype(np.int64) + 1]
    out = np.zeros((signs.size + 1, 2))
    out[1:] = np.cumsum(steps, axis=0)
    return out


def gamma_m(coupled, m: int, step_vectors) -> PlanePoint:
    """``Gamma_m`` driven by the signs of ``S_hat_1..S_hat_m``."""
    if m < 0 or m > coupled.S_hat.size - 1:
        raise ValueError("m outside the trajectory")
    g = gamma_series(coupled.S_hat[1 : m + 1], step_vectors)[-1]
    return PlanePoint(float(g[0]), float(g[1]))


def default_step_vectors(kind):
    """``(v_neg, v_zero, v_pos)`` for the discrete functional.

    Square lattice: the two growth directions ``(0,1)`` and ``(1,0)`` with the
    zero set split halfway. Triangular: the embedded ``e1``, ``e2`` and ``e3``
    projected to the plane (``e3`` projects to 0).
    """
    kind = LatticeKind.parse(kind)
    if kind is LatticeKind.SQUARE:
        return ((0.0, 1.0), (0.5, 0.5), (1.0, 0.0))
    return (E1_3D[:2], E2_3D[:2], E3_3D[:2])


class TimeChange(NamedTuple):
    m: np.ndarray
    t: np.ndarray


def growth_times(a, b) -> np.ndarray:
    """Times ``t >= 1`` at which the width or the height grows, in order."""
    a = np.asarray(a)
    b = np.asarray(b)
    a_grow = (np.maximum.accumulate(a)[1:] > np.maximum.accumulate(a)[:-1]) | (
        np.minimum.accumulate(a)[1:] < np.minimum.accumulate(a)[:-1]
    )
    b_grow = (np.maximum.accumulate(b)[1:] > np.maximum.accumulate(b)[:-1]) | (
        np.minimum.accumulate(b)[1:] < np.minimum.accumulate(b)[:-1]
    )
    return np.flatnonzero(a_grow | b_grow) + 1


def time_change(path) -> TimeChange:
    """``t(m)``: time of the ``m``-th box-growth event, ``m = 1, 2, ...``."""
    a, b = path.arrays()
    t = growth_times(a, b)
    return TimeChange(np.arange(1, t.size + 1), t)


def ols_slope(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


class AlphaEstimate(NamedTuple):
    value: float
    stderr: float
    ci_low: float
    ci_high: float
    n_runs: int
    n_trapped: int
    slopes: np.ndarray


def alpha_from_slopes(slopes, seed: int, n_boot: int = 2000) -> tuple[float, float]:
    """Mean of per-run slopes and its bootstrap standard error."""
    slopes = np.asarray(slopes, dtype=np.float64)
    rng = Stream(seed, 0x0A1F)
    idx = (rng.random(n_boot * slopes.size) * slopes.size).astype(np.int64).reshape(n_boot, slopes.size)
    boots = slopes[idx].mean(axis=1)
    return float(slopes.mean()), float(boots.std(ddof=1))


def estimate_alpha(kind, n_steps: int, N: int, seed: int, stream0: int = 0, n_boot: int = 2000) -> AlphaEstimate:
    """Time-change constant from ``N`` walks of ``n_steps`` steps.

    Each run contributes the least-squares slope of ``t(m)`` against ``m``;
    the estimate is their mean, with a bootstrap standard error over runs
    and a normal 95% interval. Trapped runs are dropped and counted.
    """
    from .prudent import walk_arrays

    if n_steps > 10**6 or N > 10**3:
        raise ValueError("estimate_alpha is sized for n_steps <= 1e6 and N <= 1e3")
    slopes = []
    trapped = 0
    for i in range(N):
        a, b, tr = walk_arrays(kind, n_steps, seed, stream0 + i)
        if tr:
            trapped += 1
            continue
        t = growth_times(a, b)
        slopes.append(ols_slope(np.arange(1, t.size + 1), t))
    value, se = alpha_from_slopes(slopes, seed, n_boot)
    return AlphaEstimate(value, se, value - 1.96 * se, value + 1.96 * se, len(slopes), trapped, np.asarray(slopes))


# ---------------------------------------------------------------------------
# statistics of the corrected walk


def lemma3_statistic(n: int, seed: int, stream: int = 0, coupled=None) -> float:
    """``sup_{k <= n} |S_k - S_hat_k|``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if coupled is None:
        coupled = coupled_walk(n, seed, stream)
    return float(np.max(np.abs(coupled.S[: n + 1] - coupled.S_hat[: n + 1])))


def lemma4_statistic(n: int, delta: float, seed: int = 0, stream: int = 0, coupled=None, side: str = "upper") -> float:
    """``sup_k |(1/n) sum_{i<=k} (1{S_hat_i >= 0} - 1{S_i >= n^(1/3) + delta})|``.

    ``side="lower"`` gives the companion ``1{S_hat_i < 0}`` against
    ``1{S_i < -n^(1/3) + delta}``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if coupled is None:
        coupled = coupled_walk(n, seed, stream)
    S = coupled.S[1 : n + 1]
    Sh = coupled.S_hat[1 : n + 1]
    c = n ** (1.0 / 3.0)
    if side == "upper":
        diff = (Sh >= 0).astype(np.int64) - (S >= c + delta).astype(np.int64)
    elif side == "lower":
        diff = (Sh < 0).astype(np.int64) - (S < -c + delta).astype(np.int64)
    else:
        raise ValueError(f"unknown side {side!r}")
    return float(np.max(np.abs(np.cumsum(diff))) / n)


def paired_paths(n: int, seed: int, stream: int = 0, sigma: float = SIGMA):
    """Effective walk and ``sigma * B`` on the integer grid from shared uniforms.

    Step ``i`` of both uses the same uniform ``U_i``: the walk increment is
    its inverse-CDF image and the Brownian increment is ``Phi^{-1}(U_i)``.
    This is a same-seed pairing, not an optimal (KMT) coupling.
    """
    u = Stream(seed, stream).random(n)
    xi = increments_from_uniforms(u)
    z = ndtri(u + _HALF_ULP)
    S = np.concatenate([[0], np.cumsum(xi)])
    B = np.concatenate([[0.0], np.cumsum(z)])
    return S, sigma * B


def lemma5_statistic(n: int, seed: int, stream: int = 0, sigma: float = SIGMA) -> float:
    """``sup_{k <= n} |S_hat_k - sigma B_k|`` under :func:`paired_paths`."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 0.0
    S, sB = paired_paths(n, seed, stream, sigma)
    S_hat = build_coupled_walk(S).S_hat
    return float(np.max(np.abs(S_hat - sB)))


def occupation_fraction(S_hat, n: int) -> float:
    """Fraction of ``i = 1..n`` with ``S_hat_i >= 0``."""
    return float(np.count_nonzero(np.asarray(S_hat)[1 : n + 1] >= 0) / n)
