"""Corner process, excursion truncation and the corrected effective walk.

The corner process follows the bounding-box corner closest to the walker.
Between growth events the prudent walker stays on the box boundary, so the
corner process is a coarse version of the path that only moves when the box
grows or the walker changes sides.

The corrected walk ``S_hat`` is the effective walk with every overshoot
removed: along the alternating stopping times

    tau_{2k+1} = first n > tau_{2k}   with S_n < S_{tau_{2k}}
    tau_{2k+2} = first n > tau_{2k+1} with S_n > S_{tau_{2k+1}}

it adds ``Delta_j`` so that ``S_hat`` moves by exactly -1 (odd ``j``) or +1
(even ``j``) between consecutive stopping times.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numba as nb
import numpy as np

from .effective import EffectiveTrajectory, simulate_effective
from .lattice import LatticeKind, PlanePoint, embed_array
from .prudent import PrudentPath, box_series, decompose_excursions


@dataclass(frozen=True)
class CornerTrace:
    """Axial corners ``(a_hat, b_hat)`` of the box, one per time step."""

    kind: LatticeKind
    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return self.a.size

    @property
    def corners(self) -> list[PlanePoint]:
        return [PlanePoint(x, y) for x, y in self.embedded()]

    def embedded(self) -> np.ndarray:
        return embed_array(self.kind, self.a, self.b)


def nearest_corner(a, b, a_lo, a_hi, b_lo, b_hi):
    """Box corner nearest to ``(a, b)`` in axial L1 distance.

    The distance splits into an ``a`` part and a ``b`` part, so each
    coordinate snaps to its closer edge; ties go to the larger edge, which
    is the same as breaking ties by larger ``a`` and then larger ``b``.
    Works elementwise on arrays.
    """
    ca = np.where(a_hi - a <= a - a_lo, a_hi, a_lo)
    cb = np.where(b_hi - b <= b - b_lo, b_hi, b_lo)
    return ca, cb


def corner_trace_arrays(kind, a: np.ndarray, b: np.ndarray) -> CornerTrace:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    ca, cb = nearest_corner(a, b, *box_series(a, b))
    return CornerTrace(LatticeKind.parse(kind), ca, cb)


def corner_trace(path: PrudentPath) -> CornerTrace:
    a, b = path.arrays()
    return corner_trace_arrays(path.kind, a, b)


def distance_series(kind, a, b, trace: CornerTrace) -> np.ndarray:
    """Embedded Euclidean distance between walker and corner at every time."""
    p = embed_array(kind, a, b)
    q = trace.embedded()
    return np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1])


def sup_distance(path: PrudentPath, trace: CornerTrace, t: int) -> float:
    """``max_{s <= t} |corner_s - gamma_s|_2 / t`` (0 at ``t = 0``)."""
    if t < 0 or t > len(path):
        raise ValueError(f"t must lie in [0, {len(path)}]")
    if t == 0:
        return 0.0
    a, b = path.arrays()
    d = distance_series(path.kind, a[: t + 1], b[: t + 1], CornerTrace(trace.kind, trace.a[: t + 1], trace.b[: t + 1]))
    return float(d.max() / t)


def sup_distance_curve(kind, a, b, times) -> np.ndarray:
    """Normalised sup distance at each ``t`` in ``times`` for one path."""
    trace = corner_trace_arrays(kind, a, b)
    run = np.maximum.accumulate(distance_series(kind, a, b, trace))
    times = np.asarray(times, dtype=np.int64)
    out = np.zeros(times.size)
    pos = times > 0
    out[pos] = run[times[pos]] / times[pos]
    return out


# ---------------------------------------------------------------------------
# truncation


class TruncationCap(NamedTuple):
    cap: int


def truncate_excursion(sites, cap, axis: str = "vertical") -> list:
    """Longest prefix of ``sites`` staying within ``cap`` of its start.

    The transverse coordinate is ``b`` for a vertical excursion and ``a``
    for a horizontal one. An excursion whose span is at most ``cap`` comes
    back unchanged.
    """
    cap = int(cap.cap if isinstance(cap, TruncationCap) else cap)
    if cap < 0:
        raise ValueError("cap must be >= 0")
    if axis not in ("vertical", "horizontal"):
        raise ValueError(f"unknown axis {axis!r}")
    sites = list(sites)
    if not sites:
        return []
    j = 1 if axis == "vertical" else 0
    x0 = sites[0][j]
    for i, s in enumerate(sites):
        if abs(s[j] - x0) > cap:
            return sites[:i]
    return sites


def running_caps(levels) -> np.ndarray:
    """Running minimum of a level sequence, the cap used for excursion ``k``."""
    levels = np.asarray(levels, dtype=np.int64)
    if levels.size and levels.min() < 0:
        raise ValueError("levels must be >= 0")
    return np.minimum.accumulate(levels)


class CouplingReport(NamedTuple):
    n_excursions: int
    n_altered: int
    fraction_altered: float
    max_span: int


def coupling_equality_check(path: PrudentPath, caps, records=None) -> CouplingReport:
    """Truncate every complete excursion of ``path`` and count the changes.

    ``caps`` is one cap for all excursions or a sequence with one cap per
    excursion index (applied to both the vertical and the horizontal part).
    Each excursion is truncated explicitly; the altered count is then
    cross-checked against the span rule ``altered iff span > cap``.
    """
    if records is None:
        records = decompose_excursions(path)
    records = [r for r in records if r.complete]
    if np.isscalar(caps) or isinstance(caps, TruncationCap):
        caps = [caps] * len(records)
    caps = [int(c.cap if isinstance(c, TruncationCap) else c) for c in caps]
    if len(caps) < len(records):
        raise ValueError("need one cap per complete excursion")
    sites = path.sites
    n = 0
    altered = 0
    by_span = 0
    max_span = 0
    for r, cap in zip(records, caps):
        for part, lo, hi, span in (
            ("vertical", r.T, r.U, r.vertical_span),
            ("horizontal", r.U, r.T_next, r.horizontal_span),
        ):
            seg = sites[lo : hi + 1]
            n += 1
            altered += len(truncate_excursion(seg, cap, part)) != len(seg)
            by_span += span > cap
            max_span = max(max_span, span)
    if altered != by_span:
        raise AssertionError(f"truncation changed {altered} excursions but {by_span} exceed their cap")
    return CouplingReport(n, altered, altered / n if n else 0.0, max_span)


# ---------------------------------------------------------------------------
# corrected walk


class OvershootLedger(NamedTuple):
    taus: np.ndarray  # tau_0 = 0, tau_1, ...
    deltas: np.ndarray  # Delta_1, Delta_2, ...; deltas[j-1] belongs to taus[j]

    def ndjson_lines(self):
        for j in range(1, self.taus.size):
            yield json.dumps({"j": j, "tau": int(self.taus[j]), "delta": int(self.deltas[j - 1])})


@dataclass(frozen=True)
class CoupledWalk:
    S: np.ndarray
    S_hat: np.ndarray
    ledger: OvershootLedger


@nb.njit(cache=True, nogil=True)
def _stopping_times(S, taus, deltas):
    """Fill the alternating stopping times and overshoots; returns their count."""
    m = 0
    ref = S[0]
    last = 0
    down = True
    for n in range(1, S.shape[0]):
        s = S[n]
        if (down and s < ref) or ((not down) and s > ref):
            taus[m] = n
            step = s - S[last]
            deltas[m] = (-1 - step) if down else (1 - step)
            m += 1
            ref = s
            last = n
            down = not down
    return m


def build_coupled_walk(S) -> CoupledWalk:
    """Stopping times, overshoots and ``S_hat = S + sum_{tau_j <= n} Delta_j``."""
    if isinstance(S, EffectiveTrajectory):
        S = S.values
    S = np.asarray(S, dtype=np.int64)
    if S.size < 1:
        raise ValueError("trajectory must hold at least S_0")
    taus = np.empty(S.size, dtype=np.int64)
    deltas = np.empty(S.size, dtype=np.int64)
    m = _stopping_times(S, taus, deltas)
    taus = np.concatenate([[0], taus[:m]])
    deltas = deltas[:m].copy()
    corr = np.zeros(S.size, dtype=np.int64)
    np.add.at(corr, taus[1:], deltas)
    S_hat = S + np.cumsum(corr)
    return CoupledWalk(S, S_hat, OvershootLedger(taus, deltas))


def coupled_walk(n: int, seed: int, stream: int = 0) -> CoupledWalk:
    return build_coupled_walk(simulate_effective(n, seed, stream))
