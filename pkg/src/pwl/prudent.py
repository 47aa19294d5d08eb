"""Kinetic prudent walk on the square and triangular lattices.

At every step the walker picks uniformly among the *prudent* directions:
those whose half-line from the current site contains no visited site.
A prudent walk is in particular self-avoiding.

Visibility is tested in O(1) per direction. Every step direction runs along
a lattice line (row, column or anti-diagonal); a direction is blocked iff the
line through the current site already holds a visited site further along in
that direction, which only needs the running min/max position of visited
sites per line.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numba as nb
import numpy as np

from .lattice import (
    DIR_A,
    DIR_B,
    LINE_FAMILY,
    LINE_SIGN,
    LatticeKind,
    LatticePoint,
    StepDirection,
    directions,
    embed,
)
from .rng import Stream, new_state, next_double

_BIG = 2**30  # sentinel; walks longer than 2**29 steps are not supported
MAX_STEPS = 2**29


class Trapped(RuntimeError):
    """The walker has no prudent step left."""


class IncompleteExcursion(IndexError):
    pass


class Box(NamedTuple):
    a_min: int
    a_max: int
    b_min: int
    b_max: int

    @property
    def width(self) -> int:
        return self.a_max - self.a_min + 1

    @property
    def height(self) -> int:
        return self.b_max - self.b_min + 1


@nb.njit(cache=True, nogil=True, inline="always")
def _pick(a, b, off, lines, fam, sign, legal, state):
    """Index of a uniformly chosen prudent direction, or -1 when trapped."""
    nlegal = 0
    for d in range(fam.shape[0]):
        f = fam[d]
        if f == 0:
            line = b + off
            pos = a
        elif f == 1:
            line = a + off
            pos = b
        else:
            line = a + b + off
            pos = a
        if sign[d] > 0:
            blocked = lines[f, line, 1] > pos
        else:
            blocked = lines[f, line, 0] < pos
        if not blocked:
            legal[nlegal] = d
            nlegal += 1
    if nlegal == 0:
        return -1
    return legal[int(next_double(state) * nlegal)]


@nb.njit(cache=True, nogil=True, inline="always")
def _mark(a, b, off, lines):
    i = b + off
    if a < lines[0, i, 0]:
        lines[0, i, 0] = a
    if a > lines[0, i, 1]:
        lines[0, i, 1] = a
    i = a + off
    if b < lines[1, i, 0]:
        lines[1, i, 0] = b
    if b > lines[1, i, 1]:
        lines[1, i, 1] = b
    i = a + b + off
    if a < lines[2, i, 0]:
        lines[2, i, 0] = a
    if a > lines[2, i, 1]:
        lines[2, i, 1] = a


def _line_buffers(n_steps):
    """Per-line (min, max) position of visited sites, for rows, columns, anti-diagonals.

    Every coordinate, and ``a + b``, stays within ``[-n_steps, n_steps]``.
    Min and max sit next to each other so a lookup touches one cache line.
    """
    if n_steps > MAX_STEPS:
        raise ValueError(f"at most {MAX_STEPS} steps per walk")
    nline = 2 * n_steps + 3
    lines = np.empty((3, nline, 2), dtype=np.int32)
    lines[:, :, 0] = _BIG
    lines[:, :, 1] = -_BIG
    return lines


@nb.njit(cache=True, nogil=True)
def _walk_kernel(dir_a, dir_b, fam, sign, n_steps, state, lines, out_a, out_b):
    """Run up to ``n_steps`` prudent steps; returns the number actually taken.

    ``out_a``/``out_b`` must hold ``n_steps + 1`` entries; index 0 is the
    origin. A return value below ``n_steps`` means the walker got trapped.
    """
    off = (lines.shape[1] - 1) // 2
    legal = np.empty(fam.shape[0], dtype=np.int64)
    a = 0
    b = 0
    out_a[0] = 0
    out_b[0] = 0
    _mark(a, b, off, lines)
    for t in range(1, n_steps + 1):
        d = _pick(a, b, off, lines, fam, sign, legal, state)
        if d < 0:
            return t - 1
        a += dir_a[d]
        b += dir_b[d]
        out_a[t] = a
        out_b[t] = b
        _mark(a, b, off, lines)
    return n_steps


@nb.njit(cache=True, nogil=True)
def _observe_kernel(dir_a, dir_b, fam, sign, cap, K, seed, stream0, lines, T, U, WT, HT, WU, A, steps, trapped):
    """Run ``T.shape[0]`` walks, tracking the excursion times online.

    Walk ``i`` uses stream ``stream0 + i`` and stops once ``U_K`` is known,
    after ``cap`` steps, or when trapped. Per excursion ``k`` it records
    ``T_k``, ``U_k`` (``-1`` if not reached), the width/height at ``T_k``,
    the width at ``U_k`` and the crossing indicator A_k (``-1`` if ``U_k``
    was not reached). The line buffers are reset after each walk over the
    range it touched, so their size only has to cover ``cap``.
    """
    off = (lines.shape[1] - 1) // 2
    legal = np.empty(fam.shape[0], dtype=np.int64)
    for i in range(T.shape[0]):
        state = new_state(seed, stream0 + i)
        for k in range(K + 1):
            T[i, k] = -1
            U[i, k] = -1
            A[i, k] = -1
        a = 0
        b = 0
        a_lo = 0
        a_hi = 0
        b_lo = 0
        b_hi = 0
        c_lo = 0
        c_hi = 0
        _mark(a, b, off, lines)
        T[i, 0] = 0
        WT[i, 0] = 1
        HT[i, 0] = 1
        t_top = True
        t_bot = True
        k = 0
        seek_u = True
        last_u_step = 0
        last_t_step = 1  # matches excursion_times: T_1 needs a growth step t > 1
        t = 0
        trapped[i] = 0
        while k <= K and t < cap:
            d = _pick(a, b, off, lines, fam, sign, legal, state)
            if d < 0:
                trapped[i] = 1
                break
            pa = a
            pb = b
            pw = a_hi - a_lo + 1
            ph = b_hi - b_lo + 1
            p_blo = b_lo
            p_bhi = b_hi
            a += dir_a[d]
            b += dir_b[d]
            t += 1
            _mark(a, b, off, lines)
            wg = False
            hg = False
            if a < a_lo:
                a_lo = a
                wg = True
            elif a > a_hi:
                a_hi = a
                wg = True
            if b < b_lo:
                b_lo = b
                hg = True
            elif b > b_hi:
                b_hi = b
                hg = True
            if a + b < c_lo:
                c_lo = a + b
            elif a + b > c_hi:
                c_hi = a + b
            for _ in range(2):
                if seek_u:
                    if hg and t - 1 >= T[i, k] and t > last_u_step:
                        U[i, k] = t - 1
                        WU[i, k] = pw
                        u_top = pb == p_bhi
                        u_bot = pb == p_blo
                        tall = p_bhi > p_blo
                        A[i, k] = 1 if tall and ((t_top and u_bot) or (t_bot and u_top)) else 0
                        last_u_step = t
                        seek_u = False
                        if k == K:
                            k += 1
                            break
                else:
                    if wg and t - 1 >= U[i, k] and t > last_t_step:
                        k += 1
                        T[i, k] = t - 1
                        WT[i, k] = pw
                        HT[i, k] = ph
                        t_top = pb == p_bhi
                        t_bot = pb == p_blo
                        last_t_step = t
                        seek_u = True
        steps[i] = t
        # reset the touched part of the line buffers
        for x in range(a_lo, a_hi + 1):
            lines[1, x + off, 0] = _BIG
            lines[1, x + off, 1] = -_BIG
        for y in range(b_lo, b_hi + 1):
            lines[0, y + off, 0] = _BIG
            lines[0, y + off, 1] = -_BIG
        for c in range(c_lo, c_hi + 1):
            lines[2, c + off, 0] = _BIG
            lines[2, c + off, 1] = -_BIG


class Observations(NamedTuple):
    """Per-walk excursion observables from :func:`observe_walks`."""

    T: np.ndarray
    U: np.ndarray
    W_at_T: np.ndarray
    H_at_T: np.ndarray
    W_at_U: np.ndarray
    A: np.ndarray
    steps: np.ndarray
    trapped: np.ndarray


def observe_walks(kind, n_walks: int, K: int, cap: int, seed: int, stream0: int = 0) -> Observations:
    """Excursion observables up to ``U_K`` for ``n_walks`` independent walks.

    Walk ``i`` draws from stream ``stream0 + i`` and therefore coincides,
    step for step, with ``walk_arrays(kind, n, seed, stream0 + i)``.
    """
    kind = LatticeKind.parse(kind)
    lines = _line_buffers(cap)
    shape = (n_walks, K + 1)
    T = np.empty(shape, dtype=np.int64)
    U = np.empty(shape, dtype=np.int64)
    WT = np.zeros(shape, dtype=np.int64)
    HT = np.zeros(shape, dtype=np.int64)
    WU = np.zeros(shape, dtype=np.int64)
    A = np.empty(shape, dtype=np.int8)
    steps = np.empty(n_walks, dtype=np.int64)
    trapped = np.empty(n_walks, dtype=np.int8)
    _observe_kernel(
        DIR_A[kind], DIR_B[kind], LINE_FAMILY[kind], LINE_SIGN[kind],
        cap, K, np.uint64(seed), np.uint64(stream0), lines,
        T, U, WT, HT, WU, A, steps, trapped,
    )
    return Observations(T, U, WT, HT, WU, A, steps, trapped.astype(bool))


def walk_arrays(kind, n_steps: int, seed: int, stream: int = 0):
    """Simulate one walk and return ``(a, b, trapped)`` as raw arrays.

    This is the fast path used by the experiment harness; :func:`simulate`
    wraps the same kernel into a :class:`PrudentPath`.
    """
    kind = LatticeKind.parse(kind)
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    state = new_state(np.uint64(seed), np.uint64(stream))
    lines = _line_buffers(n_steps)
    out_a = np.empty(n_steps + 1, dtype=np.int64)
    out_b = np.empty(n_steps + 1, dtype=np.int64)
    done = _walk_kernel(
        DIR_A[kind], DIR_B[kind], LINE_FAMILY[kind], LINE_SIGN[kind], n_steps, state, lines, out_a, out_b
    )
    return out_a[: done + 1], out_b[: done + 1], done < n_steps


@dataclass
class PrudentPath:
    """A prudent walk ``gamma_0 .. gamma_t`` started at the origin."""

    kind: LatticeKind
    a: list = field(default_factory=lambda: [0])
    b: list = field(default_factory=lambda: [0])
    seed: int = 0
    stream: int = 0
    trapped: bool = False
    _visited: set = field(default_factory=lambda: {(0, 0)}, repr=False)
    _box: list = field(default_factory=lambda: [0, 0, 0, 0], repr=False)

    @classmethod
    def from_arrays(cls, kind, a, b, seed=0, stream=0, trapped=False) -> "PrudentPath":
        a = [int(x) for x in a]
        b = [int(x) for x in b]
        if not a or (a[0], b[0]) != (0, 0):
            raise ValueError("a prudent path starts at the origin")
        box = [min(a), max(a), min(b), max(b)]
        return cls(LatticeKind.parse(kind), a, b, seed, stream, trapped, set(zip(a, b)), box)

    def __len__(self) -> int:
        """Number of steps taken (the path holds ``len + 1`` sites)."""
        return len(self.a) - 1

    @property
    def sites(self) -> list[LatticePoint]:
        return [LatticePoint(x, y) for x, y in zip(self.a, self.b)]

    @property
    def visited(self) -> set:
        return self._visited

    @property
    def current(self) -> LatticePoint:
        return LatticePoint(self.a[-1], self.b[-1])

    @property
    def box(self) -> Box:
        return Box(*self._box)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.a, dtype=np.int64), np.asarray(self.b, dtype=np.int64)

    def widths(self) -> np.ndarray:
        a, _ = self.arrays()
        return np.maximum.accumulate(a) - np.minimum.accumulate(a) + 1

    def heights(self) -> np.ndarray:
        _, b = self.arrays()
        return np.maximum.accumulate(b) - np.minimum.accumulate(b) + 1

    def append(self, site) -> None:
        a, b = site
        self.a.append(int(a))
        self.b.append(int(b))
        self._visited.add((int(a), int(b)))
        box = self._box
        box[0] = min(box[0], a)
        box[1] = max(box[1], a)
        box[2] = min(box[2], b)
        box[3] = max(box[3], b)


def legal_steps(path: PrudentPath) -> list[StepDirection]:
    """Prudent directions from the current site, in direction order.

    Each ray is scanned only up to the bounding box, outside of which no
    visited site can lie.
    """
    a0, b0 = path.current
    a_min, a_max, b_min, b_max = path.box
    out = []
    for d in directions(path.kind):
        da, db = d.delta
        a, b = a0 + da, b0 + db
        blocked = False
        while a_min <= a <= a_max and b_min <= b <= b_max:
            if (a, b) in path.visited:
                blocked = True
                break
            a += da
            b += db
        if not blocked:
            out.append(d)
    return out


def step(path: PrudentPath, rng: Stream) -> PrudentPath:
    """Take one uniform prudent step in place and return ``path``.

    The choice consumes one uniform from ``rng`` exactly as the compiled
    simulator does, so stepping by hand reproduces :func:`simulate`.
    """
    legal = legal_steps(path)
    if not legal:
        path.trapped = True
        raise Trapped(f"no prudent step from {tuple(path.current)} at t={len(path)}")
    d = legal[int(rng.random() * len(legal))]
    path.append(path.current + d.delta)
    return path


def simulate(kind, n_steps: int, seed: int, stream: int = 0) -> PrudentPath:
    """Run ``n_steps`` kinetic prudent steps, stopping early if trapped."""
    a, b, trapped = walk_arrays(kind, n_steps, seed, stream)
    return PrudentPath.from_arrays(kind, a, b, seed=seed, stream=stream, trapped=trapped)


# ---------------------------------------------------------------------------
# excursion decomposition


@dataclass(frozen=True)
class ExcursionRecord:
    """Times and displacements of the k-th excursion.

    ``U``/``T_next`` are ``None`` when the path ends first. ``X`` is known
    as soon as ``U`` is (no width growth happens on ``(U_k, T_{k+1}]``);
    ``Y`` needs ``T_next``.
    """

    k: int
    T: int
    U: Optional[int]
    T_next: Optional[int]
    X: Optional[int]
    Y: Optional[int]
    vertical_span: Optional[int]
    horizontal_span: Optional[int]

    @property
    def complete(self) -> bool:
        return self.T_next is not None


def box_series(a: np.ndarray, b: np.ndarray):
    """Running box ``(a_min, a_max, b_min, b_max)`` arrays, one entry per time."""
    return (
        np.minimum.accumulate(a),
        np.maximum.accumulate(a),
        np.minimum.accumulate(b),
        np.maximum.accumulate(b),
    )


def excursion_times(a: np.ndarray, b: np.ndarray):
    """Stopping times of the excursion decomposition.

    Returns ``(T, U)`` where ``T[k]`` and ``U[k]`` are defined for every
    ``k`` the path reaches; ``len(U)`` is ``len(T)`` or ``len(T) - 1``.
    ``T[0] = 0``; ``U[k]`` is one less than the first ``t > T[k]`` at which
    the height grows, ``T[k+1]`` one less than the first ``t > U[k]`` at
    which the width grows.

    A triangular step can grow width and height at once. Such a step may
    end one vertical and one horizontal phase, but never two of the same
    kind, so the times keep advancing.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    a_lo, a_hi, b_lo, b_hi = box_series(a, b)
    W = a_hi - a_lo
    H = b_hi - b_lo
    wg = np.flatnonzero(W[1:] > W[:-1]) + 1
    hg = np.flatnonzero(H[1:] > H[:-1]) + 1
    T = [0]
    U = []
    while True:
        after = max(T[-1], U[-1] + 1) if U else T[-1]
        i = np.searchsorted(hg, after, side="right")
        if i == hg.size:
            break
        U.append(int(hg[i]) - 1)
        j = np.searchsorted(wg, max(U[-1], T[-1] + 1), side="right")
        if j == wg.size:
            break
        T.append(int(wg[j]) - 1)
    return np.asarray(T, dtype=np.int64), np.asarray(U, dtype=np.int64)


def _span(x: np.ndarray, lo: int, hi: int) -> int:
    seg = x[lo : hi + 1]
    return int(np.max(np.abs(seg - seg[0])))


def decompose_excursions(path: PrudentPath) -> list[ExcursionRecord]:
    """Excursion records of ``path``; the last one may be partial.

    Spans are the largest transverse displacement from the excursion's
    start: in ``b`` over ``[T_k, U_k]`` (vertical) and in ``a`` over
    ``[U_k, T_{k+1}]`` (horizontal).
    """
    a, b = path.arrays()
    T, U = excursion_times(a, b)
    W = path.widths()
    H = path.heights()
    out = []
    for k in range(T.size):
        t = int(T[k])
        u = int(U[k]) if k < U.size else None
        tn = int(T[k + 1]) if k + 1 < T.size else None
        out.append(
            ExcursionRecord(
                k=k,
                T=t,
                U=u,
                T_next=tn,
                X=int(W[u] - W[t]) if u is not None else None,
                Y=int(H[tn] - H[t]) if tn is not None else None,
                vertical_span=_span(b, t, u) if u is not None else None,
                horizontal_span=_span(a, u, tn) if tn is not None else None,
            )
        )
    return out


def crossing_event(path: PrudentPath, k: int, records=None) -> bool:
    """The event A_k: the walker crosses a whole side of the box.

    True iff at ``T_k`` the walker sits on one extreme row (``b = b_min`` or
    ``b_max``) of the box and at ``U_k`` on the opposite extreme row of the
    box at that time. A box of height 1 has no opposite corner.
    """
    if records is None:
        records = decompose_excursions(path)
    if k < 0 or k >= len(records) or records[k].U is None:
        raise IncompleteExcursion(f"excursion {k} has not reached U_k")
    a, b = path.arrays()
    return bool(crossing_flags(b, np.array([records[k].T]), np.array([records[k].U]))[0])


def crossing_flags(b: np.ndarray, T: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Vectorised A_k indicator for all ``k < len(U)``."""
    _, _, b_lo, b_hi = box_series(b, b)
    T = T[: U.size]
    bt, bu = b[T], b[U]
    top_then_bottom = (bt == b_hi[T]) & (bu == b_lo[U])
    bottom_then_top = (bt == b_lo[T]) & (bu == b_hi[U])
    tall = b_hi[U] > b_lo[U]
    return (top_then_bottom | bottom_then_top) & tall


def quadrant_event(path: PrudentPath) -> bool:
    """Q_1: the embedded endpoint lies in the closed first quadrant."""
    p = embed(path.kind, path.current)
    return p.x >= 0.0 and p.y >= 0.0
