"""Counter-based random streams usable from inside numba kernels.

The generator is Philox4x64-10 (Salmon, Moraes, Dror & Shaw, SC'11), the
same algorithm behind :class:`numpy.random.Philox`, reimplemented so that
jitted loops can draw numbers without a round trip to Python. Output is
bit-identical to ``numpy.random.Philox(key=(seed, stream))``.

A stream is identified by the 128-bit key ``(seed, stream_id)``; the Philox
rounds act as the hash that decorrelates neighbouring keys, so workers that
own distinct stream ids never share numbers. State is a small ``uint64``
array so it can be passed into and mutated by ``@njit`` functions::

    state[0:2]  key
    state[2:6]  counter
    state[6:10] output buffer
    state[10]   buffer position (4 means empty)
"""

import numba as nb
import numpy as np

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
PHILOX_ROUNDS = 10

STATE_SIZE = 11

_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_TO_DOUBLE = 1.0 / 9007199254740992.0


@nb.njit(cache=True, nogil=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _MASK32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    lo = a * b
    return hi, lo


@nb.njit(cache=True, nogil=True, inline="always")
def philox_block(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 evaluation of counter ``(c0..c3)`` under key ``(k0, k1)``."""
    for r in range(PHILOX_ROUNDS):
        if r > 0:
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
        hi0, lo0 = _mulhilo(PHILOX_M0, c0)
        hi1, lo1 = _mulhilo(PHILOX_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True)
def new_state(seed, stream):
    state = np.zeros(STATE_SIZE, dtype=np.uint64)
    state[0] = np.uint64(seed)
    state[1] = np.uint64(stream)
    state[10] = np.uint64(4)
    return state


@nb.njit(cache=True, nogil=True, inline="always")
def next_u64(state):
    pos = np.int64(state[10])
    if pos >= 4:
        # counter is bumped before use, matching numpy's Philox
        state[2] += _ONE
        if state[2] == _ZERO:
            state[3] += _ONE
            if state[3] == _ZERO:
                state[4] += _ONE
                if state[4] == _ZERO:
                    state[5] += _ONE
        o0, o1, o2, o3 = philox_block(
            state[2], state[3], state[4], state[5], state[0], state[1]
        )
        state[6] = o0
        state[7] = o1
        state[8] = o2
        state[9] = o3
        pos = 0
    state[10] = np.uint64(pos + 1)
    return state[6 + pos]


@nb.njit(cache=True, nogil=True, inline="always")
def next_double(state):
    """Uniform on [0, 1) with 53 random bits."""
    return np.float64(next_u64(state) >> _S11) * _TO_DOUBLE


@nb.njit(cache=True, nogil=True)
def next_below(state, n):
    """Uniform integer in ``[0, n)`` for small ``n`` (floor of ``n * U``)."""
    return int(next_double(state) * n)


@nb.njit(cache=True, nogil=True)
def fill_doubles(state, out):
    for i in range(out.shape[0]):
        out[i] = next_double(state)


class Stream:
    """Python-side handle on one Philox stream.

    >>> s = Stream(7, 0)
    >>> 0.0 <= s.random() < 1.0
    True
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        self.state = new_state(np.uint64(self.seed), np.uint64(self.stream))

    def random_raw(self, size: int) -> np.ndarray:
        return np.array([next_u64(self.state) for _ in range(size)], dtype=np.uint64)

    def random(self, size: int | None = None):
        if size is None:
            return float(next_double(self.state))
        out = np.empty(size, dtype=np.float64)
        fill_doubles(self.state, out)
        return out

    def integers(self, n: int) -> int:
        return int(next_below(self.state, n))

    def spawn(self, stream: int) -> "Stream":
        return Stream(self.seed, stream)
