"""Square and triangular lattice geometry in integer axial coordinates.

Sites are pairs ``(a, b)`` of integers. The square lattice embeds as the
identity. The triangular lattice embeds through the basis

    e1 = (sqrt(3)/2,  1/2)
    e2 = (sqrt(3)/2, -1/2)

so ``(a, b) -> a*e1 + b*e2``; its six unit steps are ``±e1, ±e2, ±(e1 - e2)``.
Directions are listed counter-clockwise by embedded angle, starting from the
first basis vector, so direction ``i`` and ``i + D/2`` are opposite.

Every step direction moves along one of a few families of lattice lines
(rows of constant ``b``, columns of constant ``a``, and on the triangular
lattice anti-diagonals of constant ``a + b``). ``LINE_FAMILY`` and
``LINE_SIGN`` record which family a direction travels along and whether it
increases the position along that line; the prudent simulator uses them to
test visibility in O(1).
"""

import enum
import math
from typing import NamedTuple

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0

# Out-of-plane third basis vector; only the limit functional uses it.
E1_3D = (SQRT3_2, 0.5, 0.0)
E2_3D = (SQRT3_2, -0.5, 0.0)
E3_3D = (0.0, 0.0, 1.0)


class LatticeKind(enum.Enum):
    SQUARE = "square"
    TRIANGULAR = "tri"

    @classmethod
    def parse(cls, value) -> "LatticeKind":
        if isinstance(value, cls):
            return value
        v = str(value).lower()
        if v in ("square", "sq"):
            return cls.SQUARE
        if v in ("tri", "triangular", "triangle"):
            return cls.TRIANGULAR
        raise ValueError(f"unknown lattice kind {value!r}")

    @property
    def code(self) -> int:
        return 0 if self is LatticeKind.SQUARE else 1


class LatticePoint(NamedTuple):
    a: int
    b: int

    def __add__(self, other):
        return LatticePoint(self.a + other[0], self.b + other[1])

    def __sub__(self, other):
        return LatticePoint(self.a - other[0], self.b - other[1])

    def __neg__(self):
        return LatticePoint(-self.a, -self.b)

    def scaled(self, k: int) -> "LatticePoint":
        return LatticePoint(k * self.a, k * self.b)


class StepDirection(NamedTuple):
    index: int
    delta: LatticePoint


class PlanePoint(NamedTuple):
    x: float
    y: float


# Axial deltas in counter-clockwise order.
# square:     0deg, 90deg, 180deg, 270deg
# triangular: 30deg, 90deg, 150deg, 210deg, 270deg, 330deg
_DELTAS = {
    LatticeKind.SQUARE: ((1, 0), (0, 1), (-1, 0), (0, -1)),
    LatticeKind.TRIANGULAR: ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)),
}

# line families: 0 = row (b fixed, position a), 1 = column (a fixed, position b),
# 2 = anti-diagonal (a + b fixed, position a)
_FAMILY = {
    LatticeKind.SQUARE: ((0, 1), (1, 1), (0, -1), (1, -1)),
    LatticeKind.TRIANGULAR: ((0, 1), (2, 1), (1, -1), (0, -1), (2, -1), (1, 1)),
}

DIR_A = {k: np.array([d[0] for d in v], dtype=np.int64) for k, v in _DELTAS.items()}
DIR_B = {k: np.array([d[1] for d in v], dtype=np.int64) for k, v in _DELTAS.items()}
LINE_FAMILY = {k: np.array([f[0] for f in v], dtype=np.int64) for k, v in _FAMILY.items()}
LINE_SIGN = {k: np.array([f[1] for f in v], dtype=np.int64) for k, v in _FAMILY.items()}


def directions(kind: LatticeKind) -> list[StepDirection]:
    """Unit steps of ``kind`` in counter-clockwise order (4 or 6 of them)."""
    kind = LatticeKind.parse(kind)
    return [StepDirection(i, LatticePoint(*d)) for i, d in enumerate(_DELTAS[kind])]


def opposite(kind: LatticeKind, index: int) -> int:
    n = len(_DELTAS[LatticeKind.parse(kind)])
    return (index + n // 2) % n


def embed(kind: LatticeKind, p) -> PlanePoint:
    """Planar position of the axial site ``p``."""
    kind = LatticeKind.parse(kind)
    a, b = p
    if kind is LatticeKind.SQUARE:
        return PlanePoint(float(a), float(b))
    return PlanePoint(SQRT3_2 * (a + b), 0.5 * (a - b))


def embed_array(kind: LatticeKind, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised :func:`embed`; returns an ``(n, 2)`` float array."""
    kind = LatticeKind.parse(kind)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if kind is LatticeKind.SQUARE:
        return np.stack([a, b], axis=-1)
    return np.stack([SQRT3_2 * (a + b), 0.5 * (a - b)], axis=-1)


def ray_sites(origin, d: StepDirection, n: int) -> list[LatticePoint]:
    """Sites ``origin + k*delta`` for ``k = 1..n`` (the origin is excluded)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    o = LatticePoint(*origin)
    return [o + d.delta.scaled(k) for k in range(1, n + 1)]
