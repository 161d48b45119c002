"""Explicit Runge-Kutta tableaus used by the kick."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as F

import numpy as np


@dataclass(frozen=True)
class ButcherTableau:
    """Explicit RK coefficients. Stage times are the row sums of ``a``."""

    a: np.ndarray
    b: np.ndarray
    order: int
    name: str = ""
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        s = b.size
        if a.shape != (s, s):
            raise ValueError(f"a must be {s}x{s}, got {a.shape}")
        if np.any(np.triu(a) != 0.0):
            raise ValueError("tableau is not explicit (a_ij != 0 for j >= i)")
        if abs(b.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {b.sum()}, not 1")
        if self.order < 1:
            raise ValueError("order must be positive")
        a.setflags(write=False)
        b.setflags(write=False)
        c = a.sum(axis=1)
        c.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self):
        return self.b.size


def _from_fractions(rows, weights, order, name):
    s = len(weights)
    a = np.zeros((s, s))
    for i, row in enumerate(rows):
        a[i, : len(row)] = [float(v) for v in row]
    return ButcherTableau(a, [float(w) for w in weights], order, name)


EULER = _from_fractions([[]], [1], 1, "euler")

MIDPOINT = _from_fractions([[], [F(1, 2)]], [0, 1], 2, "midpoint")

RK4 = _from_fractions(
    [[], [F(1, 2)], [0, F(1, 2)], [0, 0, 1]],
    [F(1, 6), F(2, 6), F(2, 6), F(1, 6)],
    4,
    "rk4",
)

# Butcher's 7-stage, 6th-order method.
BUTCHER6 = _from_fractions(
    [
        [],
        [F(1, 3)],
        [0, F(2, 3)],
        [F(1, 12), F(1, 3), F(-1, 12)],
        [F(-1, 16), F(9, 8), F(-3, 16), F(-3, 8)],
        [0, F(9, 8), F(-3, 8), F(-3, 4), F(1, 2)],
        [F(9, 44), F(-9, 11), F(63, 44), F(18, 11), 0, F(-16, 11)],
    ],
    [F(11, 120), 0, F(27, 40), F(27, 40), F(-4, 15), F(-4, 15), F(11, 120)],
    6,
    "butcher6",
)

TABLEAUS = {1: EULER, 2: MIDPOINT, 4: RK4, 6: BUTCHER6}


def tableau_for_order(p):
    """Lowest-stage shipped tableau of order >= ``p``."""
    for order in sorted(TABLEAUS):
        if order >= p:
            return TABLEAUS[order]
    raise ValueError(f"no shipped tableau of order >= {p}; pass a custom ButcherTableau")
