"""
Reference-frame transformations between abc, alpha-beta and dq coordinates.

The Clarke transform is amplitude invariant: a balanced set of peak value V
maps to a stationary-frame vector of length V. The zero-sequence component is
dropped. All functions accept scalars or numpy arrays for the components.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

SQRT3_2 = np.sqrt(3.0) / 2.0


class Abc(NamedTuple):
    """Instantaneous three-phase quantity."""
    a: float
    b: float
    c: float


class AlphaBeta(NamedTuple):
    """Stationary-frame quantity."""
    alpha: float
    beta: float


class Dq(NamedTuple):
    """Synchronous-frame quantity."""
    d: float
    q: float


def clarke(x: Abc) -> AlphaBeta:
    a, b, c = x
    return AlphaBeta((2.0 / 3.0) * (a - 0.5 * b - 0.5 * c),
                     (2.0 / 3.0) * SQRT3_2 * (b - c))


def inv_clarke(x: AlphaBeta) -> Abc:
    alpha, beta = x
    return Abc(alpha,
               -0.5 * alpha + SQRT3_2 * beta,
               -0.5 * alpha - SQRT3_2 * beta)


def park(x: AlphaBeta, theta) -> Dq:
    """Rotate a stationary-frame vector into the frame at angle `theta`."""
    alpha, beta = x
    cos, sin = np.cos(theta), np.sin(theta)
    return Dq(alpha * cos + beta * sin, -alpha * sin + beta * cos)


def inv_park(x: Dq, theta) -> AlphaBeta:
    d, q = x
    cos, sin = np.cos(theta), np.sin(theta)
    return AlphaBeta(d * cos - q * sin, d * sin + q * cos)


def abc_to_dq(x: Abc, theta) -> Dq:
    return park(clarke(x), theta)


def dq_to_abc(x: Dq, theta) -> Abc:
    return inv_clarke(inv_park(x, theta))
