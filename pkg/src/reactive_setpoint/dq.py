"""Rotating-frame vectors, instantaneous power and saturation operators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True, slots=True)
class DqVector:
    """A 2-vector in the grid-synchronous dq frame."""

    d: float = 0.0
    q: float = 0.0

    def norm(self) -> float:
        return math.hypot(self.d, self.q)

    def norm_sq(self) -> float:
        return self.d * self.d + self.q * self.q

    def dot(self, other: DqVector) -> float:
        return self.d * other.d + self.q * other.q

    def __add__(self, other: DqVector) -> DqVector:
        return DqVector(self.d + other.d, self.q + other.q)

    def __sub__(self, other: DqVector) -> DqVector:
        return DqVector(self.d - other.d, self.q - other.q)

    def __neg__(self) -> DqVector:
        return DqVector(-self.d, -self.q)

    def __mul__(self, k: float) -> DqVector:
        return DqVector(self.d * k, self.q * k)

    __rmul__ = __mul__

    def __truediv__(self, k: float) -> DqVector:
        return DqVector(self.d / k, self.q / k)

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.q])


ZERO = DqVector(0.0, 0.0)

# J = [[0, -1], [1, 0]]
J = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotate90(x: DqVector) -> DqVector:
    """Apply J, a quarter turn counter-clockwise."""
    return DqVector(-x.q, x.d)


def instantaneous_power(v: DqVector, i: DqVector) -> tuple[float, float]:
    """Return (P, Q) with P = v.i and Q = v^T J i."""
    p = v.d * i.d + v.q * i.q
    q = v.q * i.d - v.d * i.q
    return p, q


def sat_scalar(x: float, limit: float) -> float:
    if limit < 0:
        raise InvalidArgument(f"saturation limit must be >= 0, got {limit}")
    if x > limit:
        return limit
    if x < -limit:
        return -limit
    return x


def sat_circular(x: DqVector, limit: float) -> DqVector:
    """Clamp the norm of ``x`` to ``limit`` keeping its direction."""
    if limit < 0:
        raise InvalidArgument(f"saturation limit must be >= 0, got {limit}")
    n = x.norm()
    if n <= limit:
        return x
    k = limit / n
    return DqVector(x.d * k, x.q * k)


_SQ2 = math.sqrt(2.0)
_SQ3 = math.sqrt(3.0)

# Orthonormal Clarke matrix; rows are alpha, beta, zero-sequence.
CLARKE = math.sqrt(2.0 / 3.0) * np.array(
    [
        [1.0, -0.5, -0.5],
        [0.0, _SQ3 / 2.0, -_SQ3 / 2.0],
        [1.0 / _SQ2, 1.0 / _SQ2, 1.0 / _SQ2],
    ]
)


def rotation(theta_g: float) -> np.ndarray:
    c, s = math.cos(theta_g), math.sin(theta_g)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def park_transform(x_abc, theta_g: float) -> np.ndarray:
    """Power-invariant abc -> dq0 transform at grid angle ``theta_g``."""
    return rotation(theta_g) @ CLARKE @ np.asarray(x_abc, dtype=float)


def inverse_park_transform(x_dq0, theta_g: float) -> np.ndarray:
    # both factors are orthonormal, so the inverse is the transpose
    return CLARKE.T @ rotation(theta_g).T @ np.asarray(x_dq0, dtype=float)
