"""Linear polarization states on the equator of the Poincare sphere.

Every state the protocol handles is real and linearly polarized, so a state
is carried by its angle alone: ``angle`` stands for
``cos(angle)|0> - sin(angle)|1>``. Rotations add angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

TAU = 2.0 * math.pi
ANGLE_TOL = 1e-12


def canonical(radians: float) -> float:
    """Map a finite angle into ``[0, 2*pi)``."""
    if not math.isfinite(radians):
        raise ValueError(f"angle must be finite, got {radians!r}")
    x = math.fmod(radians, TAU)
    if x < 0.0:
        x += TAU
    # fmod of a tiny negative number can round up to exactly TAU
    if x >= TAU:
        x = 0.0
    return x


def circular_distance(a: float, b: float) -> float:
    """Shortest distance between two angles on the circle, in ``[0, pi]``."""
    d = canonical(a - b)
    return min(d, TAU - d)


@dataclass(frozen=True)
class PolarizationAngle:
    radians: float

    def __post_init__(self):
        object.__setattr__(self, "radians", canonical(float(self.radians)))

    def __add__(self, other: AngleLike) -> PolarizationAngle:
        return PolarizationAngle(self.radians + _radians(other))

    def __sub__(self, other: AngleLike) -> PolarizationAngle:
        return PolarizationAngle(self.radians - _radians(other))

    def __neg__(self) -> PolarizationAngle:
        return PolarizationAngle(-self.radians)

    def __float__(self) -> float:
        return self.radians

    def isclose(self, other: AngleLike, tol: float = ANGLE_TOL) -> bool:
        return circular_distance(self.radians, _radians(other)) <= tol


AngleLike = Union[PolarizationAngle, float, int]


def _radians(x: AngleLike) -> float:
    if isinstance(x, PolarizationAngle):
        return x.radians
    return float(x)


@dataclass(frozen=True)
class QubitState:
    """Equatorial qubit ``cos(a)|0> - sin(a)|1>`` stored by its angle ``a``."""

    angle: PolarizationAngle

    def __post_init__(self):
        if not isinstance(self.angle, PolarizationAngle):
            object.__setattr__(self, "angle", PolarizationAngle(self.angle))

    @classmethod
    def at(cls, radians: AngleLike) -> QubitState:
        return cls(PolarizationAngle(_radians(radians)))

    @property
    def radians(self) -> float:
        return self.angle.radians

    def vector(self) -> np.ndarray:
        """Amplitudes in the ``{|0>, |1>}`` basis."""
        return np.array([math.cos(self.radians), -math.sin(self.radians)])

    def isclose(self, other: QubitState, tol: float = ANGLE_TOL) -> bool:
        return self.angle.isclose(other.angle, tol)


ZERO = QubitState.at(0.0)
ONE = QubitState.at(math.pi / 2)


def rotate(state: QubitState, by: AngleLike) -> QubitState:
    """Rotate the polarization of ``state`` by ``by`` radians."""
    return QubitState(state.angle + by)


def overlap(a: QubitState, b: QubitState) -> float:
    """Absolute inner product ``|<a|b>| = |cos(a - b)|``."""
    return abs(math.cos(a.radians - b.radians))


def overlap_fidelity(a: QubitState, b: QubitState) -> float:
    """Fidelity ``|<a|b>|^2 = cos^2(a - b)`` between two equatorial states."""
    c = math.cos(a.radians - b.radians)
    return min(1.0, c * c)


def prob_zero(state: QubitState, basis_angle: AngleLike) -> float:
    """Born probability of outcome 0 when measuring along ``basis_angle``."""
    c = math.cos(state.radians - _radians(basis_angle))
    return min(1.0, c * c)


def measure(state: QubitState, basis_angle: AngleLike, rng: np.random.Generator) -> int:
    """Projective measurement in the basis ``{basis_angle, basis_angle + pi/2}``.

    Returns 0 for the state along ``basis_angle`` and 1 for its orthogonal
    partner. No random number is drawn when the outcome is certain to within
    ``ANGLE_TOL``, so aligned measurements leave the stream untouched.
    """
    p0 = prob_zero(state, basis_angle)
    if p0 >= 1.0 - ANGLE_TOL:
        return 0
    if p0 <= ANGLE_TOL:
        return 1
    return 0 if rng.random() < p0 else 1
