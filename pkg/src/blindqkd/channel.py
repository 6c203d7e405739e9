"""Coherent-pulse model of the quantum channel."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .polarization import AngleLike, PolarizationAngle, QubitState, prob_zero


class Attack(enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    PNS_ATTACK1 = "pns1"
    PNS_ATTACK2 = "pns2"
    IMPERSONATION = "impersonation"

    @classmethod
    def parse(cls, value: "Attack | str") -> "Attack":
        if isinstance(value, cls):
            return value
        return cls(value)


@dataclass(frozen=True)
class Pulse:
    """Linearly polarized coherent pulse; every photon shares ``angle``."""

    amplitude: float
    angle: PolarizationAngle

    def __post_init__(self):
        if not math.isfinite(self.amplitude) or self.amplitude < 0.0:
            raise ValueError(f"pulse amplitude must be >= 0, got {self.amplitude!r}")
        if not isinstance(self.angle, PolarizationAngle):
            object.__setattr__(self, "angle", PolarizationAngle(self.angle))

    @property
    def mean_photons(self) -> float:
        return self.amplitude * self.amplitude

    @property
    def state(self) -> QubitState:
        return QubitState(self.angle)

    def rotated(self, by: AngleLike) -> Pulse:
        return replace(self, angle=self.angle + by)


@dataclass(frozen=True)
class ChannelConfig:
    """One-way amplitude efficiency ``eta``, the attack in play and the channel seed."""

    eta: float = 1.0
    attack: Attack = Attack.NONE
    seed: int = 0

    def __post_init__(self):
        _check_eta(self.eta)
        object.__setattr__(self, "attack", Attack.parse(self.attack))
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @classmethod
    def from_eta2(cls, eta2: float, **kwargs) -> ChannelConfig:
        return cls(eta=math.sqrt(eta2), **kwargs)

    @property
    def eta2(self) -> float:
        return self.eta * self.eta


def attenuate(p: Pulse, eta: float) -> Pulse:
    """Scale the amplitude by ``eta`` (one lossy trip)."""
    _check_eta(eta)
    return replace(p, amplitude=eta * p.amplitude)


def beam_split(p: Pulse, transmittivity: float) -> tuple[Pulse, Pulse]:
    """Split ``p`` on a beam splitter with amplitude transmittivity ``t``.

    The transmitted arm carries ``t * alpha`` and the reflected arm
    ``sqrt(1 - t**2) * alpha``; both keep the input polarization.
    """
    t = float(transmittivity)
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"transmittivity must lie in [0, 1], got {transmittivity!r}")
    return (
        replace(p, amplitude=t * p.amplitude),
        replace(p, amplitude=math.sqrt(1.0 - t * t) * p.amplitude),
    )


def sample_photon_count(p: Pulse, rng: np.random.Generator) -> int:
    """Photon number of ``p``, drawn from Poisson(amplitude**2)."""
    if p.amplitude == 0.0:
        return 0
    return int(rng.poisson(p.mean_photons))


def detect(p: Pulse, n: int, basis_angle: AngleLike, rng: np.random.Generator) -> int | None:
    """Polarization readout of a pulse holding ``n`` photons.

    Returns ``None`` for an empty pulse. An aligned pulse gives a certain
    outcome; otherwise each photon is measured on its own and the majority
    wins, with ties settled by one extra draw.
    """
    if n == 0:
        return None
    p0 = prob_zero(p.state, basis_angle)
    if p0 >= 1.0 - 1e-12:
        return 0
    if p0 <= 1e-12:
        return 1
    zeros = int(rng.binomial(n, p0))
    ones = n - zeros
    if zeros == ones:
        return int(rng.random() < 0.5)
    return 0 if zeros > ones else 1


def _check_eta(eta: float) -> float:
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    return eta
