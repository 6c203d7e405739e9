"""Alice's and Bob's local operations for both protocol variants.

These are the pure state transformations each party performs; the round
runners in :mod:`blindqkd.protocol` and the impersonating adversaries both
build on them.
"""
from __future__ import annotations

import math

from .channel import Pulse
from .polarization import PolarizationAngle

QUARTER = math.pi / 4
HALF = math.pi / 2

# Bob's readout basis in the basic protocol: +pi/4 reads 0, -pi/4 reads 1.
KEY_BASIS = QUARTER
# Readout basis in the two-pulse variant: |0> reads 0, |1> reads 1.
PREKEY_BASIS = 0.0


def key_offset(k: int) -> float:
    """Encoding rotation: ``+pi/4`` for bit 0, ``-pi/4`` for bit 1."""
    return QUARTER if k == 0 else -QUARTER


def alice_prepare(theta: PolarizationAngle, amplitude: float) -> Pulse:
    return Pulse(amplitude, PolarizationAngle(0.0)).rotated(theta)


def bob_scramble(pulse: Pulse, phi: PolarizationAngle) -> Pulse:
    return pulse.rotated(phi)


def alice_encode(pulse: Pulse, theta: PolarizationAngle, k: int) -> Pulse:
    return pulse.rotated(-theta).rotated(key_offset(k))


def bob_unscramble(pulse: Pulse, phi: PolarizationAngle) -> Pulse:
    return pulse.rotated(-phi)


def shuffle_offsets(phi: PolarizationAngle, s: int) -> tuple[PolarizationAngle, PolarizationAngle]:
    """Bob's rotations of the two pulses, ``phi + (-1)**s pi/4`` and ``phi + (-1)**(s^1) pi/4``."""
    sign = 1.0 if s == 0 else -1.0
    return phi + sign * QUARTER, phi - sign * QUARTER


def bob_shuffle(pulses: tuple[Pulse, Pulse], phi: PolarizationAngle, s: int) -> tuple[Pulse, Pulse]:
    r1, r2 = shuffle_offsets(phi, s)
    return pulses[0].rotated(r1), pulses[1].rotated(r2)


def alice_encode_pair(
    pulses: tuple[Pulse, Pulse], thetas: tuple[PolarizationAngle, PolarizationAngle], k: int
) -> tuple[Pulse, Pulse]:
    off = key_offset(k)
    return (
        pulses[0].rotated(-thetas[0]).rotated(off),
        pulses[1].rotated(-thetas[1]).rotated(off),
    )


def expected_prekey(s: int, k: int, b: int) -> int:
    """Pre-key bit ``s ^ k ^ (b mod 2)`` Bob reads in a clean two-pulse round."""
    return s ^ k ^ (b % 2)


def decode_two_pulse(s: int, b: int, l: int) -> int:
    """Recover the key bit as ``s ^ (b mod 2) ^ l``.

    ``b`` is the 1-based index of the pulse Alice let through; only its
    parity enters.
    """
    if b not in (1, 2):
        raise ValueError(f"blocking factor must be 1 or 2, got {b!r}")
    return s ^ (b % 2) ^ l
