"""Three-pass key agreement with blind polarization bases.

Per key bit, Alice sends ``theta``, Bob adds ``phi`` and returns, Alice
removes ``theta`` and encodes ``+-pi/4``, Bob removes ``phi`` and reads the
key. Neither party ever reveals an angle. The two-pulse variant adds Bob's
shuffle ``s`` and Alice's blocking factor ``b`` against impersonation.
Sessions end with a hash comparison of the two keys.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Iterable, Union

import numpy as np

from . import parties
from .adversary import Eavesdropper, EveRecord, ImpersonationPair, Relay, make_adversary
from .channel import Attack, ChannelConfig, Pulse, detect, sample_photon_count
from .polarization import TAU, PolarizationAngle


class Mode(enum.Enum):
    BASIC = "basic"
    TWO_PULSE = "two-pulse"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        return value if isinstance(value, cls) else cls(value)


class AbortedSession(RuntimeError):
    """The channel discarded too many rounds to be usable."""


@dataclass
class BasicRound:
    index: int
    theta: float
    phi: float
    key_bit: int
    pass_angles: list[float]
    final_angle: float | None
    outcome: int | None
    bob_photons: int | None = None
    eve: EveRecord | None = None
    received: list[float] = field(default_factory=list)

    mode = Mode.BASIC

    @property
    def discarded(self) -> bool:
        return self.outcome is None

    @property
    def bob_bit(self) -> int | None:
        return self.outcome

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "mode": self.mode.value,
            "secrets": {"theta": self.theta, "phi": self.phi, "k": self.key_bit},
            "pass_angles": self.pass_angles,
            "final_angle": self.final_angle,
            "outcome": self.outcome,
            "discarded": self.discarded,
            "bob_photons": self.bob_photons,
            "received": self.received,
            "eve": None if self.eve is None else self.eve.to_dict(),
        }


@dataclass
class TwoPulseRound:
    index: int
    theta1: float
    theta2: float
    phi: float
    s: int
    k: int
    b: int
    pass_angles: list[list[float]]
    l: int | None
    decoded: int | None
    bob_photons: int | None = None
    eve: EveRecord | None = None
    received: list[float] = field(default_factory=list)

    mode = Mode.TWO_PULSE

    @property
    def discarded(self) -> bool:
        return self.l is None

    @property
    def key_bit(self) -> int:
        return self.k

    @property
    def bob_bit(self) -> int | None:
        return self.decoded

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "mode": self.mode.value,
            "secrets": {
                "theta1": self.theta1,
                "theta2": self.theta2,
                "phi": self.phi,
                "s": self.s,
                "k": self.k,
                "b": self.b,
            },
            "pass_angles": self.pass_angles,
            "outcome": self.l,
            "decoded": self.decoded,
            "discarded": self.discarded,
            "bob_photons": self.bob_photons,
            "received": self.received,
            "eve": None if self.eve is None else self.eve.to_dict(),
        }


Round = Union[BasicRound, TwoPulseRound]


def pack_bits(bits: str) -> bytes:
    """Pack a ``'0'/'1'`` string MSB-first, zero-padding the last octet."""
    if set(bits) - {"0", "1"}:
        raise ValueError("key must be a string of '0' and '1'")
    if not bits:
        return b""
    padded = bits + "0" * (-len(bits) % 8)
    return int(padded, 2).to_bytes(len(padded) // 8, "big")


def verify_keys(k_a: str, k_b: str, hash_name: str = "sha256") -> tuple[bytes, bytes, bool]:
    """Hash both keys and compare the digests."""
    h_a = hashlib.new(hash_name, pack_bits(k_a)).digest()
    h_b = hashlib.new(hash_name, pack_bits(k_b)).digest()
    return h_a, h_b, h_a == h_b


@dataclass
class SessionTranscript:
    mode: Mode
    rounds: list[Round]
    alice_key: str
    bob_key: str
    hash_a: bytes
    hash_b: bytes
    verified: bool
    discard_count: int
    intensity_log: list[float] = field(default_factory=list)
    attack: Attack = Attack.NONE

    @property
    def eve_records(self) -> list[EveRecord]:
        return [r.eve for r in self.rounds if r.eve is not None and not r.discarded]

    @property
    def errors(self) -> int:
        return sum(a != b for a, b in zip(self.alice_key, self.bob_key))

    @property
    def qber(self) -> float:
        return self.errors / len(self.alice_key) if self.alice_key else 0.0

    def summary(self) -> dict:
        return {
            "mode": self.mode.value,
            "attack": self.attack.value,
            "key_length": len(self.alice_key),
            "discard_count": self.discard_count,
            "qber": self.qber,
            "hash_a": self.hash_a.hex(),
            "hash_b": self.hash_b.hex(),
            "verified": self.verified,
        }


# -- single rounds -------------------------------------------------------------


def _bob_detect(pulse: Pulse, basis: float, single_photon: bool, rng) -> tuple[int | None, int]:
    n = 1 if single_photon else sample_photon_count(pulse, rng)
    return detect(pulse, n, basis, rng), n


def _final_amplitude(eta: float, amplitude: float, single_photon: bool) -> float:
    return amplitude if single_photon else eta**3 * amplitude


def run_basic_round(
    theta: float | PolarizationAngle,
    phi: float | PolarizationAngle,
    k: int,
    channel: ChannelConfig,
    rng: np.random.Generator,
    *,
    alpha: float | None = None,
    eve: Eavesdropper | None = None,
    index: int = 0,
) -> BasicRound:
    """Run steps (prepare, scramble, encode, unscramble, read) for one key bit.

    ``alpha=None`` sends single photons; otherwise pulses are coherent with
    that initial amplitude. ``rng`` drives the channel and Bob's detector.
    A round whose pulse is lost or arrives empty comes back with
    ``outcome=None``.
    """
    theta, phi = PolarizationAngle(float(theta)), PolarizationAngle(float(phi))
    single = alpha is None
    amp = 1.0 if single else float(alpha)
    if eve is None:
        eve = make_adversary(channel.attack, channel.eta, rng, single)
    eve.begin_round(index)

    received: list[float] = []

    def done(pass_angles, final, outcome, n=None):
        rec = eve.end_round(outcome is None)
        return BasicRound(
            index, theta.radians, phi.radians, k, pass_angles,
            None if final is None else final.angle.radians, outcome, n, rec, received,
        )

    if isinstance(eve, ImpersonationPair):
        sent = parties.alice_prepare(theta, amp)
        eve_bit = eve.eve1_basic(sent, lambda back: parties.alice_encode(back, theta, k))
        third = eve.eve2_basic(lambda p: parties.bob_scramble(p, phi), eve_bit, amp)
        third = replace(third, amplitude=_final_amplitude(channel.eta, amp, single))
        received.append(third.mean_photons)
        final = parties.bob_unscramble(third, phi)
        outcome, n = _bob_detect(final, parties.KEY_BASIS, single, rng)
        eve.current.relay = Relay(None, None, eve_bit, eve_bit)
        return done([sent.angle.radians, None, third.angle.radians], final, outcome, n)

    angles: list[float] = []
    p = parties.alice_prepare(theta, amp)
    for step in (1, 2, 3):
        angles.append(p.angle.radians)
        p = eve.transit(step, p)
        if p is None:
            return done(angles, None, None)
        received.append(p.mean_photons)
        if step == 1:
            p = parties.bob_scramble(p, phi)
        elif step == 2:
            p = parties.alice_encode(p, theta, k)
    final = parties.bob_unscramble(p, phi)
    outcome, n = _bob_detect(final, parties.KEY_BASIS, single, rng)
    return done(angles, final, outcome, n)


def run_two_pulse_round(
    thetas: tuple[float, float],
    phi: float,
    s: int,
    k: int,
    b: int,
    channel: ChannelConfig,
    rng: np.random.Generator,
    *,
    alpha: float | None = None,
    eve: Eavesdropper | None = None,
    index: int = 0,
) -> TwoPulseRound:
    """One key bit of the anti-impersonation variant.

    Alice sends two pulses, Bob rotates them by ``phi +- pi/4`` in an order
    set by ``s``, Alice compensates, encodes ``k`` on both and lets only the
    ``b``-th through. Bob reads the pre-key ``l`` and decodes with ``b``.
    """
    if b not in (1, 2):
        raise ValueError(f"blocking factor must be 1 or 2, got {b!r}")
    ths = (PolarizationAngle(float(thetas[0])), PolarizationAngle(float(thetas[1])))
    phi = PolarizationAngle(float(phi))
    single = alpha is None
    amp = 1.0 if single else float(alpha)
    if eve is None:
        eve = make_adversary(channel.attack, channel.eta, rng, single)
    eve.begin_round(index)

    received: list[float] = []

    def done(pass_angles, l, n=None):
        rec = eve.end_round(l is None)
        decoded = None if l is None else parties.decode_two_pulse(s, b, l)
        return TwoPulseRound(
            index, ths[0].radians, ths[1].radians, phi.radians, s, k, b, pass_angles, l, decoded, n, rec,
            received,
        )

    sent = (parties.alice_prepare(ths[0], amp), parties.alice_prepare(ths[1], amp))

    if isinstance(eve, ImpersonationPair):
        s1, prekey = eve.eve1_two_pulse(
            sent, lambda back: parties.alice_encode_pair(back, ths, k)[b - 1], s
        )
        s_guess, third = eve.eve2_two_pulse(lambda p: parties.bob_shuffle(p, phi, s), prekey, s, amp)
        third = replace(third, amplitude=_final_amplitude(channel.eta, amp, single))
        received.append(third.mean_photons)
        final = parties.bob_unscramble(third, phi)
        l, n = _bob_detect(final, parties.PREKEY_BASIS, single, rng)
        relayed = parties.decode_two_pulse(s, b, prekey)
        eve.current.relay = Relay(s1, s_guess, prekey, relayed)
        angles = [[sent[0].angle.radians, sent[1].angle.radians], [], [third.angle.radians]]
        return done(angles, l, n)

    angles: list[list[float]] = [[p.angle.radians for p in sent]]
    arrived = [eve.transit(1, p, i) for i, p in enumerate(sent)]
    if None in arrived:
        return done(angles, None)
    received.extend(p.mean_photons for p in arrived)
    back = parties.bob_shuffle(tuple(arrived), phi, s)
    angles.append([p.angle.radians for p in back])
    arrived = [eve.transit(2, p, i) for i, p in enumerate(back)]
    if None in arrived:
        return done(angles, None)
    received.extend(p.mean_photons for p in arrived)
    third = parties.alice_encode_pair(tuple(arrived), ths, k)[b - 1]
    angles.append([third.angle.radians])
    third = eve.transit(3, third, b - 1)
    if third is None:
        return done(angles, None)
    received.append(third.mean_photons)
    final = parties.bob_unscramble(third, phi)
    l, n = _bob_detect(final, parties.PREKEY_BASIS, single, rng)
    return done(angles, l, n)


# -- sessions -------------------------------------------------------------------


def party_streams(seed: int, channel_seed: int) -> tuple[np.random.Generator, ...]:
    """Independent generators for Alice, Bob and the channel/adversary."""
    ss = np.random.SeedSequence([int(seed), int(channel_seed)])
    return tuple(np.random.default_rng(child) for child in ss.spawn(3))


def run_session(
    n_bits: int,
    mode: Mode | str = Mode.BASIC,
    channel: ChannelConfig | None = None,
    seed: int | None = None,
    *,
    alpha: float | None = None,
    hash_name: str = "sha256",
    discard_ceiling: float = 0.999,
    knows_s: bool = False,
    intercept_passes: Iterable[int] = (3,),
) -> SessionTranscript:
    """Agree on ``n_bits`` key bits and verify them by hash comparison.

    Rounds lost to the channel are retried with fresh angles until the key
    is complete. If the fraction of discarded rounds would have to exceed
    ``discard_ceiling``, :class:`AbortedSession` is raised.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    mode = Mode.parse(mode)
    channel = channel or ChannelConfig()
    seed = channel.seed if seed is None else seed
    alice_rng, bob_rng, link_rng = party_streams(seed, channel.seed)
    single = alpha is None

    kwargs = {}
    if channel.attack is Attack.IMPERSONATION:
        kwargs["knows_s"] = knows_s
    elif channel.attack is Attack.INTERCEPT_RESEND:
        kwargs["passes"] = tuple(intercept_passes)
    eve = make_adversary(channel.attack, channel.eta, link_rng, single, **kwargs)

    max_attempts = math.ceil(n_bits / (1.0 - discard_ceiling))
    rounds: list[Round] = []
    alice_bits: list[str] = []
    bob_bits: list[str] = []
    discards = 0
    intensity: list[float] = []
    while len(alice_bits) < n_bits:
        if len(rounds) >= max_attempts:
            raise AbortedSession(
                f"{discards} of {len(rounds)} rounds discarded; channel looks dead"
            )
        idx = len(rounds)
        if mode is Mode.BASIC:
            theta = alice_rng.uniform(0.0, TAU)
            k = int(alice_rng.integers(2))
            phi = bob_rng.uniform(0.0, TAU)
            r = run_basic_round(theta, phi, k, channel, link_rng, alpha=alpha, eve=eve, index=idx)
        else:
            thetas = (alice_rng.uniform(0.0, TAU), alice_rng.uniform(0.0, TAU))
            k = int(alice_rng.integers(2))
            b = int(alice_rng.integers(1, 3))
            phi = bob_rng.uniform(0.0, TAU)
            s = int(bob_rng.integers(2))
            r = run_two_pulse_round(thetas, phi, s, k, b, channel, link_rng, alpha=alpha, eve=eve, index=idx)
        rounds.append(r)
        if not single:
            intensity.extend(r.received)
        if r.discarded:
            discards += 1
            continue
        alice_bits.append(str(r.key_bit))
        bob_bits.append(str(r.bob_bit))

    k_a, k_b = "".join(alice_bits), "".join(bob_bits)
    h_a, h_b, ok = verify_keys(k_a, k_b, hash_name)
    return SessionTranscript(mode, rounds, k_a, k_b, h_a, h_b, ok, discards, intensity, channel.attack)


# -- transcript files --------------------------------------------------------------


def write_transcript(transcript: SessionTranscript, path: Union[str, PathLike]) -> None:
    """Write one JSON object per round, newline-terminated, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in transcript.rounds:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_transcript(path: Union[str, PathLike]) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
