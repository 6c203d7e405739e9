"""Eavesdropping strategies attached to the quantum channel.

An :class:`Eavesdropper` sits on the line between Alice and Bob and handles
every one-way trip (``pass_index`` 1, 2, 3). The base class is the honest
lossy channel; subclasses tap, measure or replace pulses and keep one
:class:`EveRecord` per protocol round.

PNS attacks score Eve's knowledge per pass as the optimal equatorial
fidelity of the photons she actually caught, so ensemble averages are
unbiased samples of the Poisson-weighted bounds in
:mod:`blindqkd.estimation`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import parties
from .channel import Attack, Pulse, attenuate, beam_split, detect, sample_photon_count
from .estimation import equatorial_fidelity, fidelity_table
from .polarization import TAU, PolarizationAngle, QubitState, measure, overlap_fidelity


@dataclass
class PassTap:
    pass_index: int
    pulse_index: int
    tapped_amplitude: float
    photons: int
    score: float


@dataclass
class Intercept:
    pass_index: int
    true_angle: float
    basis: float
    estimate: float
    fidelity: float


@dataclass
class Relay:
    """What the impersonating pair did in one round."""

    eve1_shuffle: int | None
    eve2_shuffle_guess: int | None
    eve1_bit: int
    relayed_bit: int


@dataclass
class EveRecord:
    round_index: int
    attack: str
    taps: list[PassTap] = field(default_factory=list)
    intercepts: list[Intercept] = field(default_factory=list)
    relay: Relay | None = None

    def pass_scores(self) -> dict[int, float]:
        """Best score per pass; with two pulses in flight Eve keeps the better tap."""
        out: dict[int, float] = {}
        for t in self.taps:
            out[t.pass_index] = max(out.get(t.pass_index, 0.5), t.score)
        return out

    @property
    def aggregate(self) -> float | None:
        if self.taps:
            scores = list(self.pass_scores().values())
            if self.attack == Attack.PNS_ATTACK2.value:
                return sum(scores) / len(scores)
            return min(scores)
        if self.intercepts:
            return sum(i.fidelity for i in self.intercepts) / len(self.intercepts)
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["aggregate"] = self.aggregate
        return d


class Eavesdropper:
    """Honest lossy channel; the base every attack builds on."""

    attack = Attack.NONE

    def __init__(self, eta: float, rng: np.random.Generator, single_photon: bool = False):
        self.eta = eta
        self.rng = rng
        self.single_photon = single_photon
        self.records: list[EveRecord] = []
        self.current: EveRecord | None = None

    def begin_round(self, round_index: int) -> None:
        self.current = EveRecord(round_index, self.attack.value)

    def end_round(self, discarded: bool) -> EveRecord | None:
        rec, self.current = self.current, None
        if rec is not None and not discarded and self.attack is not Attack.NONE:
            self.records.append(rec)
        return rec if self.attack is not Attack.NONE else None

    def transit(self, pass_index: int, pulse: Pulse, pulse_index: int = 0) -> Pulse | None:
        """Carry ``pulse`` over one trip; ``None`` means the photon was lost."""
        return self.lose(pulse)

    def lose(self, pulse: Pulse) -> Pulse | None:
        if self.single_photon:
            if self.eta < 1.0 and self.rng.random() >= self.eta * self.eta:
                return None
            return pulse
        return attenuate(pulse, self.eta)


def intercept_resend(
    pass_pulse: Pulse, rng: np.random.Generator
) -> tuple[Pulse, PolarizationAngle, PolarizationAngle]:
    """Measure a single photon in a random equatorial basis and resend the result.

    Returns the forwarded pulse, Eve's estimate of the polarization and the
    basis she used.
    """
    basis = PolarizationAngle(rng.uniform(0.0, TAU))
    outcome = measure(pass_pulse.state, basis, rng)
    estimate = basis + (parties.HALF if outcome else 0.0)
    return Pulse(pass_pulse.amplitude, estimate), estimate, basis


class InterceptResend(Eavesdropper):
    """Single-photon intercept-and-resend on the chosen passes (default: the last)."""

    attack = Attack.INTERCEPT_RESEND

    def __init__(self, eta, rng, single_photon=True, passes=(3,)):
        if not single_photon:
            raise ValueError("intercept-resend is modeled on single-photon pulses only")
        super().__init__(eta, rng, single_photon)
        self.passes = tuple(passes)

    def transit(self, pass_index, pulse, pulse_index=0):
        if pass_index in self.passes:
            forwarded, estimate, basis = intercept_resend(pulse, self.rng)
            fid = overlap_fidelity(QubitState(estimate), pulse.state)
            self.current.intercepts.append(
                Intercept(pass_index, pulse.angle.radians, basis.radians, estimate.radians, fid)
            )
            pulse = forwarded
        return self.lose(pulse)


class _PnsBase(Eavesdropper):
    def __init__(self, eta, rng, single_photon=False):
        if single_photon:
            raise ValueError("PNS attacks need coherent pulses; pass an amplitude")
        super().__init__(eta, rng, single_photon)

    def _tap(self, pass_index, pulse_index, pulse, t) -> Pulse:
        kept, tapped = beam_split(pulse, t)
        n = sample_photon_count(tapped, self.rng)
        self.current.taps.append(
            PassTap(pass_index, pulse_index, tapped.amplitude, n, equatorial_fidelity(n))
        )
        return kept


class PnsAttack1(_PnsBase):
    """Lossless line with a beam splitter of transmittivity ``eta`` on every trip.

    Bob and Alice receive exactly the amplitudes of the honest lossy channel.
    """

    attack = Attack.PNS_ATTACK1

    def transit(self, pass_index, pulse, pulse_index=0):
        return self._tap(pass_index, pulse_index, pulse, self.eta)

    @staticmethod
    def tap_chain(eta: float, alpha: float) -> list[float]:
        """Eve's tapped amplitudes on passes 1..3 for a pulse starting at ``alpha``."""
        p = Pulse(alpha, PolarizationAngle(0.0))
        out = []
        for _ in range(3):
            p, tapped = beam_split(p, eta)
            out.append(tapped.amplitude)
        return out


class PnsAttack2(_PnsBase):
    """Equal extraction: Eve removes intensity ``(1 - eta**6) alpha**2 / 3`` per pass.

    Only Bob's final amplitude ``eta**3 * alpha`` matches the honest channel;
    the intermediate intensities are higher than they should be.
    """

    attack = Attack.PNS_ATTACK2

    def __init__(self, eta, rng, single_photon=False):
        super().__init__(eta, rng, single_photon)
        self._launch: dict[int, float] = {}

    def transit(self, pass_index, pulse, pulse_index=0):
        if pass_index == 1:
            self._launch[pulse_index] = pulse.amplitude
        alpha = self._launch.get(pulse_index, 0.0)
        return self._tap(pass_index, pulse_index, pulse, self.transmittivity(pulse.amplitude, alpha, self.eta))

    @staticmethod
    def tapped_intensity(eta: float, alpha: float) -> float:
        return (1.0 - eta**6) * alpha * alpha / 3.0

    @classmethod
    def transmittivity(cls, amplitude: float, alpha: float, eta: float) -> float:
        if amplitude == 0.0:
            return 1.0
        frac = cls.tapped_intensity(eta, alpha) / (amplitude * amplitude)
        return math.sqrt(max(0.0, 1.0 - min(frac, 1.0)))

    @classmethod
    def tap_chain(cls, eta: float, alpha: float) -> list[float]:
        p = Pulse(alpha, PolarizationAngle(0.0))
        out = []
        for _ in range(3):
            p, tapped = beam_split(p, cls.transmittivity(p.amplitude, alpha, eta))
            out.append(tapped.amplitude)
        return out


class ImpersonationPair(Eavesdropper):
    """Eve1 plays Bob toward Alice, Eve2 plays Alice toward Bob.

    In the basic protocol Eve1 reads the key bit outright and Eve2 re-sends
    it, so the attack is invisible. In the two-pulse variant Eve1 only sees a
    pre-key bit ``l' = s' ^ k ^ b`` under her own shuffle ``s'``, and the pair
    relays that pre-key: Eve2 steers Bob's pre-key onto ``l'`` through the
    pulse Bob returned to her, which needs Bob's private shuffle ``s``. A
    blind pair draws both shuffles without knowledge of ``s`` and each relayed
    bit is wrong with probability 1/2. With ``knows_s`` the pair uses ``s``
    for both and the relay is exact.
    """

    attack = Attack.IMPERSONATION

    def __init__(self, eta, rng, single_photon=False, knows_s=False):
        super().__init__(eta, rng, single_photon)
        self.knows_s = knows_s

    def _read(self, pulse: Pulse, basis: float) -> int:
        n = 1 if self.single_photon else sample_photon_count(pulse, self.rng)
        bit = detect(pulse, n, basis, self.rng)
        if bit is None:
            bit = int(self.rng.integers(2))
        return bit

    # -- basic protocol ------------------------------------------------------

    def eve1_basic(self, alice_pulse: Pulse, alice_encode) -> int:
        """Act as Bob toward Alice and return the key bit read from her."""
        phi = PolarizationAngle(self.rng.uniform(0.0, TAU))
        back = parties.bob_scramble(alice_pulse, phi)
        final = parties.bob_unscramble(alice_encode(back), phi)
        return self._read(final, parties.KEY_BASIS)

    def eve2_basic(self, bob_scramble, bit: int, amplitude: float) -> Pulse:
        """Act as Alice toward Bob encoding ``bit``; return Bob's pass-3 pulse."""
        theta = PolarizationAngle(self.rng.uniform(0.0, TAU))
        sent = parties.alice_prepare(theta, amplitude)
        returned = bob_scramble(sent)
        return parties.alice_encode(returned, theta, bit)

    # -- two-pulse variant ---------------------------------------------------

    def eve1_two_pulse(self, alice_pulses, alice_finish, bob_s: int) -> tuple[int, int]:
        """Act as Bob toward Alice; return ``(eve1_shuffle, prekey)``."""
        phi = PolarizationAngle(self.rng.uniform(0.0, TAU))
        s1 = bob_s if self.knows_s else int(self.rng.integers(2))
        back = parties.bob_shuffle(alice_pulses, phi, s1)
        final = parties.bob_unscramble(alice_finish(back), phi)
        return s1, self._read(final, parties.PREKEY_BASIS)

    def eve2_two_pulse(self, bob_shuffle, prekey: int, bob_s: int, amplitude: float) -> tuple[int, Pulse]:
        """Act as Alice toward Bob, steering his pre-key onto ``prekey``.

        Returns Eve2's guess of Bob's shuffle and the pulse she forwards.
        """
        thetas = (
            PolarizationAngle(self.rng.uniform(0.0, TAU)),
            PolarizationAngle(self.rng.uniform(0.0, TAU)),
        )
        sent = (parties.alice_prepare(thetas[0], amplitude), parties.alice_prepare(thetas[1], amplitude))
        returned = bob_shuffle(sent)
        s_guess = bob_s if self.knows_s else int(self.rng.integers(2))
        j = int(self.rng.integers(1, 3))
        # Bob reads s ^ x ^ (j mod 2); pick x so that reads prekey if s == s_guess.
        x = s_guess ^ prekey ^ (j % 2)
        off = parties.key_offset(x)
        return s_guess, returned[j - 1].rotated(-thetas[j - 1]).rotated(off)


_ADVERSARIES = {
    Attack.NONE: Eavesdropper,
    Attack.INTERCEPT_RESEND: InterceptResend,
    Attack.PNS_ATTACK1: PnsAttack1,
    Attack.PNS_ATTACK2: PnsAttack2,
    Attack.IMPERSONATION: ImpersonationPair,
}


def make_adversary(
    attack: Attack, eta: float, rng: np.random.Generator, single_photon: bool, **kwargs
) -> Eavesdropper:
    return _ADVERSARIES[Attack.parse(attack)](eta, rng, single_photon=single_photon, **kwargs)


# -- vectorized ensembles -----------------------------------------------------


@dataclass
class PnsEnsemble:
    """Monte Carlo Eve scores for ``rounds`` independent rounds of a PNS attack.

    ``per_pass_mean`` estimates ``(I_a2, I_a3, I_a4)``. ``empirical`` is the
    estimator of the aggregate bound: the smallest per-pass mean for Attack 1,
    the overall mean for Attack 2. ``round_aggregate_mean`` is the average of
    the per-round aggregates (per-round minimum for Attack 1), which sits
    below the bound because a minimum of samples is biased low.
    """

    attack: str
    eta2: float
    alpha: float
    tapped_amplitudes: tuple[float, float, float]
    counts: np.ndarray
    scores: np.ndarray

    @property
    def rounds(self) -> int:
        return self.counts.shape[0]

    @property
    def per_pass_mean(self) -> np.ndarray:
        return self.scores.mean(axis=0)

    @property
    def empirical(self) -> float:
        means = self.per_pass_mean
        if self.attack == Attack.PNS_ATTACK2.value:
            return float(self.scores.mean())
        return float(means.min())

    @property
    def round_aggregate(self) -> np.ndarray:
        if self.attack == Attack.PNS_ATTACK2.value:
            return self.scores.mean(axis=1)
        return self.scores.min(axis=1)

    @property
    def round_aggregate_mean(self) -> float:
        return float(self.round_aggregate.mean())


def pns_ensemble(
    attack: Attack | str, eta2: float, alpha: float, rounds: int, rng: np.random.Generator
) -> PnsEnsemble:
    """Sample Eve's photon counts on all three passes for many rounds at once."""
    attack = Attack.parse(attack)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not (0.0 < eta2 <= 1.0):
        raise ValueError(f"eta2 must lie in (0, 1], got {eta2!r}")
    if alpha < 0.0:
        raise ValueError(f"alpha must be >= 0, got {alpha!r}")
    eta = math.sqrt(eta2)
    if attack is Attack.PNS_ATTACK1:
        amps = PnsAttack1.tap_chain(eta, alpha)
    elif attack is Attack.PNS_ATTACK2:
        amps = PnsAttack2.tap_chain(eta, alpha)
    else:
        raise ValueError(f"{attack.value!r} is not a PNS attack")
    means = np.array([a * a for a in amps])
    counts = rng.poisson(means, size=(rounds, 3))
    table = fidelity_table(int(counts.max()))
    return PnsEnsemble(attack.value, eta2, alpha, tuple(amps), counts, table[counts])
