import math

import numpy as np
import pytest

from blindqkd.adversary import (
    InterceptResend,
    PnsAttack1,
    PnsAttack2,
    intercept_resend,
    make_adversary,
    pns_ensemble,
)
from blindqkd.channel import Attack, ChannelConfig, Pulse
from blindqkd.estimation import attack1_bound, attack2_bound, equatorial_fidelity
from blindqkd.polarization import QubitState, overlap_fidelity
from blindqkd.protocol import Mode, run_session

GRID = [(e, a) for e in (0.4, 0.5, 2 / 3) for a in (1.0, 2.0, 2.83, 4.0)]


class _FixedBasis:
    """Generator stand-in whose uniform draw returns a chosen basis."""

    def __init__(self, basis):
        self.basis = basis

    def uniform(self, lo, hi):
        return self.basis

    def random(self):
        raise AssertionError("aligned measurement must not draw")


def test_intercept_aligned_is_exact():
    p = Pulse(1.0, 0.8)
    forwarded, est, _ = intercept_resend(p, _FixedBasis(0.8))
    assert est.isclose(p.angle)
    assert overlap_fidelity(QubitState(est), p.state) == pytest.approx(1.0)
    assert forwarded.angle.isclose(p.angle)


def test_intercept_mean_fidelity_three_quarters():
    rng = np.random.default_rng(8)
    truth = rng.uniform(0, 2 * math.pi, 100_000)
    fids = []
    for a in truth:
        p = Pulse(1.0, a)
        _, est, _ = intercept_resend(p, rng)
        fids.append(overlap_fidelity(QubitState(est), p.state))
    assert abs(np.mean(fids) - 0.75) <= 0.005


def test_intercept_resend_qber_quarter():
    t = run_session(100_000, Mode.BASIC, ChannelConfig(attack="intercept-resend", seed=1), seed=1)
    assert abs(t.qber - 0.25) <= 0.01
    fids = [i.fidelity for r in t.eve_records for i in r.intercepts]
    assert abs(np.mean(fids) - 0.75) <= 0.005


def test_intercept_resend_needs_single_photons():
    with pytest.raises(ValueError):
        InterceptResend(1.0, np.random.default_rng(0), single_photon=False)


def test_pns_needs_coherent_pulses():
    with pytest.raises(ValueError):
        PnsAttack1(1.0, np.random.default_rng(0), single_photon=True)


@pytest.mark.parametrize("eta2,alpha", GRID)
def test_pns1_tap_chain(eta2, alpha):
    eta = math.sqrt(eta2)
    amps = PnsAttack1.tap_chain(eta, alpha)
    r = math.sqrt(1 - eta2) * alpha
    assert amps == pytest.approx([r, eta * r, eta2 * r], rel=1e-12)


@pytest.mark.parametrize("eta2,alpha", GRID)
def test_pns2_tap_chain_equal_and_energy(eta2, alpha):
    eta = math.sqrt(eta2)
    amps = PnsAttack2.tap_chain(eta, alpha)
    target = math.sqrt((1 - eta**6) / 3) * alpha
    assert amps == pytest.approx([target] * 3, rel=1e-12)
    assert sum(a * a for a in amps) + eta**6 * alpha**2 == pytest.approx(alpha**2, rel=1e-12)


def _bob_arrivals(r):
    """Intensities arriving at Bob: pass 1 and pass 3."""
    if r.mode is Mode.BASIC:
        return [r.received[0], r.received[2]]
    return [r.received[0], r.received[1], r.received[4]]


@pytest.mark.parametrize("attack", ["pns1", "pns2"])
@pytest.mark.parametrize("mode", list(Mode))
def test_pns_invisible_to_bob(attack, mode):
    eta2, alpha = 0.5, 2.83
    ch = ChannelConfig.from_eta2(eta2, attack=attack, seed=2)
    t = run_session(40, mode, ch, seed=2, alpha=alpha)
    assert t.verified and t.qber == 0.0
    for r in t.rounds:
        if r.discarded:
            continue
        # Bob's detector always sees the honest final intensity
        assert r.received[-1] == pytest.approx(eta2**3 * alpha**2, rel=1e-12)
        if attack == "pns1":
            arrivals = _bob_arrivals(r)
            assert arrivals[0] == pytest.approx(eta2 * alpha**2, rel=1e-12)


def test_pns_session_records_scores():
    t = run_session(200, Mode.BASIC, ChannelConfig.from_eta2(0.5, attack="pns1", seed=3), seed=3, alpha=2.83)
    recs = t.eve_records
    assert len(recs) == 200
    for rec in recs:
        assert [tap.pass_index for tap in rec.taps] == [1, 2, 3]
        for tap in rec.taps:
            assert tap.score == equatorial_fidelity(tap.photons)
        assert rec.aggregate == min(tap.score for tap in rec.taps)


def test_pns2_session_aggregate_is_common_value():
    t = run_session(50, Mode.BASIC, ChannelConfig.from_eta2(0.5, attack="pns2", seed=3), seed=3, alpha=2.83)
    for rec in t.eve_records:
        amps = {round(tap.tapped_amplitude, 12) for tap in rec.taps}
        assert len(amps) == 1
        assert rec.aggregate == pytest.approx(np.mean([tap.score for tap in rec.taps]))


@pytest.mark.parametrize("attack", ["pns1", "pns2"])
def test_pns_vacuum_scores_half(attack):
    ens = pns_ensemble(attack, 0.5, 0.0, 1000, np.random.default_rng(0))
    assert np.all(ens.scores == 0.5)
    assert ens.empirical == 0.5


@pytest.mark.parametrize("eta2,alpha", GRID)
def test_pns_ensembles_converge_to_bounds(eta2, alpha):
    rng = np.random.default_rng(12345)
    e1 = pns_ensemble("pns1", eta2, alpha, 100_000, rng)
    b1 = attack1_bound(eta2, alpha)
    assert abs(e1.empirical - b1.i_e) < 0.01
    assert abs(e1.empirical - b1.i_e) / b1.i_e < 0.02
    np.testing.assert_allclose(e1.per_pass_mean, [b1.i_a2, b1.i_a3, b1.i_a4], atol=0.01)
    # a per-round minimum is biased below the minimum of expectations
    assert e1.round_aggregate_mean <= e1.empirical

    e2 = pns_ensemble("pns2", eta2, alpha, 100_000, rng)
    b2 = attack2_bound(eta2, alpha)
    assert abs(e2.empirical - b2.i_e) < 0.01
    assert abs(e2.empirical - b2.i_e) / b2.i_e < 0.02


def test_pns2_spot_value_monte_carlo():
    ens = pns_ensemble("pns2", 0.5, 2.83, 100_000, np.random.default_rng(4))
    assert abs(ens.empirical - 0.83) <= 0.01


def test_session_driven_scores_agree_with_ensemble():
    # the per-round adversary and the vectorized sampler target the same bound
    t = run_session(3000, Mode.BASIC, ChannelConfig.from_eta2(0.5, attack="pns1", seed=6), seed=6, alpha=2.83)
    per_pass = np.array([[tap.score for tap in rec.taps] for rec in t.eve_records]).mean(axis=0)
    b = attack1_bound(0.5, 2.83)
    # kept rounds are those where Bob saw photons; Eve's taps are independent of that
    np.testing.assert_allclose(per_pass, [b.i_a2, b.i_a3, b.i_a4], atol=4 * 0.2 / math.sqrt(3000))


def test_pns_ensemble_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        pns_ensemble("intercept-resend", 0.5, 1.0, 10, rng)
    with pytest.raises(ValueError):
        pns_ensemble("pns1", 0.5, 1.0, 0, rng)
    with pytest.raises(ValueError):
        pns_ensemble("pns1", 0.0, 1.0, 10, rng)


def test_impersonation_blind_two_pulse():
    t = run_session(10_000, Mode.TWO_PULSE, ChannelConfig(attack="impersonation", seed=7), seed=7)
    assert abs(t.qber - 0.5) <= 0.02
    assert not t.verified


def test_impersonation_knows_s_two_pulse():
    t = run_session(1000, Mode.TWO_PULSE, ChannelConfig(attack="impersonation", seed=7), seed=7, knows_s=True)
    assert t.qber == 0.0 and t.verified
    for rec in t.eve_records:
        assert rec.relay.eve1_shuffle == rec.relay.eve2_shuffle_guess


def test_impersonation_basic_protocol_undetected():
    t = run_session(1000, Mode.BASIC, ChannelConfig(attack="impersonation", seed=8), seed=8)
    assert t.qber == 0.0 and t.verified
    # Eve1 read every key bit
    assert all(rec.relay.eve1_bit == int(k) for rec, k in zip(t.eve_records, t.alice_key))


def test_impersonation_coherent_two_pulse():
    t = run_session(2000, Mode.TWO_PULSE, ChannelConfig.from_eta2(0.5, attack="impersonation", seed=9), seed=9, alpha=2.83)
    assert abs(t.qber - 0.5) <= 0.05


def test_make_adversary_dispatch():
    rng = np.random.default_rng(0)
    assert make_adversary(Attack.NONE, 1.0, rng, True).attack is Attack.NONE
    assert isinstance(make_adversary("pns2", 1.0, rng, False), PnsAttack2)
