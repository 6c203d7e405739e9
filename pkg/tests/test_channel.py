import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blindqkd.channel import (
    Attack,
    ChannelConfig,
    Pulse,
    attenuate,
    beam_split,
    detect,
    sample_photon_count,
)

amps = st.floats(min_value=0.0, max_value=20.0)
unit = st.floats(min_value=0.0, max_value=1.0)
effs = st.floats(min_value=1e-6, max_value=1.0)
turns = st.floats(min_value=-10.0, max_value=10.0)


def test_attenuate_examples():
    p = Pulse(2.83, 0.4)
    assert attenuate(p, math.sqrt(0.5)).amplitude == pytest.approx(2.0011, abs=1e-4)
    assert attenuate(p, 1.0) == p
    eta = math.sqrt(0.5)
    thrice = attenuate(attenuate(attenuate(p, eta), eta), eta)
    assert thrice.amplitude == pytest.approx(eta**3 * 2.83, rel=1e-15)


@pytest.mark.parametrize("eta", [0.0, -0.1, 1.0001])
def test_attenuate_rejects_bad_eta(eta):
    with pytest.raises(ValueError):
        attenuate(Pulse(1.0, 0.0), eta)


@given(amps, effs, effs, turns)
def test_attenuate_composes(alpha, a, b, angle):
    p = Pulse(alpha, angle)
    twice = attenuate(attenuate(p, a), b)
    assert twice.amplitude == pytest.approx(attenuate(p, a * b).amplitude, rel=1e-12, abs=1e-300)
    assert twice.angle == p.angle


def test_beam_split_examples():
    t, r = beam_split(Pulse(1.0, 0.3), math.sqrt(0.5))
    assert t.amplitude == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert r.amplitude == pytest.approx(math.sqrt(0.5), abs=1e-15)
    _, r = beam_split(Pulse(2.83, 0.0), math.sqrt(0.5))
    assert r.amplitude == pytest.approx(math.sqrt(0.5) * 2.83, abs=1e-12)
    assert r.mean_photons == pytest.approx(4.00445, abs=1e-5)
    t, r = beam_split(Pulse(1.7, 0.0), 1.0)
    assert t.amplitude == 1.7 and r.amplitude == 0.0


@pytest.mark.parametrize("t", [-0.01, 1.01])
def test_beam_split_rejects_bad_t(t):
    with pytest.raises(ValueError):
        beam_split(Pulse(1.0, 0.0), t)


def test_beam_split_energy_conservation_1000_pairs():
    rng = np.random.default_rng(3)
    for alpha, t in zip(rng.uniform(0, 10, 1000), rng.uniform(0, 1, 1000)):
        tr, rf = beam_split(Pulse(alpha, 0.0), t)
        assert abs(tr.amplitude**2 + rf.amplitude**2 - alpha**2) <= 1e-12 * max(1.0, alpha**2)


@given(amps, unit, turns)
def test_beam_split_keeps_polarization(alpha, t, angle):
    p = Pulse(alpha, angle)
    for q in beam_split(p, t):
        assert q.angle == p.angle


def test_pulse_invariants():
    with pytest.raises(ValueError):
        Pulse(-1.0, 0.0)
    assert Pulse(3.0, 0.0).mean_photons == 9.0


def test_sample_vacuum():
    rng = np.random.default_rng(0)
    assert all(sample_photon_count(Pulse(0.0, 0.0), rng) == 0 for _ in range(100))


def test_sample_vacuum_fraction_amplitude_one():
    rng = np.random.default_rng(2024)
    counts = [sample_photon_count(Pulse(1.0, 0.0), rng) for _ in range(100_000)]
    assert abs(np.mean(np.equal(counts, 0)) - 0.368) <= 0.006


def test_sample_mean_amplitude_two():
    rng = np.random.default_rng(7)
    counts = np.array([sample_photon_count(Pulse(2.0, 0.0), rng) for _ in range(100_000)])
    assert abs(counts.mean() - 4.0) <= 0.03
    # 4 sigma of the sample mean
    assert abs(counts.mean() - 4.0) <= 4 * math.sqrt(4.0 / 100_000)


def test_detect_empty_and_aligned():
    rng = np.random.default_rng(0)
    assert detect(Pulse(1.0, 0.0), 0, 0.0, rng) is None
    assert detect(Pulse(1.0, math.pi / 4), 5, math.pi / 4, rng) == 0
    assert detect(Pulse(1.0, -math.pi / 4), 5, math.pi / 4, rng) == 1


def test_detect_single_photon_is_born_rule():
    rng = np.random.default_rng(1)
    n = 50_000
    zeros = sum(detect(Pulse(1.0, 0.5), 1, 0.0, rng) == 0 for _ in range(n))
    p = math.cos(0.5) ** 2
    assert abs(zeros / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_detect_majority_sharpens():
    rng = np.random.default_rng(2)
    n = 20_000
    zeros = sum(detect(Pulse(1.0, 0.5), 9, 0.0, rng) == 0 for _ in range(n))
    assert zeros / n > math.cos(0.5) ** 2


def test_channel_config():
    c = ChannelConfig.from_eta2(0.5, attack="pns1", seed=9)
    assert c.eta == pytest.approx(math.sqrt(0.5))
    assert c.eta2 == pytest.approx(0.5)
    assert c.attack is Attack.PNS_ATTACK1
    with pytest.raises(ValueError):
        ChannelConfig(eta=0.0)
    with pytest.raises(ValueError):
        ChannelConfig(seed=2**64)
    with pytest.raises(ValueError):
        ChannelConfig(attack="cloning")
