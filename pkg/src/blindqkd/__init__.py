"""Blind-polarization three-pass QKD: protocol simulator and eavesdropper bounds."""
from .channel import Attack, ChannelConfig, Pulse, attenuate, beam_split, sample_photon_count
from .estimation import (
    InfoBound,
    attack1_bound,
    attack2_bound,
    equatorial_fidelity,
    expected_fidelity,
    full_sphere_fidelity,
    poisson_pmf,
)
from .parties import decode_two_pulse
from .polarization import PolarizationAngle, QubitState, measure, overlap_fidelity, rotate
from .protocol import (
    AbortedSession,
    Mode,
    SessionTranscript,
    run_basic_round,
    run_session,
    run_two_pulse_round,
    verify_keys,
)

__version__ = "0.1.0"
