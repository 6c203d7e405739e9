r"""Eavesdropper information bounds for the three-pass protocol.

Information is measured as mean estimation fidelity. Eve's knowledge from a
tapped coherent field of mean photon number ``m`` is the Poisson average of
the optimal equatorial fidelity

.. math::

    I(n) = \frac12 + \frac{1}{2^{n+1}} \sum_{l=0}^{n-1}
           \sqrt{\binom{n}{l}\binom{n}{l+1}}

over the photon number ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

# Above this, C(n, l) * C(n, l + 1) no longer fits in a double.
_EXACT_MAX_N = 60


def equatorial_fidelity(n: int) -> float:
    """Optimal mean fidelity for estimating an equatorial qubit from ``n`` copies.

    Small ``n`` is summed with exact integer binomials; larger ``n`` uses
    normalized binomial weights so nothing overflows.
    """
    n = _check_count(n)
    if n == 0:
        return 0.5
    if n <= _EXACT_MAX_N:
        s = sum(math.sqrt(math.comb(n, l) * math.comb(n, l + 1)) for l in range(n))
        return 0.5 + s / 2.0 ** (n + 1)
    # C(n, l) / 2**n is the fair-coin binomial pmf; scipy evaluates it without
    # forming the large log-gamma terms whose cancellation costs ~n ulps.
    p = binom.pmf(np.arange(n + 1), n, 0.5)
    return 0.5 + 0.5 * float(np.sqrt(p[:-1] * p[1:]).sum())


def full_sphere_fidelity(n: int) -> float:
    """Optimal mean fidelity ``(n+1)/(n+2)`` for a state anywhere on the sphere."""
    n = _check_count(n)
    return (n + 1) / (n + 2)


def poisson_pmf(mean: float, n: int) -> float:
    """``exp(-mean) mean**n / n!`` evaluated in log space."""
    n = _check_count(n)
    mean = _check_mean(mean)
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1))


def truncation(mean: float) -> int:
    """Largest photon number kept in Poisson sums for the given mean."""
    return math.ceil(mean + 20.0 * math.sqrt(mean + 1.0) + 50.0)


@lru_cache(maxsize=None)
def _fidelity_table(n_max: int) -> np.ndarray:
    table = np.array([equatorial_fidelity(n) for n in range(n_max + 1)])
    table.setflags(write=False)
    return table


def fidelity_table(n_max: int) -> np.ndarray:
    """Read-only array of ``equatorial_fidelity(n)`` for ``n = 0..n_max``."""
    return _fidelity_table(int(n_max))


def poisson_weights(mean: float, n_max: int | None = None) -> np.ndarray:
    """Poisson pmf over ``0..n_max`` as an array (log-space evaluation)."""
    mean = _check_mean(mean)
    if n_max is None:
        n_max = truncation(mean)
    n = np.arange(n_max + 1, dtype=float)
    if mean == 0.0:
        w = np.zeros_like(n)
        w[0] = 1.0
        return w
    return np.exp(-mean + n * math.log(mean) - gammaln(n + 1.0))


def expected_fidelity(mean_photons: float) -> float:
    """Eve's fidelity from a coherent tap with ``mean_photons`` on average."""
    mean_photons = _check_mean(mean_photons)
    n_max = truncation(mean_photons)
    return float(poisson_weights(mean_photons, n_max) @ fidelity_table(n_max))


@dataclass(frozen=True)
class InfoBound:
    """Per-pass Eve fidelities and the aggregate bound at one ``(eta2, alpha)``."""

    eta2: float
    alpha: float
    i_a2: float
    i_a3: float
    i_a4: float
    i_e: float
    attack: str = "pns1"

    def as_row(self) -> dict:
        return {
            "attack": self.attack,
            "eta2": self.eta2,
            "alpha": self.alpha,
            "i_a2": self.i_a2,
            "i_a3": self.i_a3,
            "i_a4": self.i_a4,
            "i_e": self.i_e,
        }


def attack1_means(eta2: float, alpha: float) -> tuple[float, float, float]:
    """Eve's mean photon numbers on the three passes under the beam-splitter tap."""
    eta2, alpha = _check_config(eta2, alpha)
    first = (1.0 - eta2) * alpha * alpha
    return first, eta2 * first, eta2 * eta2 * first


def attack2_mean(eta2: float, alpha: float) -> float:
    """Eve's mean photon number per pass when she taps equally on every pass."""
    eta2, alpha = _check_config(eta2, alpha)
    return (1.0 - eta2**3) * alpha * alpha / 3.0


def attack1_bound(eta2: float, alpha: float) -> InfoBound:
    """Bound on Eve's information when she replaces the lossy line by a beam splitter.

    Parameters
    ----------
    eta2 : float
        Intensity efficiency of one trip, in ``(0, 1]``.
    alpha : float
        Initial coherent amplitude, ``alpha >= 0``.

    Returns
    -------
    InfoBound
        ``i_e`` is the smallest of the three per-pass fidelities; because the
        tapped intensity falls by ``eta2`` on every lap it is always ``i_a4``.
    """
    m2, m3, m4 = attack1_means(eta2, alpha)
    i2, i3, i4 = (expected_fidelity(m) for m in (m2, m3, m4))
    return InfoBound(float(eta2), float(alpha), i2, i3, i4, min(i2, i3, i4), "pns1")


def attack2_bound(eta2: float, alpha: float) -> InfoBound:
    """Bound when Eve extracts the same field amplitude on each pass.

    Only Bob's final amplitude ``eta**3 * alpha`` is preserved, so Eve can
    split the missing intensity ``(1 - eta**6) alpha**2`` evenly across the
    three passes.
    """
    i = expected_fidelity(attack2_mean(eta2, alpha))
    return InfoBound(float(eta2), float(alpha), i, i, i, i, "pns2")


def bound(attack: str, eta2: float, alpha: float) -> InfoBound:
    if attack == "pns1":
        return attack1_bound(eta2, alpha)
    if attack == "pns2":
        return attack2_bound(eta2, alpha)
    raise ValueError(f"no analytic bound for attack {attack!r}")


def _check_count(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"photon number must be a nonnegative integer, got {n!r}")
    return int(n)


def _check_mean(mean) -> float:
    mean = float(mean)
    if not math.isfinite(mean) or mean < 0.0:
        raise ValueError(f"mean photon number must be finite and >= 0, got {mean!r}")
    return mean


def _check_config(eta2, alpha) -> tuple[float, float]:
    eta2, alpha = float(eta2), float(alpha)
    if not (0.0 < eta2 <= 1.0):
        raise ValueError(f"eta2 must lie in (0, 1], got {eta2!r}")
    if not math.isfinite(alpha) or alpha < 0.0:
        raise ValueError(f"alpha must be finite and >= 0, got {alpha!r}")
    return eta2, alpha
