"""Independent reference computations used by the tests.

Nothing here imports from blindqkd.
"""
import math

import mpmath


def equatorial_fidelity_mp(n: int, dps: int = 50) -> float:
    """Direct high-precision sum; exact integer binomials up to n = 1000."""
    if n > 1000:
        return _equatorial_fidelity_loggamma_mp(n, dps)
    with mpmath.workdps(dps):
        s = mpmath.mpf(0)
        for l in range(n):
            s += mpmath.sqrt(mpmath.mpf(math.comb(n, l) * math.comb(n, l + 1)))
        return float(mpmath.mpf(1) / 2 + s / mpmath.mpf(2) ** (n + 1))


def expected_fidelity_partial_sum(mean: float, terms: int = 30) -> float:
    """Hand-rolled first ``terms`` terms of sum_n Poisson(n) I(n)."""
    total = 0.0
    for n in range(terms):
        weight = math.exp(-mean) * mean**n / math.factorial(n)
        fid = 0.5 + sum(math.sqrt(math.comb(n, l) * math.comb(n, l + 1)) for l in range(n)) / 2 ** (n + 1)
        total += weight * fid
    return total


def _equatorial_fidelity_loggamma_mp(n: int, dps: int) -> float:
    with mpmath.workdps(dps):
        lg = [mpmath.loggamma(m + 1) for m in range(n + 1)]
        log_half = (n + 1) * mpmath.log(2)
        s = mpmath.mpf(0)
        for l in range(n):
            a = lg[n] - lg[l] - lg[n - l]
            b = lg[n] - lg[l + 1] - lg[n - l - 1]
            s += mpmath.exp((a + b) / 2 - log_half)
        return float(mpmath.mpf(1) / 2 + s)
