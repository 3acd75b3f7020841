"""Log-domain Bessel functions and Kent normalizing constants.

Everything here returns natural logs; ``exp(kappa)`` is never formed, so
concentrations up to (and well beyond) 700 stay finite.
"""

import math

import numpy as np
from scipy.special import gammaln, ive

from kentmix.errors import ConvergenceError, DomainError

LOG_2PI = math.log(2.0 * math.pi)

DEFAULT_REL_TOL = 1e-12
DEFAULT_MAX_TERMS = 200


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 0.0:
        raise DomainError(f"kappa must be finite and positive, got {kappa!r}")
    return kappa


def _check_shape(beta: float, kappa: float) -> tuple[float, float]:
    kappa = _check_kappa(kappa)
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0.0:
        raise DomainError(f"beta must be finite and nonnegative, got {beta!r}")
    if not 2.0 * beta < kappa:
        raise DomainError(f"need 2*beta < kappa, got beta={beta!r}, kappa={kappa!r}")
    return beta, kappa


def _log_bessel_series(v: float, kappa: float, max_terms: int = 10_000) -> float:
    # Ascending series sum_m (k/2)^(v+2m) / (m! Gamma(v+m+1)), summed in logs.
    # Only reached when ive underflows, i.e. v >> kappa, where it converges fast.
    log_half = math.log(kappa / 2.0)
    total = -math.inf
    for m in range(max_terms):
        term = (v + 2 * m) * log_half - gammaln(m + 1.0) - gammaln(v + m + 1.0)
        total = np.logaddexp(total, term)
        if m > kappa and term - total < -40.0:
            return float(total)
    raise ConvergenceError(f"Bessel series for order {v} at {kappa} did not converge")


def log_bessel_i_half(i: int, kappa: float) -> float:
    """Return ``log I_{2i+1/2}(kappa)``.

    Uses the exponentially scaled ``ive`` so that large ``kappa`` does not
    overflow; falls back to the ascending series in log space when the
    scaled value underflows (order much larger than the argument).

    Raises:
        DomainError: if ``kappa`` is not finite and positive or ``i`` is
            not a nonnegative integer.
    """
    if isinstance(i, bool) or int(i) != i or i < 0:
        raise DomainError(f"i must be a nonnegative integer, got {i!r}")
    kappa = _check_kappa(kappa)
    v = 2 * int(i) + 0.5
    scaled = float(ive(v, kappa))
    if scaled > 0.0 and math.isfinite(scaled):
        return math.log(scaled) + kappa
    return _log_bessel_series(v, kappa)


def log_kent_normalizer_exact(
    beta: float,
    kappa: float,
    rel_tol: float = DEFAULT_REL_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> float:
    """Log of the exact Kent normalizing constant ``C(beta, kappa)``.

    The series is summed from index 0 so that ``beta = 0`` gives the
    von Mises-Fisher constant ``4 pi sinh(kappa) / kappa``. Terms are
    accumulated with log-sum-exp and summation stops once a term's
    relative contribution drops below ``rel_tol``.

    Raises:
        DomainError: if ``0 <= 2 beta < kappa`` fails.
        ConvergenceError: if ``max_terms`` terms do not reach ``rel_tol``.
    """
    beta, kappa = _check_shape(beta, kappa)
    if not rel_tol > 0.0:
        raise DomainError("rel_tol must be positive")
    log_tol = math.log(rel_tol)
    log_half_kappa = math.log(kappa / 2.0)
    total = -math.inf
    if beta == 0.0:
        term = gammaln(0.5) - 0.5 * log_half_kappa + log_bessel_i_half(0, kappa)
        return LOG_2PI + float(term)
    log_beta = math.log(beta)
    for i in range(max_terms):
        term = (
            gammaln(i + 0.5)
            - gammaln(i + 1.0)
            + 2 * i * log_beta
            - (2 * i + 0.5) * log_half_kappa
            + log_bessel_i_half(i, kappa)
        )
        total = float(np.logaddexp(total, term))
        if i > 0 and term - total < log_tol:
            return LOG_2PI + total
    raise ConvergenceError(
        f"normalizer series did not converge in {max_terms} terms "
        f"(beta={beta}, kappa={kappa})"
    )


def log_kent_normalizer_approx(beta, kappa):
    """Log of the large-concentration normalizer ``2 pi e^kappa / sqrt(kappa^2 - 4 beta^2)``.

    Accepts scalars or broadcastable arrays.
    """
    beta = np.asarray(beta, dtype=np.float64)
    kappa = np.asarray(kappa, dtype=np.float64)
    # (k - 2b)(k + 2b) avoids cancellation when 2b is close to k.
    gap = (kappa - 2.0 * beta) * (kappa + 2.0 * beta)
    if np.any(~np.isfinite(gap)) or np.any(gap <= 0.0) or np.any(beta < 0.0):
        raise DomainError("need 0 <= 2*beta < kappa for the approximate normalizer")
    out = LOG_2PI + kappa - 0.5 * np.log(gap)
    return float(out) if out.ndim == 0 else out
