"""Competitor statistics: the energy test and Mardia's skewness and kurtosis.

All three are functions of the scaled residuals only and are calibrated by
the same Monte Carlo machinery as the main statistic.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.spatial.distance import pdist

from . import _streams
from .errors import InvalidInput, NumericLimit
from .standardize import as_sample

log = logging.getLogger(__name__)

ENERGY = "Energy"
MARDIA_SKEW = "MardiaSkew"
MARDIA_KURT = "MardiaKurt"

SERIES_CAP = 500
SERIES_RTOL = 1e-12
#: largest tolerated rounding error of the alternating series, relative to its value
CANCELLATION_LIMIT = 1e-9
MC_FALLBACK_DRAWS = 1_000_000


@dataclass(frozen=True)
class CompetitorStatistic:
    name: str
    value: float
    n: int
    p: int
    fallback_rows: int = 0


def _norm_mean_constant(p):
    # E||X|| for X ~ N(0, I_p)
    return math.sqrt(2.0) * math.exp(special.gammaln((p + 1) / 2) - special.gammaln(p / 2))


def _series_terms(r, p):
    """Signed terms of the alternating series, shape ``(len(r), SERIES_CAP)``."""
    k = np.arange(SERIES_CAP, dtype=float)
    with np.errstate(divide="ignore"):
        logr = np.log(r)[:, None]
    logmag = (
        -special.gammaln(k + 1) - k * math.log(2.0) + (2 * k + 2) * logr
        - np.log((2 * k + 1) * (2 * k + 2))
        + special.gammaln((p + 1) / 2) + special.gammaln(k + 1.5) - special.gammaln(k + p / 2 + 1)
    )
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    return sign * np.exp(logmag)


def _series(r, p):
    """Series evaluation for radii ``r``; returns ``(values, ok)`` with ``ok`` False where it cannot be trusted."""
    r = np.asarray(r, dtype=float)
    terms = _series_terms(r, p)
    partial = np.cumsum(terms, axis=1)
    base = _norm_mean_constant(p)
    # truncate once a term is negligible relative to the running value
    small = np.abs(terms) <= SERIES_RTOL * np.abs(base + np.sqrt(2 / np.pi) * partial)
    past_peak = np.arange(SERIES_CAP) > (r * r / 2)[:, None]
    stop = small & past_peak
    converged = stop.any(axis=1) | (r == 0)
    idx = np.where(stop.any(axis=1), stop.argmax(axis=1), SERIES_CAP - 1)
    total = base + np.sqrt(2 / np.pi) * partial[np.arange(r.size), idx]
    # each term carries a relative error growing with its log-magnitude (~ r^2)
    err = np.max(np.abs(terms), axis=1) * np.finfo(float).eps * 8 * (1 + r * r)
    ok = converged & (err <= CANCELLATION_LIMIT * np.abs(total))
    return total, ok


def expected_norm_to_std_normal(a, p=None):
    """``E||a - X||`` for ``X ~ N(0, I_p)`` by the alternating power series.

    Parameters
    ----------
    a : array_like, shape (p,)
        Fixed point.
    p : int, optional
        Dimension; defaults to ``len(a)``.

    Raises
    ------
    NumericLimit
        If the series does not converge within 500 terms or its terms are so
        large that cancellation would destroy the result (large ``||a||``).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise InvalidInput("a must be finite")
    p = a.size if p is None else int(p)
    r = float(np.linalg.norm(a))
    val, ok = _series(np.array([r]), p)
    if not ok[0]:
        raise NumericLimit(f"series for E||a - X|| is unreliable at ||a|| = {r:.4g}")
    return float(val[0])


def expected_norm_exact(r, p):
    """``E||a - X||`` as a function of ``r = ||a||`` via the noncentral-chi mean.

    Uses ``sqrt(2) G((p+1)/2)/G(p/2) * exp(-r^2/2) 1F1((p+1)/2; p/2; r^2/2)``
    which has only positive terms and stays accurate where the alternating
    series cancels catastrophically.
    """
    r = np.asarray(r, dtype=float)
    x = r * r / 2
    return _norm_mean_constant(p) * np.exp(-x) * special.hyp1f1((p + 1) / 2, p / 2, x)


def expected_norm_mc(a, draws=MC_FALLBACK_DRAWS, seed=0):
    """Monte Carlo estimate of ``E||a - X||``; returns ``(mean, standard error)``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    rng = _streams.substream(seed, _streams.MISC)
    total, total2, done = 0.0, 0.0, 0
    while done < draws:
        m = min(100_000, draws - done)
        d = np.linalg.norm(a - rng.standard_normal((m, a.size)), axis=1)
        total += d.sum()
        total2 += (d * d).sum()
        done += m
    mean = total / draws
    var = max(total2 / draws - mean * mean, 0.0) * draws / (draws - 1)
    return mean, math.sqrt(var / draws)


def _expected_norms(z, fallback):
    n, p = z.shape
    r = np.linalg.norm(z, axis=1)
    vals, ok = _series(r, p)
    bad = np.flatnonzero(~ok)
    if bad.size:
        log.info("energy series unreliable for %d of %d rows; using %s fallback", bad.size, n, fallback)
        if fallback == "exact":
            vals[bad] = expected_norm_exact(r[bad], p)
        elif fallback == "mc":
            for i in bad:
                vals[i] = expected_norm_mc(z[i], seed=i)[0]
        else:
            raise NumericLimit(f"energy series unreliable for {bad.size} rows")
    return vals, bad.size


def energy_middle_constant(p, variant="printed"):
    """Middle term of the energy statistic.

    ``"printed"`` is ``2 G((p+1)/2) / G(p/2)``, which equals ``E||X - X'||``;
    ``"sqrt2"`` is ``sqrt(2) G((p+1)/2) / G(p/2)``, the series value at ``a = 0``.
    """
    g = math.exp(special.gammaln((p + 1) / 2) - special.gammaln(p / 2))
    if variant == "printed":
        return 2.0 * g
    if variant == "sqrt2":
        return math.sqrt(2.0) * g
    raise InvalidInput(f"unknown energy constant variant {variant!r}")


def energy_statistic(z, variant="printed", fallback="exact"):
    """Energy statistic of the residuals against ``N(0, I_p)``.

    ``n * (2/n sum_i E||z_i - X|| - c_p - 1/n^2 sum_ij ||z_i - z_j||)``.

    Parameters
    ----------
    z : array_like, shape (n, p)
        Scaled residuals.
    variant : {"printed", "sqrt2"}
        Choice of the middle constant ``c_p`` (see `energy_middle_constant`).
    fallback : {"exact", "mc", "raise"}
        What to do for rows where the series is unreliable.

    Returns
    -------
    CompetitorStatistic
    """
    z = as_sample(z)
    n, p = z.shape
    e_norm, n_bad = _expected_norms(z, fallback)
    pair_sum = 2.0 * math.fsum(pdist(z)) if n > 1 else 0.0
    value = n * (2.0 / n * math.fsum(e_norm) - energy_middle_constant(p, variant) - pair_sum / n**2)
    return CompetitorStatistic(ENERGY, float(value), n, p, fallback_rows=int(n_bad))


def mardia_skewness(z):
    """``b_{1,p} = n^-2 sum_ij (z_i' z_j)^3``."""
    z = as_sample(z)
    # entrywise accumulation keeps every inner product independent of row
    # position, and fsum is order-free, so the value is exactly invariant
    # under row permutations and a global sign flip
    g = np.zeros((z.shape[0], z.shape[0]))
    for col in z.T:
        g += np.multiply.outer(col, col)
    return math.fsum((g**3).ravel()) / z.shape[0] ** 2


def mardia_kurtosis(z):
    """``b_{2,p} = n^-1 sum_i ||z_i||^4``."""
    z = as_sample(z)
    return math.fsum(np.sum(z * z, axis=1) ** 2) / z.shape[0]


def kurtosis_null_mean(n, p):
    """Exact null mean of ``b_{2,p}``: ``p (p + 2) (n - 1) / (n + 1)``."""
    return p * (p + 2) * (n - 1) / (n + 1)


def kurtosis_deviation(z):
    """Two-sided kurtosis statistic ``|b_{2,p} - E b_{2,p}|``."""
    z = as_sample(z)
    n, p = z.shape
    return abs(mardia_kurtosis(z) - kurtosis_null_mean(n, p))


def competitor(name, z):
    """Evaluate competitor ``name`` on residuals ``z`` as a `CompetitorStatistic`."""
    z = as_sample(z)
    n, p = z.shape
    if name == ENERGY:
        return energy_statistic(z)
    if name == MARDIA_SKEW:
        return CompetitorStatistic(name, mardia_skewness(z), n, p)
    if name == MARDIA_KURT:
        return CompetitorStatistic(name, mardia_kurtosis(z), n, p)
    raise InvalidInput(f"unknown competitor {name!r}")
