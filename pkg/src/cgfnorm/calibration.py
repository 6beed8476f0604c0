"""Monte Carlo null calibration, critical values and p-values.

Scaled residuals of any non-degenerate normal sample have the same law as
those of an ``N_p(0, I_p)`` sample, so the null distribution of every
statistic in the package can be simulated once per ``(n, p)`` cell. Each
replication draws from its own substream keyed by the replication index,
which makes the calibration independent of the worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _streams
from .ecgf import EvalPointSet, pair_batch, stat_pair, stat_univariate, univariate_batch
from .errors import CorruptCalibration, InvalidInput, SingularCovariance
from .standardize import as_sample, scaled_residuals

DEFAULT_REPS = 100_000
CHUNK = 64

MULTIVARIATE = "multivariate"
UNIVARIATE = "univariate"


def run_chunked(fn, n_items, threads=None, chunk=CHUNK):
    """Apply ``fn(start, stop)`` over fixed-size index chunks, in order.

    The chunk boundaries never depend on ``threads``, so results are
    identical for any worker count.
    """
    bounds = [(i, min(i + chunk, n_items)) for i in range(0, n_items, chunk)]
    threads = _streams.thread_count(threads)
    if threads == 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def null_residuals(rng, n, p):
    """Scaled residuals of an ``N_p(0, I)`` sample; returns ``(z, redraws)``."""
    redraws = 0
    while True:
        x = rng.standard_normal((n, p))
        try:
            return scaled_residuals(x).residuals, redraws
        except SingularCovariance:
            redraws += 1


def simulate_null(stat_fn, n, p, reps, seed, threads=None, tag=_streams.NULL_REPS):
    """Simulate a batch statistic on null residuals.

    Parameters
    ----------
    stat_fn : callable
        Maps residuals of shape ``(B, n, p)`` to a tuple of ``(B,)`` arrays.
    n, p : int
        Sample size and dimension.
    reps : int
        Number of replications.
    seed : int
        Master seed; replication ``i`` uses substream ``(seed, tag, i)``.

    Returns
    -------
    values : tuple of ndarray
        One ``(reps,)`` array per output of ``stat_fn``, in replication order.
    redraws : int
        Number of singular-covariance redraws (expected to be zero).
    """

    def work(start, stop):
        zs, red = [], 0
        for i in range(start, stop):
            z, r = null_residuals(_streams.substream(seed, tag, i), n, p)
            zs.append(z)
            red += r
        return stat_fn(np.stack(zs)), red

    parts = run_chunked(work, reps, threads)
    k = len(parts[0][0])
    values = tuple(np.concatenate([part[0][j] for part in parts]) for j in range(k))
    return values, sum(part[1] for part in parts)


@dataclass(frozen=True, eq=False)
class NullCalibration:
    """Simulated null distribution of ``T`` (or ``U``) for one ``(n, p)`` cell.

    For univariate calibrations ``null_t`` holds raw ``U`` values, the
    ``*_d`` moments describe ``U`` and the ``*_h`` moments are NaN.
    """

    n: int
    p: int
    point_set: EvalPointSet
    s_reps: int
    mean_h: float
    sd_h: float
    mean_d: float
    sd_d: float
    null_t: np.ndarray
    kind: str
    seed: int
    null_h: np.ndarray = field(default=None)
    null_d: np.ndarray = field(default=None)
    redraws: int = 0

    def __post_init__(self):
        validate_calibration(self)


def validate_calibration(cal):
    if cal.kind not in (MULTIVARIATE, UNIVARIATE):
        raise CorruptCalibration(f"unknown calibration kind {cal.kind!r}")
    t = np.asarray(cal.null_t)
    if t.shape != (cal.s_reps,):
        raise CorruptCalibration(f"null_t has {t.size} values, expected {cal.s_reps}")
    if np.any(np.diff(t) < 0):
        raise CorruptCalibration("null_t is not sorted")
    if not (cal.sd_d > 0):
        raise CorruptCalibration("non-positive null standard deviation")
    if cal.kind == MULTIVARIATE and not (cal.sd_h > 0):
        raise CorruptCalibration("non-positive null standard deviation")
    if cal.point_set.dim != cal.p:
        raise CorruptCalibration("point set dimension does not match p")


def calibrate_null(n, p, pts, s_reps=DEFAULT_REPS, seed=0, kind=None, threads=None):
    """Simulate the null distribution of the test statistic.

    Parameters
    ----------
    n, p : int
        Sample size and dimension. ``p = 1`` gives a univariate calibration.
    pts : EvalPointSet
        Evaluation points, shared verbatim with later test runs.
    s_reps : int
        Number of null replications (at least 100).
    seed : int
        Master seed for the null draws.
    kind : {"multivariate", "univariate"}, optional
        Defaults to univariate for ``p = 1`` and multivariate otherwise.
    threads : int, optional
        Worker count; falls back to ``CGFNORM_THREADS``.
    """
    n, p, s_reps = int(n), int(p), int(s_reps)
    kind = kind or (UNIVARIATE if p == 1 else MULTIVARIATE)
    if s_reps < 100:
        raise InvalidInput(f"s_reps must be at least 100, got {s_reps}")
    if pts.dim != p:
        raise InvalidInput(f"point set has dimension {pts.dim}, expected {p}")
    if kind == MULTIVARIATE:
        if p < 2:
            raise InvalidInput("multivariate calibration needs p >= 2")
        if n < p + 1:
            raise InvalidInput(f"need n >= p + 1, got n={n}, p={p}")
        (h, d), redraws = simulate_null(
            lambda z: pair_batch(z, pts.points), n, p, s_reps, seed, threads
        )
        mh, sh = float(h.mean()), float(h.std(ddof=1))
        md, sd = float(d.mean()), float(d.std(ddof=1))
        if not (sh > 0 and sd > 0):
            raise CorruptCalibration("degenerate null distribution")
        t = np.maximum((h - mh) / sh, (d - md) / sd)
        return NullCalibration(
            n=n, p=p, point_set=pts, s_reps=s_reps, mean_h=mh, sd_h=sh, mean_d=md, sd_d=sd,
            null_t=np.sort(t), kind=kind, seed=int(seed),
            null_h=np.sort(h), null_d=np.sort(d), redraws=redraws,
        )
    if kind != UNIVARIATE or p != 1:
        raise InvalidInput(f"univariate calibration needs p = 1, got p={p}")
    if n < 2:
        raise InvalidInput(f"need n >= 2, got {n}")
    (u,), redraws = simulate_null(
        lambda z: (univariate_batch(z[:, :, 0], pts.points),), n, 1, s_reps, seed, threads
    )
    return NullCalibration(
        n=n, p=1, point_set=pts, s_reps=s_reps, mean_h=math.nan, sd_h=math.nan,
        mean_d=float(u.mean()), sd_d=float(u.std(ddof=1)), null_t=np.sort(u),
        kind=kind, seed=int(seed), redraws=redraws,
    )


def studentized_components(pair, cal):
    """Studentized ``(H, D)`` against the calibration's null moments."""
    if cal.kind != MULTIVARIATE:
        raise InvalidInput("studentization needs a multivariate calibration")
    if pair.n != cal.n or pair.p != cal.p or pair.point_set_seed != cal.point_set.seed:
        raise InvalidInput(
            f"statistics for (n={pair.n}, p={pair.p}, points seed {pair.point_set_seed}) do not "
            f"match calibration (n={cal.n}, p={cal.p}, points seed {cal.point_set.seed})"
        )
    if not (cal.sd_h > 0 and cal.sd_d > 0):
        raise CorruptCalibration("non-positive null standard deviation")
    return (pair.h_stat - cal.mean_h) / cal.sd_h, (pair.d_stat - cal.mean_d) / cal.sd_d


def studentized_T(pair, cal):
    """The larger of the two studentized components."""
    return max(studentized_components(pair, cal))


def upper_quantile(null_sorted, alpha):
    """The ``ceil((1 - alpha) S)``-th order statistic of a sorted null sample."""
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    s = len(null_sorted)
    # the tolerance keeps e.g. 0.95 * 10000 from rounding up to rank 9501
    k = math.ceil((1 - alpha) * s - 1e-9 * s)
    return float(null_sorted[max(k, 1) - 1])


def critical_value(cal, alpha):
    """Upper-``alpha`` null quantile of the calibrated statistic."""
    return upper_quantile(cal.null_t, alpha)


def mc_p_value(t_obs, null_sorted):
    """Add-one Monte Carlo p-value ``(1 + #{null >= t}) / (S + 1)``."""
    s = len(null_sorted)
    exceed = s - int(np.searchsorted(null_sorted, t_obs, side="left"))
    return (1 + exceed) / (s + 1)


def p_value(t_obs, cal):
    return mc_p_value(t_obs, cal.null_t)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    components: dict = None
    degenerate_covariance: bool = False

    __test__ = False  # keep pytest from collecting this class


def _degenerate(alpha):
    return TestResult(
        statistic=math.inf, p_value=0.0, reject=True, alpha=alpha, degenerate_covariance=True
    )


def run_test(x, cal, alpha=0.05):
    """Multivariate normality test of sample ``x`` against calibration ``cal``."""
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    x = as_sample(x)
    if cal.kind != MULTIVARIATE:
        raise InvalidInput("run_test needs a multivariate calibration")
    if x.shape != (cal.n, cal.p):
        raise InvalidInput(f"sample shape {x.shape} does not match calibration ({cal.n}, {cal.p})")
    try:
        z = scaled_residuals(x).residuals
    except SingularCovariance:
        return _degenerate(alpha)
    pair = stat_pair(z, cal.point_set)
    zh, zd = studentized_components(pair, cal)
    t = max(zh, zd)
    pv = p_value(t, cal)
    return TestResult(
        statistic=t, p_value=pv, reject=pv <= alpha, alpha=alpha,
        components={"h": pair.h_stat, "d": pair.d_stat, "studentized": [zh, zd]},
    )


def run_test_univariate(x, cal, alpha=0.05):
    """Univariate normality test of ``x`` against a univariate calibration."""
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    x = as_sample(x)
    if cal.kind != UNIVARIATE:
        raise InvalidInput("run_test_univariate needs a univariate calibration")
    if x.shape != (cal.n, 1):
        raise InvalidInput(f"sample of length {x.shape[0]} does not match calibration n={cal.n}")
    try:
        z = scaled_residuals(x).residuals[:, 0]
    except SingularCovariance:
        return _degenerate(alpha)
    u = stat_univariate(z, cal.point_set)
    pv = p_value(u, cal)
    return TestResult(statistic=u, p_value=pv, reject=pv <= alpha, alpha=alpha)
