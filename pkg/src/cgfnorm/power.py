"""Power studies: empirical rejection rates of all tests under one law.

Each replication draws a sample from its own substream, standardizes it,
evaluates every requested statistic and compares it with that statistic's
Monte Carlo null distribution through the add-one p-value, so a rejection
here is exactly a rejection by `run_test`.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _streams
from .calibration import (
    MULTIVARIATE, calibrate_null, mc_p_value, run_chunked, simulate_null, upper_quantile,
)
from .competitors import energy_statistic, kurtosis_deviation, mardia_skewness
from .ecgf import pair_batch, sample_points, univariate_batch
from .errors import InvalidInput, SingularCovariance
from .standardize import row_order, scaled_residuals

TESTS = ("T", "H", "D", "U", "Energy", "MS", "MK")
COMPETITORS = ("Energy", "MS", "MK")


@dataclass(frozen=True)
class PowerStudyConfig:
    """One cell of a power table.

    ``calibration_seed`` drives both the evaluation points and the null
    simulation; ``master_seed`` drives the samples under the alternative.
    """

    spec: object
    n: int
    replications: int = 2000
    alpha: float = 0.05
    radius: float = 3.0
    n_points: int = 500
    point_law: str = "ball"
    s_reps: int = 10_000
    calibration_seed: int = 0
    tests: tuple = ("T",)
    master_seed: int = 1
    threads: int = None

    def __post_init__(self):
        if self.replications < 100:
            raise InvalidInput("replications must be at least 100")
        if not 0 < self.alpha < 1:
            raise InvalidInput("alpha must lie in (0, 1)")
        bad = [t for t in self.tests if t not in TESTS]
        if bad:
            raise InvalidInput(f"unknown tests {bad}; choose from {list(TESTS)}")
        p = self.spec.p
        if p == 1 and any(t in ("T", "H", "D") for t in self.tests):
            raise InvalidInput("T, H and D need p >= 2; use U for univariate laws")
        if p > 1 and "U" in self.tests:
            raise InvalidInput("U is the univariate statistic; it needs p = 1")


@dataclass
class PowerStudyResult:
    spec: str
    n: int
    p: int
    replications: int
    alpha: float
    rejection: dict
    se: dict
    wall_time: float
    degenerate: int
    critical_values: dict = field(default_factory=dict)

    def rows(self):
        """One flat record per test, for CSV/JSON tables."""
        return [
            {
                "spec": self.spec, "n": self.n, "p": self.p, "test": name,
                "rejection": self.rejection[name], "se": self.se[name],
                "replications": self.replications, "alpha": self.alpha,
                "degenerate": self.degenerate, "wall_time": self.wall_time,
            }
            for name in self.rejection
        ]


def spec_label(spec):
    try:
        return str(spec)
    except InvalidInput:
        return repr(spec)


def _competitor_batch(zs):
    e = np.array([energy_statistic(z).value for z in zs])
    s = np.array([mardia_skewness(z) for z in zs])
    k = np.array([kurtosis_deviation(z) for z in zs])
    return e, s, k


def competitor_nulls(n, p, s_reps, seed, threads=None):
    """Sorted null samples of the energy, skewness and two-sided kurtosis statistics."""
    (e, s, k), _ = simulate_null(_competitor_batch, n, p, s_reps, seed, threads)
    return {"Energy": np.sort(e), "MS": np.sort(s), "MK": np.sort(k)}


def _null_tables(cfg, cal):
    tables = {}
    if cal.kind == MULTIVARIATE:
        tables.update(T=cal.null_t, H=cal.null_h, D=cal.null_d)
    else:
        tables["U"] = cal.null_t
    wanted = [t for t in cfg.tests if t in COMPETITORS]
    if wanted:
        comp = competitor_nulls(cfg.n, cfg.spec.p, cfg.s_reps, cfg.calibration_seed, cfg.threads)
        tables.update({k: comp[k] for k in wanted})
    return tables


def _evaluate(zs, cal, tests):
    """Raw statistics for a list of residual matrices (rows pre-sorted)."""
    out = {}
    z = np.stack(zs)
    if cal.kind == MULTIVARIATE and any(t in tests for t in ("T", "H", "D")):
        h, d = pair_batch(z, cal.point_set.points)
        out["H"], out["D"] = h, d
        out["T"] = np.maximum((h - cal.mean_h) / cal.sd_h, (d - cal.mean_d) / cal.sd_d)
    if "U" in tests:
        out["U"] = univariate_batch(z[:, :, 0], cal.point_set.points)
    if any(t in tests for t in COMPETITORS):
        e, s, k = _competitor_batch(zs)
        out.update(Energy=e, MS=s, MK=k)
    return out


def power_study(cfg, cal=None):
    """Estimate rejection rates under ``cfg.spec``.

    Parameters
    ----------
    cfg : PowerStudyConfig
    cal : NullCalibration, optional
        Reused instead of calibrating from the config when it matches
        ``(n, p)``.
    """
    t0 = time.perf_counter()
    p = cfg.spec.p
    if cal is None:
        pts = sample_points(p, cfg.n_points, cfg.radius, cfg.calibration_seed, cfg.point_law)
        cal = calibrate_null(cfg.n, p, pts, cfg.s_reps, cfg.calibration_seed, threads=cfg.threads)
    elif (cal.n, cal.p) != (cfg.n, p):
        raise InvalidInput("calibration does not match the study's (n, p)")
    tables = _null_tables(cfg, cal)

    def work(start, stop):
        zs, flags = [], []
        for i in range(start, stop):
            x = cfg.spec.draw(_streams.substream(cfg.master_seed, _streams.POWER_REPS, i), cfg.n)
            try:
                z = scaled_residuals(x).residuals
            except SingularCovariance:
                flags.append(False)
                continue
            zs.append(z[row_order(z)])
            flags.append(True)
        stats = _evaluate(zs, cal, cfg.tests) if zs else {}
        rejects = {}
        ok = np.array(flags)
        for name in cfg.tests:
            rej = np.ones(len(flags), dtype=bool)
            if zs:
                null = tables[name]
                pv = np.array([mc_p_value(v, null) for v in stats[name]])
                rej[ok] = pv <= cfg.alpha
            rejects[name] = rej
        return rejects, int((~ok).sum())

    parts = run_chunked(work, cfg.replications, cfg.threads)
    reps = cfg.replications
    rejection, se = {}, {}
    for name in cfg.tests:
        k = int(sum(part[0][name].sum() for part in parts))
        phat = k / reps
        rejection[name] = phat
        se[name] = math.sqrt(phat * (1 - phat) / reps)
    crit = {name: upper_quantile(tables[name], cfg.alpha) for name in cfg.tests}
    return PowerStudyResult(
        spec=spec_label(cfg.spec), n=cfg.n, p=p, replications=reps, alpha=cfg.alpha,
        rejection=rejection, se=se, wall_time=time.perf_counter() - t0,
        degenerate=sum(part[1] for part in parts), critical_values=crit,
    )
