"""Influence functions of the empirical CGF Hessian and numerical checks of the limit theory.

Under ``N(0, I_p)`` the tilted covariance ``H(t)`` of the scaled residuals
linearizes as::

    sqrt(n) (H(t) - I) = n^{-1/2} sum_i h(X_i; t) + o_p(1)

with ``h = exp(-|t|^2) (g1 + g2)``. The pieces ``f0, f1, f2`` are the
per-observation errors from replacing the true standardization by the
sample one in ``M``, its gradient and its Hessian; ``g1`` and ``g2`` are
the corresponding terms of ``M H_M - grad grad' - M^2 I``.

This module evaluates those functions, checks their zero means by Monte
Carlo, measures the linearization remainder as ``n`` grows, and compares
``U/n`` and ``H/n`` with their almost-sure limits under fixed alternatives.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _streams
from .distributions import ChiSq, CopulaLaw, Exp, Gamma, GaussianCopula, Laplace, Normal, Uniform
from .ecgf import ecgf_eval, pair_batch, sample_ball_points, stat_univariate
from .errors import InvalidInput
from .standardize import scaled_residuals

FUNCTIONS = ("f0", "f1", "f2", "g1", "g2", "h")


@dataclass(frozen=True, eq=False)
class InfluenceEval:
    f0: float
    f1: np.ndarray
    f2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    h: np.ndarray


def q_matrix(t, h):
    """Derivative of ``t t'`` with respect to ``t_h`` (zero-based ``h``)."""
    t = np.asarray(t, dtype=float)
    q = np.zeros((t.size, t.size))
    q[h, :] = t
    q[:, h] = t
    q[h, h] = 2 * t[h]
    return q


def _vec(v, name):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name} must be a finite vector")
    return v


def influence_eval(x, t):
    """Evaluate ``f0, f1, f2, g1, g2, h`` at a single ``(x, t)``.

    ``f2`` is assembled term by term, including the double sum over the
    ``Q^h`` matrices, so it serves as the reference for `influence_batch`.
    """
    x, t = _vec(x, "x"), _vec(t, "t")
    p = t.size
    if x.size != p:
        raise InvalidInput("x and t must have the same length")
    eye = np.eye(p)
    e = math.exp(t @ t / 2)
    tx = float(t @ x)
    a = np.outer(x, x) - eye
    tt = np.outer(t, t)

    f0 = e * (-tx - tx * tx / 2 + (t @ t) / 2)
    f1 = e * (-(eye + tt) @ x - 0.5 * (2 * eye + tt) @ a @ t)

    double = np.zeros((p, p))
    for h in range(p):
        for k in range(p):
            double += (q_matrix(t, h) + tt * t[h] + t[h] * eye) * t[k] * a[h, k]
    f2 = e * (
        -0.5 * a @ (eye + tt) - np.outer(x, t)
        - 0.5 * (eye + tt) @ a - np.outer(t, x)
        - 0.5 * double - (eye + tt) * tx
    )

    g1 = e * math.exp(tx) * (np.outer(x, x) + tt - np.outer(t, x) - np.outer(x, t) - eye)
    g2 = e * (f2 + (tt + eye) * f0 - np.outer(t, f1) - np.outer(f1, t) - 2 * f0 * eye)
    h = math.exp(-(t @ t)) * (g1 + g2)
    return InfluenceEval(f0=f0, f1=f1, f2=f2, g1=g1, g2=g2, h=h)


def influence_batch(x, t):
    """Vectorized influence functions for rows of ``x`` (shape ``(m, p)``) at one ``t``.

    Returns a dict mapping each name in `FUNCTIONS` to an array whose
    leading axis runs over rows. The ``Q^h`` double sum is used in its
    reduced form ``t v' + v t' + (t'At)(tt' + I)`` with ``v = A t``.
    """
    x = np.asarray(x, dtype=float)
    t = _vec(t, "t")
    m, p = x.shape
    if p != t.size:
        raise InvalidInput("x and t must have the same dimension")
    eye = np.eye(p)
    tt = np.outer(t, t)
    ett = eye + tt
    e = math.exp(t @ t / 2)
    tx = x @ t  # (m,)
    xx = x[:, :, None] * x[:, None, :]
    a = xx - eye
    v = tx[:, None] * x - t  # A t, row-wise
    tat = tx * tx - t @ t

    f0 = e * (-tx - tx * tx / 2 + (t @ t) / 2)
    f1 = e * (-(x @ ett.T) - 0.5 * v @ (2 * eye + tt).T)
    xt = x[:, :, None] * t[None, None, :]
    tv = t[None, :, None] * v[:, None, :]
    double = tv + tv.transpose(0, 2, 1) + tat[:, None, None] * ett
    f2 = e * (
        -0.5 * (a @ ett + ett @ a) - xt - xt.transpose(0, 2, 1)
        - 0.5 * double - tx[:, None, None] * ett
    )
    g1 = (e * np.exp(tx))[:, None, None] * (xx + tt - xt.transpose(0, 2, 1) - xt - eye)
    tf1 = t[None, :, None] * f1[:, None, :]
    g2 = e * (
        f2 + f0[:, None, None] * ett - tf1 - tf1.transpose(0, 2, 1) - 2 * f0[:, None, None] * eye
    )
    h = math.exp(-(t @ t)) * (g1 + g2)
    return {"f0": f0, "f1": f1, "f2": f2, "g1": g1, "g2": g2, "h": h}


def mean_zero_moments(t, m=200_000, seed=0, chunk=50_000):
    """Monte Carlo means and standard errors of all six functions at ``t``.

    Returns a dict mapping each name in `FUNCTIONS` to ``(mean, se)``.
    """
    m = int(m)
    if m < 10_000:
        raise InvalidInput("mean-zero checks need m >= 10000")
    t = _vec(t, "t")
    rng = _streams.substream(seed, _streams.VERIFY)
    s1 = dict.fromkeys(FUNCTIONS, 0.0)
    s2 = dict.fromkeys(FUNCTIONS, 0.0)
    done = 0
    while done < m:
        k = min(chunk, m - done)
        vals = influence_batch(rng.standard_normal((k, t.size)), t)
        for name, v in vals.items():
            s1[name] = s1[name] + v.sum(axis=0)
            s2[name] = s2[name] + (v * v).sum(axis=0)
        done += k
    out = {}
    for name in FUNCTIONS:
        mean = np.asarray(s1[name] / m)
        var = np.maximum(s2[name] / m - mean * mean, 0.0) * m / (m - 1)
        out[name] = (mean, np.sqrt(var / m))
    return out


def mean_zero_check(which, t, m=200_000, seed=0):
    """Monte Carlo mean and standard error of one influence function under ``N(0, I_p)``.

    Parameters
    ----------
    which : {"f0", "f1", "f2", "g1", "g2", "h"}
    t : array_like, shape (p,)
    m : int
        Number of draws, at least 10,000.
    seed : int

    Returns
    -------
    mean, se : ndarray
        Componentwise, with the shape of the function's value.
    """
    if which not in FUNCTIONS:
        raise InvalidInput(f"unknown influence function {which!r}")
    return mean_zero_moments(t, m, seed)[which]


@dataclass(frozen=True)
class ConvergenceReport:
    n_grid: tuple
    residual_norms: tuple
    slope: float
    all_norms: tuple = field(default=(), repr=False)

    @property
    def strictly_decreasing(self):
        r = self.residual_norms
        return all(b < a for a, b in zip(r, r[1:]))


def linearization_residual(n_grid, t, reps=50, seed=0):
    """Size of the remainder in the linear expansion of the tilted covariance.

    For each ``n`` and replication, draws ``X ~ N(0, I_p)`` and records the
    Frobenius norm of ``sqrt(n) (H(t) - I) - n^{-1/2} sum_i h(X_i; t)``,
    where ``H`` is computed on the scaled residuals.

    Returns
    -------
    ConvergenceReport
        Medians per ``n`` and the least-squares slope of ``log median``
        against ``log n``.
    """
    t = _vec(t, "t")
    if np.linalg.norm(t) > 1:
        raise InvalidInput("linearization checks are limited to |t| <= 1")
    n_grid = tuple(int(n) for n in n_grid)
    if any(n < t.size + 1 for n in n_grid):
        raise InvalidInput("every n must be at least p + 1")
    p = t.size
    medians, norms = [], []
    for gi, n in enumerate(n_grid):
        vals = np.empty(reps)
        for r in range(reps):
            rng = _streams.substream(seed, _streams.VERIFY, gi * 1_000_003 + r)
            x = rng.standard_normal((n, p))
            z = scaled_residuals(x).residuals
            lhs = math.sqrt(n) * (ecgf_eval(z, t).hess_lambda - np.eye(p))
            rhs = influence_batch(x, t)["h"].sum(axis=0) / math.sqrt(n)
            vals[r] = np.linalg.norm(lhs - rhs)
        medians.append(float(np.median(vals)))
        norms.append(tuple(vals))
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(n_grid), np.log(medians), 1)[0]) if len(n_grid) > 1 else math.nan
    return ConvergenceReport(n_grid=n_grid, residual_norms=tuple(medians), slope=slope, all_norms=tuple(norms))


# --- almost-sure limits under fixed alternatives ---------------------------


def _uniform_second(t):
    # standardized uniform on [-sqrt3, sqrt3]: 1/t^2 - 3/sinh^2(sqrt3 t), -> 1 at 0
    t = np.asarray(t, dtype=float)
    s = math.sqrt(3.0) * t
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / t**2 - 3.0 / np.sinh(s) ** 2
    small = np.abs(t) < 1e-3
    return np.where(small, 1.0 - 0.4 * t**2, out)


def standardized_cgf_second(marginal):
    """Return ``(f, lo, hi)``: the second derivative of the CGF of the standardized law and its open domain."""
    if isinstance(marginal, Normal):
        return (lambda t: np.ones_like(np.asarray(t, dtype=float))), -math.inf, math.inf
    if isinstance(marginal, Exp):
        return (lambda t: (1.0 - np.asarray(t, dtype=float)) ** -2), -math.inf, 1.0
    if isinstance(marginal, (Gamma, ChiSq)):
        k = marginal.shape if isinstance(marginal, Gamma) else marginal.df / 2
        r = math.sqrt(k)
        return (lambda t: (1.0 - np.asarray(t, dtype=float) / r) ** -2), -math.inf, r
    if isinstance(marginal, Uniform):
        return _uniform_second, -math.inf, math.inf
    if isinstance(marginal, Laplace):
        def lap(t):
            u = np.asarray(t, dtype=float) ** 2 / 2
            return (1 + u) / (1 - u) ** 2
        return lap, -math.sqrt(2.0), math.sqrt(2.0)
    raise InvalidInput(f"no closed-form standardized CGF for {marginal}")


def consistency_limit_check(marginal, pts, n, seed=0):
    """Compare ``U/n`` on a large sample with its almost-sure limit.

    Returns
    -------
    empirical, analytic : float
        ``U/n`` for ``n`` draws from ``marginal`` and ``sum_l (L''(t_l) - 1)^2``
        for the standardized law.
    """
    if pts.dim != 1:
        raise InvalidInput("consistency check needs a 1-D point set")
    f, lo, hi = standardized_cgf_second(marginal)
    t = pts.points[:, 0]
    if np.any(t <= lo) or np.any(t >= hi):
        raise InvalidInput(f"evaluation points leave the MGF domain ({lo}, {hi}) of {marginal}")
    analytic = float(np.sum((f(t) - 1.0) ** 2))
    rng = _streams.substream(seed, _streams.VERIFY)
    x = marginal.sample(rng, int(n))
    z = scaled_residuals(x).residuals[:, 0]
    return stat_univariate(z, pts) / int(n), analytic


def pair_consistency(spec, pts, n_grid, seed=0):
    """``H/n`` and ``D/n`` on one large sample per ``n`` from a joint law."""
    out = []
    for i, n in enumerate(n_grid):
        rng = _streams.substream(seed, _streams.VERIFY, i)
        z = scaled_residuals(spec.draw(rng, int(n))).residuals
        h, d = pair_batch(z[None], pts.points)
        out.append((float(h[0]) / n, float(d[0]) / n))
    return out


# --- the verification suite used by the CLI ---------------------------------


@dataclass
class CheckRecord:
    name: str
    passed: bool
    details: dict


def _random_ts(p, count, rng):
    g = rng.standard_normal((count, p))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(0.2, 1.0, (count, 1))


def verify_mean_zero(p_values=(1, 2, 3), n_t=5, m=200_000, seed=0, z_tol=4.0):
    """Mean-zero checks for all six functions at random ``t`` with ``|t| <= 1``."""
    rng = _streams.substream(seed, _streams.VERIFY, 999)
    records = []
    for p in p_values:
        for j, t in enumerate(_random_ts(p, n_t, rng)):
            moments = mean_zero_moments(t, m=m, seed=seed * 7919 + 100 * p + j)
            for which in FUNCTIONS:
                mean, se = moments[which]
                mean, se = np.atleast_1d(mean), np.atleast_1d(se)
                if mean.ndim == 2:
                    iu = np.triu_indices(p)
                    mean, se = mean[iu], se[iu]
                zmax = float(np.max(np.abs(mean) / se))
                records.append(
                    CheckRecord(
                        f"mean_zero[{which},p={p},t#{j}]", zmax <= z_tol,
                        {"t": t.tolist(), "max_abs_z": zmax, "tolerance_z": z_tol, "draws": m},
                    )
                )
    return records


def verify_linearization(n_grid=(100, 1000, 10000), reps=50, seed=0):
    t = np.array([0.3, 0.4])
    rep = linearization_residual(n_grid, t, reps=reps, seed=seed)
    ok = rep.strictly_decreasing and rep.slope <= -0.25
    return [
        CheckRecord(
            "linearization", ok,
            {"n_grid": list(rep.n_grid), "medians": list(rep.residual_norms), "slope": rep.slope,
             "t": t.tolist(), "reps": reps},
        )
    ]


def verify_consistency(n=100_000, n_small=10_000, n_points=500, seed=0, rtol=0.05):
    pts = sample_ball_points(1, n_points, 0.4, seed)
    emp, ana = consistency_limit_check(Exp(1), pts, n, seed)
    emp_small, _ = consistency_limit_check(Exp(1), pts, n_small, seed + 1)
    rel = abs(emp - ana) / ana
    rel_small = abs(emp_small - ana) / ana
    emp0, ana0 = consistency_limit_check(Normal(0, 1), pts, n, seed)
    return [
        CheckRecord(
            "consistency_exp", rel < rtol,
            {"n": n, "empirical": emp, "analytic": ana, "relative_error": rel, "tolerance": rtol},
        ),
        CheckRecord(
            "consistency_exp_shrinks", rel < rel_small,
            {"n": [n_small, n], "relative_error": [rel_small, rel]},
        ),
        # under normality U/n is pure sampling noise of order N/n
        CheckRecord(
            "consistency_normal", ana0 == 0.0 and emp0 < rtol * ana,
            {"empirical": emp0, "analytic": ana0, "bound": rtol * ana},
        ),
    ]


def verify_pair_consistency(n_grid=(1000, 10000, 100000), p=3, n_points=100, seed=0):
    spec = CopulaLaw(GaussianCopula(0.5), (Normal(0, 1),) * p)
    pts = sample_ball_points(p, n_points, 3.0, seed)
    vals = pair_consistency(spec, pts, n_grid, seed)
    h = [v[0] for v in vals]
    ok = all(b < a for a, b in zip(h, h[1:]))
    return [CheckRecord("pair_consistency_gaussian_copula", ok, {"n_grid": list(n_grid), "h_over_n": h})]


def run_verification(quick=False, seed=0):
    """Run the mean-zero, linearization and consistency checks; returns a list of `CheckRecord`."""
    if quick:
        return (
            verify_mean_zero(p_values=(2,), n_t=2, m=20_000, seed=seed)
            + verify_linearization(n_grid=(100, 1000, 10000), reps=15, seed=seed)
            + verify_consistency(n=100_000, n_small=10_000, n_points=100, seed=seed)
            + verify_pair_consistency(n_grid=(1000, 10000, 100000), n_points=50, seed=seed)
        )
    return (
        verify_mean_zero(seed=seed)
        + verify_linearization(seed=seed)
        + verify_consistency(seed=seed)
        + verify_pair_consistency(seed=seed)
    )
