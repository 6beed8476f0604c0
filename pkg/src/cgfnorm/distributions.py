"""Samplers for the null and alternative laws used in power studies.

Three layers:

* marginals: univariate laws with a sampler and, where the law has a usable
  inverse CDF, a quantile function;
* copulas: exchangeable dependence structures returning uniform rows;
* joint laws (`DistributionSpec` subclasses) built from the two above plus
  multivariate normals, normal mixtures and the multivariate t.

Every joint law has a canonical text form, produced by ``str(spec)`` and
read back by `parse_spec`::

    product:gld(0,1,0.75,0.75):p=3
    copula:clayton(2):marginal=normal(0,1):p=3
    mixture:loconn(0.5,3)
    mvn:mean=m:cov=S:p=3
    mvt(5):p=3
    nmix(0.9):p=3

``S`` is the equicorrelation matrix with off-diagonal 0.5 and ``m`` is the
mean vector ``(1, ..., p)``.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _streams
from .errors import InvalidInput, SpecParseError

_U_LO = np.finfo(float).tiny
_U_HI = 1.0 - np.finfo(float).epsneg


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _args(*xs):
    return "(" + ",".join(_fmt(x) for x in xs) + ")"


def _require(cond, msg):
    if not cond:
        raise InvalidInput(msg)


def gld_quantile(lam, u):
    """Percentile function ``l1 + (u**l3 - (1 - u)**l4) / l2`` of the generalized lambda law."""
    l1, l2, l3, l4 = (float(v) for v in lam)
    if l2 == 0:
        raise InvalidInput("GLD scale parameter lambda2 must be nonzero")
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise InvalidInput("GLD quantile needs 0 <= u <= 1")
    with np.errstate(divide="ignore"):
        return l1 + (np.power(u, l3) - np.power(1.0 - u, l4)) / l2


def _trunc_bounds(a, b, mu, sigma):
    alpha, beta = (a - mu) / sigma, (b - mu) / sigma
    # work in the lower tail for accuracy; reflect if the interval sits to the right
    flip = alpha > 0
    if flip:
        alpha, beta = -beta, -alpha
    lo, hi = special.ndtr(alpha), special.ndtr(beta)
    # inverse-CDF sampling needs the interval mass to be resolvable next to ``hi``
    if not hi > 0 or hi - lo < 1e-9 * hi:
        raise InvalidInput(f"truncation interval ({a}, {b}) has negligible normal mass")
    return lo, hi, flip


def trunc_normal_quantile(a, b, mu, sigma, u):
    lo, hi, flip = _trunc_bounds(a, b, mu, sigma)
    u = np.asarray(u, dtype=float)
    if flip:
        u = 1.0 - u
    x = special.ndtri(lo + u * (hi - lo))
    x = -x if flip else x
    return np.clip(mu + sigma * x, a, b)


def trunc_normal_sample(a, b, mu, sigma, count, seed):
    """``count`` draws from ``N(mu, sigma^2)`` truncated to ``(a, b)`` by inverse CDF."""
    _require(a < b, "need a < b")
    _require(sigma > 0, "need sigma > 0")
    rng = _streams.substream(seed, _streams.MISC)
    return trunc_normal_quantile(a, b, mu, sigma, rng.random(int(count)))


# --------------------------------------------------------------------------
# marginals


class Marginal:
    """Base class for univariate laws."""

    name = ""

    def sample(self, rng, size):
        return self.quantile(rng.random(size))

    def quantile(self, u):
        raise InvalidInput(f"{self} has no quantile function")

    def params(self):
        return ()

    def __str__(self):
        ps = self.params()
        return self.name + (_args(*ps) if ps else "")


@dataclass(frozen=True)
class Normal(Marginal):
    mu: float = 0.0
    sigma: float = 1.0
    name = "normal"

    def __post_init__(self):
        _require(self.sigma > 0, "normal sigma must be positive")

    def params(self):
        return (self.mu, self.sigma)

    def sample(self, rng, size):
        return self.mu + self.sigma * rng.standard_normal(size)

    def quantile(self, u):
        return self.mu + self.sigma * special.ndtri(u)


@dataclass(frozen=True)
class Uniform(Marginal):
    a: float = 0.0
    b: float = 1.0
    name = "uniform"

    def __post_init__(self):
        _require(self.a < self.b, "uniform needs a < b")

    def params(self):
        return (self.a, self.b)

    def quantile(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Beta(Marginal):
    a: float
    b: float
    name = "beta"

    def __post_init__(self):
        _require(self.a > 0 and self.b > 0, "beta shapes must be positive")

    def params(self):
        return (self.a, self.b)

    def sample(self, rng, size):
        return rng.beta(self.a, self.b, size)

    def quantile(self, u):
        return special.betaincinv(self.a, self.b, u)


@dataclass(frozen=True)
class GLD(Marginal):
    l1: float
    l2: float
    l3: float
    l4: float
    name = "gld"

    def __post_init__(self):
        _require(self.l2 != 0, "GLD lambda2 must be nonzero")

    def params(self):
        return (self.l1, self.l2, self.l3, self.l4)

    def quantile(self, u):
        return gld_quantile(self.params(), u)

    def sample(self, rng, size):
        # open interval keeps negative shape parameters finite
        return self.quantile(np.clip(rng.random(size), _U_LO, _U_HI))


@dataclass(frozen=True)
class TruncNormal(Marginal):
    a: float
    b: float
    mu: float = 0.0
    sigma: float = 1.0
    name = "trunc"

    def __post_init__(self):
        _require(self.a < self.b, "truncation needs a < b")
        _require(self.sigma > 0, "sigma must be positive")
        _trunc_bounds(self.a, self.b, self.mu, self.sigma)

    def params(self):
        return (self.a, self.b, self.mu, self.sigma)

    def quantile(self, u):
        return trunc_normal_quantile(self.a, self.b, self.mu, self.sigma, u)


@dataclass(frozen=True)
class Laplace(Marginal):
    name = "laplace"

    def sample(self, rng, size):
        return rng.laplace(0.0, 1.0, size)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u < 0.5, np.log(2 * u), -np.log(2 * (1 - u)))


@dataclass(frozen=True)
class Logistic(Marginal):
    name = "logistic"

    def sample(self, rng, size):
        return rng.logistic(0.0, 1.0, size)

    def quantile(self, u):
        return special.logit(u)


@dataclass(frozen=True)
class Cauchy(Marginal):
    name = "cauchy"

    def sample(self, rng, size):
        return rng.standard_cauchy(size)

    def quantile(self, u):
        return np.tan(np.pi * (np.asarray(u, dtype=float) - 0.5))


@dataclass(frozen=True)
class StudentT(Marginal):
    df: float
    name = "t"

    def __post_init__(self):
        _require(self.df > 0, "t degrees of freedom must be positive")

    def params(self):
        return (self.df,)

    def sample(self, rng, size):
        return rng.standard_t(self.df, size)

    def quantile(self, u):
        return special.stdtrit(self.df, u)


@dataclass(frozen=True)
class Exp(Marginal):
    rate: float = 1.0
    name = "exp"

    def __post_init__(self):
        _require(self.rate > 0, "exponential rate must be positive")

    def params(self):
        return (self.rate,)

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate


@dataclass(frozen=True)
class LogNormal(Marginal):
    mu: float = 0.0
    sigma: float = 1.0
    name = "lognormal"

    def __post_init__(self):
        _require(self.sigma > 0, "lognormal sigma must be positive")

    def params(self):
        return (self.mu, self.sigma)

    def sample(self, rng, size):
        return rng.lognormal(self.mu, self.sigma, size)

    def quantile(self, u):
        return np.exp(self.mu + self.sigma * special.ndtri(u))


@dataclass(frozen=True)
class Gamma(Marginal):
    """Gamma law with shape ``shape`` and rate ``rate``."""

    shape: float
    rate: float = 1.0
    name = "gamma"

    def __post_init__(self):
        _require(self.shape > 0 and self.rate > 0, "gamma parameters must be positive")

    def params(self):
        return (self.shape, self.rate)

    def sample(self, rng, size):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def quantile(self, u):
        return special.gammaincinv(self.shape, u) / self.rate


@dataclass(frozen=True)
class Weibull(Marginal):
    shape: float
    scale: float = 1.0
    name = "weibull"

    def __post_init__(self):
        _require(self.shape > 0 and self.scale > 0, "weibull parameters must be positive")

    def params(self):
        return (self.shape, self.scale)

    def quantile(self, u):
        return self.scale * np.power(-np.log1p(-np.asarray(u, dtype=float)), 1.0 / self.shape)


@dataclass(frozen=True)
class Pareto(Marginal):
    """Pareto law with support ``[scale, inf)`` and tail index ``shape``."""

    scale: float
    shape: float
    name = "pareto"

    def __post_init__(self):
        _require(self.scale > 0 and self.shape > 0, "pareto parameters must be positive")

    def params(self):
        return (self.scale, self.shape)

    def quantile(self, u):
        return self.scale * np.power(1.0 - np.asarray(u, dtype=float), -1.0 / self.shape)

    def sample(self, rng, size):
        return self.quantile(np.clip(rng.random(size), 0.0, _U_HI))


@dataclass(frozen=True)
class ChiSq(Marginal):
    df: float
    name = "chisq"

    def __post_init__(self):
        _require(self.df > 0, "chi-square degrees of freedom must be positive")

    def params(self):
        return (self.df,)

    def sample(self, rng, size):
        return rng.chisquare(self.df, size)

    def quantile(self, u):
        return 2.0 * special.gammaincinv(self.df / 2.0, u)


@dataclass(frozen=True)
class ScConN(Marginal):
    """``p N(0, b^2) + (1 - p) N(0, 1)``."""

    p: float
    b: float
    name = "scconn"

    def __post_init__(self):
        _require(0 <= self.p <= 1, "mixing weight must lie in [0, 1]")
        _require(self.b > 0, "scale must be positive")

    def params(self):
        return (self.p, self.b)

    def sample(self, rng, size):
        pick = rng.random(size) < self.p
        return rng.standard_normal(size) * np.where(pick, self.b, 1.0)


@dataclass(frozen=True)
class LoConN(Marginal):
    """``p N(a, 1) + (1 - p) N(0, 1)``."""

    p: float
    a: float
    name = "loconn"

    def __post_init__(self):
        _require(0 <= self.p <= 1, "mixing weight must lie in [0, 1]")

    def params(self):
        return (self.p, self.a)

    def sample(self, rng, size):
        pick = rng.random(size) < self.p
        return rng.standard_normal(size) + np.where(pick, self.a, 0.0)


MARGINALS = {
    cls.name: cls
    for cls in (
        Normal, Uniform, Beta, GLD, TruncNormal, Laplace, Logistic, Cauchy, StudentT, Exp,
        LogNormal, Gamma, Weibull, Pareto, ChiSq, ScConN, LoConN,
    )
}


# --------------------------------------------------------------------------
# copulas


def equicorrelation(p, rho):
    """``p x p`` matrix with unit diagonal and ``rho`` elsewhere."""
    s = np.full((p, p), float(rho))
    np.fill_diagonal(s, 1.0)
    return s


def _equi_normal(rng, size, p, rho):
    _require(-1.0 / max(p - 1, 1) < rho < 1, f"correlation {rho} is not admissible for p={p}")
    chol = np.linalg.cholesky(equicorrelation(p, rho))
    return rng.standard_normal((size, p)) @ chol.T


class Copula:
    name = ""

    def params(self):
        return ()

    def __str__(self):
        return self.name + _args(*self.params())

    def sample(self, rng, size, p):
        _require(p >= 2, "copulas need p >= 2")
        return np.clip(self._sample(rng, int(size), int(p)), _U_LO, _U_HI)


@dataclass(frozen=True)
class Clayton(Copula):
    theta: float
    name = "clayton"

    def __post_init__(self):
        _require(self.theta > 0, "Clayton theta must be positive")

    def params(self):
        return (self.theta,)

    def _sample(self, rng, size, p):
        v = rng.gamma(1.0 / self.theta, 1.0, size)
        e = rng.exponential(1.0, (size, p))
        return np.exp(-np.log1p(e / v[:, None]) / self.theta)


def positive_stable(rng, alpha, size):
    """Positive stable draws with Laplace transform ``exp(-s**alpha)``, ``0 < alpha <= 1``.

    Chambers-Mallows-Stuck construction in Kanter's form.
    """
    theta = rng.uniform(0.0, np.pi, size)
    w = rng.exponential(1.0, size)
    if alpha == 1.0:
        return np.ones(size)
    a = np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * theta) / w) ** ((1.0 - alpha) / alpha)
    return a * b


@dataclass(frozen=True)
class Gumbel(Copula):
    theta: float
    name = "gumbel"

    def __post_init__(self):
        _require(self.theta >= 1, "Gumbel theta must be at least 1")

    def params(self):
        return (self.theta,)

    def _sample(self, rng, size, p):
        alpha = 1.0 / self.theta
        v = positive_stable(rng, alpha, size)
        e = rng.exponential(1.0, (size, p))
        return np.exp(-np.power(e / v[:, None], alpha))


@dataclass(frozen=True)
class Frank(Copula):
    theta: float
    name = "frank"

    def __post_init__(self):
        _require(self.theta != 0, "Frank theta must be nonzero")

    def params(self):
        return (self.theta,)

    def _sample(self, rng, size, p):
        th = self.theta
        if th < 0:
            _require(p == 2, "negative Frank dependence is only a copula for p = 2")
            # conditional inverse: solve C(v | u) = w for v
            u, w = rng.random(size), rng.random(size)
            v = -np.log1p(w * np.expm1(-th) / (w + (1 - w) * np.exp(-th * u))) / th
            return np.column_stack([u, v])
        v = rng.logseries(-np.expm1(-th), size).astype(float)
        e = rng.exponential(1.0, (size, p))
        return -np.log1p(np.expm1(-th) * np.exp(-e / v[:, None])) / th


@dataclass(frozen=True)
class AMH(Copula):
    theta: float
    name = "amh"

    def __post_init__(self):
        _require(0 <= self.theta < 1, "AMH theta must lie in [0, 1)")

    def params(self):
        return (self.theta,)

    def _sample(self, rng, size, p):
        th = self.theta
        v = rng.geometric(1.0 - th, size).astype(float)
        e = rng.exponential(1.0, (size, p))
        return (1.0 - th) / (np.exp(e / v[:, None]) - th)


@dataclass(frozen=True)
class TCopula(Copula):
    rho: float
    df: float
    name = "tcopula"

    def __post_init__(self):
        _require(-1 < self.rho < 1, "t-copula rho must lie in (-1, 1)")
        _require(self.df > 0, "t-copula degrees of freedom must be positive")

    def params(self):
        return (self.rho, self.df)

    def _sample(self, rng, size, p):
        y = _equi_normal(rng, size, p, self.rho)
        w = rng.chisquare(self.df, size)
        return special.stdtr(self.df, y / np.sqrt(w / self.df)[:, None])


@dataclass(frozen=True)
class GaussianCopula(Copula):
    rho: float
    name = "gaussian"

    def __post_init__(self):
        _require(-1 < self.rho < 1, "Gaussian copula rho must lie in (-1, 1)")

    def params(self):
        return (self.rho,)

    def _sample(self, rng, size, p):
        return special.ndtr(_equi_normal(rng, size, p, self.rho))


COPULAS = {cls.name: cls for cls in (Clayton, Gumbel, Frank, AMH, TCopula, GaussianCopula)}


def copula_sample(c, p, count, seed):
    """``count x p`` uniforms from copula ``c``; deterministic in ``seed``."""
    return c.sample(_streams.substream(seed, _streams.MISC), count, p)


def kendall_tau_clayton(theta):
    return theta / (theta + 2.0)


def kendall_tau_gumbel(theta):
    return 1.0 - 1.0 / theta


# --------------------------------------------------------------------------
# joint laws


class DistributionSpec:
    """A p-variate law that can draw samples from a generator."""

    p = 1

    def draw(self, rng, n):
        raise NotImplementedError


@dataclass(frozen=True)
class ProductMarginal(DistributionSpec):
    marginal: Marginal
    p: int = 1

    def __post_init__(self):
        _require(self.p >= 1, "dimension must be positive")

    def draw(self, rng, n):
        return self.marginal.sample(rng, (n, self.p))

    def __str__(self):
        if isinstance(self.marginal, (ScConN, LoConN)):
            base = f"mixture:{self.marginal}"
            return base if self.p == 1 else f"{base}:p={self.p}"
        return f"product:{self.marginal}:p={self.p}"


@dataclass(frozen=True)
class CopulaLaw(DistributionSpec):
    copula: Copula
    marginals: tuple

    def __post_init__(self):
        _require(len(self.marginals) >= 2, "copula laws need at least two marginals")
        for m in self.marginals:
            _require(
                type(m).quantile is not Marginal.quantile, f"marginal {m} has no quantile function"
            )

    @property
    def p(self):
        return len(self.marginals)

    def draw(self, rng, n):
        u = self.copula.sample(rng, n, self.p)
        return np.column_stack([m.quantile(u[:, j]) for j, m in enumerate(self.marginals)])

    def __str__(self):
        first = self.marginals[0]
        if all(m == first for m in self.marginals):
            return f"copula:{self.copula}:marginal={first}:p={self.p}"
        return f"copula:{self.copula}:marginals=" + ";".join(str(m) for m in self.marginals)


def _as_spd(cov, p):
    cov = np.array(cov, dtype=float)
    _require(cov.shape == (p, p), f"covariance must be {p}x{p}")
    _require(np.allclose(cov, cov.T), "covariance must be symmetric")
    try:
        return cov, np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidInput("covariance must be positive definite") from None


def _vec_label(v, p):
    v = np.asarray(v, dtype=float)
    if np.all(v == 0):
        return "0"
    if np.array_equal(v, np.arange(1, p + 1)):
        return "m"
    return "[" + ",".join(_fmt(x) for x in v) + "]"


def _cov_label(c, p):
    if np.array_equal(c, np.eye(p)):
        return "I"
    if np.array_equal(c, equicorrelation(p, 0.5)):
        return "S"
    if np.array_equal(c, equicorrelation(p, c[0, 1] if p > 1 else 0.0)):
        return f"equi({_fmt(c[0, 1])})"
    raise InvalidInput("covariance has no canonical text form")


@dataclass(frozen=True, eq=False)
class MultivariateNormal(DistributionSpec):
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov, chol = _as_spd(self.cov, mean.size)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def p(self):
        return self.mean.size

    def draw(self, rng, n):
        return self.mean + rng.standard_normal((n, self.p)) @ self._chol.T

    def __str__(self):
        return f"mvn:mean={_vec_label(self.mean, self.p)}:cov={_cov_label(self.cov, self.p)}:p={self.p}"


@dataclass(frozen=True, eq=False)
class NormalMixture(DistributionSpec):
    weights: tuple
    means: tuple
    covs: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        _require(w.ndim == 1 and w.size >= 1, "mixture needs at least one weight")
        _require(np.all(w > 0) and abs(w.sum() - 1) < 1e-12, "mixture weights must be positive and sum to 1")
        _require(len(self.means) == w.size and len(self.covs) == w.size, "one mean and covariance per weight")
        p = np.asarray(self.means[0]).size
        comps = [
            MultivariateNormal(np.asarray(m, dtype=float).reshape(-1), c)
            for m, c in zip(self.means, self.covs)
        ]
        _require(all(c.p == p for c in comps), "mixture components must share a dimension")
        object.__setattr__(self, "_components", comps)
        object.__setattr__(self, "_w", w)

    @property
    def p(self):
        return self._components[0].p

    def draw(self, rng, n):
        k = rng.choice(self._w.size, size=n, p=self._w)
        z = rng.standard_normal((n, self.p))
        out = np.empty((n, self.p))
        for j, comp in enumerate(self._components):
            rows = k == j
            out[rows] = comp.mean + z[rows] @ comp._chol.T
        return out

    def __str__(self):
        w = self._w
        p = self.p
        if (
            w.size == 2
            and all(np.all(m == 0) for m in self.means)
            and np.array_equal(self._components[0].cov, np.eye(p))
            and np.array_equal(self._components[1].cov, equicorrelation(p, 0.5))
        ):
            return f"nmix({_fmt(w[0])}):p={p}"
        raise InvalidInput("mixture has no canonical text form")


def identity_vs_equi_mixture(weight, p, rho=0.5):
    """``weight N(0, I) + (1 - weight) N(0, S)`` with equicorrelation ``S``."""
    return NormalMixture(
        weights=(weight, 1.0 - weight),
        means=(np.zeros(p), np.zeros(p)),
        covs=(np.eye(p), equicorrelation(p, rho)),
    )


@dataclass(frozen=True)
class MultivariateT(DistributionSpec):
    """``N(0, I_p) / sqrt(chi2_df / df)`` with one shared mixing variable per row."""

    df: float
    p: int

    def __post_init__(self):
        _require(self.df > 0, "degrees of freedom must be positive")
        _require(self.p >= 1, "dimension must be positive")

    def draw(self, rng, n):
        w = rng.chisquare(self.df, n)
        return rng.standard_normal((n, self.p)) / np.sqrt(w / self.df)[:, None]

    def __str__(self):
        return f"mvt({_fmt(self.df)}):p={self.p}"


def sample(spec, n, seed, index=0):
    """Draw an ``n x p`` sample from ``spec``; deterministic in ``(seed, index)``."""
    n = int(n)
    _require(n >= 1, "sample size must be positive")
    return spec.draw(_streams.substream(seed, _streams.POWER_REPS, index), n)


# --------------------------------------------------------------------------
# text form

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf"
_CALL = re.compile(r"([a-z][a-z0-9_]*)(?:\(([^()]*)\))?$")


def _split_top(text, sep, offset=0):
    """Split on ``sep`` outside parentheses/brackets; yields ``(piece, start)``."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append((text[start:i], offset + start))
            start = i + 1
    parts.append((text[start:], offset + start))
    return parts


def _call(piece, pos, full):
    m = _CALL.match(piece.strip())
    if not m:
        raise SpecParseError("malformed term", full, pos)
    name, argtext = m.group(1), m.group(2)
    args = []
    if argtext is not None and argtext.strip():
        for a, apos in _split_top(argtext, ",", pos + piece.index("(") + 1):
            a = a.strip()
            if not re.fullmatch(_NUM, a):
                raise SpecParseError(f"expected a number, got {a!r}", full, apos)
            args.append(float(a))
    return name, args


def _build(table, kind, piece, pos, full):
    name, args = _call(piece, pos, full)
    cls = table.get(name)
    if cls is None:
        raise SpecParseError(f"unknown {kind} {name!r}", full, pos)
    try:
        return cls(*args)
    except TypeError:
        raise SpecParseError(f"wrong number of arguments for {name}", full, pos) from None
    except InvalidInput as exc:
        raise SpecParseError(str(exc), full, pos) from None


def parse_marginal(text, _pos=0, _full=None):
    return _build(MARGINALS, "marginal", text, _pos, _full or text)


def parse_copula(text, _pos=0, _full=None):
    return _build(COPULAS, "copula", text, _pos, _full or text)


def _options(parts, full):
    opts = {}
    for piece, pos in parts:
        key, eq, val = piece.partition("=")
        if not eq or not key.strip():
            raise SpecParseError("expected key=value", full, pos)
        opts[key.strip()] = (val.strip(), pos + len(key) + 1, pos + len(key) - len(key.lstrip()))
    return opts


def _int_opt(opts, key, full, default=None):
    if key not in opts:
        if default is None:
            raise SpecParseError(f"missing option {key}=", full, len(full))
        return default
    val, pos, _ = opts.pop(key)
    if not re.fullmatch(r"\d+", val) or int(val) < 1:
        raise SpecParseError(f"{key} must be a positive integer", full, pos)
    return int(val)


def parse_spec(text):
    """Parse the canonical text form of a joint law (see module docstring)."""
    full = text
    parts = _split_top(text.strip(), ":")
    head, hpos = parts[0]
    rest = parts[1:]
    head = head.strip()
    if head not in ("product", "mixture", "copula", "mvn") and not re.match(r"(mvt|nmix)\(", head):
        raise SpecParseError(f"unknown distribution kind {head!r}", full, hpos)
    if head in ("product", "mixture", "copula"):
        if not rest:
            raise SpecParseError(f"{head} needs a term", full, len(full))
        (term, tpos), rest = rest[0], rest[1:]
    opts = _options(rest, full)
    try:
        if head == "product":
            spec = ProductMarginal(parse_marginal(term, tpos, full), _int_opt(opts, "p", full))
        elif head == "mixture":
            m = parse_marginal(term, tpos, full)
            if not isinstance(m, (ScConN, LoConN)):
                raise SpecParseError("mixture expects scconn(...) or loconn(...)", full, tpos)
            spec = ProductMarginal(m, _int_opt(opts, "p", full, default=1))
        elif head == "copula":
            cop = parse_copula(term, tpos, full)
            if "marginals" in opts:
                val, vpos, _ = opts.pop("marginals")
                margs = tuple(parse_marginal(s, q, full) for s, q in _split_top(val, ";", vpos))
                spec = CopulaLaw(cop, margs)
            else:
                if "marginal" not in opts:
                    raise SpecParseError("copula needs marginal= or marginals=", full, len(full))
                val, vpos, _ = opts.pop("marginal")
                m = parse_marginal(val, vpos, full)
                spec = CopulaLaw(cop, (m,) * _int_opt(opts, "p", full))
        elif head == "mvn":
            p = _int_opt(opts, "p", full)
            mean_txt, mpos, _ = opts.pop("mean", ("0", hpos, hpos))
            cov_txt, cpos, _ = opts.pop("cov", ("I", hpos, hpos))
            spec = MultivariateNormal(_parse_mean(mean_txt, p, full, mpos), _parse_cov(cov_txt, p, full, cpos))
        else:
            name, args = _call(head, hpos, full)
            if name == "mvt" and len(args) == 1:
                spec = MultivariateT(args[0], _int_opt(opts, "p", full))
            elif name == "nmix" and len(args) == 1:
                spec = identity_vs_equi_mixture(args[0], _int_opt(opts, "p", full))
            else:
                raise SpecParseError(f"unknown distribution kind {head!r}", full, hpos)
    except SpecParseError:
        raise
    except InvalidInput as exc:
        raise SpecParseError(str(exc), full, hpos) from None
    if opts:
        key = next(iter(opts))
        raise SpecParseError(f"unexpected option {key!r}", full, opts[key][2])
    return spec


def _parse_mean(txt, p, full, pos):
    if txt == "0":
        return np.zeros(p)
    if txt == "m":
        return np.arange(1.0, p + 1)
    if txt.startswith("[") and txt.endswith("]"):
        vals = [v.strip() for v in txt[1:-1].split(",")]
        if len(vals) == p and all(re.fullmatch(_NUM, v) for v in vals):
            return np.array([float(v) for v in vals])
    raise SpecParseError("mean must be 0, m or a bracketed vector of length p", full, pos)


def _parse_cov(txt, p, full, pos):
    if txt == "I":
        return np.eye(p)
    if txt == "S":
        return equicorrelation(p, 0.5)
    m = re.fullmatch(r"equi\((" + _NUM + r")\)", txt)
    if m:
        return equicorrelation(p, float(m.group(1)))
    raise SpecParseError("cov must be I, S or equi(rho)", full, pos)


# --------------------------------------------------------------------------
# the alternatives used in the published tables

_SHORT_TAILED = [
    ("U(0,1)", Uniform(0, 1)),
    ("Beta(0.5,0.5)", Beta(0.5, 0.5)),
    ("Beta(2,2)", Beta(2, 2)),
    ("GLD(0,1,0.25,0.25)", GLD(0, 1, 0.25, 0.25)),
    ("GLD(0,1,0.5,0.5)", GLD(0, 1, 0.5, 0.5)),
    ("GLD(0,1,0.75,0.75)", GLD(0, 1, 0.75, 0.75)),
    ("GLD(0,1,1.25,1.25)", GLD(0, 1, 1.25, 1.25)),
    ("Trunc(-2,2,0,1)", TruncNormal(-2, 2, 0, 1)),
    ("Trunc(-3,3,0,2)", TruncNormal(-3, 3, 0, 2)),
    ("Trunc(-2,2,0,2)", TruncNormal(-2, 2, 0, 2)),
]
_LONG_TAILED = [
    ("Laplace", Laplace()),
    ("Logistic", Logistic()),
    ("Cauchy", Cauchy()),
    ("GLD(0,1,-0.1,-0.1)", GLD(0, 1, -0.1, -0.1)),
    ("GLD(0,1,-0.15,-0.15)", GLD(0, 1, -0.15, -0.15)),
    ("t(5)", StudentT(5)),
    ("t(10)", StudentT(10)),
    ("t(15)", StudentT(15)),
]
_ASYMMETRIC = [
    ("Exp(1)", Exp(1)),
    ("LogNormal(0,0.5)", LogNormal(0, 0.5)),
    ("Gamma(4,5)", Gamma(4, 5)),
    ("Beta(2,1)", Beta(2, 1)),
    ("Beta(3,2)", Beta(3, 2)),
    ("Weibull(3,1)", Weibull(3, 1)),
    ("Pareto(1,3)", Pareto(1, 3)),
    ("chisq(4)", ChiSq(4)),
    ("chisq(10)", ChiSq(10)),
    ("chisq(20)", ChiSq(20)),
]
_MIXTURES = [
    ("ScConN(0.2,5)", ScConN(0.2, 5)),
    ("ScConN(0.05,5)", ScConN(0.05, 5)),
    ("LoConN(0.5,3)", LoConN(0.5, 3)),
    ("LoConN(0.5,2)", LoConN(0.5, 2)),
]

#: correlation of the Gaussian copula behind the GaussUnif / GaussGLD / Gausst rows
GAUSS_COPULA_RHO = 0.5


def univariate_zoo():
    """``(label, spec)`` pairs for the univariate tables: four nulls, then 32 alternatives."""
    rows = [
        ("N(0,1)", ProductMarginal(Normal(0, 1))),
        ("N(0,2)", ProductMarginal(Normal(0, 2))),
        ("N(2,1)", ProductMarginal(Normal(2, 1))),
        ("N(2,2)", ProductMarginal(Normal(2, 2))),
    ]
    for label, m in _SHORT_TAILED + _LONG_TAILED + _ASYMMETRIC + _MIXTURES:
        rows.append((label, ProductMarginal(m)))
    return rows


def multivariate_zoo(p):
    """``(label, spec)`` pairs for the multivariate tables in dimension ``p``."""
    p = int(p)
    _require(p >= 2, "multivariate tables need p >= 2")
    zero, m, eye, s = np.zeros(p), np.arange(1.0, p + 1), np.eye(p), equicorrelation(p, 0.5)
    rows = [
        ("N(0,I)", MultivariateNormal(zero, eye)),
        ("N(0,S)", MultivariateNormal(zero, s)),
        ("N(m,I)", MultivariateNormal(m, eye)),
        ("N(m,S)", MultivariateNormal(m, s)),
    ]
    for label, marg in _SHORT_TAILED + _LONG_TAILED[:5]:
        rows.append((f"{label}^p", ProductMarginal(marg, p)))
    for df in (5, 10, 15):
        rows.append((f"t({df})^p", ProductMarginal(StudentT(df), p)))
    for df in (5, 10, 15):
        rows.append((f"Mt({df})", MultivariateT(df, p)))
    for label, marg in _ASYMMETRIC:
        rows.append((f"{label}^p", ProductMarginal(marg, p)))
    rows += [
        ("0.5N(0,I)+0.5N(0,S)", identity_vs_equi_mixture(0.5, p)),
        ("0.1N(0,I)+0.9N(0,S)", identity_vs_equi_mixture(0.1, p)),
        ("0.9N(0,I)+0.1N(0,S)", identity_vs_equi_mixture(0.9, p)),
    ]
    normal = (Normal(0, 1),) * p
    for label, cop in [
        ("Clayton(2)", Clayton(2)),
        ("Clayton(1)", Clayton(1)),
        ("Gumbel(1.5)", Gumbel(1.5)),
        ("Gumbel(2)", Gumbel(2)),
        ("Frank(5)", Frank(5)),
        ("Frank(10)", Frank(10)),
        ("AMH(0.95)", AMH(0.95)),
        ("AMH(0.98)", AMH(0.98)),
        ("tCopula(0.5,5)", TCopula(0.5, 5)),
        ("tCopula(0.5,10)", TCopula(0.5, 10)),
    ]:
        rows.append((label, CopulaLaw(cop, normal)))
    gauss = GaussianCopula(GAUSS_COPULA_RHO)
    for label, marg in [
        ("GaussUnif(0,1)", Uniform(0, 1)),
        ("GaussGLD(0,1,0.25,0.25)", GLD(0, 1, 0.25, 0.25)),
        ("Gausst(10)", StudentT(10)),
        ("GaussGLD(0,1,-0.15,-0.15)", GLD(0, 1, -0.15, -0.15)),
    ]:
        rows.append((label, CopulaLaw(gauss, (marg,) * p)))
    return rows


def lookup(label, p=1):
    """Find a table row by label (univariate when ``p == 1``)."""
    rows = univariate_zoo() if p == 1 else multivariate_zoo(p)
    for lab, spec in rows:
        if lab == label:
            return spec
    raise InvalidInput(f"no table row labelled {label!r} for p={p}")


__all__ = [
    name for name in dir() if not name.startswith("_") and name not in ("math", "re", "np", "special", "dataclass")
]
