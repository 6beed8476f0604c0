"""Empirical cumulant generating function and the H / D / U statistics.

For residuals ``z_1..z_n`` the empirical MGF is ``M(t) = mean(exp(t'z_i))``
and the Hessian of ``log M`` is the covariance of the ``z_i`` under the
exponentially tilted weights ``w_i(t) ~ exp(t'z_i)``. Everything below is
computed in that weighted-covariance form. Single-point evaluation always
subtracts ``max_i t'z_i`` from the exponents; the batch kernels do so only
when a Cauchy-Schwarz bound says an exponent could come near overflow.

The multivariate statistics compare the tilted covariance with the
identity at a fixed set of evaluation points::

    H = n * sum_l sum_{i<j} H_ij(t_l)^2
    D = n * sum_l sum_i (D_ii(t_l) - 1)^2

where ``D_ii(t)`` is the tilted variance of column ``i`` alone, evaluated at
the scalar ``t_i``. The univariate statistic ``U`` is ``D`` with ``p = 1``.
"""

from dataclasses import dataclass

import numpy as np

from . import _streams
from .errors import InvalidInput
from .standardize import as_sample, row_order

DEFAULT_RADIUS = 3.0
DEFAULT_POINTS = 500
POINT_LAWS = ("ball", "cube")


@dataclass(frozen=True, eq=False)
class EvalPointSet:
    """Fixed evaluation points, drawn from the ball (or cube) of radius ``radius``."""

    points: np.ndarray
    radius: float
    seed: int
    law: str = "ball"

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n_points(self):
        return self.points.shape[0]

    def same_as(self, other):
        return (
            self.seed == other.seed
            and self.law == other.law
            and self.radius == other.radius
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )


def sample_ball_points(p, n_points=DEFAULT_POINTS, radius=DEFAULT_RADIUS, seed=0):
    """Draw ``n_points`` points uniformly from the closed ball of radius ``radius`` in R^p.

    Directions are normalized Gaussians and radii are ``radius * U**(1/p)``.
    The result depends only on ``(p, n_points, radius, seed)``.
    """
    p, n_points = int(p), int(n_points)
    if p < 1 or n_points < 1:
        raise InvalidInput("need p >= 1 and n_points >= 1")
    radius = float(radius)
    if not radius > 0 or not np.isfinite(radius):
        raise InvalidInput(f"radius must be positive, got {radius}")
    rng = _streams.substream(seed, _streams.POINTS)
    g = rng.standard_normal((n_points, p))
    u = rng.random(n_points)
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    pts = g / norms[:, None] * (radius * u ** (1.0 / p))[:, None]
    over = np.linalg.norm(pts, axis=1) / radius
    pts[over > 1] /= over[over > 1, None]
    pts.setflags(write=False)
    return EvalPointSet(points=pts, radius=radius, seed=int(seed))


def sample_cube_points(p, n_points=DEFAULT_POINTS, radius=DEFAULT_RADIUS, seed=0):
    """Draw ``n_points`` points uniformly from the cube ``[-radius, radius]^p``.

    Coincides in law with `sample_ball_points` for ``p = 1``. Compared with
    the ball it puts far more mass at large single coordinates, which is
    where the marginal (``D``) component gets its power against
    short-tailed laws.
    """
    p, n_points = int(p), int(n_points)
    if p < 1 or n_points < 1:
        raise InvalidInput("need p >= 1 and n_points >= 1")
    radius = float(radius)
    if not radius > 0 or not np.isfinite(radius):
        raise InvalidInput(f"radius must be positive, got {radius}")
    rng = _streams.substream(seed, _streams.POINTS)
    pts = rng.uniform(-radius, radius, (n_points, p))
    pts.setflags(write=False)
    return EvalPointSet(points=pts, radius=radius, seed=int(seed), law="cube")


def sample_points(p, n_points=DEFAULT_POINTS, radius=DEFAULT_RADIUS, seed=0, law="ball"):
    """Evaluation points from the named sampling law (``"ball"`` or ``"cube"``)."""
    if law == "ball":
        return sample_ball_points(p, n_points, radius, seed)
    if law == "cube":
        return sample_cube_points(p, n_points, radius, seed)
    raise InvalidInput(f"unknown point law {law!r}; choose from {list(POINT_LAWS)}")


@dataclass(frozen=True, eq=False)
class EcgfEval:
    m: float
    grad: np.ndarray
    hess_m: np.ndarray
    hess_lambda: np.ndarray


def _tilt(z, t, extra=0.0):
    """Exponents shifted by their maximum (plus ``extra``), and the shift."""
    e = z @ t
    c = float(e.max()) + extra
    return np.exp(e - c), c


def _rescale(a, scale):
    # exact zeros stay zero when the scale overflows to inf
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(a == 0, 0.0, a * scale)


def ecgf_eval(z, t, _extra_shift=0.0):
    """Empirical MGF, its gradient and Hessian, and the Hessian of its log at ``t``.

    ``m``, ``grad`` and ``hess_m`` overflow to ``inf`` for extreme exponents;
    ``hess_lambda`` is always finite because the shift cancels in the ratio.
    """
    z = as_sample(z)
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.shape[0] != z.shape[1]:
        raise InvalidInput(f"t has length {t.shape[0]} but residuals have {z.shape[1]} columns")
    if not np.all(np.isfinite(t)):
        raise InvalidInput("t must be finite")
    z = z[row_order(z)]
    n = z.shape[0]
    w, c = _tilt(z, t, _extra_shift)
    sw = w.sum()
    pw = w / sw
    mu = pw @ z
    dev = z - mu
    hl = (dev.T * pw) @ dev
    hl = (hl + hl.T) / 2
    with np.errstate(over="ignore"):
        scale = np.exp(c)
        m = sw / n * scale
        grad = _rescale((w @ z) / n, scale)
        hm = _rescale(((z.T * w) @ z) / n, scale)
    return EcgfEval(m=float(m), grad=grad, hess_m=(hm + hm.T) / 2, hess_lambda=hl)


def marginal_cgf_second(z_col, t):
    """Second derivative of the univariate empirical CGF of ``z_col`` at scalar ``t``."""
    z = np.sort(np.asarray(z_col, dtype=float).reshape(-1))
    if z.size == 0:
        raise InvalidInput("empty column")
    return float(_tilted_var(z[None, :], np.array([float(t)]))[0, 0])


# exponents below this never overflow a float64 sum over realistic n
_SAFE_EXPONENT = 600.0


def _weights(e, bound):
    """Exponentiate ``e`` (shape ``(B, n, N)``) in place, shifting only when needed."""
    if bound > _SAFE_EXPONENT:
        e -= e.max(axis=1, keepdims=True)
    return np.exp(e, out=e)


#: cap on the number of weights materialized at once (B * n * block)
_BLOCK_ELEMS = 1 << 22


def _point_blocks(b, n, n_points):
    step = max(1, _BLOCK_ELEMS // max(1, b * n))
    return [slice(i, min(i + step, n_points)) for i in range(0, n_points, step)]


def _tilted_var(z, t):
    """Tilted variances of univariate samples.

    Parameters
    ----------
    z : ndarray, shape (B, n)
    t : ndarray, shape (N,)

    Returns
    -------
    ndarray, shape (B, N)
    """
    b, n = z.shape
    basis = np.stack([np.ones_like(z), z, z * z], axis=1)  # (B, 3, n)
    zmax = float(np.max(np.abs(z)))
    out = np.empty((b, t.shape[0]))
    for blk in _point_blocks(b, n, t.shape[0]):
        tb = t[blk]
        w = _weights(z[:, :, None] * tb, float(np.max(np.abs(tb))) * zmax)
        m = basis @ w
        mu = m[:, 1] / m[:, 0]
        out[:, blk] = np.maximum(m[:, 2] / m[:, 0] - mu * mu, 0.0)
    return out


def pair_kernel(z, points):
    """Per-point squared deviations for a batch of residual matrices.

    Parameters
    ----------
    z : ndarray, shape (B, n, p)
    points : ndarray, shape (N, p)

    Returns
    -------
    off : ndarray, shape (B, N)
        ``sum_{i<j} H_ij(t_l)^2`` for each sample and point.
    diag : ndarray, shape (B, N)
        ``sum_i (D_ii(t_l) - 1)^2`` for each sample and point.
    """
    b, n, p = z.shape
    off = np.zeros((b, points.shape[0]))
    if p > 1:
        zmax = float(np.max(np.linalg.norm(z, axis=2)))
        iu, ju = np.triu_indices(p, k=1)
        basis = np.concatenate(
            [np.ones((b, n, 1)), z, z[:, :, iu] * z[:, :, ju]], axis=2
        ).transpose(0, 2, 1)
        for blk in _point_blocks(b, n, points.shape[0]):
            pb = points[blk]
            w = _weights(z @ pb.T, float(np.max(np.linalg.norm(pb, axis=1))) * zmax)
            m = basis @ w  # (B, 1 + p + K, block)
            mu = m[:, 1 : p + 1] / m[:, :1]
            h = m[:, p + 1 :] / m[:, :1] - mu[:, iu] * mu[:, ju]
            off[:, blk] = np.sum(h * h, axis=1)
    diag = np.zeros_like(off)
    for j in range(p):
        v = _tilted_var(z[:, :, j], points[:, j])
        diag += (v - 1.0) ** 2
    return off, diag


def pair_batch(z, points):
    """``(H, D)`` arrays for a batch of residual matrices of shape ``(B, n, p)``."""
    n = z.shape[1]
    off, diag = pair_kernel(z, points)
    return n * off.sum(axis=1), n * diag.sum(axis=1)


@dataclass(frozen=True)
class PairStatistics:
    h_stat: float
    d_stat: float
    n: int
    p: int
    point_set_seed: int


def _check_points(z, pts):
    if pts.dim != z.shape[1]:
        raise InvalidInput(f"point set has dimension {pts.dim} but residuals have {z.shape[1]} columns")


def stat_pair(z, pts):
    """Compute ``H`` and ``D`` for scaled residuals ``z`` on the point set ``pts``."""
    z = as_sample(z)
    _check_points(z, pts)
    z = z[row_order(z)]
    h, d = pair_batch(z[None], pts.points)
    return PairStatistics(
        h_stat=float(h[0]), d_stat=float(d[0]), n=z.shape[0], p=z.shape[1], point_set_seed=pts.seed
    )


def univariate_batch(z, points):
    """``U`` for a batch of univariate residual vectors of shape ``(B, n)``."""
    n = z.shape[1]
    v = _tilted_var(z, points[:, 0])
    return n * np.sum((v - 1.0) ** 2, axis=1)


def stat_univariate(z_col, pts):
    """Univariate statistic ``U = n * sum_l (Lambda''(t_l) - 1)^2``."""
    z = np.asarray(z_col, dtype=float).reshape(-1)
    if pts.dim != 1:
        raise InvalidInput(f"univariate statistic needs a 1-D point set, got dimension {pts.dim}")
    if z.size == 0:
        raise InvalidInput("empty sample")
    return float(univariate_batch(np.sort(z)[None], pts.points)[0])
