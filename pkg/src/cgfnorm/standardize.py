"""Sample moments and scaled residuals.

The scaled residuals of a sample ``X`` are ``Z_i = S^{-1/2} (X_i - mean)``
where ``S`` is the biased (divisor ``n``) covariance and ``S^{-1/2}`` its
unique symmetric positive-definite inverse square root. Under multivariate
normality their joint law does not depend on the mean or covariance.

Row reductions run over a lexicographically sorted copy of the sample so
every result is exactly invariant to the order of the input rows.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, SingularCovariance

#: relative eigenvalue floor below which a covariance counts as singular
SINGULAR_RTOL = 1e-12


def as_sample(x, min_rows=1):
    """Validate ``x`` and return it as a float ``(n, p)`` array.

    One-dimensional input is treated as a single column.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidInput(f"sample must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_rows or arr.shape[1] < 1:
        raise InvalidInput(
            f"sample needs at least {min_rows} row(s) and one column, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("sample contains non-finite entries")
    return arr


def row_order(x):
    """Permutation sorting the rows of ``x`` lexicographically."""
    return np.lexsort(x.T[::-1])


def _centered(xs):
    # differencing against the first (sorted) row makes constant columns
    # exactly zero and removes large offsets before any rounding; both steps
    # are exact whenever the data and a shift are exactly representable,
    # which makes the residuals translation invariant bit-for-bit
    y = xs - xs[0]
    n = xs.shape[0]
    return (n * y - y.sum(axis=0)) / n


def sample_mean(x):
    """Column means of ``x``."""
    x = as_sample(x)
    return x[row_order(x)].mean(axis=0)


def sample_cov_biased(x):
    """Covariance with divisor ``n``."""
    x = as_sample(x, min_rows=2)
    c = _centered(x[row_order(x)])
    s = c.T @ c / x.shape[0]
    return (s + s.T) / 2


def sym_inv_sqrt(s, rtol=SINGULAR_RTOL):
    """Unique symmetric positive-definite ``A`` with ``A @ s @ A = I``.

    Parameters
    ----------
    s : array_like, shape (p, p)
        Symmetric positive-definite matrix.
    rtol : float
        ``s`` is declared singular when its smallest eigenvalue is at most
        ``rtol`` times its largest.

    Raises
    ------
    SingularCovariance
        If ``s`` fails the eigenvalue test.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidInput("matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(s))))
    if np.max(np.abs(s - s.T)) > 1e-10 * scale:
        raise InvalidInput("matrix is not symmetric")
    lam, vec = np.linalg.eigh((s + s.T) / 2)
    if lam[-1] <= 0 or lam[0] <= rtol * lam[-1]:
        raise SingularCovariance(
            f"covariance is singular (eigenvalues {lam[0]:.3g} .. {lam[-1]:.3g})", lam
        )
    a = (vec / np.sqrt(lam)) @ vec.T
    return (a + a.T) / 2


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    cov: np.ndarray
    inv_sqrt: np.ndarray
    residuals: np.ndarray

    @property
    def n(self):
        return self.residuals.shape[0]

    @property
    def p(self):
        return self.residuals.shape[1]


def scaled_residuals(x):
    """Standardize a sample by its mean and biased covariance.

    Requires ``n >= p + 1``. Raises `SingularCovariance` when the
    covariance cannot be inverted.
    """
    x = as_sample(x, min_rows=2)
    n, p = x.shape
    if n < p + 1:
        raise InvalidInput(f"need n >= p + 1, got n={n}, p={p}")
    order = row_order(x)
    xs = x[order]
    c = _centered(xs)
    cov = c.T @ c / n
    cov = (cov + cov.T) / 2
    a = sym_inv_sqrt(cov)
    z_sorted = c @ a
    z = np.empty_like(z_sorted)
    z[order] = z_sorted
    return Standardization(mean=xs.mean(axis=0), cov=cov, inv_sqrt=a, residuals=z)
