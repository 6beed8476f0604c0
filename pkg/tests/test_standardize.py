import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cgfnorm.errors import InvalidInput, SingularCovariance
from cgfnorm.standardize import (
    as_sample, row_order, sample_cov_biased, sample_mean, scaled_residuals, sym_inv_sqrt,
)

CROSS = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])


def test_mean_examples():
    assert np.array_equal(sample_mean(CROSS), [0.0, 0.0])
    assert np.array_equal(sample_mean([[3.5]]), [3.5])
    x = np.random.default_rng(7).standard_normal((1000, 2))
    assert np.all(np.abs(sample_mean(x)) < 4 / np.sqrt(1000))


def test_mean_empty_rejected():
    with pytest.raises(InvalidInput):
        sample_mean(np.empty((0, 2)))


def test_cov_examples():
    assert np.allclose(sample_cov_biased(CROSS), np.diag([0.5, 0.5]), atol=0, rtol=0)
    assert np.array_equal(sample_cov_biased(np.full((6, 2), 4.2)), np.zeros((2, 2)))


def test_cov_matches_double_loop():
    x = np.random.default_rng(3).standard_normal((5, 3))
    xbar = x.mean(axis=0)
    ref = np.zeros((3, 3))
    for i in range(5):
        for a in range(3):
            for b in range(3):
                ref[a, b] += (x[i, a] - xbar[a]) * (x[i, b] - xbar[b])
    assert np.max(np.abs(sample_cov_biased(x) - ref / 5)) < 1e-12


def test_cov_needs_two_rows():
    with pytest.raises(InvalidInput):
        sample_cov_biased([[1.0, 2.0]])


def test_inv_sqrt_examples():
    assert np.allclose(sym_inv_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    assert np.allclose(sym_inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)
    rng = np.random.default_rng(1)
    b = rng.standard_normal((4, 4))
    s = b @ b.T + 0.5 * np.eye(4)
    a = sym_inv_sqrt(s)
    assert np.linalg.norm(a @ s @ a - np.eye(4), 2) < 1e-10
    assert np.array_equal(a, a.T)
    # unique symmetric PD root: eigenvalues are lambda^{-1/2}
    assert np.allclose(np.sort(np.linalg.eigvalsh(a)), np.sort(np.linalg.eigvalsh(s) ** -0.5), atol=1e-10)


def test_inv_sqrt_singular():
    s = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularCovariance) as exc:
        sym_inv_sqrt(s)
    assert exc.value.eigenvalues is not None


def test_inv_sqrt_rejects_asymmetric():
    with pytest.raises(InvalidInput):
        sym_inv_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_residuals_cross():
    z = scaled_residuals(CROSS).residuals
    assert np.allclose(z, np.sqrt(2) * CROSS, atol=1e-14)


def test_residuals_invariants():
    x = np.random.default_rng(11).standard_normal((30, 4)) @ np.diag([1, 2, 3, 4]) + 7
    st_ = scaled_residuals(x)
    z = st_.residuals
    assert np.max(np.abs(z.mean(axis=0))) < 1e-10
    assert np.max(np.abs(z.T @ z / 30 - np.eye(4))) < 1e-8
    assert st_.n == 30 and st_.p == 4


def test_residuals_need_n_above_p():
    with pytest.raises(InvalidInput):
        scaled_residuals(np.random.default_rng(0).standard_normal((3, 3)))


def test_duplicate_column_is_singular():
    x = np.random.default_rng(2).standard_normal((20, 2))
    with pytest.raises(SingularCovariance):
        scaled_residuals(np.column_stack([x, x[:, 0]]))


def test_non_finite_rejected():
    with pytest.raises(InvalidInput):
        as_sample([[1.0, np.nan], [2.0, 3.0]])


def test_univariate_scale_invariance():
    x = np.random.default_rng(4).standard_normal((25, 1))
    for c in (3.0, -0.25, 1e3):
        assert np.max(np.abs(scaled_residuals(c * x).residuals - np.sign(c) * scaled_residuals(x).residuals)) < 1e-10


def test_affine_equivariance():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((40, 3))
    a = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    z = scaled_residuals(x).residuals
    za = scaled_residuals(x @ a.T).residuals
    # za = z O' for an orthogonal O; recover O by least squares
    o, *_ = np.linalg.lstsq(z, za, rcond=None)
    assert np.max(np.abs(o.T @ o - np.eye(3))) < 1e-8
    assert np.max(np.abs(z @ o - za)) < 1e-8


def test_row_order_is_permutation_free():
    x = np.random.default_rng(8).standard_normal((12, 2))
    perm = np.random.default_rng(9).permutation(12)
    assert np.array_equal(x[row_order(x)], x[perm][row_order(x[perm])])


samples = arrays(
    np.float64, st.tuples(st.integers(5, 25), st.integers(1, 3)),
    elements=st.floats(-100, 100, allow_nan=False, width=64),
)


@settings(max_examples=60, deadline=None)
@given(samples, st.lists(st.integers(-50, 50), min_size=3, max_size=3))
def test_translation_invariance(x, shift):
    try:
        z = scaled_residuals(x).residuals
    except (SingularCovariance, InvalidInput):
        return
    b = np.asarray(shift[: x.shape[1]], dtype=float)
    try:
        z2 = scaled_residuals(x + b).residuals
    except SingularCovariance:
        return
    assert np.max(np.abs(z - z2)) < 1e-10 * max(1.0, np.abs(z).max())


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 30).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(0, 2**32 - 1))))
def test_dyadic_translation_exact(args):
    n, seed = args
    rng = np.random.default_rng(seed)
    x = np.round(rng.standard_normal((n, 2)) * 32) / 32
    try:
        z = scaled_residuals(x).residuals
    except SingularCovariance:
        return
    assert np.array_equal(z, scaled_residuals(x + np.array([5.0, -9.0])).residuals)
