import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgfnorm.ecgf import (
    EvalPointSet, ecgf_eval, marginal_cgf_second, pair_batch, pair_kernel, sample_ball_points,
    sample_cube_points, sample_points, stat_pair, stat_univariate, univariate_batch,
)
from cgfnorm.errors import InvalidInput
from cgfnorm.standardize import scaled_residuals


def points(arr, seed=-1):
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return EvalPointSet(points=a, radius=float(np.abs(a).max() or 1.0), seed=seed)


# --- oracles ------------------------------------------------------------------


def log_mgf(z, t):
    return math.log(math.fsum(math.exp(float(zi @ t)) for zi in z) / len(z))


def direct_hessian(z, t):
    """Hessian of log M from its definition: (M H_M - g g') / M^2."""
    n, p = z.shape
    w = [math.exp(float(zi @ t)) for zi in z]
    m = sum(w) / n
    g = sum(wi * zi for wi, zi in zip(w, z)) / n
    hm = sum(wi * np.outer(zi, zi) for wi, zi in zip(w, z)) / n
    return (m * hm - np.outer(g, g)) / m**2


def direct_pair(z, pts):
    """H and D rebuilt entry by entry from the definitions."""
    n, p = z.shape
    h = d = 0.0
    for t in pts:
        hl = direct_hessian(z, t)
        for i in range(p):
            for j in range(i + 1, p):
                h += hl[i, j] ** 2
            s = np.zeros(p)
            s[i] = t[i]
            d += (direct_hessian(z, s)[i, i] - 1.0) ** 2
    return n * h, n * d


# --- point sets ---------------------------------------------------------------


def test_ball_points_examples():
    pts = sample_ball_points(3, 500, 3.0, 42)
    assert pts.points.shape == (500, 3)
    assert np.linalg.norm(pts.points, axis=1).max() <= 3.0
    one = sample_ball_points(1, 10, 0.5, 0)
    assert one.points.shape == (10, 1) and np.all(np.abs(one.points) <= 0.5)


def test_ball_points_uniform():
    pts = sample_ball_points(2, 100_000, 1.0, 3).points
    assert np.all(np.abs(pts.mean(axis=0)) < 4 * math.sqrt(0.25 / 100_000))
    # P(|t| <= r) = r^p for the uniform ball
    r = np.linalg.norm(pts, axis=1)
    assert abs(np.mean(r <= 0.5) - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 100_000)


def test_cube_points():
    pts = sample_cube_points(3, 20_000, 2.0, 1)
    assert pts.law == "cube" and pts.points.max() <= 2.0 and pts.points.min() >= -2.0
    # uniform marginals: variance R^2 / 3
    assert np.allclose(pts.points.var(axis=0), 4 / 3, rtol=0.05)


def test_point_sets_are_deterministic_and_readonly():
    a, b = sample_points(3, 50, 3.0, 7), sample_points(3, 50, 3.0, 7)
    assert a.same_as(b)
    assert not a.same_as(sample_points(3, 50, 3.0, 7, law="cube"))
    with pytest.raises(ValueError):
        a.points[0, 0] = 1.0


@pytest.mark.parametrize("args", [(0, 5, 1.0), (2, 0, 1.0), (2, 5, 0.0), (2, 5, -1.0), (2, 5, math.inf)])
def test_point_set_validation(args):
    with pytest.raises(InvalidInput):
        sample_ball_points(*args)


def test_unknown_point_law():
    with pytest.raises(InvalidInput):
        sample_points(2, 5, 1.0, 0, law="sphere")


# --- ecgf_eval ----------------------------------------------------------------


def test_eval_at_zero():
    z = np.random.default_rng(1).standard_normal((15, 3))
    ev = ecgf_eval(z, np.zeros(3))
    assert ev.m == 1.0
    assert np.allclose(ev.grad, z.mean(axis=0), atol=1e-15)
    c = z - z.mean(axis=0)
    assert np.allclose(ev.hess_lambda, c.T @ c / 15, atol=1e-14)
    zs = scaled_residuals(z).residuals
    assert np.max(np.abs(ecgf_eval(zs, np.zeros(3)).hess_lambda - np.eye(3))) < 1e-10


def test_eval_single_row():
    ev = ecgf_eval(np.array([[0.3, -1.2]]), np.array([2.0, 0.5]))
    assert np.max(np.abs(ev.hess_lambda)) < 1e-15


def test_eval_finite_differences():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((20, 3))
    t = rng.uniform(-1, 1, 3)
    h = 1e-5
    fd = np.empty((3, 3))
    e = np.eye(3) * h
    for i in range(3):
        for j in range(3):
            fd[i, j] = (log_mgf(z, t + e[i] + e[j]) - log_mgf(z, t + e[i] - e[j])
                        - log_mgf(z, t - e[i] + e[j]) + log_mgf(z, t - e[i] - e[j])) / (4 * h * h)
    assert np.max(np.abs(ecgf_eval(z, t).hess_lambda - fd)) < 1e-6


def test_eval_matches_direct_definition():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((9, 2))
    for _ in range(5):
        t = rng.uniform(-2, 2, 2)
        ev = ecgf_eval(z, t)
        assert np.max(np.abs(ev.hess_lambda - direct_hessian(z, t))) < 1e-12
        m = np.mean(np.exp(z @ t))
        assert abs(ev.m - m) < 1e-12 * m


def test_eval_extreme_exponents_stay_finite():
    z = np.array([[40.0, 0.0], [-40.0, 1.0], [0.0, -1.0]])
    ev = ecgf_eval(z, np.array([30.0, 0.0]))
    assert np.all(np.isfinite(ev.hess_lambda))
    assert np.all(np.linalg.eigvalsh(ev.hess_lambda) >= -1e-12)


# --- marginal second derivative and the statistics -----------------------------


def test_marginal_second_examples():
    col = np.random.default_rng(3).standard_normal(30)
    assert abs(marginal_cgf_second(col, 0.0) - col.var()) < 1e-13
    assert marginal_cgf_second(np.full(10, 2.5), 1.7) == 0.0
    z = np.random.default_rng(4).standard_normal((25, 3))
    s = np.array([0.0, 0.8, 0.0])
    assert abs(marginal_cgf_second(z[:, 1], 0.8) - ecgf_eval(z, s).hess_lambda[1, 1]) < 1e-12


def test_zero_point_set_gives_zero():
    z = scaled_residuals(np.random.default_rng(6).standard_normal((30, 3))).residuals
    pair = stat_pair(z, points(np.zeros((1, 3))))
    assert abs(pair.h_stat) < 1e-20 and abs(pair.d_stat) < 1e-20
    assert stat_univariate(z[:, 0], points([0.0])) < 1e-20


def test_pair_matches_direct_summation():
    rng = np.random.default_rng(9)
    z = scaled_residuals(rng.standard_normal((5, 2))).residuals
    pts = sample_ball_points(2, 3, 3.0, 9)
    pair = stat_pair(z, pts)
    h, d = direct_pair(z, pts.points)
    assert abs(pair.h_stat - h) < 1e-10 * max(1, h)
    assert abs(pair.d_stat - d) < 1e-10 * max(1, d)


def test_pair_p1_has_no_off_diagonal():
    z = np.random.default_rng(1).standard_normal((1, 20, 1))
    off, _ = pair_kernel(z, np.linspace(-3, 3, 7)[:, None])
    assert np.all(off == 0.0)


def test_two_point_closed_form():
    # residuals {-1, 1}: Lambda(t) = log cosh t, so Lambda'' = 1 - tanh^2
    t = 0.3
    z = np.array([-1.0, 1.0])
    assert abs(marginal_cgf_second(z, t) - (1 - math.tanh(t) ** 2)) < 1e-15
    pts = points([0.3, 0.3, -0.3])
    expected = 2 * math.tanh(t) ** 4 * 3
    assert abs(stat_univariate(z, pts) - expected) < 1e-14


def test_batch_agrees_with_single_and_blocks(monkeypatch):
    rng = np.random.default_rng(12)
    zs = np.stack([scaled_residuals(rng.standard_normal((40, 3))).residuals for _ in range(4)])
    pts = sample_ball_points(3, 37, 3.0, 1).points
    h, d = pair_batch(zs, pts)
    import cgfnorm.ecgf as ecgf_mod
    monkeypatch.setattr(ecgf_mod, "_BLOCK_ELEMS", 200)  # force many point blocks
    h2, d2 = pair_batch(zs, pts)
    assert np.allclose(h, h2, rtol=1e-13) and np.allclose(d, d2, rtol=1e-13)
    for b in range(4):
        pair = stat_pair(zs[b], EvalPointSet(points=pts, radius=3.0, seed=1))
        assert abs(pair.h_stat - h[b]) <= 1e-12 * h[b]


def test_univariate_batch_matches_loop():
    rng = np.random.default_rng(13)
    zs = rng.standard_normal((3, 25))
    pts = np.linspace(-3, 3, 9)
    u = univariate_batch(zs, pts[:, None])
    for b in range(3):
        ref = 25 * sum((marginal_cgf_second(zs[b], t) - 1) ** 2 for t in pts)
        assert abs(u[b] - ref) < 1e-10 * ref


def test_dimension_mismatch():
    z = np.random.default_rng(0).standard_normal((10, 3))
    with pytest.raises(InvalidInput):
        stat_pair(z, sample_ball_points(2, 5, 1.0, 0))
    with pytest.raises(InvalidInput):
        stat_univariate(z[:, 0], sample_ball_points(2, 5, 1.0, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pair_permutation_and_sign_flip_invariance(seed):
    rng = np.random.default_rng(seed)
    z = scaled_residuals(rng.standard_normal((15, 2))).residuals
    pts = sample_ball_points(2, 20, 3.0, 0)
    a = stat_pair(z, pts)
    b = stat_pair(z[rng.permutation(15)], pts)
    assert a.h_stat == b.h_stat and a.d_stat == b.d_stat
    # H, D are even in t for a symmetric point set {t, -t}
    sym = EvalPointSet(points=np.vstack([pts.points, -pts.points]), radius=3.0, seed=0)
    c = stat_pair(z, sym)
    d = stat_pair(-z, sym)
    assert math.isclose(c.h_stat, d.h_stat, rel_tol=1e-12)
    assert math.isclose(c.d_stat, d.d_stat, rel_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0))
def test_statistics_nonnegative(seed, radius):
    rng = np.random.default_rng(seed)
    z = scaled_residuals(rng.standard_exponential((20, 3))).residuals
    pair = stat_pair(z, sample_ball_points(3, 10, radius, seed % 1000))
    assert pair.h_stat >= 0 and pair.d_stat >= 0
