import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from cgfnorm import _streams
from cgfnorm.distributions import (
    AMH, COPULAS, GLD, MARGINALS, Beta, Clayton, CopulaLaw, Exp, Frank, GaussianCopula, Gumbel,
    LoConN, MultivariateNormal, MultivariateT, Normal, Pareto, ProductMarginal, ScConN, StudentT,
    TCopula, TruncNormal, Uniform, copula_sample, gld_quantile, kendall_tau_clayton,
    kendall_tau_gumbel, lookup, multivariate_zoo, parse_spec, sample, trunc_normal_sample,
    univariate_zoo,
)
from cgfnorm.errors import InvalidInput, SpecParseError

BIG = 1_000_000


def rng(i=0):
    return _streams.substream(123, _streams.MISC, i)


def brute_tau(x, y):
    s = 0
    n = len(x)
    for i in range(n):
        s += np.sum(np.sign(x[i] - x[i + 1:]) * np.sign(y[i] - y[i + 1:]))
    return 2 * s / (n * (n - 1))


# --- GLD and truncated normal ------------------------------------------------------


def test_gld_examples():
    assert gld_quantile((0, 1, 0.5, 0.5), 0.5) == 0.0
    u = np.linspace(0, 1, 11)
    assert np.allclose(gld_quantile((0, 1, 1, 1), u), 2 * u - 1, atol=1e-15)
    ref = mpmath.mpf("0.9") ** mpmath.mpf("0.25") - mpmath.mpf("0.1") ** mpmath.mpf("0.25")
    assert abs(gld_quantile((0, 1, 0.25, 0.25), 0.9) - float(ref)) < 1e-15


def test_gld_validation():
    with pytest.raises(InvalidInput):
        gld_quantile((0, 0, 1, 1), 0.5)
    with pytest.raises(InvalidInput):
        gld_quantile((0, 1, 1, 1), 1.5)


def test_trunc_normal_support_and_variance():
    x = trunc_normal_sample(-2, 2, 0, 1, BIG, 1)
    assert x.min() > -2 and x.max() < 2
    phi, Phi = stats.norm.pdf(2), stats.norm.cdf(2)
    var = 1 - 2 * 2 * phi / (2 * Phi - 1)
    # cross-check the closed form by quadrature
    num, _ = integrate.quad(lambda t: t * t * stats.norm.pdf(t), -2, 2)
    assert abs(var - num / (2 * Phi - 1)) < 1e-12
    assert abs(var - 0.7737413) < 1e-6
    se = math.sqrt(np.var(x**2) / BIG)
    assert abs(x.var() - var) < 4 * se


def test_trunc_normal_negligible_truncation():
    x = trunc_normal_sample(-40, 40, 0, 1, BIG, 2)
    assert abs(x.mean()) < 4 / 1000 and abs(x.var() - 1) < 4 * math.sqrt(2 / BIG)


def test_trunc_normal_far_right_tail_is_accurate():
    x = TruncNormal(8, 9, 0, 1).sample(rng(), 10_000)
    assert x.min() >= 8 and x.max() <= 9
    # mean of N(0,1) on (8, 9) is (phi(8) - phi(9)) / (Phi(9) - Phi(8)) ~ 8.1216
    ref = (stats.norm.pdf(8) - stats.norm.pdf(9)) / (stats.norm.sf(8) - stats.norm.sf(9))
    assert abs(x.mean() - ref) < 0.01


# --- marginals ------------------------------------------------------------------


@pytest.mark.parametrize(
    "marg, ref",
    [
        (Normal(1, 2), stats.norm(1, 2)),
        (Uniform(-1, 3), stats.uniform(-1, 4)),
        (Beta(2, 3), stats.beta(2, 3)),
        (StudentT(5), stats.t(5)),
        (Exp(2), stats.expon(scale=0.5)),
        (MARGINALS["laplace"](), stats.laplace()),
        (MARGINALS["logistic"](), stats.logistic()),
        (MARGINALS["lognormal"](0, 0.5), stats.lognorm(0.5)),
        (MARGINALS["gamma"](4, 5), stats.gamma(4, scale=1 / 5)),
        (MARGINALS["weibull"](3, 1), stats.weibull_min(3)),
        (Pareto(1, 3), stats.pareto(3)),
        (MARGINALS["chisq"](4), stats.chi2(4)),
        (MARGINALS["cauchy"](), stats.cauchy()),
    ],
    ids=str,
)
def test_marginal_laws_match_scipy(marg, ref):
    x = marg.sample(rng(1), 200_000)
    assert stats.kstest(x, ref.cdf).pvalue > 1e-4
    u = np.array([0.01, 0.3, 0.5, 0.9, 0.999])
    try:
        q = marg.quantile(u)
    except InvalidInput:
        return
    assert np.allclose(q, ref.ppf(u), rtol=1e-9, atol=1e-12)


def test_mixtures():
    x = ScConN(0, 5).sample(rng(3), 200_000)
    assert stats.kstest(x, "norm").pvalue > 1e-4
    x = ScConN(0.2, 5).sample(rng(4), BIG)
    assert abs(x.var() - 5.8) < 4 * math.sqrt(np.var(x**2) / BIG)
    y = LoConN(0.5, 3).sample(rng(5), BIG)
    assert abs(y.mean() - 1.5) < 4 * y.std() / 1000


def test_marginal_validation():
    for bad in (lambda: Normal(0, -1), lambda: Beta(0, 1), lambda: StudentT(0), lambda: Uniform(1, 1),
                lambda: TruncNormal(2, -2, 0, 1), lambda: ScConN(1.5, 2)):
        with pytest.raises(InvalidInput):
            bad()


# --- copulas ----------------------------------------------------------------------


@pytest.mark.parametrize("cop", [Clayton(2), Gumbel(2), Frank(5), AMH(0.95), TCopula(0.5, 5),
                                 GaussianCopula(0.5)], ids=str)
def test_copula_margins_uniform(cop):
    u = copula_sample(cop, 2, BIG, 11)
    assert u.min() > 0 and u.max() < 1
    for j in range(2):
        assert stats.kstest(u[:, j], "uniform").statistic < 0.002


def test_clayton_tau():
    u = copula_sample(Clayton(2), 2, 200_000, 12)
    tau = stats.kendalltau(u[:, 0], u[:, 1]).statistic
    assert abs(tau - kendall_tau_clayton(2)) < 0.01
    sub = u[:2000]
    assert abs(brute_tau(sub[:, 0], sub[:, 1]) - stats.kendalltau(sub[:, 0], sub[:, 1]).statistic) < 1e-12
    u0 = copula_sample(Clayton(1e-6), 2, 100_000, 13)
    assert abs(stats.kendalltau(u0[:, 0], u0[:, 1]).statistic) < 0.01


def test_gumbel_and_frank_tau():
    u = copula_sample(Gumbel(2), 2, 200_000, 14)
    assert abs(stats.kendalltau(u[:, 0], u[:, 1]).statistic - kendall_tau_gumbel(2)) < 0.01
    # Frank tau = 1 - 4/theta (1 - D1(theta)), D1 the Debye function
    theta = 5.0
    d1 = integrate.quad(lambda t: t / np.expm1(t), 0, theta)[0] / theta
    u = copula_sample(Frank(theta), 2, 200_000, 15)
    assert abs(stats.kendalltau(u[:, 0], u[:, 1]).statistic - (1 - 4 / theta * (1 - d1))) < 0.01


def test_frank_negative_theta_bivariate_only():
    u = copula_sample(Frank(-3), 2, 100_000, 16)
    assert stats.kendalltau(u[:, 0], u[:, 1]).statistic < -0.25
    with pytest.raises(InvalidInput):
        copula_sample(Frank(-3), 3, 10, 16)


def test_copulas_need_two_dimensions():
    with pytest.raises(InvalidInput):
        copula_sample(Clayton(1), 1, 10, 0)


def test_gaussian_copula_correlation():
    spec = CopulaLaw(GaussianCopula(0.5), (Normal(0, 1),) * 3)
    x = spec.draw(rng(6), 200_000)
    c = np.corrcoef(x.T)
    assert np.max(np.abs(c[np.triu_indices(3, 1)] - 0.5)) < 0.01


def test_product_normal_margins():
    x = ProductMarginal(Normal(0, 1), 3).draw(rng(7), 200_000)
    for j in range(3):
        assert stats.kstest(x[:, j], "norm").pvalue > 1e-4


def test_multivariate_t_kurtosis():
    x = MultivariateT(5, 3).draw(rng(8), BIG)
    k = stats.kurtosis(x[:, 0], fisher=False)
    # the sample kurtosis of t5 converges slowly (infinite 8th moment); wide band
    assert 7.0 < k < 11.5


def test_mvn_moments():
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = MultivariateNormal(np.array([1.0, -1.0]), cov).draw(rng(9), 200_000)
    assert np.allclose(x.mean(axis=0), [1, -1], atol=0.02)
    assert np.allclose(np.cov(x.T), cov, atol=0.03)


# --- spec grammar -------------------------------------------------------------------


def test_zoo_sizes_and_round_trip():
    rows = univariate_zoo() + multivariate_zoo(3) + multivariate_zoo(5)
    assert len(univariate_zoo()) == 36 and len(multivariate_zoo(3)) == 52
    for label, spec in rows:
        text = str(spec)
        again = parse_spec(text)
        assert str(again) == text, label
        x = sample(again, 20, 3)
        assert x.shape == (20, spec.p) and np.all(np.isfinite(x)), label


def test_sampling_is_deterministic():
    spec = parse_spec("copula:clayton(2):marginal=exp(1):p=3")
    assert np.array_equal(sample(spec, 50, 9, 4), sample(spec, 50, 9, 4))
    assert not np.array_equal(sample(spec, 50, 9, 4), sample(spec, 50, 9, 5))


def test_parse_variants():
    assert parse_spec("mvn:mean=[1,2]:cov=equi(0.3):p=2").p == 2
    assert str(parse_spec(" product:normal(0,1):p=2 ")) == "product:normal(0,1):p=2"
    s = parse_spec("copula:gumbel(1.5):marginals=normal(0,1);exp(1);t(5)")
    assert s.p == 3 and "marginals=" in str(s)
    assert parse_spec("mixture:scconn(0.2,5)").p == 1


@pytest.mark.parametrize(
    "text, pos",
    [
        ("product:gld(0,1,x):p=3", 16),
        ("product:foo(1):p=3", 8),
        ("product:normal(0,1)", 19),
        ("product:normal(0,1):p=0", 22),
        ("product:normal(0,1):p=3:q=1", 24),
        ("copula:clayton(2):p=3", 21),
        ("weird:thing", 0),
        ("mvn:mean=[1]:p=2", 9),
    ],
)
def test_parse_errors_have_positions(text, pos):
    with pytest.raises(SpecParseError) as exc:
        parse_spec(text)
    assert exc.value.position == pos
    assert isinstance(exc.value, InvalidInput)


def test_lookup():
    assert str(lookup("Frank(10)", 3)) == "copula:frank(10):marginal=normal(0,1):p=3"
    with pytest.raises(InvalidInput):
        lookup("nope", 3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 20), st.floats(0.1, 20), st.integers(1, 6))
def test_beta_spec_round_trip(a, b, p):
    spec = ProductMarginal(Beta(a, b), p)
    assert str(parse_spec(str(spec))) == str(spec)
    assert parse_spec(str(spec)).marginal == spec.marginal


def test_all_copula_names_parse():
    for name, cls in COPULAS.items():
        args = {"clayton": "1", "gumbel": "2", "frank": "3", "amh": "0.5", "tcopula": "0.5,5",
                "gaussian": "0.5"}[name]
        spec = parse_spec(f"copula:{name}({args}):marginal=normal(0,1):p=2")
        assert isinstance(spec.copula, cls)


def test_gld_marginal_matches_quantile():
    g = GLD(0, 1, 0.25, 0.25)
    assert np.allclose(g.quantile(np.array([0.1, 0.9])), gld_quantile((0, 1, 0.25, 0.25), [0.1, 0.9]))
