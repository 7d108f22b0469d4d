import math

import numpy as np
import pytest
from scipy import stats

from monorare.marginals import (
    Gamma,
    Triangular,
    TruncatedGumbel,
    TruncatedNormal,
    Uniform,
    beta2_cdf,
    beta2_ppf,
    marginal_from_dict,
    norm_cdf,
    norm_ppf,
)


def test_examples():
    assert Gamma(2).cdf(1.0) == pytest.approx(1 - 2 * math.exp(-1), abs=1e-14)
    assert Triangular(53.5, 55.0, 56.5).cdf(55.0) == pytest.approx(0.5, abs=1e-15)
    u = np.linspace(0.01, 0.99, 9)
    assert np.allclose(Uniform().quantile(u), u, rtol=0, atol=0)


def test_normal_against_scipy():
    z = np.linspace(-8, 8, 401)
    assert np.allclose(norm_cdf(z), stats.norm.cdf(z), rtol=1e-12, atol=1e-300)
    u = np.concatenate([np.logspace(-15, -1, 50), np.linspace(0.1, 0.9, 50), 1 - np.logspace(-12, -1, 50)])
    assert np.allclose(norm_ppf(u), stats.norm.ppf(u), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("shape", [1, 2, 3, 5, 9])
def test_erlang_against_scipy(shape):
    m = Gamma(shape)
    y = np.linspace(0.01, 40, 300)
    assert np.allclose(m.cdf(y), stats.gamma.cdf(y, shape), rtol=1e-11, atol=1e-14)
    u = np.linspace(1e-6, 1 - 1e-6, 300)
    assert np.allclose(m.quantile(u), stats.gamma.ppf(u, shape), rtol=1e-9)


def test_truncated_normal_against_scipy():
    m = TruncatedNormal(27.8, 3.0, lower=0.0)
    ref = stats.truncnorm(a=-27.8 / 3.0, b=np.inf, loc=27.8, scale=3.0)
    y = np.linspace(10, 45, 200)
    assert np.allclose(m.cdf(y), ref.cdf(y), rtol=1e-11, atol=1e-15)
    u = np.linspace(1e-6, 1 - 1e-6, 200)
    assert np.allclose(m.quantile(u), ref.ppf(u), rtol=1e-11)
    # truncation in the upper tail keeps precision
    tail = TruncatedNormal(0.0, 1.0, lower=6.0, upper=9.0)
    ref = stats.truncnorm(6.0, 9.0)
    assert np.allclose(tail.quantile(u), ref.ppf(u), rtol=1e-9)


def test_truncated_gumbel_against_scipy():
    m = TruncatedGumbel(1013.0, 558.0, 10.0, 1e4)
    g = stats.gumbel_r(1013.0, 558.0)
    fa, fb = g.cdf(10.0), g.cdf(1e4)
    y = np.linspace(10, 1e4, 300)
    assert np.allclose(m.cdf(y), (g.cdf(y) - fa) / (fb - fa), rtol=1e-12, atol=1e-15)
    assert m.cdf(1e4) == pytest.approx(1.0, abs=1e-10)


def test_triangular_against_scipy():
    m = Triangular(48.5, 50.0, 51.5)
    ref = stats.triang(c=0.5, loc=48.5, scale=3.0)
    u = np.linspace(0, 1, 101)
    assert np.allclose(m.quantile(u), ref.ppf(u), atol=1e-12)


@pytest.mark.parametrize(
    "marginal",
    [Gamma(2), Gamma(4, 2.0), TruncatedNormal(27.8, 3.0, lower=0.0), TruncatedGumbel(1013, 558, 10, 1e4),
     Triangular(53.5, 55, 56.5), Uniform(-1, 3)],
)
def test_round_trip(marginal):
    rng = np.random.default_rng(0)
    u = rng.uniform(1e-6, 1 - 1e-6, 1000)
    y = marginal.quantile(u)
    assert np.allclose(marginal.quantile(marginal.cdf(y)), y, rtol=1e-8, atol=1e-8)
    lo, hi = marginal.support
    if math.isfinite(hi):
        assert marginal.cdf(hi) == pytest.approx(1.0, abs=1e-10)


def test_quantile_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        Gamma(2).quantile(1.0)
    with pytest.raises(ValueError):
        Gamma(2).quantile(-0.1)
    assert Gamma(2).quantile(0.0) == 0.0


def test_beta2_against_scipy():
    for b in (3.0, 7.0, 12.0):
        x = np.linspace(0, 1, 51)
        assert np.allclose([beta2_cdf(v, b) for v in x], stats.beta.cdf(x, 2, b), atol=1e-13)
        for p in (0.005, 0.05, 0.5):
            assert beta2_ppf(p, b) == pytest.approx(stats.beta.ppf(p, 2, b), abs=1e-12)


def test_from_dict_round_trip():
    m = TruncatedNormal(27.8, 3.0, lower=0.0)
    spec = m.to_dict()
    assert marginal_from_dict(spec) == m
    with pytest.raises(ValueError):
        marginal_from_dict({"family": "cauchy"})


def test_invalid_parameters():
    with pytest.raises(ValueError):
        Gamma(2.5)
    with pytest.raises(ValueError):
        Triangular(1, 0, 2)
    with pytest.raises(ValueError):
        TruncatedNormal(0, -1)
