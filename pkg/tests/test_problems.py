import math

import numpy as np
import pytest
from scipy import stats

from monorare.problems import (
    HYDRAULIC_REFERENCE,
    SignVector,
    custom_problem,
    flood_margin,
    hydraulic_problem,
    monotonicity_violations,
    problem_from_config,
    toy_beta_shape,
    toy_problem,
    water_height,
)


def test_toy_beta_shapes():
    assert toy_beta_shape(2) == 3
    assert toy_beta_shape(3) == 7


def test_toy_threshold_is_beta_quantile():
    prob = toy_problem(3, 0.05)
    assert prob.threshold == pytest.approx(stats.beta.ppf(0.05, 2, 7), abs=1e-12)
    assert prob.sign_vector.signs == (1, -1, -1)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("p", [0.05, 0.005])
def test_toy_known_p_mc_oracle(d, p):
    prob = toy_problem(d, p)
    n = 10**6
    x = np.random.default_rng(d * 1000 + int(p * 1000)).uniform(size=(n, d))
    x = np.clip(x, 1e-300, None)
    hat = np.mean(prob.evaluate_batch(x) <= 0.0)
    assert abs(hat - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_toy_z_is_beta_distributed():
    # Y_i ~ Gamma(i + 1) drawn directly, independent of the cube transform
    rng = np.random.default_rng(5)
    d = 3
    y = np.column_stack([rng.gamma(i + 1, size=200_000) for i in range(1, d + 1)])
    z = y[:, 0] / y.sum(axis=1)
    assert stats.kstest(z, stats.beta(2, toy_beta_shape(d)).cdf).pvalue > 1e-3


def test_hydraulic_physical_point():
    h = water_height(1013.0, 27.8, 55.0, 50.0)
    assert h == pytest.approx(2.24, abs=0.01)
    g = flood_margin(np.array([[1013.0, 27.8]]))[0]
    assert g == pytest.approx(3.26, abs=0.01)
    assert g > 0


def test_hydraulic_signs_and_reference():
    assert hydraulic_problem("dim2").sign_vector.signs == (-1, 1)
    assert hydraulic_problem("dim4").sign_vector.signs == (-1, 1, 1, -1)
    assert HYDRAULIC_REFERENCE == {"dim2": 0.002775, "dim4": 0.010075}
    with pytest.raises(ValueError):
        hydraulic_problem("dim3")


@pytest.mark.parametrize(
    "prob", [toy_problem(2, 0.05), toy_problem(4, 0.005), hydraulic_problem("dim2"), hydraulic_problem("dim4")],
    ids=["toy2", "toy4", "hyd2", "hyd4"],
)
def test_monotonicity_audit(prob):
    assert monotonicity_violations(prob, 10**4, 0) == 0


def test_evaluate_deterministic_and_counted():
    prob = toy_problem(2, 0.05).fresh()
    x = (0.3, 0.4)
    assert prob.evaluate(x) == prob.evaluate(x)
    assert prob.calls == 2
    prob.evaluate_batch(np.full((5, 2), 0.5))
    assert prob.calls == 7


def test_evaluate_rejects_unbounded_endpoint():
    prob = toy_problem(2, 0.05)
    with pytest.raises(ValueError):
        prob.evaluate((1.0, 0.5))
    with pytest.raises(ValueError):
        prob.evaluate((0.5, 0.5, 0.5))


def test_sign_vector():
    sv = SignVector((1, -1))
    assert np.allclose(sv.apply(np.array([0.2, 0.2])), [0.2, 0.8])
    with pytest.raises(ValueError):
        SignVector((1, 0))


def test_custom_and_config_builders():
    prob = custom_problem([{"family": "uniform"}, {"family": "uniform"}], "linear", threshold=1.0)
    assert prob.evaluate((0.25, 0.25)) == pytest.approx(-0.5)
    assert problem_from_config({"problem": "toy", "d": 2, "p": 0.05}).known_p == 0.05
    assert problem_from_config({"problem": "hydraulic4"}).dimension == 4
    with pytest.raises(ValueError):
        problem_from_config({"problem": "nope"})
