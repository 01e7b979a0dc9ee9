import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fuzzy_evidence import ParameterDomainError, SpecificationError
from fuzzy_evidence.catalog import dumps_spec, loads_specs, resolve_spec
from fuzzy_evidence.models import (Dataset, Estimated, Fixed, GLMTermList, ModelSpec, PriorBox,
                                   gaussian_loglike, glm_mean, log_likelihood, parse_sigma,
                                   predict, prior_transform, read_dataset, write_dataset)

TABLE_V_GLM5 = (49.92, 16.70, -10.86, -3.17, 1.73, -0.50, 0.18, -0.10, 0.09)


def _one_covariate_glm(sigma):
    terms = GLMTermList(((0,),), ("x",))
    return ModelSpec.glm("intercept", terms, (-10, 10), sigma)


# prior_transform

def test_prior_transform_examples():
    box2 = PriorBox([0, 0], [10, 10])
    assert np.allclose(prior_transform([0.5, 0.5], box2), [5, 5])
    assert np.allclose(prior_transform([0, 0], box2), [0, 0])
    assert np.allclose(prior_transform([0.25], PriorBox([-100], [100])), [-50])


def test_prior_transform_domain():
    with pytest.raises(ParameterDomainError):
        prior_transform([1.2], PriorBox([0], [1]))
    with pytest.raises(SpecificationError):
        PriorBox([1], [1])


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_prior_round_trip(unit):
    box = PriorBox([-50, 0.01, 3], [50, 50, 4])
    back = box.inverse(prior_transform(unit, box))
    assert np.allclose(back, unit, atol=1e-12, rtol=0)


# glm_mean

def test_glm_mean_examples():
    glm1, glm2, glm5 = (resolve_spec(n).model for n in ("glm1", "glm2", "glm5"))
    assert glm_mean(glm2, (1, 2, 3), (4, 5)) == 24
    assert glm_mean(glm1, (0, 1), (3, 7)) == 21
    assert glm_mean(glm5, TABLE_V_GLM5, (0, 0)) == pytest.approx(49.92)


def test_glm_mean_length_mismatch():
    with pytest.raises(SpecificationError):
        glm_mean(resolve_spec("glm2").model, (1, 2), (4, 5))


@given(st.lists(st.floats(-50, 50), min_size=9, max_size=9))
def test_synthetic_glms_at_origin_return_intercept(alpha):
    for i in range(1, 6):
        spec = resolve_spec(f"glm{i}")
        a = alpha[:spec.n_model_params]
        assert glm_mean(spec.model, a, (0, 0)) == pytest.approx(a[0])


def test_design_matches_glm_mean():
    terms = resolve_spec("glm8").model
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 10, (5, 3))
    alpha = rng.normal(size=terms.n_params)
    assert np.allclose(terms.design(X) @ alpha, [glm_mean(terms, alpha, x) for x in X])


# log_likelihood

def test_log_likelihood_examples():
    d1 = Dataset([[0.0]], [3.0], ("x",))
    fixed1 = _one_covariate_glm(Fixed(1.0))
    assert log_likelihood(fixed1, [3.0], d1) == pytest.approx(-0.9189385, abs=1e-6)
    assert log_likelihood(fixed1, [2.0], d1) == pytest.approx(-1.4189385, abs=1e-6)

    d2 = Dataset([[0.0], [0.0]], [1.0, 2.0], ("x",))
    fixed2 = _one_covariate_glm(Fixed(2.0))
    oracle = sum(stats.norm.logpdf(y, loc=0.0, scale=2.0) for y in (1.0, 2.0))
    got = log_likelihood(fixed2, [0.0], d2)
    assert got == pytest.approx(oracle, abs=1e-12)
    assert got == pytest.approx(-math.log(8 * math.pi) - 5 / 8, abs=1e-12)
    assert got == pytest.approx(-3.8492, abs=1e-4)


def test_estimated_sigma_taken_from_last_parameter():
    d2 = Dataset([[0.0], [0.0]], [1.0, 2.0], ("x",))
    est = _one_covariate_glm(Estimated())
    assert est.ndim == 2
    assert log_likelihood(est, [0.0, 2.0], d2) == pytest.approx(-math.log(8 * math.pi) - 5 / 8)
    with pytest.raises(ParameterDomainError):
        gaussian_loglike(np.zeros(2), 0.0)


@pytest.fixture(scope="module")
def fuzzy_data():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 10, (12, 2))
    y = rng.uniform(0, 100, 12)
    return Dataset(X, y, ("loc_risk", "maintenance"), "downtime")


_theta = st.tuples(*[st.floats(0, 10)] * 6, *[st.floats(0, 100)] * 3)


@settings(max_examples=50, deadline=None)
@given(theta=_theta, perm_seed=st.integers(0, 1000))
def test_loglike_permutation_invariant(fuzzy_data, theta, perm_seed):
    spec = resolve_spec("h_true", sigma=3.0)
    perm = np.random.default_rng(perm_seed).permutation(len(fuzzy_data))
    shuffled = Dataset(fuzzy_data.X[perm], fuzzy_data.y[perm], fuzzy_data.columns)
    a = log_likelihood(spec, theta, fuzzy_data)
    b = log_likelihood(spec, theta, shuffled)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(theta=_theta, sigma=st.floats(0.1, 20))
def test_fixed_sigma_upper_bound_and_doubling(fuzzy_data, theta, sigma):
    n = len(fuzzy_data)
    spec = resolve_spec("h_true", sigma=sigma)
    ll = log_likelihood(spec, theta, fuzzy_data)
    assert ll <= -0.5 * n * math.log(2 * math.pi * sigma ** 2) + 1e-9
    ssr = float(np.sum((fuzzy_data.y - predict(spec, theta, fuzzy_data.X)) ** 2))
    doubled = log_likelihood(resolve_spec("h_true", sigma=2 * sigma), theta, fuzzy_data)
    expected = -n * math.log(2) - (ssr / 2) * (1 / (4 * sigma ** 2) - 1 / sigma ** 2)
    assert doubled - ll == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_bound_upper_attained_on_exact_fit():
    spec = resolve_spec("h_true", sigma=1.0)
    phi = [5.0] * 6 + [50.0] * 3
    X = np.array([[10, 0], [5, 5], [0, 10]], dtype=float)
    data = Dataset(X, predict(spec, phi, X), ("loc_risk", "maintenance"))
    assert log_likelihood(spec, phi, data) == pytest.approx(-1.5 * math.log(2 * math.pi))


def test_bound_model_matches_log_likelihood(fuzzy_data):
    for name in ("h_true", "glm5"):
        spec = resolve_spec(name)
        bound = spec.bind(fuzzy_data)
        theta = bound.prior_transform(np.full(spec.ndim, 0.37))
        assert bound.log_likelihood(theta) == pytest.approx(
            log_likelihood(spec, theta, fuzzy_data), rel=1e-12)


# predict

def test_predict_examples():
    phi = [5.0] * 6 + [50.0] * 3
    # the 1001-point grid sum sits 0.033 above the continuous 250/3
    assert predict(resolve_spec("h_true"), phi, [[10, 0]]) == pytest.approx([83.33], abs=0.05)
    X = np.random.default_rng(0).uniform(0, 10, (4, 2))
    assert np.array_equal(predict(resolve_spec("glm2"), [0, 0, 0], X), np.zeros(4))
    assert np.allclose(predict(resolve_spec("glm1"), [1, 0], X[:3]), [1, 1, 1])


def test_predict_accepts_trailing_sigma():
    X = [[1.0, 2.0]]
    spec = resolve_spec("glm2")
    assert predict(spec, [1, 1, 1, 4.0], X) == predict(spec, [1, 1, 1], X)


# specs and sigma modes

def test_sigma_modes():
    assert parse_sigma("est") == Estimated(0.01, 50.0)
    assert parse_sigma("0.25") == Fixed(0.25)
    assert parse_sigma(1.0).tag == "1"
    with pytest.raises(SpecificationError):
        parse_sigma("wide")
    with pytest.raises(SpecificationError):
        Fixed(0.0)
    with pytest.raises(SpecificationError):
        Estimated(5, 1)


def test_prior_dimension_bookkeeping():
    spec = resolve_spec("h_true")
    assert spec.ndim == 10
    assert spec.parameter_names()[-1] == "sigma"
    fixed = spec.with_sigma(Fixed(0.25))
    assert fixed.ndim == 9 and "sigma" not in fixed.parameter_names()
    glm = resolve_spec("glm6").with_coefficient_range(-10, 10)
    assert glm.prior_tag == "[-10,10]"
    assert glm.prior.upper[-1] == 50.0 and glm.prior.upper[0] == 10.0


def test_spec_text_round_trip():
    for name in ("h_true", "h_rw2", "glm7"):
        spec = resolve_spec(name)
        again = loads_specs(dumps_spec(spec))[0]
        assert again.name == spec.name
        assert again.prior == spec.prior
        assert again.sigma == spec.sigma
        assert again.model == spec.model


# datasets

def test_dataset_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    data = Dataset(rng.uniform(0, 10, (7, 3)), rng.normal(50, 20, 7), ("a", "b", "c"), "out")
    path = tmp_path / "d.csv"
    write_dataset(data, path)
    assert read_dataset(path) == data
    assert path.read_text().splitlines()[0] == "a,b,c,out"


def test_dataset_validation(tmp_path):
    with pytest.raises(SpecificationError):
        Dataset([[1.0, np.nan]], [1.0], ("a", "b"))
    with pytest.raises(SpecificationError):
        Dataset([[1.0]], [1.0, 2.0], ("a",))
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,oops\n")
    with pytest.raises(SpecificationError):
        read_dataset(bad)


def test_select_reports_missing_columns():
    data = Dataset([[1.0, 2.0]], [0.0], ("a", "b"))
    assert np.array_equal(data.select(["b", "a"]), [[2.0, 1.0]])
    with pytest.raises(SpecificationError):
        data.select(["c"])
