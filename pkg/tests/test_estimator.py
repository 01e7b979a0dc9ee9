import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fuzzy_evidence import resolve_spec
from fuzzy_evidence.estimator import EvidenceRegressor


@pytest.fixture(scope="module")
def linear_data():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 10, (30, 2))
    y = 3.0 + 2.0 * X[:, 0] - 1.0 * X[:, 1] + rng.normal(0, 0.5, 30)
    return X, y


def test_params_round_trip():
    est = EvidenceRegressor(model="glm2", n_live=80, sigma=0.5)
    params = est.get_params()
    assert params["model"] == "glm2" and params["n_live"] == 80 and params["sigma"] == 0.5
    assert params["tol"] == 0.5 and params["method"] == "multi"
    est.set_params(tol=0.2)
    assert est.tol == 0.2
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert not hasattr(twin, "result_")


def test_fit_predict(linear_data):
    X, y = linear_data
    est = EvidenceRegressor(model="glm2", n_live=60, random_state=1).fit(X, y)
    assert est.result_.converged
    assert est.log_evidence_ == est.result_.logz
    assert est.theta_.shape == (4,)
    assert est.theta_[:3] == pytest.approx([3.0, 2.0, -1.0], abs=0.6)
    assert est.theta_[3] == pytest.approx(0.5, abs=0.25)
    pred = est.predict(X)
    assert pred.shape == (30,)
    assert est.score(X, y) > 0.95


def test_fit_is_deterministic(linear_data):
    X, y = linear_data
    a = EvidenceRegressor(model="glm1", n_live=30, random_state=4).fit(X, y)
    b = EvidenceRegressor(model="glm1", n_live=30, random_state=4).fit(X, y)
    assert a.log_evidence_ == b.log_evidence_


def test_accepts_model_spec_and_overrides(linear_data):
    X, y = linear_data
    spec = resolve_spec("glm2")
    est = EvidenceRegressor(model=spec, sigma=0.5, prior_range=(-10, 10), n_live=40).fit(X, y)
    assert est.spec_.prior_tag == "[-10,10]"
    assert est.theta_.shape == (3,)


def test_input_validation(linear_data):
    X, y = linear_data
    with pytest.raises(NotFittedError):
        EvidenceRegressor().predict(X)
    with pytest.raises(ValueError):
        EvidenceRegressor(model="glm2").fit(X[:, :1], y)
    with pytest.raises(ValueError):
        EvidenceRegressor(model="glm2").fit(X, y[:-1])
    est = EvidenceRegressor(model="glm1", n_live=20).fit(X, y)
    with pytest.raises(ValueError):
        est.predict(np.ones((2, 3)))
