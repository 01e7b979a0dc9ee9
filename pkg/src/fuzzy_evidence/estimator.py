"""scikit-learn style wrapper: fit a model by nested sampling, keep its evidence."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .catalog import resolve_spec
from .models import Dataset, ModelSpec, parse_sigma, predict
from .nested import SamplerConfig, posterior_summary, run


class EvidenceRegressor(RegressorMixin, BaseEstimator):
    """Regressor whose fit computes the log-evidence of ``model`` on (X, y).

    Parameters
    ----------
    model : str or ModelSpec
        Bundled model name, spec-file path, or a :class:`ModelSpec`.
        Columns of ``X`` are matched to the model covariates by position.
    method : {"basic", "single", "multi"}
    n_live, tol, enlargement : sampler settings.
    sigma : "est" or float
        Noise treatment; ``None`` keeps the model's own.
    prior_range : (float, float) or None
        Coefficient box for GLMs.
    random_state : int

    Attributes
    ----------
    result_ : EvidenceResult
    log_evidence_, log_evidence_err_ : float
    theta_ : ndarray
        Posterior mean of every sampled parameter (sigma last if estimated).
    theta_std_ : ndarray
    spec_ : ModelSpec
    """

    def __init__(self, model="h_true", method="multi", n_live=50, tol=0.5,
                 enlargement=1.25, sigma=None, prior_range=None, random_state=0):
        self.model = model
        self.method = method
        self.n_live = n_live
        self.tol = tol
        self.enlargement = enlargement
        self.sigma = sigma
        self.prior_range = prior_range
        self.random_state = random_state

    def _resolve(self) -> ModelSpec:
        if not isinstance(self.model, ModelSpec):
            return resolve_spec(self.model, sigma=self.sigma, glm_prior=self.prior_range)
        spec = self.model
        if self.sigma is not None:
            spec = spec.with_sigma(parse_sigma(self.sigma))
        if self.prior_range is not None and spec.kind == "glm":
            spec = spec.with_coefficient_range(*self.prior_range)
        return spec

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        spec = self._resolve()
        if X.shape[1] != len(spec.covariates):
            raise ValueError(f"{spec.name} uses {len(spec.covariates)} covariates, "
                             f"X has {X.shape[1]} columns")
        data = Dataset(X, y, spec.covariates)
        config = SamplerConfig(n_live=self.n_live, tol=self.tol, method=self.method,
                               enlargement=self.enlargement, rng_seed=int(self.random_state))
        result = run(spec.bind(data), config)
        result.parameter_names = spec.parameter_names()
        summary = posterior_summary(result)
        self.spec_ = spec
        self.result_ = result
        self.log_evidence_ = result.logz
        self.log_evidence_err_ = result.logz_err
        self.theta_ = summary.mean
        self.theta_std_ = summary.std
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return predict(self.spec_, self.theta_, X)
