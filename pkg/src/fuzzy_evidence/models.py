"""Likelihood models: fuzzy rule bases and polynomial GLMs under a
Gaussian noise model with a uniform prior box."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ParameterDomainError, SpecificationError
from .fuzzy import RuleBase, infer_batch

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Covariates ``X`` (N x p) with column names, and the output ``y``."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    target: str = "y"

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.shape[0] != y.shape[0]:
            raise SpecificationError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] < 1:
            raise SpecificationError("dataset is empty")
        if X.shape[1] != len(self.columns):
            raise SpecificationError("column names do not match covariate count")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise SpecificationError("dataset has missing or non-finite values")

    def __len__(self):
        return self.y.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.columns == other.columns and self.target == other.target
                and np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y))

    def select(self, names: Sequence[str]) -> np.ndarray:
        try:
            idx = [self.columns.index(n) for n in names]
        except ValueError:
            missing = [n for n in names if n not in self.columns]
            raise SpecificationError(f"dataset has no column(s) {missing}") from None
        return self.X[:, idx]


def write_dataset(data: Dataset, path) -> None:
    """Comma-separated, header row, output column last, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.columns) + [data.target])
        for row, y in zip(data.X, data.y):
            w.writerow([f"{v:.17g}" for v in row] + [f"{y:.17g}"])


def read_dataset(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise SpecificationError(f"{path}: need a header and at least one data row")
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        values = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise SpecificationError(f"{path}: {exc}") from None
    if values.ndim != 2 or values.shape[1] != len(header):
        raise SpecificationError(f"{path}: ragged rows")
    return Dataset(values[:, :-1], values[:, -1], tuple(header[:-1]), header[-1])


@dataclass(frozen=True, eq=False)
class PriorBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise SpecificationError("prior bounds differ in length")
        if not np.all(lo < hi):
            raise SpecificationError("prior box needs lower < upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def ndim(self) -> int:
        return self.lower.shape[0]

    @property
    def log_volume(self) -> float:
        return float(np.sum(np.log(self.upper - self.lower)))

    def __eq__(self, other):
        return (isinstance(other, PriorBox) and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def inverse(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return (theta - self.lower) / (self.upper - self.lower)


def prior_transform(unit, prior: PriorBox) -> np.ndarray:
    unit = np.asarray(unit, dtype=float)
    if unit.shape[-1] != prior.ndim:
        raise SpecificationError(f"unit vector has {unit.shape[-1]} entries, prior has {prior.ndim}")
    if np.any(unit < 0.0) or np.any(unit > 1.0):
        raise ParameterDomainError("unit-cube coordinates must lie in [0, 1]")
    return prior.lower + unit * (prior.upper - prior.lower)


@dataclass(frozen=True)
class Fixed:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise SpecificationError("fixed sigma must be positive")

    @property
    def tag(self) -> str:
        return f"{self.sigma:g}"


@dataclass(frozen=True)
class Estimated:
    lower: float = 0.01
    upper: float = 50.0

    def __post_init__(self):
        if not 0 < self.lower < self.upper:
            raise SpecificationError("estimated sigma needs 0 < lower < upper")

    @property
    def tag(self) -> str:
        return "est"


SigmaMode = Union[Fixed, Estimated]


def parse_sigma(text) -> SigmaMode:
    """``"est"`` (or ``"estimated"``) or a positive number."""
    if isinstance(text, (Fixed, Estimated)):
        return text
    if str(text).lower() in ("est", "estimated"):
        return Estimated()
    try:
        return Fixed(float(text))
    except ValueError:
        raise SpecificationError(f"bad sigma setting {text!r}") from None


@dataclass(frozen=True)
class GLMTermList:
    """Monomial terms of an identity-link GLM.

    ``exponents[t]`` holds the per-covariate integer powers of the term
    multiplying coefficient ``t``; the all-zero tuple is the intercept.
    """

    exponents: tuple[tuple[int, ...], ...]
    covariates: tuple[str, ...]

    def __post_init__(self):
        exps = tuple(tuple(int(e) for e in t) for t in self.exponents)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if not exps:
            raise SpecificationError("GLM needs at least one term")
        for t in exps:
            if len(t) != len(self.covariates):
                raise SpecificationError(
                    f"term {t} does not match {len(self.covariates)} covariates")
            if any(e < 0 for e in t):
                raise SpecificationError(f"negative exponent in term {t}")

    @property
    def n_params(self) -> int:
        return len(self.exponents)

    @property
    def intercept(self) -> bool:
        return any(not any(t) for t in self.exponents)

    def design(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.covariates):
            raise SpecificationError(
                f"expected {len(self.covariates)} covariate columns, got {X.shape[1]}")
        return np.stack([np.prod(X ** np.array(t, dtype=float), axis=1)
                         for t in self.exponents], axis=1)


def glm_mean(terms: GLMTermList, alpha, x) -> float:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (terms.n_params,):
        raise SpecificationError(f"GLM takes {terms.n_params} coefficients, got {alpha.shape}")
    x = np.asarray(x, dtype=float)
    total = 0.0
    for a, t in zip(alpha, terms.exponents):
        term = a
        for xj, e in zip(x, t):
            term *= xj ** e
        total += term
    return float(total)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A named model, its prior box and its noise treatment.

    With an :class:`Estimated` sigma the prior box carries one extra
    dimension, last, for sigma itself.
    """

    name: str
    model: Union[RuleBase, GLMTermList]
    prior: PriorBox
    sigma: SigmaMode = field(default_factory=Estimated)
    prior_tag: str = ""

    def __post_init__(self):
        expected = self.n_model_params + (1 if isinstance(self.sigma, Estimated) else 0)
        if self.prior.ndim != expected:
            raise SpecificationError(
                f"{self.name}: prior has {self.prior.ndim} dimensions, model needs {expected}")

    @property
    def kind(self) -> str:
        return "fuzzy" if isinstance(self.model, RuleBase) else "glm"

    @property
    def n_model_params(self) -> int:
        return self.model.n_params

    @property
    def ndim(self) -> int:
        return self.prior.ndim

    @property
    def covariates(self) -> tuple[str, ...]:
        if isinstance(self.model, RuleBase):
            return self.model.input_names
        return self.model.covariates

    def parameter_names(self) -> list[str]:
        names = [f"theta{i}" for i in range(self.n_model_params)]
        if isinstance(self.sigma, Estimated):
            names.append("sigma")
        return names

    def with_sigma(self, sigma: SigmaMode) -> "ModelSpec":
        lo, hi = self.prior.lower[:self.n_model_params], self.prior.upper[:self.n_model_params]
        if isinstance(sigma, Estimated):
            lo, hi = np.append(lo, sigma.lower), np.append(hi, sigma.upper)
        return ModelSpec(self.name, self.model, PriorBox(lo, hi), sigma, self.prior_tag)

    def with_coefficient_range(self, lower: float, upper: float) -> "ModelSpec":
        lo, hi = self.prior.lower.copy(), self.prior.upper.copy()
        lo[:self.n_model_params] = lower
        hi[:self.n_model_params] = upper
        return ModelSpec(self.name, self.model, PriorBox(lo, hi), self.sigma,
                         f"[{lower:g},{upper:g}]")

    def bind(self, data: Dataset) -> "BoundModel":
        return BoundModel(self, data)

    @classmethod
    def fuzzy(cls, name: str, rb: RuleBase, sigma: SigmaMode | None = None) -> "ModelSpec":
        sigma = Estimated() if sigma is None else sigma
        lo, hi = rb.parameter_bounds()
        if isinstance(sigma, Estimated):
            lo, hi = np.append(lo, sigma.lower), np.append(hi, sigma.upper)
        return cls(name, rb, PriorBox(lo, hi), sigma, "universe")

    @classmethod
    def glm(cls, name: str, terms: GLMTermList, coef_range=(-50.0, 50.0),
            sigma: SigmaMode | None = None) -> "ModelSpec":
        sigma = Estimated() if sigma is None else sigma
        m = terms.n_params
        lo, hi = np.full(m, float(coef_range[0])), np.full(m, float(coef_range[1]))
        if isinstance(sigma, Estimated):
            lo, hi = np.append(lo, sigma.lower), np.append(hi, sigma.upper)
        return cls(name, terms, PriorBox(lo, hi), sigma,
                   f"[{coef_range[0]:g},{coef_range[1]:g}]")


def _split_theta(spec: ModelSpec, theta) -> tuple[np.ndarray, float]:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.ndim,):
        raise SpecificationError(f"{spec.name}: expected {spec.ndim} parameters, got {theta.shape}")
    if isinstance(spec.sigma, Estimated):
        return theta[:-1], float(theta[-1])
    return theta, spec.sigma.sigma


def _mean(spec: ModelSpec, params, X) -> np.ndarray:
    if isinstance(spec.model, RuleBase):
        return infer_batch(spec.model, params, X)
    return spec.model.design(X) @ params


def predict(spec: ModelSpec, theta, X) -> np.ndarray:
    """Model mean for each row of ``X`` (columns ordered as ``spec.covariates``).

    ``theta`` may omit a trailing sigma.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape == (spec.n_model_params,):
        params = theta
    else:
        params, _ = _split_theta(spec, theta)
    return _mean(spec, params, X)


def gaussian_loglike(residuals: np.ndarray, sigma: float) -> float:
    if not sigma > 0:
        raise ParameterDomainError(f"sigma must be positive, got {sigma}")
    n = residuals.shape[0]
    ssr = float(residuals @ residuals)
    return -0.5 * n * (LOG_2PI + 2.0 * math.log(sigma)) - ssr / (2.0 * sigma * sigma)


def log_likelihood(spec: ModelSpec, theta, data: Dataset) -> float:
    params, sigma = _split_theta(spec, theta)
    mu = _mean(spec, params, data.select(spec.covariates))
    return gaussian_loglike(data.y - mu, sigma)


class BoundModel:
    """A model spec fixed to one dataset: what the sampler integrates.

    Column selection and (for GLMs) the design matrix are computed once.
    """

    def __init__(self, spec: ModelSpec, data: Dataset):
        self.spec = spec
        self.data = data
        self.prior = spec.prior
        self.ndim = spec.ndim
        self._X = data.select(spec.covariates)
        self._y = data.y
        self._design = None if spec.kind == "fuzzy" else spec.model.design(self._X)

    def prior_transform(self, unit) -> np.ndarray:
        return self.prior.lower + np.asarray(unit, dtype=float) * (self.prior.upper - self.prior.lower)

    def log_likelihood(self, theta) -> float:
        params, sigma = _split_theta(self.spec, theta)
        if self._design is not None:
            mu = self._design @ params
        else:
            mu = infer_batch(self.spec.model, params, self._X)
        return gaussian_loglike(self._y - mu, sigma)
