"""Nested sampling for the log-evidence, with rejection, single-ellipsoid
and multi-ellipsoid constrained draws."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .bounds import bounding_ellipsoid, multi_decompose, sample_in_ellipsoids, sample_prior
from .errors import InitializationError, NonConvergenceError, NotConvergedError, SpecificationError
from .models import PriorBox

log = logging.getLogger(__name__)

METHODS = ("basic", "single", "multi")
SHRINKAGE = ("deterministic", "stochastic")
PLATEAU_WARN = 1000


@dataclass(frozen=True)
class SamplerConfig:
    n_live: int = 50
    tol: float = 0.5
    method: str = "multi"
    enlargement: float = 1.25
    rng_seed: int = 0
    max_iterations: int = 200_000
    shrinkage: str = "deterministic"
    split_threshold: float = 0.7
    rejection_budget: int = 10**6
    update_interval: int | None = None

    def __post_init__(self):
        if self.n_live < 2:
            raise SpecificationError("n_live must be at least 2")
        if not self.tol > 0:
            raise SpecificationError("tol must be positive")
        if self.method not in METHODS:
            raise SpecificationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.shrinkage not in SHRINKAGE:
            raise SpecificationError(f"shrinkage must be one of {SHRINKAGE}")
        if self.enlargement < 1.0:
            raise SpecificationError("enlargement must be >= 1")
        if self.max_iterations < 1 or self.rejection_budget < 1:
            raise SpecificationError("iteration and rejection budgets must be positive")

    @property
    def bound_update_every(self) -> int:
        if self.update_interval is not None:
            return max(1, int(self.update_interval))
        return max(1, self.n_live // 5)


class Problem:
    """A log-likelihood over a uniform prior box.

    :class:`fuzzy_evidence.models.BoundModel` satisfies the same protocol.
    """

    def __init__(self, log_likelihood: Callable, prior: PriorBox):
        self._loglike = log_likelihood
        self.prior = prior
        self.ndim = prior.ndim

    def prior_transform(self, unit):
        return self.prior.lower + np.asarray(unit, dtype=float) * (self.prior.upper - self.prior.lower)

    def log_likelihood(self, theta) -> float:
        return float(self._loglike(theta))


@dataclass(eq=False)
class EvidenceResult:
    logz: float
    logz_err: float
    information: float
    n_calls: int
    n_iter: int
    converged: bool
    samples: np.ndarray          # (n, d) parameter vectors
    logl: np.ndarray             # (n,)
    log_weights: np.ndarray      # (n,), normalised: logsumexp == 0
    log_volumes: np.ndarray      # (n,), prior mass at each dead point
    config: dict = field(default_factory=dict)
    message: str = ""
    parameter_names: list = field(default_factory=list)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def to_dict(self) -> dict:
        return {
            "logz": self.logz,
            "logz_err": self.logz_err,
            "information": self.information,
            "n_calls": self.n_calls,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "message": self.message,
            "config": self.config,
            "parameter_names": list(self.parameter_names),
            "samples": self.samples.tolist(),
            "logl": self.logl.tolist(),
            "log_weights": self.log_weights.tolist(),
            "log_volumes": self.log_volumes.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "EvidenceResult":
        samples = np.asarray(doc["samples"], dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(0, len(doc.get("parameter_names", [])))
        return cls(
            logz=float(doc["logz"]), logz_err=float(doc["logz_err"]),
            information=float(doc["information"]), n_calls=int(doc["n_calls"]),
            n_iter=int(doc["n_iter"]), converged=bool(doc["converged"]),
            samples=samples, logl=np.asarray(doc["logl"], dtype=float),
            log_weights=np.asarray(doc["log_weights"], dtype=float),
            log_volumes=np.asarray(doc["log_volumes"], dtype=float),
            config=dict(doc.get("config", {})), message=doc.get("message", ""),
            parameter_names=list(doc.get("parameter_names", [])),
        )

    @classmethod
    def from_json(cls, text: str) -> "EvidenceResult":
        return cls.from_dict(json.loads(text))

    def summary(self) -> str:
        return (f"logz: {self.logz:.3f} +/- {self.logz_err:.3f}\n"
                f"h: {self.information:.3f}\nn_iter: {self.n_iter}\n"
                f"n_calls: {self.n_calls}\nconverged: {self.converged}")


def shrink_log_mass(i: int, config: SamplerConfig, previous: float | None = None,
                    rng: np.random.Generator | None = None) -> float:
    """Log prior mass after ``i`` removals.

    Deterministic: ``-i / n_live``. Stochastic: ``previous + ln t`` with
    ``t ~ Beta(n_live, 1)`` drawn from ``rng``.
    """
    if i == 0:
        return 0.0
    if config.shrinkage == "deterministic":
        return -i / config.n_live
    if previous is None or rng is None:
        raise ValueError("stochastic shrinkage needs the previous log mass and a generator")
    return previous + math.log(rng.beta(config.n_live, 1.0))


def log_diff_exp(a: float, b: float) -> float:
    """log(exp(a) - exp(b)) for a > b."""
    if b == -math.inf:
        return a
    return a + math.log1p(-math.exp(b - a))


def accumulate(logz: float, logl: float, log_x_prev: float, log_x: float) -> float:
    """Add the shell ``L * (X_prev - X)`` to the running log-evidence."""
    term = logl + log_diff_exp(log_x_prev, log_x)
    if logz == -math.inf:
        return term
    return float(np.logaddexp(logz, term))


def should_terminate(logz: float, logl_max: float, log_x: float, tol: float) -> bool:
    """True once the live points could raise log Z by less than ``tol``."""
    remain = logl_max + log_x
    if remain == -math.inf:
        return True
    if logz == -math.inf:
        return False
    return float(np.logaddexp(logz, remain)) - logz < tol


def run(problem, config: SamplerConfig = SamplerConfig(),
        callback: Callable[[dict], None] | None = None,
        progress_every: int = 100) -> EvidenceResult:
    """Nested sampling over ``problem`` (anything with ``ndim``,
    ``prior_transform`` and ``log_likelihood``)."""
    n, d = config.n_live, problem.ndim
    sample_seq, shrink_seq = np.random.SeedSequence(config.rng_seed).spawn(2)
    rng = np.random.default_rng(sample_seq)
    shrink_rng = np.random.default_rng(shrink_seq)

    live_u = rng.random((n, d))
    live_theta = np.array([problem.prior_transform(u) for u in live_u])
    live_logl = np.array([problem.log_likelihood(t) for t in live_theta], dtype=float)
    n_calls = n
    if not np.any(np.isfinite(live_logl)):
        raise InitializationError("every initial live point has log-likelihood -inf")

    dead_theta, dead_logl, dead_logwt, dead_logx = [], [], [], []
    logz = -math.inf
    log_x = 0.0
    ells = None
    converged = False
    message = ""
    warned = False
    it = 0

    while it < config.max_iterations:
        if live_logl.min() == live_logl.max():
            # flat live set: the rest of the integral is exactly L * X
            converged = True
            message = "likelihood constant over the live points"
            break
        it += 1
        worst = int(np.argmin(live_logl))
        threshold = float(live_logl[worst])
        log_x_new = shrink_log_mass(it, config, log_x, shrink_rng)
        logwt = threshold + log_diff_exp(log_x, log_x_new)
        logz = accumulate(logz, threshold, log_x, log_x_new)
        log_x = log_x_new

        dead_theta.append(live_theta[worst].copy())
        dead_logl.append(threshold)
        dead_logwt.append(logwt)
        dead_logx.append(log_x)

        try:
            if config.method == "basic":
                u, theta, logl, nc, nt = sample_prior(
                    problem, threshold, rng, config.rejection_budget)
            else:
                if ells is None or (it - 1) % config.bound_update_every == 0:
                    ells = _build_bound(live_u, config, math.exp(log_x) / n, rng)
                u, theta, logl, nc, nt = sample_in_ellipsoids(
                    ells, problem, threshold, rng, config.rejection_budget)
        except NonConvergenceError as exc:
            message = str(exc)
            break

        n_calls += nc
        if nt >= PLATEAU_WARN and not warned:
            warnings.warn(f"likelihood plateau: {nt} draws tied at {threshold} in one replacement")
            warned = True
        live_u[worst] = u
        live_theta[worst] = theta
        live_logl[worst] = logl

        logl_max = float(live_logl.max())
        if callback is not None and it % progress_every == 0:
            callback({"it": it, "logz": logz, "n_calls": n_calls,
                      "remain": logl_max + log_x})
        if should_terminate(logz, logl_max, log_x, config.tol):
            converged = True
            break
    else:
        message = f"stopped at max_iterations={config.max_iterations}"

    # remaining live points each carry X_final / n_live
    log_share = log_x - math.log(n)
    for k in np.argsort(live_logl, kind="stable"):
        dead_theta.append(live_theta[k].copy())
        dead_logl.append(float(live_logl[k]))
        dead_logwt.append(float(live_logl[k]) + log_share)
        dead_logx.append(log_share)

    logl_arr = np.array(dead_logl)
    logwt_arr = np.array(dead_logwt)
    logz = float(np.logaddexp.reduce(logwt_arr))
    log_weights = logwt_arr - logz
    p = np.exp(log_weights)
    finite = p > 0
    information = float(np.sum(p[finite] * (logl_arr[finite] - logz)))
    information = max(information, 0.0)
    if not converged and not message:
        message = "not converged"
    return EvidenceResult(
        logz=logz,
        logz_err=math.sqrt(information / n),
        information=information,
        n_calls=int(n_calls),
        n_iter=it,
        converged=converged,
        samples=np.array(dead_theta).reshape(len(dead_theta), d),
        logl=logl_arr,
        log_weights=log_weights,
        log_volumes=np.array(dead_logx),
        config=asdict(config),
        message=message,
    )


def _build_bound(live_u, config: SamplerConfig, point_volume: float, rng):
    n = live_u.shape[0]
    if config.method == "single":
        return [bounding_ellipsoid(live_u, config.enlargement, n * point_volume)]
    return multi_decompose(live_u, config.enlargement, rng, config.split_threshold, point_volume)


@dataclass(frozen=True)
class PosteriorSummary:
    mean: np.ndarray
    std: np.ndarray
    degenerate: bool
    names: tuple = ()


def posterior_summary(result: EvidenceResult) -> PosteriorSummary:
    """Weighted mean and population standard deviation of each parameter."""
    if result.samples.shape[0] < 1:
        raise ValueError("result has no samples")
    w = np.exp(result.log_weights - np.logaddexp.reduce(result.log_weights))
    mean = w @ result.samples
    var = w @ (result.samples - mean) ** 2
    ess = 1.0 / float(np.sum(w * w))
    degenerate = ess < 1.0 + 1e-9
    if degenerate:
        warnings.warn("posterior has a single effective sample; std set to 0")
        var = np.zeros_like(var)
    return PosteriorSummary(mean, np.sqrt(np.maximum(var, 0.0)), degenerate,
                            tuple(result.parameter_names))


def bayes_factor(a: EvidenceResult, b: EvidenceResult) -> tuple[float, float]:
    """``log Z_a - log Z_b`` with its combined uncertainty (equal model priors)."""
    for name, r in (("first", a), ("second", b)):
        if not r.converged:
            raise NotConvergedError(f"{name} result did not converge: {r.message}")
    return a.logz - b.logz, math.hypot(a.logz_err, b.logz_err)
