"""Bayesian model comparison of fuzzy rule bases and GLMs by nested sampling."""

from .catalog import builtin_specs, load_specs, resolve_spec
from .errors import (InitializationError, NonConvergenceError, NotConvergedError,
                     ParameterDomainError, SpecificationError)
from .fuzzy import ReferentialSet, Rule, RuleBase, TriangularMF, Universe, infer, infer_batch
from .models import (Dataset, Estimated, Fixed, GLMTermList, ModelSpec, PriorBox,
                     log_likelihood, predict, read_dataset, write_dataset)
from .nested import (EvidenceResult, Problem, SamplerConfig, bayes_factor,
                     posterior_summary, run)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "Estimated", "EvidenceResult", "Fixed", "GLMTermList", "InitializationError",
    "ModelSpec", "NonConvergenceError", "NotConvergedError", "ParameterDomainError",
    "PriorBox", "Problem", "ReferentialSet", "Rule", "RuleBase", "SamplerConfig",
    "SpecificationError", "TriangularMF", "Universe", "bayes_factor", "builtin_specs",
    "infer", "infer_batch", "load_specs", "log_likelihood", "posterior_summary", "predict",
    "read_dataset", "resolve_spec", "run", "write_dataset",
]
