"""Model-spec files and the bundled model catalog.

A spec file is a YAML document. Fuzzy models list their referential sets
(the output set marked ``output: true``) and rules in the form
``IF set IS label (AND|OR set IS label)* THEN output IS label``; the order
of ``sets`` fixes the parameter layout. A rule may instead be a mapping
``{rule: "...", included: false}`` to keep it in the base but switched off.
GLMs list covariates, exponent tuples and a coefficient prior range.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

import yaml

from .errors import SpecificationError
from .fuzzy import ReferentialSet, Rule, RuleBase, Universe
from .models import Estimated, GLMTermList, ModelSpec, parse_sigma

_CLAUSE = re.compile(r"^\s*(\w+)\s+IS\s+(\w+)\s*$", re.IGNORECASE)
_RULE = re.compile(r"^\s*IF\s+(.+?)\s+THEN\s+(.+?)\s*$", re.IGNORECASE)
_CONN = re.compile(r"\s+(AND|OR)\s+", re.IGNORECASE)

FUZZY_NAMES = ("h_true", "h1", "h2", "h3", "h_rw1", "h_rw2", "h_rw3")
GLM_NAMES = tuple(f"glm{i}" for i in range(1, 9))
BUILTIN_NAMES = FUZZY_NAMES + GLM_NAMES


def _clause(text: str) -> tuple[str, str]:
    m = _CLAUSE.match(text)
    if not m:
        raise SpecificationError(f"cannot parse clause {text!r}; expected 'set IS label'")
    return m.group(1), m.group(2)


def parse_rule(text: str, included: bool = True) -> Rule:
    m = _RULE.match(text)
    if not m:
        raise SpecificationError(f"cannot parse rule {text!r}")
    pieces = _CONN.split(m.group(1))
    antecedents = [_clause(p) for p in pieces[0::2]]
    connectives = [c.upper() for c in pieces[1::2]]
    return Rule(tuple(antecedents), tuple(connectives), _clause(m.group(2)), included)


def spec_from_dict(doc: dict) -> ModelSpec:
    try:
        name = str(doc["name"])
        kind = doc.get("kind", "fuzzy")
        sigma = parse_sigma(doc.get("sigma", "est"))
        if isinstance(sigma, Estimated) and "sigma_range" in doc:
            lo, hi = doc["sigma_range"]
            sigma = Estimated(float(lo), float(hi))
        if kind == "fuzzy":
            inputs, output, order = [], None, []
            for s in doc["sets"]:
                rset = ReferentialSet(str(s["name"]), tuple(str(x) for x in s["labels"]),
                                      Universe(*map(float, s["universe"])))
                order.append(rset.name)
                if s.get("output", False):
                    if output is not None:
                        raise SpecificationError(f"{name}: more than one output set")
                    output = rset
                else:
                    inputs.append(rset)
            if output is None:
                raise SpecificationError(f"{name}: no set marked as output")
            rules = []
            for r in doc["rules"]:
                if isinstance(r, dict):
                    rules.append(parse_rule(r["rule"], bool(r.get("included", True))))
                else:
                    rules.append(parse_rule(r))
            return ModelSpec.fuzzy(name, RuleBase(tuple(inputs), output, tuple(rules), tuple(order)),
                                   sigma)
        if kind == "glm":
            terms = GLMTermList(tuple(tuple(t) for t in doc["terms"]), tuple(doc["covariates"]))
            lo, hi = doc.get("prior", (-50, 50))
            return ModelSpec.glm(name, terms, (float(lo), float(hi)), sigma)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecificationError):
            raise
        raise SpecificationError(f"malformed model spec: {exc!r}") from None
    raise SpecificationError(f"unknown model kind {kind!r}")


def spec_to_dict(spec: ModelSpec) -> dict:
    doc = {"name": spec.name, "kind": spec.kind}
    if spec.kind == "fuzzy":
        rb = spec.model
        sets = {s.name: s for s in rb.inputs}
        sets[rb.output.name] = rb.output
        doc["sets"] = []
        for name in rb.order:
            s = sets[name]
            entry = {"name": s.name, "universe": [s.universe.lower, s.universe.upper],
                     "labels": list(s.labels)}
            if s is rb.output:
                entry["output"] = True
            doc["sets"].append(entry)
        doc["rules"] = [str(r) if r.included else {"rule": str(r), "included": False}
                        for r in rb.rules]
    else:
        doc["covariates"] = list(spec.model.covariates)
        doc["prior"] = [float(spec.prior.lower[0]), float(spec.prior.upper[0])]
        doc["terms"] = [list(t) for t in spec.model.exponents]
    if isinstance(spec.sigma, Estimated):
        doc["sigma"] = "est"
        doc["sigma_range"] = [spec.sigma.lower, spec.sigma.upper]
    else:
        doc["sigma"] = spec.sigma.sigma
    return doc


def load_specs(path) -> list[ModelSpec]:
    """Every model document in a (possibly multi-document) YAML file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecificationError(f"cannot read spec file {path}: {exc.strerror}") from None
    return loads_specs(text)


def loads_specs(text: str) -> list[ModelSpec]:
    try:
        docs = [d for d in yaml.safe_load_all(text) if d is not None]
    except yaml.YAMLError as exc:
        raise SpecificationError(f"invalid YAML: {exc}") from None
    if not docs:
        raise SpecificationError("spec file holds no model")
    return [spec_from_dict(d) for d in docs]


def dumps_spec(spec: ModelSpec) -> str:
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False)


def _bundled(name: str) -> ModelSpec:
    text = resources.files("fuzzy_evidence.data").joinpath(f"{name}.yaml").read_text()
    return loads_specs(text)[0]


def builtin_specs(glm_prior: tuple[float, float] | None = None) -> dict[str, ModelSpec]:
    """All bundled models by name.

    GLM1-5 default to coefficients in [-50, 50] and GLM6-8 to
    [-100, 100]; ``glm_prior`` overrides the range for every GLM.
    """
    out = {}
    for name in BUILTIN_NAMES:
        spec = _bundled(name)
        if glm_prior is not None and spec.kind == "glm":
            spec = spec.with_coefficient_range(*glm_prior)
        out[name] = spec
    return out


def resolve_spec(ref: str, sigma=None, glm_prior=None) -> ModelSpec:
    """A bundled model name or a path to a spec file, with optional overrides."""
    key = str(ref).lower()
    if key in BUILTIN_NAMES:
        spec = _bundled(key)
    else:
        specs = load_specs(ref)
        if len(specs) != 1:
            raise SpecificationError(f"{ref}: expected one model, found {len(specs)}")
        spec = specs[0]
    if sigma is not None:
        spec = spec.with_sigma(parse_sigma(sigma))
    if glm_prior is not None and spec.kind == "glm":
        spec = spec.with_coefficient_range(*glm_prior)
    return spec
