"""Mamdani rule-base evaluation with one-peak triangular partitions.

A rule base maps crisp covariates to a crisp output:

* each covariate is clamped to its universe and fuzzified as a singleton,
* rule antecedents are folded strictly left to right (AND = min, OR = max),
* each firing strength clips its consequent membership function (min),
* clipped consequents are aggregated by pointwise max on a uniform grid,
* the output is the centroid of the aggregate, or the universe midpoint
  when nothing fires.

Mixed connectives have no precedence: ``A OR B AND C`` is ``(A OR B) AND C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .errors import ParameterDomainError, SpecificationError

GRID_SIZE = 1001

AND = "AND"
OR = "OR"


@dataclass(frozen=True)
class Universe:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise SpecificationError(
                f"universe needs lower < upper, got [{self.lower}, {self.upper}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def span(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ReferentialSet:
    """A covariate (or output) partitioned into ordered linguistic labels."""

    name: str
    labels: tuple[str, ...]
    universe: Universe

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise SpecificationError(f"set {self.name!r} needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise SpecificationError(f"set {self.name!r} has duplicate labels")


@dataclass(frozen=True)
class TriangularMF:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a <= self.b <= self.c):
            raise ParameterDomainError(
                f"triangle vertices must satisfy a <= b <= c, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class Rule:
    antecedents: tuple[tuple[str, str], ...]
    connectives: tuple[str, ...]
    consequent: tuple[str, str]
    included: bool = True

    def __post_init__(self):
        object.__setattr__(self, "antecedents", tuple(tuple(a) for a in self.antecedents))
        object.__setattr__(self, "connectives", tuple(c.upper() for c in self.connectives))
        object.__setattr__(self, "consequent", tuple(self.consequent))
        if not self.antecedents:
            raise SpecificationError("a rule needs at least one antecedent")
        if len(self.connectives) != len(self.antecedents) - 1:
            raise SpecificationError("need exactly one connective between antecedents")
        bad = [c for c in self.connectives if c not in (AND, OR)]
        if bad:
            raise SpecificationError(f"unknown connective(s) {bad}")

    def __str__(self):
        parts = [f"{s} IS {lab}" for s, lab in self.antecedents]
        text = parts[0]
        for conn, part in zip(self.connectives, parts[1:]):
            text += f" {conn} {part}"
        out, lab = self.consequent
        return f"IF {text} THEN {out} IS {lab}"


@dataclass(frozen=True)
class RuleBase:
    """Input sets, one output set, and the rules joining them.

    ``order`` fixes the parameter layout: the peaks of each set are laid
    out in this order (inputs that no rule mentions contribute nothing).
    By default inputs come first, output last.
    """

    inputs: tuple[ReferentialSet, ...]
    output: ReferentialSet
    rules: tuple[Rule, ...]
    order: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        names = [s.name for s in self.inputs] + [self.output.name]
        if len(set(names)) != len(names):
            raise SpecificationError("referential set names must be unique")
        if not self.order:
            object.__setattr__(self, "order", tuple(names))
        else:
            object.__setattr__(self, "order", tuple(self.order))
            if sorted(self.order) != sorted(names):
                raise SpecificationError("declaration order must list every set exactly once")
        if not self.rules:
            raise SpecificationError("rule base has no rules")
        by_name = {s.name: s for s in self.inputs}
        for rule in self.rules:
            for set_name, label in rule.antecedents:
                if set_name not in by_name:
                    raise SpecificationError(f"rule references unknown input set {set_name!r}")
                if label not in by_name[set_name].labels:
                    raise SpecificationError(f"set {set_name!r} has no label {label!r}")
            out_name, out_label = rule.consequent
            if out_name != self.output.name:
                raise SpecificationError(f"consequent set {out_name!r} is not the output set")
            if out_label not in self.output.labels:
                raise SpecificationError(f"output set has no label {out_label!r}")

    @cached_property
    def used_inputs(self) -> frozenset[str]:
        return frozenset(s for r in self.rules for s, _ in r.antecedents)

    @cached_property
    def layout(self) -> tuple[tuple[str, str], ...]:
        """(set, label) owning each parameter index."""
        sets = {s.name: s for s in self.inputs}
        sets[self.output.name] = self.output
        out = []
        for name in self.order:
            if name != self.output.name and name not in self.used_inputs:
                continue
            out.extend((name, label) for label in sets[name].labels)
        return tuple(out)

    @cached_property
    def _slices(self) -> dict[str, slice]:
        slices, start = {}, 0
        for name in dict.fromkeys(n for n, _ in self.layout):
            n = sum(1 for s, _ in self.layout if s == name)
            slices[name] = slice(start, start + n)
            start += n
        return slices

    @property
    def n_params(self) -> int:
        return len(self.layout)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.inputs)

    def peaks(self, theta, set_name: str) -> np.ndarray:
        return np.asarray(theta, dtype=float)[self._slices[set_name]]

    def parameter_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Universe bounds for every parameter, in layout order."""
        sets = {s.name: s for s in self.inputs}
        sets[self.output.name] = self.output
        lo = np.array([sets[s].universe.lower for s, _ in self.layout])
        hi = np.array([sets[s].universe.upper for s, _ in self.layout])
        return lo, hi

    @cached_property
    def output_grid(self) -> np.ndarray:
        u = self.output.universe
        return np.linspace(u.lower, u.upper, GRID_SIZE)

    def without_rule(self, index: int) -> "RuleBase":
        rules = self.rules[:index] + self.rules[index + 1:]
        return RuleBase(self.inputs, self.output, rules, self.order)


def tri_membership(u, mf: TriangularMF):
    """Membership degree of ``u`` (scalar or array) in a triangle.

    A degenerate side (a == b or b == c) is a step that attains 1 at b.
    """
    a, b, c = mf.a, mf.b, mf.c
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore"):
        deg = _ramps(u, a, b, c)
    return float(deg) if deg.ndim == 0 else deg


def _ramps(u, a, b, c):
    if b > a:
        left = (u - a) / (b - a)
    else:
        left = np.where(u >= b, 1.0, 0.0)
    if c > b:
        right = (c - u) / (c - b)
    else:
        right = np.where(u <= b, 1.0, 0.0)
    return np.clip(np.minimum(left, right), 0.0, 1.0)


def build_partition(rset: ReferentialSet, peaks: Sequence[float]) -> list[TriangularMF]:
    """Triangles for a set, one learnable vertex per label.

    The first label is a left shoulder ``(L, L, p)``, the last a right
    shoulder ``(p, U, U)`` and every interior label spans the universe with
    its peak free: ``(L, p, U)``.
    """
    lo, hi = rset.universe.lower, rset.universe.upper
    if len(peaks) != len(rset.labels):
        raise SpecificationError(
            f"set {rset.name!r} needs {len(rset.labels)} peaks, got {len(peaks)}")
    for p in peaks:
        if not lo <= p <= hi:
            raise ParameterDomainError(
                f"peak {p} outside universe [{lo}, {hi}] of set {rset.name!r}")
    last = len(peaks) - 1
    mfs = []
    for i, p in enumerate(peaks):
        p = float(p)
        if i == 0:
            mfs.append(TriangularMF(lo, lo, p))
        elif i == last:
            mfs.append(TriangularMF(p, hi, hi))
        else:
            mfs.append(TriangularMF(lo, p, hi))
    return mfs


def firing_strength(rule: Rule, degrees: Mapping[tuple[str, str], object]):
    """Fold antecedent degrees left to right; works on floats or arrays."""
    try:
        vals = [degrees[a] for a in rule.antecedents]
    except KeyError as exc:
        raise SpecificationError(f"no membership degree for antecedent {exc.args[0]}") from None
    if not rule.included:
        first = np.asarray(vals[0], dtype=float)
        return 0.0 if first.ndim == 0 else np.zeros_like(first)
    acc = vals[0]
    for conn, v in zip(rule.connectives, vals[1:]):
        acc = np.minimum(acc, v) if conn == AND else np.maximum(acc, v)
    return acc


def _check_theta(rb: RuleBase, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != rb.n_params:
        raise SpecificationError(
            f"rule base takes {rb.n_params} parameters, got shape {theta.shape}")
    return theta


def infer_batch(rb: RuleBase, theta, X, stats: dict | None = None) -> np.ndarray:
    """Crisp outputs for every row of ``X`` (columns follow ``rb.inputs``).

    If ``stats`` is given, ``stats["empty"]`` is incremented by the number
    of rows where no rule fired.
    """
    theta = _check_theta(rb, theta)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(rb.inputs):
        raise SpecificationError(
            f"expected {len(rb.inputs)} covariate columns, got {X.shape[1]}")
    n = X.shape[0]

    degrees = {}
    for col, rset in enumerate(rb.inputs):
        if rset.name not in rb.used_inputs:
            continue
        u = np.clip(X[:, col], rset.universe.lower, rset.universe.upper)
        for label, mf in zip(rset.labels, build_partition(rset, rb.peaks(theta, rset.name))):
            degrees[(rset.name, label)] = tri_membership(u, mf)

    # max over rules sharing a consequent commutes with the min-clip
    out_labels = rb.output.labels
    strength = np.zeros((n, len(out_labels)))
    for rule in rb.rules:
        if not rule.included:
            continue
        col = out_labels.index(rule.consequent[1])
        np.maximum(strength[:, col], firing_strength(rule, degrees), out=strength[:, col])

    grid = rb.output_grid
    out_mfs = build_partition(rb.output, rb.peaks(theta, rb.output.name))
    mf_grid = np.array([tri_membership(grid, mf) for mf in out_mfs])
    out = np.empty(n)
    empty = np.zeros(n, dtype=np.bool_)
    _aggregate_centroid(strength, mf_grid, grid, rb.output.universe.midpoint, out, empty)
    if stats is not None:
        stats["empty"] = stats.get("empty", 0) + int(empty.sum())
    return out


@njit(cache=True)
def _aggregate_centroid(strength, mf_grid, grid, midpoint, out, empty):
    n, n_labels = strength.shape
    row = np.empty(grid.shape[0])
    for i in range(n):
        row[:] = 0.0
        for lab in range(n_labels):
            s = strength[i, lab]
            if s <= 0.0:
                continue
            for g in range(grid.shape[0]):
                v = min(s, mf_grid[lab, g])
                if v > row[g]:
                    row[g] = v
        num = 0.0
        den = 0.0
        for g in range(grid.shape[0]):
            num += row[g] * grid[g]
            den += row[g]
        if den > 0.0:
            out[i] = num / den
        else:
            out[i] = midpoint
            empty[i] = True


def infer(rb: RuleBase, theta, x) -> float:
    """Crisp output for a single covariate vector."""
    return float(infer_batch(rb, theta, np.asarray(x, dtype=float)[None, :])[0])
