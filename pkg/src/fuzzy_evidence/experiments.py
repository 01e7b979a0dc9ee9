"""Datasets, experiment plans, evidence comparisons and their reports."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from .catalog import resolve_spec
from .errors import SpecificationError
from .fuzzy import infer_batch
from .models import Dataset, ModelSpec, parse_sigma, read_dataset
from .nested import EvidenceResult, SamplerConfig, posterior_summary, run

log = logging.getLogger(__name__)

TRUE_PHI = (5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 50.0, 50.0, 50.0)
STANDIN_PHI = (3.0, 5.0, 7.0) * 4
STANDIN_NOISE = 0.5


def generate_synthetic(seed: int, n: int = 50) -> Dataset:
    """Noise-free downtime data from ``h_true`` plus a spurious covariate.

    loc_risk and maintenance are uniform on [0, 10]; dummy_covar is drawn
    afterwards from the same stream and appended.
    """
    if n < 1:
        raise SpecificationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 10.0, size=(n, 2))
    y = infer_batch(resolve_spec("h_true").model, TRUE_PHI, X)
    dummy = rng.uniform(0.0, 10.0, size=n)
    return Dataset(np.column_stack([X, dummy]), y,
                   ("loc_risk", "maintenance", "dummy_covar"), "downtime")


def generate_standin(seed: int, n: int = 50, phi: Sequence[float] = STANDIN_PHI,
                     noise: float = STANDIN_NOISE, source: str = "h_rw1") -> Dataset:
    """Three-covariate stand-in for the plant-uptime data.

    Covariates are uniform on [0, 10]; uptime is ``source`` evaluated at
    ``phi`` plus Gaussian noise of standard deviation ``noise``.
    """
    if n < 1:
        raise SpecificationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    spec = resolve_spec(source)
    X = rng.uniform(0.0, 10.0, size=(n, 3))
    y = infer_batch(spec.model, phi, X)
    if noise > 0:
        y = y + rng.normal(0.0, noise, size=n)
    return Dataset(X, y, spec.covariates, spec.model.output.name)


def cell_seed(master: int, *parts) -> int:
    """Stable 63-bit seed for one comparison cell."""
    key = "|".join([str(master)] + [str(p) for p in parts]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


@dataclass
class ExperimentPlan:
    """What to compare, on which data, with which sampler settings.

    ``dataset`` is either ``{"path": ...}`` or ``{"generate": "synthetic" |
    "standin", "seed": int, "n": int}`` (stand-in also takes ``noise``).
    ``glm_prior_ranges`` lists coefficient boxes; each GLM runs once per box.
    """

    roster: list[str]
    dataset: dict = field(default_factory=lambda: {"generate": "synthetic", "seed": 7, "n": 50})
    methods: list[str] = field(default_factory=lambda: ["single", "multi"])
    n_live: int = 50
    tol: float = 0.5
    seed: int = 0
    sigma: list = field(default_factory=lambda: ["est"])
    glm_prior_ranges: list | None = None
    enlargement: float = 1.25
    max_iterations: int = 200_000
    name: str = "comparison"

    def __post_init__(self):
        if not self.roster:
            raise SpecificationError("plan roster is empty")
        for m in self.methods:
            SamplerConfig(method=m)

    def load_dataset(self, base: Path | None = None) -> Dataset:
        ds = dict(self.dataset)
        if "path" in ds:
            path = Path(ds["path"])
            if base is not None and not path.is_absolute():
                path = base / path
            return read_dataset(path)
        kind = ds.get("generate", "synthetic")
        seed, n = int(ds.get("seed", 0)), int(ds.get("n", 50))
        if kind == "synthetic":
            return generate_synthetic(seed, n)
        if kind == "standin":
            return generate_standin(seed, n, tuple(ds.get("phi", STANDIN_PHI)),
                                    float(ds.get("noise", STANDIN_NOISE)),
                                    ds.get("source", "h_rw1"))
        raise SpecificationError(f"unknown dataset generator {kind!r}")

    def cells(self, sigma=None) -> list[tuple[ModelSpec, str]]:
        """Every (model spec, method) pair the plan runs, for one sigma."""
        out = []
        for ref in self.roster:
            base = resolve_spec(ref, sigma=sigma)
            variants = [base]
            if base.kind == "glm" and self.glm_prior_ranges:
                variants = [base.with_coefficient_range(float(lo), float(hi))
                            for lo, hi in self.glm_prior_ranges]
            for spec in variants:
                for method in self.methods:
                    out.append((spec, method))
        return out


def load_plan(path) -> ExperimentPlan:
    """Read a plan file: YAML with dataset, roster, sampler and sigma blocks."""
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise SpecificationError(f"cannot read plan {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise SpecificationError(f"invalid plan file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecificationError(f"plan {path} is not a mapping")
    sampler = doc.get("sampler", {}) or {}
    sigma = doc.get("sigma", ["est"])
    if not isinstance(sigma, list):
        sigma = [sigma]
    roster = doc.get("roster") or []
    if isinstance(roster, dict):
        roster = roster.get("models", [])
    try:
        return ExperimentPlan(
            roster=[str(r) for r in roster],
            dataset=doc.get("dataset", {"generate": "synthetic", "seed": 7, "n": 50}),
            methods=list(sampler.get("methods", ["single", "multi"])),
            n_live=int(sampler.get("n_live", 50)),
            tol=float(sampler.get("tol", 0.5)),
            seed=int(sampler.get("seed", 0)),
            sigma=sigma,
            glm_prior_ranges=doc.get("glm_prior_ranges"),
            enlargement=float(sampler.get("enlargement", 1.25)),
            max_iterations=int(sampler.get("max_iterations", 200_000)),
            name=str(doc.get("name", Path(path).stem)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecificationError):
            raise
        raise SpecificationError(f"malformed plan {path}: {exc}") from None


@dataclass
class ComparisonRow:
    model: str
    method: str
    logz: float
    logz_err: float
    n_calls: int
    prior: str
    sigma: str = "est"
    n_iter: int = 0
    converged: bool = True
    seed: int = 0
    result: EvidenceResult | None = field(default=None, repr=False, compare=False)


def print_progress(label: str, info: dict) -> None:
    """Sampler callback: one status line on stderr."""
    print(f"[{label}] it={info['it']} logz={info['logz']:.3f} "
          f"remain<={info['remain']:.3f} calls={info['n_calls']}",
          file=sys.stderr, flush=True)


def _run_cell(args) -> ComparisonRow:
    spec, method, data, config, progress = args
    label = f"{spec.name}/{method}/{spec.prior_tag}/sigma={spec.sigma.tag}"
    result = run(spec.bind(data), config,
                 callback=partial(print_progress, label) if progress else None)
    result.parameter_names = spec.parameter_names()
    if not result.converged:
        log.warning("%s/%s did not converge: %s", spec.name, method, result.message)
    return ComparisonRow(spec.name, method, result.logz, result.logz_err, result.n_calls,
                         spec.prior_tag, spec.sigma.tag, result.n_iter, result.converged,
                         config.rng_seed, result)


def _sort_rows(rows: Iterable[ComparisonRow]) -> list[ComparisonRow]:
    return sorted(rows, key=lambda r: (-r.logz, r.model, r.method, r.prior, r.sigma))


def run_comparison(plan: ExperimentPlan, data: Dataset | None = None, sigma=None,
                   workers: int | None = 1, progress: bool = False) -> list[ComparisonRow]:
    """Evidence for every cell of the plan, sorted by descending log Z.

    Each cell's seed is derived from the plan seed and the cell identity,
    so adding or reordering models leaves other cells untouched.
    ``sigma`` overrides the noise treatment of every model (defaults to the
    plan's first entry).
    """
    if data is None:
        data = plan.load_dataset()
    if sigma is None:
        sigma = plan.sigma[0] if plan.sigma else None
    jobs = []
    for spec, method in plan.cells(sigma):
        seed = cell_seed(plan.seed, spec.name, method, spec.prior_tag, spec.sigma.tag)
        config = SamplerConfig(n_live=plan.n_live, tol=plan.tol, method=method,
                               enlargement=plan.enlargement, rng_seed=seed,
                               max_iterations=plan.max_iterations)
        jobs.append((spec, method, data, config, progress))
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(j) for j in jobs]
    return _sort_rows(rows)


def sigma_regime_sweep(plan: ExperimentPlan, sigmas: Sequence = ("est", 0.25, 1.0),
                       data: Dataset | None = None, workers: int | None = 1
                       ) -> dict[str, list[ComparisonRow]]:
    """One comparison per noise treatment, keyed by its tag ("est", "0.25", ...)."""
    if data is None:
        data = plan.load_dataset()
    out = {}
    for s in sigmas:
        mode = parse_sigma(s)
        out[mode.tag] = run_comparison(plan, data, sigma=mode, workers=workers)
    return out


EVIDENCE_FIELDS = ("model", "method", "prior", "sigma", "logz", "logz_err",
                   "n_calls", "n_iter", "converged", "seed")


def _posterior_rows(rows: Sequence[ComparisonRow]):
    out = []
    for r in rows:
        if r.result is None:
            continue
        s = posterior_summary(r.result)
        names = r.result.parameter_names or [f"theta{i}" for i in range(len(s.mean))]
        out.append((r, dict(zip(names, zip(s.mean, s.std)))))
    return out


def _method_label(method: str) -> str:
    return {"single": "Single Ellip", "multi": "Multi Ellip", "basic": "Rejection"}.get(method, method)


def evidence_markdown(rows: Sequence[ComparisonRow]) -> str:
    """Models down, one (log Z, Fcalls) column pair per method."""
    methods = list(dict.fromkeys(r.method for r in rows))
    head = ["Model", "Prior"]
    for m in methods:
        head += [f"{_method_label(m)} log(Z)", f"{_method_label(m)} Fcalls"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    groups = {}
    for r in rows:
        groups.setdefault((r.model, r.prior, r.sigma), {})[r.method] = r
    order = sorted(groups, key=lambda k: -max(r.logz for r in groups[k].values()))
    for key in order:
        cells = [key[0], key[1]]
        for m in methods:
            r = groups[key].get(m)
            if r is None:
                cells += ["-", "-"]
            else:
                flag = "" if r.converged else " (nc)"
                cells += [f"{r.logz:.3f} ± {r.logz_err:.3f}{flag}", str(r.n_calls)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def posterior_table(rows: Sequence[ComparisonRow]) -> tuple[list[str], list[list[str]]]:
    """Header and body of a mean (std) table, one row per (model, method)."""
    post = _posterior_rows(rows)
    n_theta = max((sum(1 for k in p if k.startswith("theta")) for _, p in post), default=0)
    has_sigma = any("sigma" in p for _, p in post)
    header = ["model", "method"] + [f"theta{i}" for i in range(n_theta)]
    if has_sigma:
        header.append("sigma")
    body = []
    for r, p in sorted(post, key=lambda rp: (rp[0].model, rp[0].prior, rp[0].method)):
        line = [r.model if not r.prior.startswith("[") else f"{r.model} {r.prior}",
                _method_label(r.method)]
        for name in header[2:]:
            line.append(f"{p[name][0]:.2f} ({p[name][1]:.2f})" if name in p else "-")
        body.append(line)
    return header, body


def emit_report(rows: Sequence[ComparisonRow], destination, prefix: str = "") -> list[Path]:
    """Write evidence and posterior tables (CSV + Markdown) into ``destination``.

    The evidence CSV keeps full float precision so :func:`parse_report`
    recovers the rows exactly.
    """
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written = []

    path = dest / f"{prefix}evidence.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVIDENCE_FIELDS)
        for r in rows:
            w.writerow([r.model, r.method, r.prior, r.sigma, repr(float(r.logz)),
                        repr(float(r.logz_err)), r.n_calls, r.n_iter,
                        "true" if r.converged else "false", r.seed])
    written.append(path)

    path = dest / f"{prefix}evidence.md"
    path.write_text(evidence_markdown(rows))
    written.append(path)

    header, body = posterior_table(rows)
    if body:
        path = dest / f"{prefix}posterior.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(body)
        written.append(path)
        path = dest / f"{prefix}posterior.md"
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(b) + " |" for b in body]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def parse_report(path) -> list[ComparisonRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != EVIDENCE_FIELDS:
            raise SpecificationError(f"{path} is not an evidence report")
        return [ComparisonRow(model=r["model"], method=r["method"], logz=float(r["logz"]),
                              logz_err=float(r["logz_err"]), n_calls=int(r["n_calls"]),
                              prior=r["prior"], sigma=r["sigma"], n_iter=int(r["n_iter"]),
                              converged=r["converged"] == "true", seed=int(r["seed"]))
                for r in reader]


def rows_from_results(results: Sequence[EvidenceResult]) -> list[ComparisonRow]:
    """Comparison rows for results read back from result files."""
    rows = []
    for res in results:
        cfg = res.config or {}
        rows.append(ComparisonRow(cfg.get("model", "?"), cfg.get("method", "?"), res.logz,
                                  res.logz_err, res.n_calls, cfg.get("prior", ""),
                                  cfg.get("sigma", "est"), res.n_iter, res.converged,
                                  int(cfg.get("rng_seed", 0)), res))
    return _sort_rows(rows)


def occam_shift(n_coefficients: int, widening: float) -> float:
    """Expected log Z drop from widening every coefficient interval by ``widening``."""
    return n_coefficients * math.log(widening)
