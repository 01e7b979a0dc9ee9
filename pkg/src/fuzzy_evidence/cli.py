"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 a run did not converge.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import replace
from functools import partial
from importlib import resources
from pathlib import Path

from . import __version__
from .catalog import BUILTIN_NAMES, resolve_spec
from .errors import InitializationError, ParameterDomainError, SpecificationError
from .experiments import (ExperimentPlan, cell_seed, emit_report, generate_standin,
                          generate_synthetic, load_plan, print_progress, rows_from_results,
                          run_comparison)
from .models import parse_sigma, read_dataset, write_dataset
from .nested import METHODS, EvidenceResult, SamplerConfig, run

OUT_ENV = "FUZZY_EVIDENCE_OUT"
DEFAULTS = SamplerConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _prior_range(text: str) -> tuple[float, float]:
    parts = [p for p in re.split(r"[,:\s]+", text.strip().strip("[]")) if p]
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prior range {text!r}") from None
    if len(vals) == 1 and vals[0] > 0:
        return (-vals[0], vals[0])
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError(f"bad prior range {text!r}; use LO,HI or a half-width")
    return (vals[0], vals[1])


def _sigma(text: str) -> str:
    try:
        return parse_sigma(text).tag
    except SpecificationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _default_out() -> str:
    return os.environ.get(OUT_ENV, ".")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="fuzzy-evidence", formatter_class=fmt,
                     description="Nested-sampling evidence for fuzzy rule bases and GLMs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", formatter_class=fmt, help="write a synthetic dataset")
    gen.add_argument("--kind", choices=("synthetic", "standin"), default="synthetic",
                     help="downtime example or three-covariate uptime stand-in")
    gen.add_argument("--seed", type=int, default=7, help="data seed")
    gen.add_argument("--n", type=int, default=50, help="number of rows")
    gen.add_argument("--out", default=None,
                     help=f"output CSV path; None means ${OUT_ENV}/data.csv or ./data.csv")

    def sampler_flags(p, method_default):
        p.add_argument("--method", choices=METHODS, default=method_default,
                       help="constrained sampler")
        p.add_argument("--n-live", type=int, default=DEFAULTS.n_live, help="live points")
        p.add_argument("--tol", type=float, default=DEFAULTS.tol,
                       help="stop when live points could add less than this to log Z")
        p.add_argument("--seed", type=int, default=None, help="sampler seed")
        p.add_argument("--sigma", type=_sigma, default=None,
                       help="noise: est | 0.25 | 1.0 | <value>; None keeps the model's own")
        p.add_argument("--prior-range", type=_prior_range, default=None,
                       help="GLM coefficient box as a half-width (10) or --prior-range=LO,HI; "
                            "None keeps the model's own")
        p.add_argument("--out", default=None, help=f"output directory; None means ${OUT_ENV} or .")

    ev = sub.add_parser("evidence", formatter_class=fmt, help="evidence for one model")
    ev.add_argument("--spec", required=True,
                    help=f"bundled model ({', '.join(BUILTIN_NAMES)}) or spec file")
    ev.add_argument("--data", required=True, help="dataset CSV")
    sampler_flags(ev, DEFAULTS.method)

    cmp_ = sub.add_parser("compare", formatter_class=fmt, help="run an experiment plan")
    cmp_.add_argument("--plan", required=True, help="plan file, or bundled 'synthetic'/'realworld'")
    cmp_.add_argument("--data", default=None, help="dataset CSV overriding the plan's")
    sampler_flags(cmp_, None)
    cmp_.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                      help="parallel sampler runs")

    rep = sub.add_parser("report", formatter_class=fmt, help="tabulate saved results")
    rep.add_argument("--results", nargs="+", required=True, help="result JSON files")
    rep.add_argument("--out", default=None, help=f"output directory; None means ${OUT_ENV} or .")
    return parser


def _safe(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", text).strip("_")


def _echo(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _cmd_generate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    out = Path(args.out) if args.out else Path(_default_out()) / "data.csv"
    data = generate_synthetic(args.seed, args.n) if args.kind == "synthetic" \
        else generate_standin(args.seed, args.n)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(data, out)
    _echo({"command": "generate", "kind": args.kind, "seed": args.seed, "n": args.n,
           "out": str(out)})
    return 0


def _cmd_evidence(args) -> int:
    spec = resolve_spec(args.spec, sigma=args.sigma, glm_prior=args.prior_range)
    data = read_dataset(args.data)
    config = SamplerConfig(n_live=args.n_live, tol=args.tol, method=args.method,
                           rng_seed=0 if args.seed is None else args.seed)
    out = Path(args.out or _default_out())
    resolved = {"command": "evidence", "model": spec.name, "prior": spec.prior_tag,
                "sigma": spec.sigma.tag, "data": args.data, **vars(config)}
    print(json.dumps(resolved, sort_keys=True), file=sys.stderr)
    result = run(spec.bind(data), config, callback=partial(print_progress, spec.name))
    result.parameter_names = spec.parameter_names()
    result.config.update(model=spec.name, prior=spec.prior_tag, sigma=spec.sigma.tag)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{_safe(spec.name)}-{args.method}.json"
    path.write_text(result.to_json())
    _echo({**resolved, "logz": result.logz, "logz_err": result.logz_err,
           "n_calls": result.n_calls, "converged": result.converged, "result": str(path)})
    return 0 if result.converged else 2


def _resolve_plan(ref: str) -> tuple[ExperimentPlan, Path | None]:
    path = Path(ref)
    if not path.exists() and ref in ("synthetic", "realworld", "synthetic.plan", "realworld.plan"):
        name = ref if ref.endswith(".plan") else f"{ref}.plan"
        with resources.as_file(resources.files("fuzzy_evidence.data").joinpath(name)) as p:
            return load_plan(p), None
    return load_plan(path), path.parent


def _cmd_compare(args) -> int:
    plan, base = _resolve_plan(args.plan)
    overrides = {"n_live": args.n_live, "tol": args.tol}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.method is not None:
        overrides["methods"] = [args.method]
    if args.sigma is not None:
        overrides["sigma"] = [args.sigma]
    if args.prior_range is not None:
        overrides["glm_prior_ranges"] = [list(args.prior_range)]
    plan = replace(plan, **overrides)
    data = read_dataset(args.data) if args.data else plan.load_dataset(base)
    out = Path(args.out or _default_out())

    cells = [{"model": s.name, "method": m, "prior": s.prior_tag, "sigma": s.sigma.tag,
              "seed": cell_seed(plan.seed, s.name, m, s.prior_tag, s.sigma.tag)}
             for sig in plan.sigma for s, m in plan.cells(sig)]
    print(json.dumps({"command": "compare", "plan": plan.name, "dataset": plan.dataset,
                      "n_live": plan.n_live, "tol": plan.tol, "seed": plan.seed,
                      "cells": cells}, sort_keys=True), file=sys.stderr)

    all_converged = True
    summary = []
    multi = len(plan.sigma) > 1
    for sig in plan.sigma:
        rows = run_comparison(plan, data, sigma=sig, workers=args.workers, progress=True)
        tag = parse_sigma(sig).tag
        prefix = f"sigma-{_safe(tag)}-" if multi else ""
        emit_report(rows, out, prefix)
        results_dir = out / "results"
        results_dir.mkdir(parents=True, exist_ok=True)
        for r in rows:
            r.result.config.update(model=r.model, prior=r.prior, sigma=r.sigma)
            name = _safe(f"{r.model}-{r.prior}-{r.method}-sigma{r.sigma}")
            (results_dir / f"{name}.json").write_text(r.result.to_json())
            all_converged &= r.converged
            summary.append({"model": r.model, "method": r.method, "prior": r.prior,
                            "sigma": r.sigma, "logz": r.logz, "logz_err": r.logz_err,
                            "n_calls": r.n_calls, "converged": r.converged})
    _echo({"command": "compare", "plan": plan.name, "out": str(out), "rows": summary})
    return 0 if all_converged else 2


def _cmd_report(args) -> int:
    named = []
    for p in args.results:
        try:
            res = EvidenceResult.from_json(Path(p).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {p}: {exc.strerror}") from None
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{p} is not a result file: {exc}") from None
        named.append(res)
    rows = rows_from_results(named)
    out = Path(args.out or _default_out())
    written = emit_report(rows, out)
    _echo({"command": "report", "files": [str(w) for w in written]})
    return 0 if all(r.converged for r in rows) else 2


COMMANDS = {"generate": _cmd_generate, "evidence": _cmd_evidence,
            "compare": _cmd_compare, "report": _cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fuzzy-evidence: error: {exc}", file=sys.stderr)
        return 1
    except (SpecificationError, ParameterDomainError, InitializationError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"fuzzy-evidence: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
