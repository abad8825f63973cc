"""Command line interface.

Exit codes: 0 on success, 2 for input problems (files, columns, prior
specifications), 3 for numeric failures such as an improper posterior.
The ``NNHM_GRID_NODES`` environment variable overrides the posterior
grid resolution.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import __version__
from .engine import (
    DEFAULT_GRID_NODES,
    EffectPrior,
    parse_effect_prior,
    report_from_grid,
    tau_marginal_posterior,
)
from .errors import (
    DataError,
    DomainError,
    ImproperPosteriorError,
    ImproperPriorError,
    PriorSpecError,
)
from .forest import forest_spec, render_forest, render_tau_density
from .io import MEASURES, emit_report, load_dataset
from .mixtures import MixingSpec, half_t_from_mixture, lomax_from_mixture
from .predictive import (
    DEFAULT_CATEGORIES,
    CategoryScheme,
    category_probabilities,
    marginal_predictive,
)
from .priors import parse_prior
from .sensitivity import DEFAULT_FAMILIES, SensitivityPlan, run_sensitivity
from .uisd import empirical_uisd, prior_max_sample_size

_LOG_SCALE_MEASURES = {"logor", "logodds", "logratio-ci"}


def _grid_nodes() -> int:
    raw = os.environ.get("NNHM_GRID_NODES")
    if raw is None:
        return DEFAULT_GRID_NODES
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"NNHM_GRID_NODES must be an integer, got {raw!r}") from None


def _ci(s) -> str:
    return f"{s.median:7.2f}  [{s.lo:.2f}, {s.hi:.2f}]"


def cmd_analyze(args) -> int:
    data = load_dataset(args.infile, args.measure)
    prior = parse_prior(args.prior)
    eprior = parse_effect_prior(args.effect_prior)
    gp = tau_marginal_posterior(data, prior, eprior, nodes=_grid_nodes())
    report = report_from_grid(gp, level=args.level, kind=args.interval)

    sys.stdout.write(emit_report(report, args.format))
    if args.json:
        Path(args.json).write_text(emit_report(report, "json"), encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(emit_report(report, "csv"), encoding="utf-8")
    if args.forest:
        axis = args.axis
        if axis == "auto":
            axis = "exp" if args.measure in _LOG_SCALE_MEASURES else "identity"
        elif axis == "exp" and args.measure in ("md", "smd", "fisherz"):
            raise DataError(f"exponentiated axis is not meaningful for measure {args.measure!r}")
        svg = render_forest(report, forest_spec(data, report, axis))
        Path(args.forest).write_text(svg, encoding="utf-8")
    if args.tau_density:
        ci = (report.tau.lo, report.tau.hi)
        Path(args.tau_density).write_text(
            render_tau_density(gp.tau, gp.post_density, ci), encoding="utf-8"
        )
    return 0


def _parse_categories(text: str) -> CategoryScheme:
    entries = []
    for piece in text.split(","):
        parts = piece.split(":")
        if len(parts) != 3:
            raise DataError(f"bad category {piece!r}; expected name:lo:hi")
        name, lo, hi = parts
        try:
            entries.append((name.strip(), float(lo), math.inf if hi.strip() in ("inf", "") else float(hi)))
        except ValueError:
            raise DataError(f"bad category bounds in {piece!r}") from None
    return CategoryScheme(tuple(entries))


def cmd_prior_inspect(args) -> int:
    prior = parse_prior(args.priorspec)
    scheme = _parse_categories(args.categories) if args.categories else DEFAULT_CATEGORIES
    summary = prior.summarize()
    pred = marginal_predictive(prior, args.level)
    cats = category_probabilities(prior, scheme)
    print(f"prior: {prior.label()}")
    mean = "-" if summary.mean is None else f"{summary.mean:.3f}"
    print(f"tau: median {summary.median:.3f}  mean {mean}  q95 {summary.q95:.3f}")
    print(
        f"{args.level * 100:g}% predictive: [{pred.interval_lo:.3f}, {pred.interval_hi:.3f}]"
        f"  exp: [{pred.exp_lo:.4g}, {pred.exp_hi:.4g}]"
    )
    print(f"P(tau <= {scheme.categories[0][1]:g}): {cats.below * 100:.1f}%")
    for name, prob in cats.categories:
        print(f"P({name}): {prob * 100:.1f}%")
    return 0


def cmd_prior_mix(args) -> int:
    spec = MixingSpec(args.mean, args.cv)
    if args.base == "exponential":
        prior = lomax_from_mixture(spec)
    else:
        prior = half_t_from_mixture(spec)
    print(f"mixture of {args.base} with scale mean {args.mean:g}, cv {args.cv:g}")
    print(f"resulting prior: {prior.label()}  (spec: {prior.spec()})")
    summary = prior.summarize()
    mean = "-" if summary.mean is None else f"{summary.mean:.3f}"
    cv = "-" if summary.cv is None else f"{summary.cv:.3f}"
    print(f"tau: median {summary.median:.3f}  mean {mean}  cv {cv}  q95 {summary.q95:.3f}")
    pred = marginal_predictive(prior, 0.95)
    print(f"95% predictive: [{pred.interval_lo:.3f}, {pred.interval_hi:.3f}]")
    return 0


def cmd_sensitivity(args) -> int:
    data = load_dataset(args.infile, args.measure)
    base = parse_prior(args.prior)
    eprior = parse_effect_prior(args.effect_prior)
    factors = tuple(float(f) for f in args.factors.split(","))
    families = DEFAULT_FAMILIES if args.families is None else tuple(
        f.strip() for f in args.families.split(",") if f.strip()
    )
    plan = SensitivityPlan(
        base_prior=base,
        scale_factors=factors,
        families=families,
        include_uniform=not args.no_uniform,
        include_jeffreys=not args.no_jeffreys,
    )
    rows = run_sensitivity(data, plan, eprior, level=args.level, nodes=_grid_nodes())
    if args.format == "csv":
        print("prior,tau_median,tau_lo,tau_hi,mu_median,mu_lo,mu_hi,pred_median,pred_lo,pred_hi")
        for label, rep in rows:
            cells = [rep.tau, rep.mu, rep.prediction]
            nums = ",".join(f"{s.median:.4f},{s.lo:.4f},{s.hi:.4f}" for s in cells)
            print(f'"{label}",{nums}')
    else:
        name_w = max(len(label) for label, _ in rows) + 2
        print(f"{'prior':<{name_w}}{'heterogeneity':>22}{'effect':>24}{'prediction':>24}")
        for label, rep in rows:
            print(
                f"{label:<{name_w}}"
                f"{_ci(rep.tau):>22}{_ci(rep.mu):>24}{_ci(rep.prediction):>24}"
            )
    return 0


def cmd_uisd(args) -> int:
    data = load_dataset(args.infile, args.measure)
    est = empirical_uisd(data)
    print(f"uisd: {est.value:.4g}  ({est.basis}, {est.source})")
    if args.tau is not None:
        n = prior_max_sample_size(args.tau, est.value)
        ratio = args.tau / est.value
        n_text = "inf" if math.isinf(n) else f"{n:.1f}"
        print(f"tau/uisd: {ratio:.4g}  ->  prior maximum sample size: {n_text}")
    return 0


def cmd_effectsize(args) -> int:
    data = load_dataset(args.infile, args.measure)
    print("label,y,sigma,n")
    for s in data.studies:
        n = "" if s.n is None else s.n
        print(f'"{s.label}",{s.y:.6g},{s.sigma:.6g},{n}')
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnhm",
        description="Bayesian random-effects meta-analysis with weakly informative heterogeneity priors",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    measures = sorted(MEASURES)

    p = sub.add_parser("analyze", help="run a meta-analysis")
    p.add_argument("--in", dest="infile", required=True, help="CSV or JSON study file")
    p.add_argument("--measure", choices=measures, default="precomputed")
    p.add_argument("--prior", required=True, help="heterogeneity prior, e.g. halfnormal(0.5)")
    p.add_argument("--effect-prior", default="uniform()", help="uniform() or normal(mean,sd)")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--interval", choices=("shortest", "central"), default="shortest")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--json", metavar="PATH", help="also write a JSON report")
    p.add_argument("--csv", metavar="PATH", help="also write a CSV report")
    p.add_argument("--forest", metavar="PATH", help="write a forest plot SVG")
    p.add_argument("--axis", choices=("auto", "identity", "exp"), default="auto")
    p.add_argument("--tau-density", metavar="PATH", help="write a heterogeneity density SVG")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("prior", help="prior utilities")
    prior_sub = p.add_subparsers(dest="prior_command", required=True)

    q = prior_sub.add_parser("inspect", help="implications of a heterogeneity prior")
    q.add_argument("priorspec", help="e.g. halfnormal(0.5)")
    q.add_argument("--level", type=float, default=0.95)
    q.add_argument("--categories", help="override, e.g. 'low:0:0.1,high:0.1:inf'")
    q.set_defaults(func=cmd_prior_inspect)

    q = prior_sub.add_parser("mix", help="build a heavy-tailed prior as a scale mixture")
    q.add_argument("--base", choices=("exponential", "halfnormal"), required=True)
    q.add_argument("--mean", type=float, required=True, help="mixing scale expectation")
    q.add_argument("--cv", type=float, required=True, help="mixing scale coefficient of variation")
    q.set_defaults(func=cmd_prior_mix)

    p = sub.add_parser("sensitivity", help="prior sensitivity sweep")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--measure", choices=measures, default="precomputed")
    p.add_argument("--prior", required=True, help="base heterogeneity prior")
    p.add_argument("--effect-prior", default="uniform()")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--factors", default="0.5,1,2", help="scale factors, comma separated")
    p.add_argument("--families", help="family tags for median matching, comma separated")
    p.add_argument("--no-uniform", action="store_true")
    p.add_argument("--no-jeffreys", action="store_true")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("uisd", help="unit information standard deviation")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--measure", choices=measures, default="precomputed")
    p.add_argument("--tau", type=float, help="also report the implied prior maximum sample size")
    p.set_defaults(func=cmd_uisd)

    p = sub.add_parser("effectsize", help="derive (y, sigma) pairs from raw summaries")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--measure", choices=[m for m in measures if m != "precomputed"], required=True)
    p.set_defaults(func=cmd_effectsize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, PriorSpecError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImproperPosteriorError, ImproperPriorError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
