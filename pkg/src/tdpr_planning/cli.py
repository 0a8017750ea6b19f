"""Command-line interface: ``tdpr-plan <group> <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .data import HOURS, ValidationError
from .dayreduce import extract_day_features, cluster_days, reduce_days
from .formulation import MODES, WITH_TDPR, WITHOUT_TDPR, build_model
from .report import PipelineError, apply_overrides, resume_plan, run_compare, run_plan, _load
from .solve import write_mps
from .tdpr import compute_tdpr

OUT_ENV = "TDPR_PLAN_OUT"
DEFAULT_OUT = "tdpr_out"

log = logging.getLogger("tdpr_planning")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="system config YAML")
    p.add_argument("--scenarios", required=True, help="scenario CSV (plant,scenario,day,hour,value_mw)")
    p.add_argument("--out", default=None, help=f"output path (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="risk aversion in [0, 1]")
    p.add_argument("--beta", type=float, default=None, help="CVaR tail probability in (0, 1]")
    p.add_argument("-K", type=int, default=None, help="representative days")
    p.add_argument("--seed", type=int, default=None, help="clustering seed")
    p.add_argument("--gap", type=float, default=None, help="relative MIP gap")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdpr-plan", description=__doc__)
    groups = parser.add_subparsers(dest="group", required=True)

    tdpr = groups.add_parser("tdpr", help="stand-alone reserve requirement").add_subparsers(dest="cmd", required=True)
    p = tdpr.add_parser("compute", help="hourly requirement from the scenario set, all VRE plants at full build")
    _common(p)
    p.add_argument("--by-region", action="store_true", help="add one requirement column per region")
    p.set_defaults(func=cmd_tdpr_compute)

    days = groups.add_parser("days", help="representative days").add_subparsers(dest="cmd", required=True)
    p = days.add_parser("cluster", help="k-medoids day selection")
    _common(p)
    p.set_defaults(func=cmd_days_cluster)

    plan = groups.add_parser("plan", help="expansion planning runs").add_subparsers(dest="cmd", required=True)
    p = plan.add_parser("solve", help="solve one plan")
    _common(p)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--timings", action="store_true", help="record wall-clock timings in run_meta.json")
    p.set_defaults(func=cmd_plan_solve)
    p = plan.add_parser("compare", help="without-TDPR vs hierarchical vs co-optimised")
    _common(p)
    p.add_argument("--timings", action="store_true")
    p.set_defaults(func=cmd_plan_compare)
    p = plan.add_parser("resume", help="verify and report an externally solved plan")
    _common(p)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--solution", required=True, help="'name value' solution file")
    p.set_defaults(func=cmd_plan_resume)

    model = groups.add_parser("model", help="model export").add_subparsers(dest="cmd", required=True)
    p = model.add_parser("export-mps", help="write the MILP in free MPS format")
    _common(p)
    p.add_argument("--mode", choices=MODES, default=None)
    p.set_defaults(func=cmd_export_mps)
    return parser


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _out_file(args, default_name: str) -> Path:
    """``--out`` names a file when it has a suffix, otherwise a directory."""
    out = _out_dir(args)
    if out.suffix:
        out.parent.mkdir(parents=True, exist_ok=True)
        return out
    out.mkdir(parents=True, exist_ok=True)
    return out / default_name


def _problem(args):
    return apply_overrides(_load(args.config, args.scenarios), lam=args.lam, beta=args.beta, K=args.K,
                           seed=args.seed)


def _mode(args, problem) -> str:
    if args.mode:
        return args.mode
    return WITH_TDPR if problem.reserve.enabled else WITHOUT_TDPR


def _overrides(args) -> dict:
    return {"lam": args.lam, "beta": args.beta, "K": args.K, "seed": args.seed}


def cmd_tdpr_compute(args) -> int:
    problem = _problem(args)
    plants = problem.vre_plants
    prof = compute_tdpr(problem.scenarios, [v.profile for v in plants], problem.reserve)
    header = ["hour", "mean_mw", "cvar_mw", "tdpr_mw"]
    cols = [prof.mean_component, prof.cvar_component, prof.tdpr]
    if args.by_region:
        for z in problem.regions:
            sub = [v.profile for v in plants if v.region == z]
            header.append(f"tdpr_{z}_mw")
            cols.append(compute_tdpr(problem.scenarios, sub, problem.reserve).tdpr)
    path = _out_file(args, "tdpr_compute.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for h in range(HOURS):
            w.writerow([h + 1] + [repr(float(c[h])) for c in cols])
    print(f"peak requirement {prof.tdpr.max():.3f} MW at hour {int(np.argmax(prof.tdpr)) + 1}; wrote {path}")
    return 0


def cmd_days_cluster(args) -> int:
    problem = _problem(args)
    K = problem.clustering.K or problem.D
    if K == problem.D:
        cl = reduce_days(problem)
    else:
        cl = cluster_days(extract_day_features(problem), K, problem.clustering.seed, problem.clustering.restarts)
    path = _out_file(args, "clusters.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "cluster", "medoid", "weight"])
        for d, k in enumerate(cl.assignment):
            w.writerow([d + 1, k + 1, cl.medoids[k] + 1, cl.weights[k]])
    print(f"K={cl.K} medoids {[m + 1 for m in cl.medoids]} weights {list(cl.weights)}; wrote {path}")
    return 0


def _summarise(report) -> None:
    print(f"{report.meta.get('mode')}: status {report.status}, objective {report.objective:.6f}")
    for k, v in report.costs.items():
        print(f"  {k:<11}{v:16.3f}")
    if report.deficit_mwh > 1e-6:
        print(f"  unserved energy {report.deficit_mwh:.3f} MWh (deficit slack active)")
    for msg in report.violations[:10]:
        print(f"  violation: {msg}")


def cmd_plan_solve(args) -> int:
    problem = _problem(args)
    out = _out_dir(args)
    report = run_plan(problem, mode=_mode(args, problem), out_dir=out, gap=args.gap,
                      include_timings=args.timings)
    _summarise(report)
    print(f"reports in {out}")
    return 0 if report.ok else 1


def cmd_plan_compare(args) -> int:
    problem = _problem(args)
    out = _out_dir(args)
    res = run_compare(problem, out_dir=out, gap=args.gap, include_timings=args.timings)
    for r in (res.without_tdpr, res.hierarchical, res.co_optimized):
        print(f"{r.meta.get('approach'):<14} {r.status:<10} {r.objective:16.3f}")
    print(f"cost of hierarchy {res.cost_of_hierarchy:.6f}; reports in {out}")
    ok = res.without_tdpr.ok and res.hierarchical.ok and res.co_optimized.ok
    return 0 if ok else 1


def cmd_plan_resume(args) -> int:
    problem = _problem(args)
    out = _out_dir(args)
    report = resume_plan(problem, None, args.solution, mode=_mode(args, problem), out_dir=out)
    _summarise(report)
    return 0 if report.ok else 1


def cmd_export_mps(args) -> int:
    problem = _problem(args)
    model = build_model(problem, reduce_days(problem), _mode(args, problem))
    path = _out_file(args, "model.mps")
    write_mps(model, path)
    print(f"{model.n_rows} rows, {model.n_cols} columns ({int(model.binary.sum())} binary); wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
