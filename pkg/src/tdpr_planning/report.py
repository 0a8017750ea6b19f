"""Run orchestration (plan / compare) and report files."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import HOURS, PlanningProblem, ReserveConfig, ValidationError
from .dayreduce import DayClustering, reduce_days
from .formulation import (
    COST_KINDS,
    WITH_TDPR,
    WITHOUT_TDPR,
    build_model,
    extract_solution,
    fix_vre_investments,
    tdpr_values,
    vre_levels,
)
from .io import load_problem
from .model import MilpModel, Solution
from .solve import solve_milp, write_solution
from .solve.simplex import Tolerances
from .tdpr import compute_tdpr

log = logging.getLogger(__name__)

TDPR_HEADER = (
    "# total_mw: system requirement TDPR_h from the optimisation. "
    "Region columns recompute the requirement from each region's own VRE build alone; "
    "they are diagnostics and need not sum to the total."
)


class PipelineError(RuntimeError):
    """A stage of a run failed; the message starts with the stage tag."""

    def __init__(self, stage: str, msg: str):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage


@dataclass
class RunReport:
    mode: str
    status: str
    objective: float
    costs: dict[str, float]
    capacity_additions: dict[str, float]  # technology class -> MW
    tdpr: np.ndarray  # (24,)
    tdpr_by_region: dict[str, np.ndarray]
    reserve_allocation: list[tuple[str, int, float]]  # plant, hour, expected MW
    flows: list[tuple[str, int, float, float]]  # line, hour, expected MW, max |MW|
    decisions: list[tuple[str, str, float, float]]  # symbol, class, level, MW
    meta: dict
    deficit_mwh: float = 0.0
    violations: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "gap-limit") and not self.violations


def _expected(problem: PlanningProblem, model: MilpModel, sol: Solution, head: str, key: str,
              h: int) -> tuple[float, float]:
    """Probability/day-weighted mean and max |value| of one operating variable over (s, d)."""
    rep = model.meta["rep_days"]
    w = model.meta["rep_weights"]
    mean, peak = 0.0, 0.0
    for s in range(problem.S):
        for d, wd in zip(rep, w):
            v = sol.get((head, key, s + 1, d, h))
            mean += problem.scenarios.prob[s] * wd / problem.D * v
            peak = max(peak, abs(v))
    return mean, peak


def build_report(problem: PlanningProblem, clustering: DayClustering, model: MilpModel, sol: Solution,
                 seed: int | None = None, gap: float | None = None) -> RunReport:
    """Pure function of its inputs: re-running it on a stored solution reproduces the files."""
    mode = model.meta["mode"]
    x = sol.values
    decisions = []
    additions: dict[str, float] = {}
    for p in problem.dispatchables:
        if not p.existing:
            lvl = sol.value(("x_gen", p.id))
            decisions.append((f"x_gen({p.id})", p.tech, lvl, lvl * p.gmax))
    for v in problem.vre_plants:
        if not v.existing:
            lvl = sol.value(("x_vre", v.id))
            decisions.append((f"x_vre({v.id})", v.tech, lvl, lvl * v.capacity))
    for l in problem.lines:
        if not l.existing:
            lvl = sol.value(("x_line", l.id))
            decisions.append((f"x_line({l.id})", "transmission", lvl, lvl * l.fmax))
    for _, cls, _, mw in decisions:
        additions[cls] = additions.get(cls, 0.0) + mw
    additions = {k: v for k, v in sorted(additions.items()) if v > 1e-9}

    if mode == WITH_TDPR:
        tdpr = tdpr_values(model, sol)
        levels = {k: float(np.clip(v, 0.0, 1.0)) for k, v in vre_levels(model, sol).items()}
        by_region = {}
        for z in problem.regions:
            plants = [v for v in problem.vre_plants if v.region == z]
            prof = compute_tdpr(problem.scenarios, [v.profile for v in plants], problem.reserve,
                                weights=[levels[v.id] for v in plants])
            by_region[z] = prof.tdpr
    else:
        tdpr = np.zeros(HOURS)
        by_region = {z: np.zeros(HOURS) for z in problem.regions}

    reserve = []
    if mode == WITH_TDPR:
        for p in problem.dispatchables:
            for h in range(1, HOURS + 1):
                reserve.append((p.id, h, _expected(problem, model, sol, "r", p.id, h)[0]))
    flows = []
    for l in problem.lines:
        for h in range(1, HOURS + 1):
            mean, peak = _expected(problem, model, sol, "f", l.id, h)
            flows.append((l.id, h, mean, peak))

    deficit = 0.0
    for z in problem.regions:
        for h in range(1, HOURS + 1):
            # expected daily energy scaled to the D-day block
            deficit += _expected(problem, model, sol, "def", z, h)[0] * problem.D
    costs = {k: sol.breakdown.get(k, 0.0) for k in COST_KINDS}
    if "other" in sol.breakdown:
        costs["other"] = sol.breakdown["other"]
    meta = {
        "name": problem.name,
        "mode": mode,
        "lambda": problem.reserve.lam,
        "beta": problem.reserve.beta,
        "boundary": problem.reserve.boundary,
        "tdpr_days": problem.reserve.tdpr_days,
        "K": clustering.K,
        "D": problem.D,
        "S": problem.S,
        "seed": seed,
        "mip_gap_target": gap,
        "representative_days": [m + 1 for m in clustering.medoids],
        "representative_weights": list(clustering.weights),
        "columns": model.n_cols,
        "rows": model.n_rows,
        "binaries": int(model.binary.sum()),
        "status": sol.status,
        "mip_gap": sol.mip_gap,
        "bound": sol.bound,
        "nodes": sol.nodes,
    }
    return RunReport(
        mode=mode,
        status=sol.status,
        objective=sol.objective,
        costs=costs,
        capacity_additions=additions,
        tdpr=np.asarray(tdpr, dtype=float),
        tdpr_by_region=by_region,
        reserve_allocation=reserve,
        flows=flows,
        decisions=decisions,
        meta=meta,
        deficit_mwh=deficit,
        violations=list(sol.violations),
    )


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _json_value(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(u) for u in v]
    return v


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_json_value(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows, comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(comment + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def emit_reports(report: RunReport, out_dir: str | Path, include_timings: bool = False) -> list[Path]:
    """Write the report tables; column order and float rendering are fixed."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PipelineError("report", f"cannot create {out}: {exc}") from exc
    regions = list(report.tdpr_by_region)
    files = {
        "capacity_additions.csv": (["class", "added_mw"], list(report.capacity_additions.items()), None),
        "investment_decisions.csv": (["variable", "class", "level", "mw"], report.decisions, None),
        "tdpr_profile.csv": (
            ["hour", "total_mw"] + [f"{z}_mw" for z in regions],
            [[h + 1, float(report.tdpr[h])] + [float(report.tdpr_by_region[z][h]) for z in regions]
             for h in range(HOURS)],
            TDPR_HEADER,
        ),
        "reserve_allocation.csv": (["plant", "hour", "expected_mw"], report.reserve_allocation, None),
        "flows.csv": (["line", "hour", "expected_mw", "max_abs_mw"], report.flows, None),
    }
    written = []
    try:
        for name, (header, rows, comment) in files.items():
            _write_csv(out / name, header, rows, comment)
            written.append(out / name)
        costs = dict(report.costs)
        costs["objective"] = report.objective
        _write_json(out / "costs.json", costs)
        meta = dict(report.meta)
        meta["deficit_mwh"] = report.deficit_mwh
        meta["violations"] = report.violations
        if include_timings:
            meta["timings_s"] = report.timings
        _write_json(out / "run_meta.json", meta)
        written += [out / "costs.json", out / "run_meta.json"]
    except OSError as exc:
        raise PipelineError("report", f"cannot write to {out}: {exc}") from exc
    return written


def apply_overrides(problem: PlanningProblem, lam: float | None = None, beta: float | None = None,
                    K: int | None = None, seed: int | None = None) -> PlanningProblem:
    from dataclasses import replace

    changes = {}
    if lam is not None or beta is not None:
        res = problem.reserve
        changes["reserve"] = ReserveConfig(
            lam=res.lam if lam is None else lam,
            beta=res.beta if beta is None else beta,
            enabled=res.enabled, boundary=res.boundary, tdpr_days=res.tdpr_days, tdpr_cost=res.tdpr_cost,
        )
    if K is not None or seed is not None:
        cl = problem.clustering
        changes["clustering"] = replace(cl, K=cl.K if K is None else K, seed=cl.seed if seed is None else seed)
    if not changes:
        return problem
    try:
        return problem.replace(**changes)
    except ValidationError as exc:
        raise PipelineError("load", str(exc)) from exc


def _load(config, scenarios) -> PlanningProblem:
    if isinstance(config, PlanningProblem):
        return config
    try:
        return load_problem(config, scenarios)
    except (OSError, ValidationError, KeyError) as exc:
        raise PipelineError("load", str(exc)) from exc


def _tolerances(problem: PlanningProblem) -> Tolerances:
    return Tolerances(feasibility=problem.solver.feasibility_tol, optimality=problem.solver.optimality_tol)


@dataclass
class PlanRun:
    problem: PlanningProblem
    clustering: DayClustering
    model: MilpModel
    solution: Solution
    report: RunReport


def solve_plan(problem: PlanningProblem, mode: str, clustering: DayClustering | None = None,
               gap: float | None = None, pin_vre: dict[str, float] | None = None) -> PlanRun:
    timings = {}
    t0 = time.perf_counter()
    try:
        clustering = clustering or reduce_days(problem)
    except ValidationError as exc:
        raise PipelineError("cluster", str(exc)) from exc
    timings["cluster"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        model = build_model(problem, clustering, mode)
        if pin_vre is not None:
            model = fix_vre_investments(model, pin_vre)
    except (ValidationError, KeyError) as exc:
        raise PipelineError("build", str(exc)) from exc
    timings["build"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    gap = problem.solver.mip_gap if gap is None else gap
    try:
        raw = solve_milp(model, gap=gap, node_limit=problem.solver.node_limit, tol=_tolerances(problem))
    except Exception as exc:  # numerical failure inside the solver
        raise PipelineError("solve", str(exc)) from exc
    timings["solve"] = time.perf_counter() - t0
    if raw.ok:
        sol = extract_solution(model, raw.values, raw.status, tol=max(problem.solver.feasibility_tol, 1e-6),
                               mip_gap=raw.mip_gap)
        sol.bound, sol.nodes, sol.iterations = raw.bound, raw.nodes, raw.iterations
    else:
        sol = raw
        sol.violations = [f"solver status {raw.status}"]
    report = build_report(problem, clustering, model, sol, seed=problem.clustering.seed, gap=gap) if sol.ok \
        else _failed_report(problem, clustering, model, sol, gap)
    report.timings = timings
    log.info("%s: status %s objective %.6g", mode, sol.status, sol.objective)
    return PlanRun(problem, clustering, model, sol, report)


def _failed_report(problem, clustering, model, sol, gap) -> RunReport:
    meta = {
        "name": problem.name, "mode": model.meta["mode"], "lambda": problem.reserve.lam,
        "beta": problem.reserve.beta, "K": clustering.K, "seed": problem.clustering.seed,
        "mip_gap_target": gap, "status": sol.status,
    }
    return RunReport(model.meta["mode"], sol.status, float("nan"), {}, {}, np.zeros(HOURS),
                     {z: np.zeros(HOURS) for z in problem.regions}, [], [], [], meta,
                     violations=list(sol.violations) or [f"solver status {sol.status}"])


def run_plan(config, scenarios=None, mode: str = WITH_TDPR, out_dir=None, gap: float | None = None,
             include_timings: bool = False, write_sol: bool = True, **overrides) -> RunReport:
    """Load, cluster, build, solve, verify and (when ``out_dir`` is given) write reports.

    ``config`` is a config path (with ``scenarios`` the scenario CSV) or an
    already loaded :class:`PlanningProblem`.  ``overrides`` accepts ``lam``,
    ``beta``, ``K`` and ``seed``.
    """
    problem = apply_overrides(_load(config, scenarios), **overrides)
    run = solve_plan(problem, mode, gap=gap)
    if out_dir is not None:
        emit_reports(run.report, out_dir, include_timings)
        if write_sol and run.solution.ok:
            write_solution(Path(out_dir) / "solution.sol", run.model, run.solution.values)
    return run.report


@dataclass
class CompareResult:
    without_tdpr: RunReport
    hierarchical: RunReport
    co_optimized: RunReport

    @property
    def cost_of_hierarchy(self) -> float:
        return self.hierarchical.objective - self.co_optimized.objective


def run_compare(config, scenarios=None, out_dir=None, gap: float | None = None,
                include_timings: bool = False, **overrides) -> CompareResult:
    """Without-TDPR plan, hierarchical plan (stage-1 VRE pinned, then TDPR) and co-optimised plan."""
    problem = apply_overrides(_load(config, scenarios), **overrides)
    try:
        clustering = reduce_days(problem)
    except ValidationError as exc:
        raise PipelineError("cluster", str(exc)) from exc
    stage1 = solve_plan(problem, WITHOUT_TDPR, clustering, gap)
    if not stage1.solution.ok:
        raise PipelineError("solve", f"without-tdpr stage returned {stage1.solution.status}")
    pins = pinned_levels(stage1.model, stage1.solution)
    hier = solve_plan(problem, WITH_TDPR, clustering, gap, pin_vre=pins)
    coopt = solve_plan(problem, WITH_TDPR, clustering, gap)
    hier.report.meta["approach"] = "hierarchical"
    hier.report.meta["pinned_vre"] = pins
    coopt.report.meta["approach"] = "co-optimized"
    stage1.report.meta["approach"] = "without-tdpr"
    result = CompareResult(stage1.report, hier.report, coopt.report)
    if out_dir is not None:
        out = Path(out_dir)
        for sub, run in (("without_tdpr", stage1), ("hierarchical", hier), ("co_optimized", coopt)):
            emit_reports(run.report, out / sub, include_timings)
            if run.solution.ok:
                write_solution(out / sub / "solution.sol", run.model, run.solution.values)
        emit_comparison(result, out)
    return result


def pinned_levels(model: MilpModel, sol: Solution) -> dict[str, float]:
    """Stage-1 VRE levels clipped into their bounds (binary ones rounded)."""
    out = {}
    for sym in model.index.symbols("x_vre"):
        j = model.index.col(sym)
        v = float(np.clip(sol.values[j], model.col_lb[j], model.col_ub[j]))
        if model.binary[j]:
            v = float(round(v))
        out[sym[1]] = v
    return out


def emit_comparison(result: CompareResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = [("without_tdpr", result.without_tdpr), ("hierarchical", result.hierarchical),
            ("co_optimized", result.co_optimized)]
    keys = list(COST_KINDS)
    rows = [[k] + [r.costs.get(k, 0.0) for _, r in runs] for k in keys]
    rows.append(["objective"] + [r.objective for _, r in runs])
    _write_csv(out / "cost_comparison.csv", ["metric"] + [n for n, _ in runs], rows)
    classes = sorted({c for _, r in runs for c in r.capacity_additions})
    _write_csv(out / "capacity_comparison.csv", ["class"] + [f"{n}_mw" for n, _ in runs],
               [[c] + [r.capacity_additions.get(c, 0.0) for _, r in runs] for c in classes])
    _write_csv(out / "tdpr_comparison.csv", ["hour", "hierarchical_mw", "co_optimized_mw"],
               [[h + 1, float(result.hierarchical.tdpr[h]), float(result.co_optimized.tdpr[h])]
                for h in range(HOURS)])
    _write_json(out / "comparison.json", {
        "objective": {n: r.objective for n, r in runs},
        "status": {n: r.status for n, r in runs},
        "cost_of_hierarchy": result.cost_of_hierarchy,
        "cost_of_reserve": result.co_optimized.objective - result.without_tdpr.objective,
    })


def resume_plan(config, scenarios, solution_path, mode: str = WITH_TDPR, out_dir=None,
                **overrides) -> RunReport:
    """Verify an externally computed solution file and emit the standard reports for it."""
    from .solve import read_solution

    problem = apply_overrides(_load(config, scenarios), **overrides)
    try:
        clustering = reduce_days(problem)
        model = build_model(problem, clustering, mode)
    except ValidationError as exc:
        raise PipelineError("build", str(exc)) from exc
    try:
        raw = read_solution(solution_path, model.index)
    except (OSError, ValueError) as exc:
        raise PipelineError("solution", str(exc)) from exc
    sol = extract_solution(model, raw, "optimal", tol=max(problem.solver.feasibility_tol, 1e-6))
    if sol.ok:
        report = build_report(problem, clustering, model, sol, seed=problem.clustering.seed)
    else:
        report = _failed_report(problem, clustering, model, sol, None)
    if out_dir is not None:
        emit_reports(report, out_dir)
    return report
