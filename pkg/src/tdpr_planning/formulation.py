"""Expansion-planning MILP with an endogenous hourly reserve requirement.

Blocks (all indexed over scenario ``s``, representative day ``d`` and hour ``h``):

* objective: investment + probability/day-weighted operating cost + deficit
  penalties (+ a tiny price on each hourly requirement, see ``ReserveConfig``);
* investment rows: optional budget and capacity margin;
* operations: regional load balance with transport flows and deficit/spill
  slack, dispatch limits, ramping (wrapping within the day), minimum stable
  level for must-run units, VRE delivery up to profile * build level,
  candidate line limits;
* reserve (``with-tdpr`` only): forecast-error coupling to VRE build levels,
  absolute-value epigraph of the hour-to-hour error variation, Rockafellar-
  Uryasev CVaR with one threshold per hour, the mean/CVaR combination, the
  capacity split ``g + r <= gmax * x`` and the reserve balance.

Existing plants and lines have their build variable pinned to 1.
"""

from __future__ import annotations

import numpy as np

from .data import HOURS, PlanningProblem, ValidationError
from .dayreduce import DayClustering
from .model import (
    GAP_LIMIT,
    INF,
    INFEASIBLE,
    OPTIMAL,
    MilpModel,
    ModelBuilder,
    Solution,
)

WITH_TDPR = "with-tdpr"
WITHOUT_TDPR = "without-tdpr"
MODES = (WITH_TDPR, WITHOUT_TDPR)

COST_KINDS = ("investment", "operating", "penalty", "reserve")


def deficit_penalty(problem: PlanningProblem) -> float:
    """$/MWh charged on unserved or spilled energy: ten times the dearest variable cost."""
    top = max((p.var_cost for p in problem.dispatchables), default=0.0)
    return 10.0 * top if top > 0 else 1000.0


def _check_clustering(problem: PlanningProblem, clustering: DayClustering) -> None:
    if clustering.D != problem.D:
        raise ValidationError(f"clustering covers {clustering.D} days but the problem has {problem.D}")
    if sum(clustering.weights) != problem.D or len(clustering.weights) != len(clustering.medoids):
        raise ValidationError("clustering weights must sum to the number of days")
    if any(not 0 <= m < problem.D for m in clustering.medoids):
        raise ValidationError("clustering medoid outside the day range")
    if len(set(clustering.medoids)) != len(clustering.medoids):
        raise ValidationError("duplicate medoid days")


def build_model(problem: PlanningProblem, clustering: DayClustering | None = None,
                mode: str = WITH_TDPR) -> MilpModel:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if not problem.dispatchables and not problem.vre_plants:
        raise ValidationError("empty system: no dispatchable or VRE plants")
    clustering = clustering or DayClustering.identity(problem.D)
    _check_clustering(problem, clustering)

    cfg = problem.reserve
    S, D = problem.S, problem.D
    H = HOURS
    prob = problem.scenarios.prob
    rep_days = list(clustering.medoids)
    rep_w = list(clustering.weights)
    penalty = deficit_penalty(problem)
    scale = problem.operating_cost_scale
    mb = ModelBuilder(f"{problem.name}-{mode}")
    nxt = [(h + 1) % H for h in range(H)]

    # ------------------------------------------------------------ investment
    xg, xv, xl = {}, {}, {}
    for p in problem.dispatchables:
        lo = 1.0 if p.existing else 0.0
        xg[p.id] = mb.add_var(("x_gen", p.id), lo, 1.0, 0.0 if p.existing else p.inv_cost,
                              binary=p.investable_binary and not p.existing, kind="investment")
    for v in problem.vre_plants:
        lo = 1.0 if v.existing else 0.0
        xv[v.id] = mb.add_var(("x_vre", v.id), lo, 1.0, 0.0 if v.existing else v.inv_cost,
                              binary=v.investable_binary and not v.existing, kind="investment")
    for l in problem.lines:
        if not l.existing:
            xl[l.id] = mb.add_var(("x_line", l.id), 0.0, 1.0, l.inv_cost, binary=True, kind="investment")

    inv = problem.investment
    if inv.budget is not None:
        terms = [(xg[p.id], p.inv_cost) for p in problem.dispatchables if not p.existing]
        terms += [(xv[v.id], v.inv_cost) for v in problem.vre_plants if not v.existing]
        terms += [(xl[l.id], l.inv_cost) for l in problem.lines if not l.existing]
        mb.add_row(("budget",), terms, "L", inv.budget)
    if inv.capacity_margin is not None:
        peak = float(problem.demand.sum(axis=0).max())
        terms = [(xg[p.id], p.gmax) for p in problem.dispatchables]
        terms += [(xv[v.id], inv.vre_capacity_credit * v.capacity) for v in problem.vre_plants]
        mb.add_row(("cap_margin",), terms, "G", (1.0 + inv.capacity_margin) * peak)

    # ------------------------------------------------------------ operations
    with_tdpr = mode == WITH_TDPR
    spill_regions = {p.region for p in problem.dispatchables if p.must_run and p.gmin_stable > 0}
    spill_regions |= {v.region for v in problem.vre_plants if not v.curtailable}
    g, gv, r, f, dfc, spl = {}, {}, {}, {}, {}, {}
    for s in range(S):
        for k, d in enumerate(rep_days):
            wop = scale * prob[s] * rep_w[k]
            for h in range(H):
                key = (s + 1, d + 1, h + 1)
                for p in problem.dispatchables:
                    g[(p.id, s, d, h)] = mb.add_var(("g", p.id, *key), 0.0, INF, wop * p.var_cost,
                                                    kind="operating")
                for v in problem.vre_plants:
                    gv[(v.id, s, d, h)] = mb.add_var(("gv", v.id, *key), 0.0, INF, 0.0, kind="operating")
                if with_tdpr:
                    for p in problem.dispatchables:
                        r[(p.id, s, d, h)] = mb.add_var(("r", p.id, *key), 0.0, INF, 0.0, kind="operating")
                for l in problem.lines:
                    lo, hi = (-l.fmax, l.fmax) if l.existing else (-INF, INF)
                    f[(l.id, s, d, h)] = mb.add_var(("f", l.id, *key), lo, hi, 0.0, kind="operating")
                for z in problem.regions:
                    dfc[(z, s, d, h)] = mb.add_var(("def", z, *key), 0.0, INF, wop * penalty, kind="penalty")
                    if z in spill_regions:
                        spl[(z, s, d, h)] = mb.add_var(("spill", z, *key), 0.0, INF, wop * penalty,
                                                       kind="penalty")

    profiles = {v.id: problem.vre_profile(v) for v in problem.vre_plants}
    for s in range(S):
        for d in rep_days:
            for h in range(H):
                key = (s + 1, d + 1, h + 1)
                for zi, z in enumerate(problem.regions):
                    terms = [(g[(p.id, s, d, h)], 1.0) for p in problem.dispatchables if p.region == z]
                    terms += [(gv[(v.id, s, d, h)], 1.0) for v in problem.vre_plants if v.region == z]
                    for l in problem.lines:
                        if l.to_region == z:
                            terms.append((f[(l.id, s, d, h)], 1.0))
                        if l.from_region == z:
                            terms.append((f[(l.id, s, d, h)], -1.0))
                    terms.append((dfc[(z, s, d, h)], 1.0))
                    if z in spill_regions:
                        terms.append((spl[(z, s, d, h)], -1.0))
                    mb.add_row(("bal", z, *key), terms, "E", problem.demand[zi, d, h])
                for p in problem.dispatchables:
                    terms = [(g[(p.id, s, d, h)], 1.0), (xg[p.id], -p.gmax)]
                    if with_tdpr:
                        terms.append((r[(p.id, s, d, h)], 1.0))
                    mb.add_row(("cap", p.id, *key), terms, "L", 0.0)
                    if p.must_run and p.gmin_stable > 0:
                        mb.add_row(("minstab", p.id, *key),
                                   [(g[(p.id, s, d, h)], 1.0), (xg[p.id], -p.gmin_stable)], "G", 0.0)
                    if p.ramp is not None and p.ramp < p.gmax:
                        a, b = g[(p.id, s, d, h)], g[(p.id, s, d, nxt[h])]
                        mb.add_row(("ramp_up", p.id, *key), [(b, 1.0), (a, -1.0)], "L", p.ramp)
                        mb.add_row(("ramp_dn", p.id, *key), [(a, 1.0), (b, -1.0)], "L", p.ramp)
                for v in problem.vre_plants:
                    mb.add_row(("avail", v.id, *key),
                               [(gv[(v.id, s, d, h)], 1.0), (xv[v.id], -profiles[v.id][s, d, h])],
                               "L" if v.curtailable else "E", 0.0)
                for l in problem.lines:
                    if not l.existing:
                        mb.add_row(("flow_up", l.id, *key), [(f[(l.id, s, d, h)], 1.0), (xl[l.id], -l.fmax)],
                                   "L", 0.0)
                        mb.add_row(("flow_dn", l.id, *key), [(f[(l.id, s, d, h)], 1.0), (xl[l.id], l.fmax)],
                                   "G", 0.0)

    meta = {
        "mode": mode,
        "lambda": cfg.lam,
        "beta": cfg.beta,
        "boundary": cfg.boundary,
        "tdpr_days": cfg.tdpr_days,
        "rep_days": [d + 1 for d in rep_days],
        "rep_weights": rep_w,
        "penalty": penalty,
        "S": S,
        "D": D,
    }
    if not with_tdpr:
        return mb.build(meta)

    # ------------------------------------------------------------ reserve
    if cfg.tdpr_days == "all":
        t_days, t_w = list(range(D)), [1] * D
    else:
        t_days, t_w = rep_days, rep_w
    meta["tdpr_sample_days"] = [d + 1 for d in t_days]
    meta["tdpr_sample_weights"] = list(t_w)
    q = {(s, d): prob[s] * w / D for s in range(S) for d, w in zip(t_days, t_w)}
    # hourly forecast over every scenario day (probability p_s / D per sample)
    forecast = {vid: np.einsum("s,sdh->h", prob, prof) / D for vid, prof in profiles.items()}

    delta, Delta, omega = {}, {}, {}
    W, E, CV, TD = {}, {}, {}, {}
    for s in range(S):
        for d in t_days:
            for h in range(H):
                key = (s + 1, d + 1, h + 1)
                delta[(s, d, h)] = mb.add_var(("delta", *key), -INF, INF, 0.0)
                fix0 = cfg.boundary == "truncate" and h == H - 1
                Delta[(s, d, h)] = mb.add_var(("Delta", *key), 0.0, 0.0 if fix0 else INF, 0.0)
                omega[(s, d, h)] = mb.add_var(("omega", *key), 0.0, INF, 0.0)
    for h in range(H):
        W[h] = mb.add_var(("W", h + 1), -INF, INF, 0.0)
        E[h] = mb.add_var(("E", h + 1), -INF, INF, 0.0)
        CV[h] = mb.add_var(("CVaR", h + 1), -INF, INF, 0.0)
        TD[h] = mb.add_var(("TDPR", h + 1), 0.0, INF, cfg.tdpr_cost, kind="reserve")

    for s in range(S):
        for d in t_days:
            for h in range(H):
                key = (s + 1, d + 1, h + 1)
                terms = [(delta[(s, d, h)], 1.0)]
                terms += [(xv[v.id], -(profiles[v.id][s, d, h] - forecast[v.id][h])) for v in problem.vre_plants]
                mb.add_row(("err", *key), terms, "E", 0.0)
    for s in range(S):
        for d in t_days:
            for h in range(H):
                key = (s + 1, d + 1, h + 1)
                if not (cfg.boundary == "truncate" and h == H - 1):
                    a, b, dv = delta[(s, d, h)], delta[(s, d, nxt[h])], Delta[(s, d, h)]
                    mb.add_row(("abs_p", *key), [(dv, 1.0), (a, -1.0), (b, 1.0)], "G", 0.0)
                    mb.add_row(("abs_n", *key), [(dv, 1.0), (a, 1.0), (b, -1.0)], "G", 0.0)
                mb.add_row(("tail", *key), [(omega[(s, d, h)], 1.0), (Delta[(s, d, h)], -1.0), (W[h], 1.0)],
                           "G", 0.0)
    for h in range(H):
        mb.add_row(("mean", h + 1), [(E[h], 1.0)] + [(Delta[(s, d, h)], -q[(s, d)]) for s in range(S)
                                                     for d in t_days], "E", 0.0)
        mb.add_row(("cvar", h + 1), [(CV[h], 1.0), (W[h], -1.0)] +
                   [(omega[(s, d, h)], -q[(s, d)] / cfg.beta) for s in range(S) for d in t_days], "E", 0.0)
        mb.add_row(("tdpr", h + 1), [(TD[h], 1.0), (E[h], -(1.0 - cfg.lam)), (CV[h], -cfg.lam)], "G", 0.0)
    for s in range(S):
        for d in rep_days:
            for h in range(H):
                terms = [(r[(p.id, s, d, h)], 1.0) for p in problem.dispatchables]
                terms.append((TD[h], -1.0))
                mb.add_row(("res", s + 1, d + 1, h + 1), terms, "G", 0.0)
    return mb.build(meta)


def fix_vre_investments(model: MilpModel, values: dict[str, float]) -> MilpModel:
    """Pin VRE build levels (e.g. the stage-1 plan of the hierarchical approach)."""
    new = model.copy()
    for plant, v in values.items():
        sym = ("x_vre", plant)
        if model.index is None or sym not in model.index:
            raise KeyError(f"unknown VRE plant {plant!r}")
        j = model.index.col(sym)
        v = float(v)
        if not model.col_lb[j] - 1e-9 <= v <= model.col_ub[j] + 1e-9:
            raise ValidationError(
                f"x_vre({plant}) = {v:g} outside its bounds [{model.col_lb[j]:g}, {model.col_ub[j]:g}]"
            )
        if model.binary[j] and v not in (0.0, 1.0):
            raise ValidationError(f"x_vre({plant}) is binary; cannot pin to {v:g}")
        new.col_lb[j] = new.col_ub[j] = v
    return new


def vre_levels(model: MilpModel, solution: Solution) -> dict[str, float]:
    return {sym[1]: float(solution.values[model.index.col(sym)]) for sym in model.index.symbols("x_vre")}


def minimal_tdpr_model(model: MilpModel) -> MilpModel:
    """Same feasible set, objective ``sum_h TDPR_h``: its optimum is the smallest requirement."""
    if "TDPR" not in {s[0] for s in model.index.symbols()}:
        raise ValidationError("model has no reserve requirement columns")
    obj = np.zeros(model.n_cols)
    obj[model.index.cols("TDPR")] = 1.0
    return model.with_objective(obj)


def cost_breakdown(model: MilpModel, x: np.ndarray) -> dict[str, float]:
    contrib = model.obj * x
    out = {k: float(contrib[model.col_kind == k].sum()) for k in COST_KINDS}
    other = float(contrib[~np.isin(model.col_kind, COST_KINDS)].sum()) + model.obj_offset
    if other:
        out["other"] = other
    return out


def check_feasibility(model: MilpModel, x: np.ndarray, tol: float = 1e-6) -> list[str]:
    """Names and amounts of every violated row, column bound and integrality mark."""
    issues: list[str] = []
    act = model.matrix() @ x
    lo, hi = model.row_bounds()
    scale = 1.0 + np.maximum(np.abs(np.where(np.isfinite(lo), lo, 0.0)), np.abs(np.where(np.isfinite(hi), hi, 0.0)))
    under = lo - act
    over = act - hi
    for i in np.flatnonzero((under > tol * scale) | (over > tol * scale)):
        amount = under[i] if under[i] > 0 else over[i]
        issues.append(f"row {model.row_names[i]} violated by {amount:.6g}")
    bl = model.col_lb - x
    bu = x - model.col_ub
    for j in np.flatnonzero((bl > tol) | (bu > tol)):
        issues.append(f"column {model.col_names[j]} outside bounds by {max(bl[j], bu[j]):.6g}")
    frac = np.abs(x - np.round(x))
    for j in np.flatnonzero(model.binary & (frac > tol)):
        issues.append(f"column {model.col_names[j]} not integral ({x[j]:.6g})")
    return issues


def extract_solution(model: MilpModel, raw: np.ndarray, status: str = OPTIMAL,
                     tol: float = 1e-6, mip_gap: float = 0.0) -> Solution:
    """Unpack a column vector, recompute costs and verify every row within ``tol``."""
    x = np.asarray(raw, dtype=float)
    if x.shape != (model.n_cols,):
        raise ValidationError(f"solution vector has {x.size} entries, model has {model.n_cols} columns")
    if status not in (OPTIMAL, GAP_LIMIT) or not np.all(np.isfinite(x)):
        return Solution(status if status != OPTIMAL else INFEASIBLE, float("nan"), x, index=model.index)
    issues = check_feasibility(model, x, tol)
    breakdown = cost_breakdown(model, x)
    obj = model.objective_value(x)
    return Solution(
        status=INFEASIBLE if issues else status,
        objective=obj,
        values=x,
        mip_gap=mip_gap,
        breakdown=breakdown,
        violations=issues,
        index=model.index,
    )


def tdpr_values(model: MilpModel, solution: Solution) -> np.ndarray:
    if "TDPR" not in {s[0] for s in model.index.symbols()}:
        return np.zeros(HOURS)
    return np.array([solution.values[model.index.col(("TDPR", h + 1))] for h in range(HOURS)])
