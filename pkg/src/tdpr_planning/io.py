"""Reading and writing planning inputs.

System config (YAML)::

    name: demo
    regions: [north, south]
    dispatchables:
      - {id: T1, region: north, gmax: 300, var_cost: 40, inv_cost: 0, existing: true,
         investable_binary: false, gmin_stable: 0, ramp: 150, must_run: false, tech: CCGT}
    vre_plants:
      - {id: W1, region: north, capacity: 200, inv_cost: 9000, existing: false,
         investable_binary: false, curtailable: true, profile_ref: W1, tech: wind}
    lines:
      - {id: L1, from_region: north, to_region: south, fmax: 100, inv_cost: 0, existing: true}
    demand: demand.csv                # region,day,hour,value_mw
    probabilities: probabilities.csv  # optional; scenario,p  (default 1/S)
    reserve: {lambda: 0.5, beta: 0.1, enabled: true, boundary: wrap,
              tdpr_days: all, tdpr_cost: 0.01}
    clustering: {K: 2, seed: 0, restarts: 0}
    investment: {budget: null, capacity_margin: null, vre_capacity_credit: 0.0}
    solver: {feasibility_tol: 1.0e-6, optimality_tol: 1.0e-7, mip_gap: 1.0e-4, node_limit: 100000}
    operating_cost_scale: 1.0

Relative file paths are resolved against the config file's directory.
Scenario CSV header: ``plant,scenario,day,hour,value_mw`` with 1-based
scenario/day/hour indices; every (plant, scenario, day) needs all 24 hours.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .data import (
    HOURS,
    ClusteringConfig,
    DispatchablePlant,
    InvestmentConfig,
    NetworkLine,
    PlanningProblem,
    ReserveConfig,
    ScenarioSet,
    SolverConfig,
    ValidationError,
    VrePlant,
    uniform_probabilities,
)

_MISSING = object()


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_map(v, path + (key,), out)
            out[path + (key,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _fmt_path(path: tuple) -> str:
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else str(p))
    return s or "<root>"


class _Section:
    """Typed accessor over one mapping of the config with line-aware errors."""

    def __init__(self, data: Any, path: tuple, lines: dict, source: str) -> None:
        self.data, self.path, self.lines, self.source = data, path, lines, source
        if not isinstance(data, dict):
            self.fail("expected a mapping")
        self.used: set[str] = set()

    def _line(self, path: tuple) -> int:
        while path not in self.lines and path:
            path = path[:-1]
        return self.lines.get(path, 0)

    def fail(self, msg: str, key: Any = None):
        path = self.path if key is None else self.path + (key,)
        raise ValidationError(f"{self.source}:{self._line(path)}: {_fmt_path(path)}: {msg}")

    def get(self, key: str, kind: type | tuple, default: Any = _MISSING) -> Any:
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if default is _MISSING:
                self.fail("required field missing", key)
            return default
        val = self.data[key]
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                self.fail(f"expected a number, got {val!r}", key)
            val = float(val)
            if not math.isfinite(val):
                self.fail("must be finite", key)
        elif kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                self.fail(f"expected an integer, got {val!r}", key)
        elif kind is bool:
            if not isinstance(val, bool):
                self.fail(f"expected true/false, got {val!r}", key)
        elif kind is str:
            if not isinstance(val, (str, int)) or isinstance(val, bool):
                self.fail(f"expected a string, got {val!r}", key)
            val = str(val)
            if any(ch.isspace() for ch in val) or not val:
                self.fail(f"identifiers must be non-empty without whitespace: {val!r}", key)
        elif kind is list:
            if not isinstance(val, list):
                self.fail("expected a list", key)
        elif kind is dict:
            if not isinstance(val, dict):
                self.fail("expected a mapping", key)
        return val

    def section(self, key: str) -> "_Section":
        self.used.add(key)
        return _Section(self.data.get(key) or {}, self.path + (key,), self.lines, self.source)

    def items(self, key: str) -> list["_Section"]:
        raw = self.get(key, list, [])
        return [_Section(v, self.path + (key, i), self.lines, self.source) for i, v in enumerate(raw)]

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            self.fail(f"unknown field {extra[0]!r}", extra[0])

    def build(self, factory, **kwargs):
        self.finish()
        try:
            return factory(**kwargs)
        except ValidationError as exc:
            self.fail(str(exc))


def _read_csv(path: Path, header: list[str]):
    if not path.exists():
        raise ValidationError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}:1: empty file") from None
        if head != header:
            raise ValidationError(f"{path}:1: expected header {','.join(header)}, got {','.join(head)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, [c.strip() for c in row]


def _int(path, lineno, field, text, lo, hi=None) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: {field}: expected an integer, got {text!r}") from None
    if v < lo or (hi is not None and v > hi):
        rng = f"{lo}..{hi}" if hi is not None else f">= {lo}"
        raise ValidationError(f"{path}:{lineno}: {field}: {v} outside {rng}")
    return v


def _float(path, lineno, field, text) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: {field}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{path}:{lineno}: {field}: value must be finite, got {text!r}")
    return v


def read_scenarios(path: str | Path, capacities: dict[str, float] | None = None,
                   probabilities: np.ndarray | None = None) -> ScenarioSet:
    """Parse a scenario CSV into a dense :class:`ScenarioSet`.

    ``capacities`` (profile key -> MW) enables the per-line capacity check.
    """
    path = Path(path)
    recs: dict[tuple[str, int, int, int], tuple[float, int]] = {}
    plants: list[str] = []
    for lineno, (plant, s, d, h, v) in _read_csv(path, ["plant", "scenario", "day", "hour", "value_mw"]):
        if not plant or any(ch.isspace() for ch in plant):
            raise ValidationError(f"{path}:{lineno}: plant: invalid id {plant!r}")
        si = _int(path, lineno, "scenario", s, 1)
        di = _int(path, lineno, "day", d, 1)
        hi = _int(path, lineno, "hour", h, 1, HOURS)
        val = _float(path, lineno, "value_mw", v)
        if val < 0:
            raise ValidationError(f"{path}:{lineno}: value_mw: negative VRE value {val:g} for plant {plant}")
        if capacities is not None and plant in capacities and val > capacities[plant] * (1 + 1e-12):
            raise ValidationError(
                f"{path}:{lineno}: VRE value {val:g} MW exceeds capacity {capacities[plant]:g} MW for "
                f"plant {plant} at scenario {si}, day {di}, hour {hi}"
            )
        key = (plant, si, di, hi)
        if key in recs:
            raise ValidationError(f"{path}:{lineno}: duplicate entry for {key} (first at line {recs[key][1]})")
        recs[key] = (val, lineno)
        if plant not in plants:
            plants.append(plant)
    if not recs:
        raise ValidationError(f"{path}: no scenario rows")
    S = max(k[1] for k in recs)
    D = max(k[2] for k in recs)
    values = np.full((len(plants), S, D, HOURS), np.nan)
    pidx = {p: i for i, p in enumerate(plants)}
    for (plant, s, d, h), (val, _) in recs.items():
        values[pidx[plant], s - 1, d - 1, h - 1] = val
    if np.isnan(values).any():
        p, s, d, h = (int(k) for k in np.argwhere(np.isnan(values))[0])
        raise ValidationError(
            f"{path}: missing entry for plant {plants[p]}, scenario {s + 1}, day {d + 1}, hour {h + 1} "
            f"(every plant/scenario/day needs all {HOURS} hours)"
        )
    prob = uniform_probabilities(S) if probabilities is None else probabilities
    if len(prob) != S:
        raise ValidationError(f"{path}: {S} scenarios but {len(prob)} probabilities")
    return ScenarioSet(tuple(plants), values, np.asarray(prob, dtype=float))


def read_probabilities(path: str | Path) -> np.ndarray:
    path = Path(path)
    got: dict[int, float] = {}
    for lineno, (s, p) in _read_csv(path, ["scenario", "p"]):
        si = _int(path, lineno, "scenario", s, 1)
        pv = _float(path, lineno, "p", p)
        if pv < 0:
            raise ValidationError(f"{path}:{lineno}: p: negative probability {pv:g}")
        if si in got:
            raise ValidationError(f"{path}:{lineno}: duplicate scenario {si}")
        got[si] = pv
    S = max(got) if got else 0
    missing = [s for s in range(1, S + 1) if s not in got]
    if missing or not got:
        raise ValidationError(f"{path}: probabilities missing for scenarios {missing}")
    prob = np.array([got[s] for s in range(1, S + 1)])
    mass = float(prob.sum())
    if abs(mass - 1.0) > 1e-9:
        raise ValidationError(f"{path}: probability mass {mass:.12g} ≠ 1")
    return prob


def read_demand(path: str | Path, regions: tuple[str, ...], D: int) -> np.ndarray:
    path = Path(path)
    out = np.full((len(regions), D, HOURS), np.nan)
    ridx = {r: i for i, r in enumerate(regions)}
    for lineno, (region, d, h, v) in _read_csv(path, ["region", "day", "hour", "value_mw"]):
        if region not in ridx:
            raise ValidationError(f"{path}:{lineno}: region: unknown region {region!r}")
        di = _int(path, lineno, "day", d, 1, D)
        hi = _int(path, lineno, "hour", h, 1, HOURS)
        val = _float(path, lineno, "value_mw", v)
        if val < 0:
            raise ValidationError(f"{path}:{lineno}: value_mw: negative demand {val:g}")
        if not np.isnan(out[ridx[region], di - 1, hi - 1]):
            raise ValidationError(f"{path}:{lineno}: duplicate demand entry for {region}, day {di}, hour {hi}")
        out[ridx[region], di - 1, hi - 1] = val
    if np.isnan(out).any():
        r, d, h = (int(k) for k in np.argwhere(np.isnan(out))[0])
        raise ValidationError(f"{path}: missing demand for region {regions[r]}, day {d + 1}, hour {h + 1}")
    return out


def load_problem(config_path: str | Path, scenarios_path: str | Path) -> PlanningProblem:
    """Load and fully validate a planning problem from its config and scenario files."""
    config_path = Path(config_path)
    if not config_path.exists():
        raise ValidationError(f"{config_path}: file not found")
    text = config_path.read_text()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"{config_path}: YAML parse error: {exc}") from None
    if node is None:
        raise ValidationError(f"{config_path}:1: empty config")
    lines = _line_map(node)
    src = str(config_path)
    root = _Section(raw, (), lines, src)
    base = config_path.parent

    name = root.get("name", str, "system")
    regions_raw = root.get("regions", list)
    regions = []
    for i, r in enumerate(regions_raw):
        if not isinstance(r, (str, int)) or isinstance(r, bool) or any(ch.isspace() for ch in str(r)):
            root.fail(f"invalid region id {r!r}", "regions")
        regions.append(str(r))
    regions_t = tuple(regions)

    def check_region(sec: _Section, key: str) -> str:
        r = sec.get(key, str)
        if r not in regions_t:
            sec.fail(f"dangling region reference {r!r}", key)
        return r

    disp = []
    for sec in root.items("dispatchables"):
        ramp = sec.get("ramp", float, None)
        disp.append(sec.build(
            DispatchablePlant,
            id=sec.get("id", str),
            region=check_region(sec, "region"),
            gmax=sec.get("gmax", float),
            var_cost=sec.get("var_cost", float),
            inv_cost=sec.get("inv_cost", float, 0.0),
            existing=sec.get("existing", bool, True),
            investable_binary=sec.get("investable_binary", bool, False),
            gmin_stable=sec.get("gmin_stable", float, 0.0),
            ramp=ramp,
            must_run=sec.get("must_run", bool, False),
            tech=sec.get("tech", str, "thermal"),
        ))
    vres = []
    for sec in root.items("vre_plants"):
        vres.append(sec.build(
            VrePlant,
            id=sec.get("id", str),
            region=check_region(sec, "region"),
            capacity=sec.get("capacity", float),
            inv_cost=sec.get("inv_cost", float, 0.0),
            existing=sec.get("existing", bool, True),
            investable_binary=sec.get("investable_binary", bool, False),
            curtailable=sec.get("curtailable", bool, True),
            profile_ref=sec.get("profile_ref", str, None),
            tech=sec.get("tech", str, "vre"),
        ))
    lines_ = []
    for sec in root.items("lines"):
        lines_.append(sec.build(
            NetworkLine,
            id=sec.get("id", str),
            from_region=check_region(sec, "from_region"),
            to_region=check_region(sec, "to_region"),
            fmax=sec.get("fmax", float),
            inv_cost=sec.get("inv_cost", float, 0.0),
            existing=sec.get("existing", bool, True),
        ))

    rs = root.section("reserve")
    reserve = rs.build(
        ReserveConfig,
        lam=rs.get("lambda", float, 0.5),
        beta=rs.get("beta", float, 0.1),
        enabled=rs.get("enabled", bool, True),
        boundary=rs.get("boundary", str, "wrap"),
        tdpr_days=rs.get("tdpr_days", str, "all"),
        tdpr_cost=rs.get("tdpr_cost", float, 0.01),
    )
    cs = root.section("clustering")
    clustering = cs.build(
        ClusteringConfig,
        K=cs.get("K", int, None),
        seed=cs.get("seed", int, 0),
        restarts=cs.get("restarts", int, 0),
    )
    ivs = root.section("investment")
    investment = ivs.build(
        InvestmentConfig,
        budget=ivs.get("budget", float, None),
        capacity_margin=ivs.get("capacity_margin", float, None),
        vre_capacity_credit=ivs.get("vre_capacity_credit", float, 0.0),
    )
    ss = root.section("solver")
    solver = ss.build(
        SolverConfig,
        feasibility_tol=ss.get("feasibility_tol", float, 1e-6),
        optimality_tol=ss.get("optimality_tol", float, 1e-7),
        mip_gap=ss.get("mip_gap", float, 1e-4),
        node_limit=ss.get("node_limit", int, 100_000),
    )
    scale = root.get("operating_cost_scale", float, 1.0)
    demand_file = root.get("demand", str)
    prob_file = root.get("probabilities", str, None)
    root.finish()

    prob = read_probabilities(base / prob_file) if prob_file else None
    capacities = {v.profile: v.capacity for v in vres}
    scenarios = read_scenarios(scenarios_path, capacities, prob)
    demand = read_demand(base / demand_file, regions_t, scenarios.D)
    try:
        return PlanningProblem(
            regions=regions_t,
            dispatchables=tuple(disp),
            vre_plants=tuple(vres),
            lines=tuple(lines_),
            demand=demand,
            scenarios=scenarios,
            reserve=reserve,
            clustering=clustering,
            investment=investment,
            solver=solver,
            operating_cost_scale=scale,
            name=name,
        )
    except ValidationError as exc:
        raise ValidationError(f"{config_path}: {exc}") from None


def _clean(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def problem_to_config(problem: PlanningProblem, demand_file: str = "demand.csv",
                      probabilities_file: str | None = "probabilities.csv") -> dict:
    r = problem.reserve
    cfg = {
        "name": problem.name,
        "regions": list(problem.regions),
        "dispatchables": [
            _clean(dict(id=p.id, region=p.region, gmax=p.gmax, var_cost=p.var_cost, inv_cost=p.inv_cost,
                        existing=p.existing, investable_binary=p.investable_binary,
                        gmin_stable=p.gmin_stable, ramp=p.ramp, must_run=p.must_run, tech=p.tech))
            for p in problem.dispatchables
        ],
        "vre_plants": [
            _clean(dict(id=v.id, region=v.region, capacity=v.capacity, inv_cost=v.inv_cost,
                        existing=v.existing, investable_binary=v.investable_binary,
                        curtailable=v.curtailable, profile_ref=v.profile_ref, tech=v.tech))
            for v in problem.vre_plants
        ],
        "lines": [
            dict(id=l.id, from_region=l.from_region, to_region=l.to_region, fmax=l.fmax,
                 inv_cost=l.inv_cost, existing=l.existing)
            for l in problem.lines
        ],
        "demand": demand_file,
        "reserve": {"lambda": r.lam, "beta": r.beta, "enabled": r.enabled, "boundary": r.boundary,
                    "tdpr_days": r.tdpr_days, "tdpr_cost": r.tdpr_cost},
        "clustering": _clean({"K": problem.clustering.K, "seed": problem.clustering.seed,
                              "restarts": problem.clustering.restarts}),
        "investment": _clean({"budget": problem.investment.budget,
                              "capacity_margin": problem.investment.capacity_margin,
                              "vre_capacity_credit": problem.investment.vre_capacity_credit}),
        "solver": {"feasibility_tol": problem.solver.feasibility_tol,
                   "optimality_tol": problem.solver.optimality_tol,
                   "mip_gap": problem.solver.mip_gap, "node_limit": problem.solver.node_limit},
        "operating_cost_scale": problem.operating_cost_scale,
    }
    if probabilities_file:
        cfg["probabilities"] = probabilities_file
    return cfg


def save_problem(problem: PlanningProblem, out_dir: str | Path) -> tuple[Path, Path]:
    """Write config.yaml, demand.csv, probabilities.csv and scenarios.csv; returns (config, scenarios)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = problem_to_config(problem)
    (out / "config.yaml").write_text(yaml.safe_dump(cfg, sort_keys=False))
    with open(out / "demand.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region", "day", "hour", "value_mw"])
        for ri, r in enumerate(problem.regions):
            for d in range(problem.D):
                for h in range(HOURS):
                    w.writerow([r, d + 1, h + 1, repr(float(problem.demand[ri, d, h]))])
    with open(out / "probabilities.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "p"])
        for s, p in enumerate(problem.scenarios.prob):
            w.writerow([s + 1, repr(float(p))])
    write_scenarios(problem.scenarios, out / "scenarios.csv")
    return out / "config.yaml", out / "scenarios.csv"


def write_scenarios(scenarios: ScenarioSet, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["plant", "scenario", "day", "hour", "value_mw"])
        for pi, plant in enumerate(scenarios.plants):
            for s in range(scenarios.S):
                for d in range(scenarios.D):
                    for h in range(HOURS):
                        w.writerow([plant, s + 1, d + 1, h + 1, repr(float(scenarios.values[pi, s, d, h]))])
