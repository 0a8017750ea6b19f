import csv
import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from tdpr_planning.cli import OUT_ENV, main
from tdpr_planning.data import (
    HOURS,
    DispatchablePlant,
    PlanningProblem,
    ReserveConfig,
    ScenarioSet,
    VrePlant,
    uniform_probabilities,
)
from tdpr_planning.io import save_problem
from tdpr_planning.report import PipelineError, emit_reports, resume_plan, run_compare, run_plan
from tdpr_planning.synthetic import random_system


@pytest.fixture(scope="module")
def case(tmp_path_factory):
    root = tmp_path_factory.mktemp("case")
    return save_problem(random_system(7, S=3, D=3, K=2), root / "input")


def args(case, *extra):
    cfg, scen = case
    return [*extra, "--config", str(cfg), "--scenarios", str(scen)]


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(l for l in fh if not l.startswith("#")))


def same_tree(a: Path, b: Path) -> bool:
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    ok = all(filecmp.cmp(a / f, b / f, shallow=False) for f in cmp.common_files)
    return ok and all(same_tree(a / d, b / d) for d in cmp.common_dirs)


# -- reports -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def plans(case, tmp_path_factory):
    out = tmp_path_factory.mktemp("plans")
    cfg, scen = case
    with_r = run_plan(cfg, scen, "with-tdpr", out / "with")
    without_r = run_plan(cfg, scen, "without-tdpr", out / "without")
    return out, with_r, without_r


def test_plan_reports_written(plans):
    out, rep, _ = plans
    names = {p.name for p in (out / "with").iterdir()}
    assert {"capacity_additions.csv", "tdpr_profile.csv", "costs.json", "reserve_allocation.csv",
            "run_meta.json", "flows.csv", "solution.sol"} <= names
    assert rep.ok


def test_costs_sum_to_objective(plans):
    out, rep, _ = plans
    costs = json.loads((out / "with" / "costs.json").read_text())
    obj = costs.pop("objective")
    assert sum(costs.values()) == pytest.approx(obj, rel=1e-6)
    assert obj == rep.objective


def test_tdpr_profile_matches_solution(plans):
    out, rep, _ = plans
    text = (out / "with" / "tdpr_profile.csv").read_text()
    assert text.startswith("# total_mw")
    rows = read_rows(out / "with" / "tdpr_profile.csv")
    assert rows[0] == ["hour", "total_mw", "north_mw", "south_mw"]
    assert [float(r[1]) for r in rows[1:]] == rep.tdpr.tolist()
    assert len(rows) == HOURS + 1


def test_capacity_additions_consistent(plans):
    out, rep, _ = plans
    per_class = {}
    for _, cls, _, mw in rep.decisions:
        per_class[cls] = per_class.get(cls, 0.0) + mw
    rows = read_rows(out / "with" / "capacity_additions.csv")[1:]
    got = {r[0]: float(r[1]) for r in rows}
    assert got == {k: v for k, v in sorted(per_class.items()) if v > 1e-9}


def test_without_tdpr_has_zero_requirement(plans):
    out, _, rep = plans
    rows = read_rows(out / "without" / "tdpr_profile.csv")[1:]
    assert all(float(v) == 0.0 for r in rows for v in r[1:])
    assert read_rows(out / "without" / "reserve_allocation.csv") == [["plant", "hour", "expected_mw"]]


def test_with_tdpr_objective_not_lower(plans):
    _, with_r, without_r = plans
    assert with_r.objective >= without_r.objective


def test_empty_additions_header_only(tmp_path):
    p = random_system(0, S=2, D=2, K=1)
    rep = run_plan(p, mode="without-tdpr", out_dir=tmp_path)
    rep.capacity_additions = {}
    emit_reports(rep, tmp_path / "again")
    assert (tmp_path / "again" / "capacity_additions.csv").read_text() == "class,added_mw\n"


def test_resume_reproduces_reports(case, plans, tmp_path):
    out, _, _ = plans
    cfg, scen = case
    resume_plan(cfg, scen, out / "with" / "solution.sol", "with-tdpr", tmp_path / "re")
    for name in ("capacity_additions.csv", "tdpr_profile.csv", "costs.json", "reserve_allocation.csv", "flows.csv"):
        assert (tmp_path / "re" / name).read_bytes() == (out / "with" / name).read_bytes(), name


def test_resume_flags_bad_solution(case, plans, tmp_path):
    out, _, _ = plans
    cfg, scen = case
    bad = tmp_path / "bad.sol"
    bad.write_text((out / "with" / "solution.sol").read_text().replace("x_gen(coal_n) 1.0", "x_gen(coal_n) 0.5"))
    rep = resume_plan(cfg, scen, bad, "with-tdpr")
    assert not rep.ok
    assert any("x_gen(coal_n)" in v for v in rep.violations)


def test_stage_tagged_errors(tmp_path):
    with pytest.raises(PipelineError, match=r"^\[load\]"):
        run_plan(tmp_path / "missing.yaml", tmp_path / "missing.csv")


# -- comparison ---------------------------------------------------------------------------

def anti_correlated_system() -> PlanningProblem:
    """Sites A and B mirror each other; C is cheap but moves with A."""
    rng = np.random.default_rng(12)
    S, D = 4, 2
    dev = rng.normal(0, 18, size=(S, D, HOURS)).cumsum(axis=2) * 0.5
    base = 50.0
    a = np.clip(base + dev, 0, 100)
    b = np.clip(base - dev, 0, 100)
    c = np.clip(base + dev, 0, 100)
    scen = ScenarioSet(("A", "B", "C"), np.stack([a, b, c]), uniform_probabilities(S))
    return PlanningProblem(
        regions=("R",),
        dispatchables=(DispatchablePlant("base", "R", 120.0, 20.0),
                       DispatchablePlant("peaker", "R", 150.0, 60.0, inv_cost=4000.0, existing=False)),
        vre_plants=(VrePlant("A", "R", 100.0, inv_cost=3000.0, existing=False),
                    VrePlant("B", "R", 100.0, inv_cost=3000.0, existing=False),
                    VrePlant("C", "R", 100.0, inv_cost=1500.0, existing=False)),
        lines=(),
        demand=np.full((1, D, HOURS), 160.0),
        scenarios=scen,
        reserve=ReserveConfig(lam=0.5, beta=0.2),
        name="anti",
    )


def test_compare_restriction_and_deltas(tmp_path):
    res = run_compare(anti_correlated_system(), out_dir=tmp_path, gap=1e-9)
    assert res.co_optimized.objective <= res.hierarchical.objective * (1 + 1e-9)
    assert res.co_optimized.objective >= res.without_tdpr.objective
    summary = json.loads((tmp_path / "comparison.json").read_text())
    obj = summary["objective"]
    assert summary["cost_of_hierarchy"] == pytest.approx(obj["hierarchical"] - obj["co_optimized"], abs=1e-9)
    rows = {r[0]: r[1:] for r in read_rows(tmp_path / "cost_comparison.csv")[1:]}
    assert [float(v) for v in rows["objective"]] == [obj["without_tdpr"], obj["hierarchical"], obj["co_optimized"]]
    for sub in ("without_tdpr", "hierarchical", "co_optimized"):
        assert (tmp_path / sub / "costs.json").exists()


def test_compare_single_site_coincides(tmp_path):
    p = anti_correlated_system()
    p = p.replace(vre_plants=p.vre_plants[:1])
    res = run_compare(p, gap=1e-9)
    assert res.hierarchical.objective == pytest.approx(res.co_optimized.objective, rel=1e-9)


# -- CLI --------------------------------------------------------------------------------

def test_cli_tdpr_compute(case, tmp_path, capsys):
    out = tmp_path / "profile.csv"
    assert main(args(case, "tdpr", "compute", "--out", str(out), "--lambda", "0.3", "--beta", "0.2",
                     "--by-region")) == 0
    rows = read_rows(out)
    assert rows[0] == ["hour", "mean_mw", "cvar_mw", "tdpr_mw", "tdpr_north_mw", "tdpr_south_mw"]
    for r in rows[1:]:
        mean, cvar, tdpr = map(float, r[1:4])
        assert tdpr == pytest.approx(0.7 * mean + 0.3 * cvar, abs=1e-9)


def test_cli_days_cluster(case, tmp_path):
    out = tmp_path / "clusters.csv"
    assert main(args(case, "days", "cluster", "-K", "2", "--out", str(out))) == 0
    rows = read_rows(out)
    assert rows[0] == ["day", "cluster", "medoid", "weight"]
    assert len(rows) == 4


def test_cli_env_default_out(case, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "envout"))
    assert main(args(case, "plan", "solve", "--mode", "without-tdpr")) == 0
    assert (tmp_path / "envout" / "costs.json").exists()


def test_cli_export_and_resume(case, tmp_path):
    mps = tmp_path / "m.mps"
    assert main(args(case, "model", "export-mps", "--out", str(mps))) == 0
    assert mps.read_text().startswith("NAME ")
    assert main(args(case, "plan", "solve", "--out", str(tmp_path / "a"))) == 0
    assert main(args(case, "plan", "resume", "--solution", str(tmp_path / "a" / "solution.sol"),
                     "--out", str(tmp_path / "b"))) == 0
    assert (tmp_path / "b" / "costs.json").read_bytes() == (tmp_path / "a" / "costs.json").read_bytes()


def test_cli_bad_input_exit_code(tmp_path, capsys):
    code = main(["plan", "solve", "--config", str(tmp_path / "nope.yaml"), "--scenarios", str(tmp_path / "x.csv"),
                 "--out", str(tmp_path)])
    assert code == 2
    assert "error: [load]" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["plan", "solve"])


@pytest.mark.parametrize("command", [
    ["tdpr", "compute", "--by-region"],
    ["days", "cluster", "-K", "2", "--seed", "3"],
    ["plan", "solve", "--mode", "with-tdpr"],
    ["plan", "compare"],
    ["model", "export-mps"],
])
def test_cli_byte_identical_reruns(case, tmp_path, command):
    for run in ("one", "two"):
        assert main(args(case, *command, "--out", str(tmp_path / run))) == 0
    assert same_tree(tmp_path / "one", tmp_path / "two")
