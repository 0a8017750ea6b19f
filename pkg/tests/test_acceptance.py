"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import contextlib
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import model_from_arrays, random_lp
from oracles import cvar_breakpoint_scan, enumerate_milp, tableau_simplex
from tdpr_planning.cli import main
from tdpr_planning.data import HOURS, ReserveConfig, ScenarioSet, uniform_probabilities
from tdpr_planning.dayreduce import reduce_days
from tdpr_planning.formulation import (
    build_model,
    fix_vre_investments,
    minimal_tdpr_model,
    tdpr_values,
    vre_levels,
)
from tdpr_planning.io import save_problem
from tdpr_planning.model import OPTIMAL
from tdpr_planning.solve import read_mps, solve_lp, solve_milp, write_mps
from tdpr_planning.synthetic import random_system
from tdpr_planning.tdpr import aggregate_error, compute_tdpr, cvar_empirical, error_variation

from test_formulation import abs_pinned
from test_mps import GOLDEN, tiny_mps_model
from test_report_cli import same_tree
from test_solver import milp_suite

GAP = 1e-9


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(label):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            with capsys.disabled():
                print(f"\nFAIL  {label}  ({time.perf_counter() - t0:.2f} s): {exc}")
            raise
        with capsys.disabled():
            print(f"\nPASS  {label}  ({time.perf_counter() - t0:.2f} s)")
    return run


def test_c1_worked_example(criterion):
    with criterion("C1 worked example |variation| = 500 MW"):
        t0 = time.perf_counter()
        v = np.full((1, 2, 1, HOURS), 9000.0)
        v[0, :, 0, 0] = [9200.0, 8800.0]
        v[0, :, 0, 1] = [8700.0, 9300.0]
        s = ScenarioSet(("P",), v, uniform_probabilities(2))
        err = aggregate_error(s, ["P"])
        assert err.values[0, 0, 0] == 200.0 and err.values[0, 0, 1] == -300.0
        assert error_variation(err).values[0, 0, 0] == 500.0
        assert time.perf_counter() - t0 < 1.0


def test_c2_cvar_oracle(criterion):
    with criterion("C2 empirical CVaR = breakpoint scan, 100 sets x 4 betas"):
        t0 = time.perf_counter()
        worst = 0.0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = rng.gamma(2.0, 50.0, size=200)
            p = rng.uniform(0.1, 1.0, size=200)
            p /= p.sum()
            for beta in (0.05, 0.1, 0.5, 1.0):
                worst = max(worst, abs(cvar_empirical(x, p, beta) - cvar_breakpoint_scan(x, p, beta)))
        assert worst <= 1e-7, worst
        assert time.perf_counter() - t0 < 5.0


def test_c3_endogenous_equals_exogenous(criterion):
    with criterion("C3 minimal MILP TDPR = engine profile, lambda in {0, 0.5, 1}"):
        t0 = time.perf_counter()
        base = random_system(11, S=4, D=3, K=2)
        x = {v.id: w for v, w in zip(base.vre_plants, (0.4, 1.0, 0.7))}
        for lam in (0.0, 0.5, 1.0):
            p = base.replace(reserve=replace(base.reserve, lam=lam))
            m = minimal_tdpr_model(fix_vre_investments(build_model(p, reduce_days(p)), x)).relaxed()
            sol = solve_lp(m)
            assert sol.status == OPTIMAL
            plants = p.vre_plants
            expect = compute_tdpr(p.scenarios, [v.profile for v in plants], p.reserve,
                                  weights=[x[v.id] for v in plants]).tdpr
            np.testing.assert_allclose(tdpr_values(m, sol), expect, atol=1e-6, rtol=0)
        assert time.perf_counter() - t0 < 60.0


def test_c4_portfolio_effect(criterion):
    with criterion("C4 anti-correlated pair cancels; subadditivity on 50 pairs"):
        rng = np.random.default_rng(4)
        dev = rng.normal(0, 25, size=(6, 5, HOURS))
        pair = ScenarioSet(("A", "B"), np.stack([100 + dev, 100 - dev]), uniform_probabilities(6))
        cfg = ReserveConfig(lam=0.5, beta=0.1)
        assert np.max(np.abs(compute_tdpr(pair, ["A", "B"], cfg).tdpr)) <= 1e-9
        assert np.all(compute_tdpr(pair, ["A"], cfg).tdpr > 0)
        assert np.all(compute_tdpr(pair, ["B"], cfg).tdpr > 0)
        for seed in range(50):
            r = np.random.default_rng(100 + seed)
            s = ScenarioSet(("A", "B"), r.uniform(0, 100, size=(2, 5, 4, HOURS)), uniform_probabilities(5))
            c = ReserveConfig(lam=float(r.uniform()), beta=float(r.uniform(0.05, 1.0)))
            ab = compute_tdpr(s, ["A", "B"], c).tdpr
            a, b = compute_tdpr(s, ["A"], c).tdpr, compute_tdpr(s, ["B"], c).tdpr
            assert np.all(ab <= a + b + 1e-9)


_SUITE = []


def solve_suite():
    """Ten small two-region systems solved three ways; cached for C5 and C7."""
    if _SUITE:
        return _SUITE
    out = []
    for seed in range(10):
        p = random_system(seed, S=4, D=4, K=2)
        cl = reduce_days(p)
        assert len(cl.medoids) == 2 and len(p.regions) == 2 and p.scenarios.S <= 16
        n_cand = sum(not g.existing for g in p.dispatchables) + sum(not v.existing for v in p.vre_plants) \
            + sum(not l.existing for l in p.lines)
        assert n_cand <= 8
        times = []
        t = time.perf_counter()
        m1 = build_model(p, cl, "without-tdpr")
        s1 = solve_milp(m1, gap=GAP)
        times.append(time.perf_counter() - t)
        t = time.perf_counter()
        m2 = build_model(p, cl, "with-tdpr")
        s2 = solve_milp(m2, gap=GAP)
        times.append(time.perf_counter() - t)
        t = time.perf_counter()
        pins = {k: float(np.clip(v, 0.0, 1.0)) for k, v in vre_levels(m1, s1).items()}
        s3 = solve_milp(fix_vre_investments(build_model(p, cl, "with-tdpr"), pins), gap=GAP)
        times.append(time.perf_counter() - t)
        out.append(dict(seed=seed, without=s1, model=m2, co=s2, hier=s3, times=times))
    _SUITE.extend(out)
    return _SUITE


def test_c5_restriction_monotonicity(criterion):
    with criterion("C5 with >= without and co-optimised <= hierarchical on 10 systems"):
        for case in solve_suite():
            assert all(s.status == OPTIMAL for s in (case["without"], case["co"], case["hier"])), case["seed"]
            assert case["co"].objective >= case["without"].objective, case["seed"]
            # both solved to a 1e-9 relative gap
            assert case["co"].objective <= case["hier"].objective + GAP * abs(case["hier"].objective), case["seed"]
            assert max(case["times"]) < 60.0, case["times"]


def test_c6_milp_and_lp_oracles(criterion):
    with criterion("C6 B&B = enumeration on 25 MILPs; LP = tableau on 50 LPs"):
        for c, A, b, binary, upper in milp_suite():
            assert binary.sum() <= 10
            best, _ = enumerate_milp(c, A, b, binary, upper)
            sol = solve_milp(model_from_arrays(c, A_ub=A, b_ub=b, upper=upper, binary=binary), gap=GAP)
            assert sol.objective == pytest.approx(best, abs=1e-7 * max(1.0, abs(best)))
        for seed in range(50):
            c, A_ub, b_ub, A_eq, b_eq, upper = random_lp(np.random.default_rng(seed))
            _, obj, _ = tableau_simplex(c, A_ub, b_ub, A_eq, b_eq, upper)
            sol = solve_lp(model_from_arrays(c, A_ub, b_ub, A_eq, b_eq, upper))
            assert abs(sol.objective - obj) <= 1e-7 * max(1.0, abs(obj))


def test_c7_abs_tightness(criterion):
    with criterion("C7 pinned |variation| re-solve moves objective < 1e-6 relative"):
        for case in solve_suite():
            again = solve_milp(abs_pinned(case["model"], case["co"]), gap=GAP)
            assert again.status == OPTIMAL
            ref = case["co"].objective
            assert abs(again.objective - ref) < 1e-6 * abs(ref), case["seed"]


def test_c8_mps_round_trip(criterion, tmp_path):
    with criterion("C8 MPS round trip and golden bytes"):
        p = random_system(9, S=3, D=3, K=2)
        m = build_model(p, reduce_days(p))
        assert read_mps(write_mps(m, tmp_path / "m.mps")).triplet_set() == m.triplet_set()
        assert write_mps(tiny_mps_model(), tmp_path / "t.mps").read_bytes() == GOLDEN.read_bytes()
        try:
            import highspy
        except ImportError:
            return
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("mip_rel_gap", GAP)
        h.readModel(str(tmp_path / "m.mps"))
        h.run()
        ext = h.getInfo().objective_function_value
        assert ext == pytest.approx(solve_milp(m, gap=GAP).objective, rel=1e-6)


def test_c9_cli_determinism(criterion, tmp_path):
    with criterion("C9 CLI outputs byte-identical across two runs"):
        cfg, scen = save_problem(random_system(21, S=3, D=3, K=2), tmp_path / "input")
        commands = [
            ["tdpr", "compute", "--by-region"],
            ["days", "cluster", "-K", "2", "--seed", "5"],
            ["plan", "solve", "--mode", "without-tdpr"],
            ["plan", "compare"],
            ["model", "export-mps"],
        ]
        for i, cmd in enumerate(commands):
            for run in ("a", "b"):
                code = main([*cmd, "--config", str(cfg), "--scenarios", str(scen),
                             "--out", str(tmp_path / f"{i}{run}")])
                assert code == 0, cmd
            assert same_tree(tmp_path / f"{i}a", tmp_path / f"{i}b"), cmd
        sol = tmp_path / "2a" / "solution.sol"
        for run in ("a", "b"):
            assert main(["plan", "resume", "--mode", "without-tdpr", "--solution", str(sol), "--config", str(cfg),
                         "--scenarios", str(scen), "--out", str(tmp_path / f"r{run}")]) == 0
        assert same_tree(tmp_path / "ra", tmp_path / "rb")
