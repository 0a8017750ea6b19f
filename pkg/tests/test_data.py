import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdpr_planning.data import (
    HOURS,
    DispatchablePlant,
    NetworkLine,
    PlanningProblem,
    ReserveConfig,
    ScenarioSet,
    ValidationError,
    VrePlant,
    uniform_probabilities,
)
from tdpr_planning.io import load_problem, save_problem
from tdpr_planning.synthetic import random_system

CONFIG = """\
name: mini
regions: [north]
dispatchables:
  - {id: T1, region: north, gmax: 300, var_cost: 40}
vre_plants:
  - {id: W1, region: north, capacity: 100, inv_cost: 5000, existing: false}
demand: demand.csv
{extra}
"""


def write_case(tmp_path, values=None, probs=None, extra="", config=None):
    values = values if values is not None else {(s, 1): 50.0 for s in (1, 2)}
    (tmp_path / "config.yaml").write_text(config or CONFIG.replace("{extra}", extra))
    lines = ["region,day,hour,value_mw"] + [f"north,1,{h},120" for h in range(1, 25)]
    (tmp_path / "demand.csv").write_text("\n".join(lines) + "\n")
    rows = ["plant,scenario,day,hour,value_mw"]
    for (s, d), v in values.items():
        rows += [f"W1,{s},{d},{h},{v}" for h in range(1, 25)]
    (tmp_path / "scen.csv").write_text("\n".join(rows) + "\n")
    if probs is not None:
        (tmp_path / "p.csv").write_text("scenario,p\n" + "".join(f"{i + 1},{p}\n" for i, p in enumerate(probs)))
    return tmp_path / "config.yaml", tmp_path / "scen.csv"


def test_uniform_probabilities():
    assert uniform_probabilities(4).tolist() == [0.25] * 4
    assert uniform_probabilities(1).tolist() == [1.0]
    with pytest.raises(ValidationError):
        uniform_probabilities(0)


def test_minimal_config_loads(tmp_path):
    prob = load_problem(*write_case(tmp_path))
    assert (prob.S, prob.D) == (2, 1)
    assert prob.regions == ("north",)
    assert prob.dispatchables[0].gmax == 300
    assert not prob.vre_plants[0].existing
    np.testing.assert_allclose(prob.scenarios.prob, [0.5, 0.5])
    assert prob.demand.shape == (1, 1, HOURS)


def test_probability_mass_error(tmp_path):
    cfg, scen = write_case(tmp_path, probs=[0.6, 0.6], extra="probabilities: p.csv")
    with pytest.raises(ValidationError, match="probability mass 1.2 ≠ 1"):
        load_problem(cfg, scen)


def test_vre_over_capacity_names_plant_and_index(tmp_path):
    cfg, scen = write_case(tmp_path, values={(1, 1): 50.0, (2, 1): 110.0})
    with pytest.raises(ValidationError, match=r"110 MW exceeds capacity 100 MW for plant W1 at scenario 2, day 1, hour 1"):
        load_problem(cfg, scen)


def test_dangling_region(tmp_path):
    cfg = CONFIG.replace("{extra}", "").replace("{id: T1, region: north", "{id: T1, region: south")
    with pytest.raises(ValidationError, match=r"config.yaml:4: dispatchables\[0\].region: dangling region reference 'south'"):
        load_problem(*write_case(tmp_path, config=cfg))


def test_schema_error_names_field_and_line(tmp_path):
    cfg = CONFIG.replace("{extra}", "").replace("gmax: 300", "gmax: lots")
    with pytest.raises(ValidationError) as exc:
        load_problem(*write_case(tmp_path, config=cfg))
    msg = str(exc.value)
    assert "config.yaml:4" in msg and "gmax" in msg


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ValidationError, match="colour"):
        load_problem(*write_case(tmp_path, extra="colour: red"))


@pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
def test_non_finite_scenario_value_rejected(tmp_path, bad):
    cfg, scen = write_case(tmp_path)
    scen.write_text(scen.read_text().replace("W1,1,1,5,50.0", f"W1,1,1,5,{bad}"))
    with pytest.raises(ValidationError):
        load_problem(cfg, scen)


def test_missing_hour_rejected(tmp_path):
    cfg, scen = write_case(tmp_path)
    scen.write_text("\n".join(l for l in scen.read_text().splitlines() if l != "W1,2,1,7,50.0") + "\n")
    with pytest.raises(ValidationError):
        load_problem(cfg, scen)


def test_scenario_set_invariants():
    vals = np.ones((1, 2, 1, HOURS))
    with pytest.raises(ValidationError):
        ScenarioSet(("W",), -vals, uniform_probabilities(2))
    with pytest.raises(ValidationError):
        ScenarioSet(("W",), vals, np.array([0.5, 0.4]))
    with pytest.raises(ValidationError):
        ScenarioSet(("W",), np.ones((1, 2, 1, 23)), uniform_probabilities(2))
    # mass within 1e-9 is accepted
    ScenarioSet(("W",), vals, np.array([0.5, 0.5 + 5e-10]))


def test_type_invariants():
    with pytest.raises(ValidationError):
        DispatchablePlant("T", "A", gmax=10, var_cost=1, gmin_stable=20)
    with pytest.raises(ValidationError):
        DispatchablePlant("T", "A", gmax=10, var_cost=-1)
    with pytest.raises(ValidationError):
        DispatchablePlant("T", "A", gmax=10, var_cost=1, ramp=-1)
    with pytest.raises(ValidationError):
        VrePlant("W", "A", capacity=0)
    with pytest.raises(ValidationError):
        NetworkLine("L", "A", "A", 10)
    with pytest.raises(ValidationError):
        NetworkLine("L", "A", "B", 0)
    for lam, beta in ((-0.1, 0.5), (1.1, 0.5), (0.5, 0.0), (0.5, 1.5)):
        with pytest.raises(ValidationError):
            ReserveConfig(lam=lam, beta=beta)


def test_negative_demand_rejected(tiny):
    with pytest.raises(ValidationError):
        tiny.replace(demand=-np.ones_like(tiny.demand))
    with pytest.raises(ValidationError):
        tiny.replace(demand=np.full_like(tiny.demand, math.nan))


def test_load_is_deterministic(tmp_path):
    cfg, scen = write_case(tmp_path)
    assert load_problem(cfg, scen) == load_problem(cfg, scen)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_round_trip(tmp_path, seed):
    prob = random_system(seed, S=3, D=3, K=2)
    cfg, scen = save_problem(prob, tmp_path / "case")
    again = load_problem(cfg, scen)
    assert again == prob
    cfg2, scen2 = save_problem(again, tmp_path / "case2")
    assert cfg.read_bytes() == cfg2.read_bytes()
    assert scen.read_bytes() == scen2.read_bytes()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=6))
def test_normalised_weights_accepted(raw):
    p = np.asarray(raw) / np.sum(raw)
    s = ScenarioSet(("W",), np.zeros((1, len(p), 1, HOURS)), p)
    assert s.S == len(p)
