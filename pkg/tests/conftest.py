from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tdpr_planning.data import (  # noqa: E402
    HOURS,
    DispatchablePlant,
    PlanningProblem,
    ReserveConfig,
    ScenarioSet,
    VrePlant,
    uniform_probabilities,
)
from tdpr_planning.model import ModelBuilder  # noqa: E402


def tiny_problem(S: int = 1, D: int = 1, demand: float = 150.0, seed: int = 0, ramp=None,
                 reserve: ReserveConfig | None = None) -> PlanningProblem:
    """One region, one existing thermal unit, one candidate wind farm."""
    rng = np.random.default_rng(seed)
    wind = rng.uniform(0.0, 100.0, size=(1, S, D, HOURS))
    return PlanningProblem(
        regions=("A",),
        dispatchables=(DispatchablePlant("T1", "A", 300.0, 40.0, ramp=ramp),),
        vre_plants=(VrePlant("W1", "A", 100.0, inv_cost=1000.0, existing=False, tech="wind"),),
        lines=(),
        demand=np.full((1, D, HOURS), demand),
        scenarios=ScenarioSet(("W1",), wind, uniform_probabilities(S)),
        reserve=reserve or ReserveConfig(),
        name="tiny",
    )


def model_from_arrays(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, upper=None, binary=None, lower=None):
    mb = ModelBuilder("arr")
    n = len(c)
    binary = np.zeros(n, bool) if binary is None else np.asarray(binary, bool)
    for j in range(n):
        ub = np.inf if upper is None else upper[j]
        lb = 0.0 if lower is None else lower[j]
        mb.add_var(("x", j), lb, ub, c[j], binary=bool(binary[j]))
    if A_ub is not None:
        for i, (a, b) in enumerate(zip(A_ub, b_ub)):
            mb.add_row(("u", i), [(j, v) for j, v in enumerate(a)], "L", b)
    if A_eq is not None:
        for i, (a, b) in enumerate(zip(A_eq, b_eq)):
            mb.add_row(("e", i), [(j, v) for j, v in enumerate(a)], "E", b)
    return mb.build()


def random_lp(rng: np.random.Generator, m_max: int = 40, n_max: int = 60):
    """Feasible, bounded LP: a known interior point and finite upper bounds."""
    n = int(rng.integers(2, n_max + 1))
    m_ub = int(rng.integers(1, max(2, m_max - 5)))
    m_eq = int(rng.integers(0, min(6, n - 1) + 1))
    x0 = rng.uniform(0.1, 2.0, size=n)
    A_ub = rng.normal(size=(m_ub, n)) * (rng.random((m_ub, n)) < 0.5)
    b_ub = A_ub @ x0 + rng.uniform(0.0, 1.0, size=m_ub)
    A_eq = rng.normal(size=(m_eq, n)) * (rng.random((m_eq, n)) < 0.6) if m_eq else None
    b_eq = A_eq @ x0 if m_eq else None
    upper = x0 + rng.uniform(0.5, 4.0, size=n)
    c = rng.normal(size=n)
    return c, A_ub, b_ub, A_eq, b_eq, upper


@pytest.fixture
def tiny():
    return tiny_problem()
