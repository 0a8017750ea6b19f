from __future__ import annotations

import numpy as np

from ..model import INFEASIBLE, OPTIMAL, MilpModel, Solution
from .simplex import BoundedSimplex, LpResult, Tolerances


def engine_for(model: MilpModel, tol: Tolerances | None = None) -> BoundedSimplex:
    lo, hi = model.row_bounds()
    return BoundedSimplex(model.matrix().tocsc(), model.obj, lo, hi, tol)


def _to_solution(model: MilpModel, res: LpResult) -> Solution:
    if res.status == OPTIMAL:
        obj = model.objective_value(res.x)
    elif res.status == INFEASIBLE:
        obj = float("nan")
    else:
        obj = -float("inf")
    return Solution(
        status=res.status,
        objective=obj,
        values=res.x,
        mip_gap=0.0,
        bound=obj,
        duals=res.duals,
        iterations=res.iterations,
        index=model.index,
    )


def solve_lp(model: MilpModel, tol: Tolerances | None = None, trace: bool = False) -> Solution:
    """Solve the LP relaxation of ``model`` (binary marks are ignored).

    Returns a :class:`Solution` whose status is ``optimal``, ``infeasible`` or
    ``unbounded``.  Numerical breakdown raises :class:`SolverError`.
    """
    eng = engine_for(model, tol)
    res = eng.solve(model.col_lb, model.col_ub, trace=trace)
    sol = _to_solution(model, res)
    if trace:
        sol.trace = res.trace  # type: ignore[attr-defined]
    return sol
