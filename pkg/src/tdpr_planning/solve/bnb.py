"""Best-first branch-and-bound over binary columns."""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..model import GAP_LIMIT, INFEASIBLE, OPTIMAL, UNBOUNDED, MilpModel, Solution
from .lp import engine_for
from .simplex import LpBasis, Tolerances

log = logging.getLogger(__name__)


@dataclass
class BnbNode:
    """Bound overlay on binary columns; overlays only ever tighten."""

    fixings: dict[int, float]
    parent_bound: float
    depth: int
    basis: LpBasis | None = None


@dataclass
class BnbStats:
    nodes: int = 0
    lp_solves: int = 0
    trace: list[tuple[float, float]] = field(default_factory=list)


def _rel_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return float("inf")
    return max(0.0, (incumbent - bound) / max(abs(incumbent), 1e-10))


def solve_milp(model: MilpModel, gap: float = 1e-4, node_limit: int = 100_000,
               tol: Tolerances | None = None) -> Solution:
    """Minimise ``model`` with binaries enforced.

    Branches on the most fractional binary (lowest column on ties) and always
    expands the open node with the smallest parent bound (creation order on
    ties), so the search is deterministic.  Stops when the relative gap
    between incumbent and best open bound is within ``gap`` or when
    ``node_limit`` LP nodes have been evaluated (status ``gap-limit``).
    The returned solution carries a ``stats`` attribute (:class:`BnbStats`).
    """
    tol = tol or Tolerances()
    eng = engine_for(model, tol)
    lb0 = model.col_lb.copy()
    ub0 = model.col_ub.copy()
    bins = np.flatnonzero(model.binary)
    lb0[bins] = np.maximum(lb0[bins], 0.0)
    ub0[bins] = np.minimum(ub0[bins], 1.0)
    lb0[bins] = np.ceil(lb0[bins] - tol.integrality)
    ub0[bins] = np.floor(ub0[bins] + tol.integrality)
    stats = BnbStats()

    def bounds_for(node: BnbNode):
        lb, ub = lb0.copy(), ub0.copy()
        for j, v in node.fixings.items():
            lb[j] = ub[j] = v
        return lb, ub

    incumbent_x: np.ndarray | None = None
    incumbent = float("inf")
    counter = itertools.count()
    heap: list[tuple[float, int, BnbNode]] = []
    heapq.heappush(heap, (-float("inf"), next(counter), BnbNode({}, -float("inf"), 0)))
    global_lb = -float("inf")
    hit_limit = False
    unbounded = False

    def prune_level() -> float:
        return incumbent - max(gap * abs(incumbent), 1e-9 * max(1.0, abs(incumbent)))

    while heap:
        bound, _, node = heap[0]
        global_lb = max(global_lb, bound)
        if incumbent_x is not None and bound >= prune_level():
            break
        if stats.nodes >= node_limit:
            hit_limit = True
            break
        heapq.heappop(heap)
        lb, ub = bounds_for(node)
        res = eng.solve(lb, ub, basis=node.basis)
        stats.nodes += 1
        stats.lp_solves += 1
        if res.status == UNBOUNDED:
            unbounded = True
            break
        if res.status != OPTIMAL:
            stats.trace.append((global_lb, incumbent))
            continue
        obj = max(res.objective + model.obj_offset, node.parent_bound)
        if obj >= prune_level():
            stats.trace.append((global_lb, incumbent))
            continue
        xb = res.x[bins]
        frac = np.abs(xb - np.round(xb))
        if not bins.size or frac.max(initial=0.0) <= tol.integrality:
            x = res.x.copy()
            if bins.size and np.any(xb != np.round(xb)):
                # re-solve with binaries pinned so the reported point is exactly consistent
                lb2, ub2 = lb.copy(), ub.copy()
                lb2[bins] = ub2[bins] = np.round(xb)
                res2 = eng.solve(lb2, ub2, basis=res.basis)
                stats.lp_solves += 1
                if res2.status == OPTIMAL:
                    x = res2.x.copy()
            value = model.objective_value(x)
            if value < incumbent:
                incumbent, incumbent_x = value, x
                log.debug("incumbent %.10g at node %d", incumbent, stats.nodes)
            stats.trace.append((global_lb, incumbent))
            if not bins.size:
                break
            continue
        score = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        j = int(bins[int(np.argmax(score))])  # argmax returns the lowest index on ties
        for v in (0.0, 1.0):
            child = BnbNode({**node.fixings, j: v}, obj, node.depth + 1, res.basis)
            heapq.heappush(heap, (obj, next(counter), child))
        stats.trace.append((global_lb, incumbent))

    if unbounded:
        sol = Solution(UNBOUNDED, -float("inf"), np.full(model.n_cols, np.nan), index=model.index)
    elif incumbent_x is None:
        if hit_limit:
            sol = Solution(GAP_LIMIT, float("nan"), np.full(model.n_cols, np.nan),
                           mip_gap=float("inf"), bound=global_lb, index=model.index)
        else:
            sol = Solution(INFEASIBLE, float("nan"), np.full(model.n_cols, np.nan),
                           bound=float("inf"), index=model.index)
    else:
        best_open = heap[0][0] if heap else incumbent
        final_lb = min(max(global_lb, best_open), incumbent)
        g = _rel_gap(incumbent, final_lb)
        status = OPTIMAL if (not hit_limit or g <= gap) else GAP_LIMIT
        sol = Solution(status, incumbent, incumbent_x, mip_gap=g, bound=final_lb,
                       index=model.index)
    sol.nodes = stats.nodes
    sol.stats = stats  # type: ignore[attr-defined]
    return sol
