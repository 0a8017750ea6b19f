"""Bounded-variable revised simplex.

The LP ``min c.x  s.t.  lo <= A x <= hi,  l <= x <= u`` is solved in the
equality form ``A x - s = 0`` with the row activities ``s`` as bounded
logical columns.  Two algorithms share one basis representation:

* a composite primal simplex (phase 1 minimises the sum of bound
  infeasibilities of the basic variables, phase 2 the true objective), which
  can start from any basis;
* a dual simplex used whenever the starting basis is dual feasible, which is
  the case after branch-and-bound bound changes and for cost-nonnegative
  planning models at the slack basis.

The basis is held as a sparse LU of the initial basis matrix plus a product
form eta file, refactorised every ``refactor_every`` updates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

BASIC, AT_LB, AT_UB, FREE = 0, 1, 2, 3


class SolverError(RuntimeError):
    """Raised on numerical failure; the solver never returns a wrong answer silently."""


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-6
    optimality: float = 1e-7
    pivot: float = 1e-9
    integrality: float = 1e-6
    refactor_every: int = 100
    stall_limit: int = 1000
    max_iterations: int | None = None


@dataclass
class LpBasis:
    """Basic column set plus nonbasic bound status over structural+logical columns."""

    head: np.ndarray
    state: np.ndarray
    iterations: int = 0

    def copy(self) -> "LpBasis":
        return LpBasis(self.head.copy(), self.state.copy(), self.iterations)


@dataclass
class LpResult:
    status: str
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: LpBasis | None
    iterations: int
    trace: list[tuple[float, float]] = field(default_factory=list)


class _Factor:
    """Sparse LU of a basis matrix with a product-form eta file."""

    def __init__(self, B: sp.csc_matrix) -> None:
        try:
            self.lu = splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:  # exactly singular
            raise np.linalg.LinAlgError(str(exc)) from exc
        self.etas: list[tuple[int, np.ndarray, np.ndarray, float]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        y = self.lu.solve(a)
        for r, idx, val, piv in self.etas:
            yr = y[r] / piv
            if yr != 0.0:
                y[idx] -= val * yr
            y[r] = yr
        return y

    def btran(self, v: np.ndarray) -> np.ndarray:
        z = v.astype(float, copy=True)
        for r, idx, val, piv in reversed(self.etas):
            z[r] = (z[r] - val @ z[idx]) / piv
        return self.lu.solve(z, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        idx = np.flatnonzero(alpha)
        idx = idx[idx != r]
        self.etas.append((r, idx, alpha[idx].copy(), float(alpha[r])))


class BoundedSimplex:
    """Reusable LP engine for a fixed constraint matrix; bounds may change between solves."""

    def __init__(self, A, c, row_lo, row_hi, tol: Tolerances | None = None) -> None:
        A = sp.csc_matrix(A, dtype=float)
        self.m, self.n = A.shape
        self.tol = tol or Tolerances()
        self.full = sp.hstack([A, -sp.identity(self.m, format="csc")], format="csc")
        self.full.sort_indices()
        self.fullT = self.full.T.tocsr()
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])
        self.row_lo = np.asarray(row_lo, dtype=float)
        self.row_hi = np.asarray(row_hi, dtype=float)
        self.N = self.n + self.m

    # ------------------------------------------------------------------ setup
    def _column(self, j: int) -> np.ndarray:
        a = np.zeros(self.m)
        s, e = self.full.indptr[j], self.full.indptr[j + 1]
        a[self.full.indices[s:e]] = self.full.data[s:e]
        return a

    def slack_basis(self, lb: np.ndarray, ub: np.ndarray) -> LpBasis:
        head = np.arange(self.n, self.N)
        state = np.empty(self.N, dtype=np.int8)
        c = self.c
        state[:] = AT_LB
        lo_inf, up_inf = ~np.isfinite(lb), ~np.isfinite(ub)
        state[(c < 0) & ~up_inf] = AT_UB
        state[lo_inf & ~up_inf] = AT_UB
        state[(c > 0) & lo_inf & ~up_inf] = AT_UB
        state[lo_inf & up_inf] = FREE
        state[head] = BASIC
        return LpBasis(head, state)

    def _place_nonbasic(self, x, state, lb, ub) -> None:
        nb = state != BASIC
        # repair statuses that point at an infinite bound
        bad_lb = nb & (state == AT_LB) & ~np.isfinite(lb)
        state[bad_lb & np.isfinite(ub)] = AT_UB
        state[bad_lb & ~np.isfinite(ub)] = FREE
        bad_ub = nb & (state == AT_UB) & ~np.isfinite(ub)
        state[bad_ub & np.isfinite(lb)] = AT_LB
        state[bad_ub & ~np.isfinite(lb)] = FREE
        free_ok = nb & (state == FREE) & np.isfinite(lb)
        state[free_ok] = AT_LB
        free_ok = nb & (state == FREE) & np.isfinite(ub)
        state[free_ok] = AT_UB
        x[nb & (state == AT_LB)] = lb[nb & (state == AT_LB)]
        x[nb & (state == AT_UB)] = ub[nb & (state == AT_UB)]
        x[nb & (state == FREE)] = 0.0

    def _refactor(self, head):
        B = self.full[:, head].tocsc()
        return _Factor(B)

    def _basic_values(self, F: _Factor, head, x) -> np.ndarray:
        xz = x.copy()
        xz[head] = 0.0
        rhs = -(self.full @ xz)
        return F.ftran(rhs)

    # ------------------------------------------------------------------ solve
    def solve(self, col_lb, col_ub, basis: LpBasis | None = None, trace: bool = False,
              method: str = "auto") -> LpResult:
        """Solve with the given structural bounds, optionally warm-started from ``basis``."""
        lb = np.concatenate([np.asarray(col_lb, dtype=float), self.row_lo])
        ub = np.concatenate([np.asarray(col_ub, dtype=float), self.row_hi])
        if np.any(lb > ub + self.tol.feasibility):
            return self._infeasible(lb, ub)
        if basis is None:
            basis = self.slack_basis(lb, ub)
        else:
            basis = basis.copy()
        try:
            return self._run(lb, ub, basis, trace, method)
        except np.linalg.LinAlgError:
            log.debug("singular basis; restarting from slack basis")
            try:
                return self._run(lb, ub, self.slack_basis(lb, ub), trace, "primal")
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"numerical failure: {exc}") from exc

    def _infeasible(self, lb, ub) -> LpResult:
        return LpResult("infeasible", np.full(self.n, np.nan), float("nan"),
                        np.zeros(self.m), None, 0)

    def _run(self, lb, ub, basis: LpBasis, trace: bool, method: str) -> LpResult:
        head, state = basis.head, basis.state
        x = np.zeros(self.N)
        self._place_nonbasic(x, state, lb, ub)
        F = self._refactor(head)
        x[head] = self._basic_values(F, head, x)
        self._iters = 0
        self._trace: list[tuple[float, float]] = []
        self._want_trace = trace
        if method in ("auto", "dual") and self._dual_feasible(F, head, state, lb, ub):
            F, status = self._dual(F, head, state, x, lb, ub)
            if status == "infeasible":
                return self._finish("infeasible", F, head, state, x, lb, ub)
            if status == "fallback":
                self._place_nonbasic(x, state, lb, ub)
        F, status = self._primal(F, head, state, x, lb, ub)
        return self._finish(status, F, head, state, x, lb, ub)

    def _finish(self, status, F, head, state, x, lb, ub) -> LpResult:
        y = F.btran(self.c[head])
        xs = x[: self.n].copy()
        if status != "optimal":
            obj = float("nan") if status == "infeasible" else -float("inf")
            return LpResult(status, xs, obj, y, LpBasis(head.copy(), state.copy(), self._iters),
                            self._iters, self._trace)
        # snap nonbasic values exactly onto their bounds
        obj = float(self.c[: self.n] @ xs)
        return LpResult("optimal", xs, obj, y, LpBasis(head.copy(), state.copy(), self._iters),
                        self._iters, self._trace)

    def _limit(self) -> int:
        if self.tol.max_iterations is not None:
            return self.tol.max_iterations
        return 50 * (self.m + self.n) + 10_000

    def lagrangian_bound(self, y: np.ndarray, lb, ub) -> float:
        """Weak-duality bound ``min_{l<=z<=u} (c - A'^T y).z`` (may be -inf)."""
        d = self.c - self.fullT @ y
        # reduced costs inside the optimality tolerance count as zero
        d = np.where(np.abs(d) <= self.tol.optimality, 0.0, d)
        pos, neg = d > 0, d < 0
        if np.any(pos & ~np.isfinite(lb)) or np.any(neg & ~np.isfinite(ub)):
            return -float("inf")
        return float(np.dot(d[pos], lb[pos]) + np.dot(d[neg], ub[neg]))

    # ----------------------------------------------------------- dual simplex
    def _dual_feasible(self, F, head, state, lb, ub) -> bool:
        y = F.btran(self.c[head])
        d = self.c - self.fullT @ y
        tol = self.tol.optimality
        fixed = lb == ub
        bad = ((state == AT_LB) & (d < -tol)) | ((state == AT_UB) & (d > tol)) | \
              ((state == FREE) & (np.abs(d) > tol))
        return not np.any(bad & ~fixed)

    def _dual(self, F, head, state, x, lb, ub):
        tol = self.tol
        m = self.m
        fixed = lb == ub
        stall = 0
        bland = False
        since = 0
        limit = self._limit()
        while True:
            if self._iters >= limit:
                return F, "fallback"
            xB = x[head]
            lbB, ubB = lb[head], ub[head]
            below = lbB - xB
            above = xB - ubB
            infeas = np.maximum(below, above)
            cand = infeas > tol.feasibility
            if not cand.any():
                return F, "optimal"
            if bland:
                r = int(np.flatnonzero(cand)[np.argmin(head[cand])])
            else:
                r = int(np.argmax(np.where(cand, infeas, -np.inf)))
            s = 1.0 if below[r] > tol.feasibility else -1.0
            target = lbB[r] if s > 0 else ubB[r]
            y = F.btran(self.c[head])
            d = self.c - self.fullT @ y
            e = np.zeros(m)
            e[r] = 1.0
            rho = F.btran(e)
            arow = self.fullT @ rho
            nb = (state != BASIC) & ~fixed
            sa = s * arow
            up = nb & ((state == AT_LB) | (state == FREE)) & (sa < -tol.pivot)
            dn = nb & ((state == AT_UB) | (state == FREE)) & (sa > tol.pivot)
            elig = up | dn
            if not elig.any():
                return F, "infeasible"
            idx = np.flatnonzero(elig)
            a_abs = np.abs(arow[idx])
            dj = d[idx]
            # dual slack magnitudes under the sign convention of each status
            dmag = np.where(up[idx], np.maximum(dj, 0.0), np.maximum(-dj, 0.0))
            dmag = np.where(state[idx] == FREE, np.abs(dj), dmag)
            ratios = dmag / a_abs
            if bland:
                best = ratios.min()
                ties = np.flatnonzero(ratios <= best + 1e-12)
                q = int(idx[ties[0]])
            else:
                bound = ((dmag + tol.optimality) / a_abs).min()
                ok = np.flatnonzero(ratios <= bound)
                q = int(idx[ok[np.argmax(a_abs[ok])]])
            alpha = F.ftran(self._column(q))
            if abs(alpha[r]) < tol.pivot or abs(alpha[r] - arow[q]) > 1e-6 * (1 + abs(arow[q])):
                if F.etas:
                    F = self._refactor(head)
                    x[head] = self._basic_values(F, head, x)
                    since = 0
                    continue
                if abs(alpha[r]) < tol.pivot:
                    raise np.linalg.LinAlgError("dual simplex pivot too small")
            step = (x[head[r]] - target) / alpha[r]
            x[head] -= step * alpha
            x[q] += step
            leaving = head[r]
            x[leaving] = target
            state[leaving] = AT_LB if s > 0 else AT_UB
            if lb[leaving] == ub[leaving]:
                state[leaving] = AT_LB
            head[r] = q
            state[q] = BASIC
            F.update(r, alpha)
            self._iters += 1
            since += 1
            dual_step = abs(d[q]) * abs(step)
            stall = stall + 1 if dual_step <= 1e-12 else 0
            if stall >= tol.stall_limit and not bland:
                log.debug("dual simplex stalled; switching to Bland's rule")
                bland = True
            if since >= tol.refactor_every:
                F = self._refactor(head)
                x[head] = self._basic_values(F, head, x)
                since = 0

    # -------------------------------------------------------- primal simplex
    def _primal(self, F, head, state, x, lb, ub):
        tol = self.tol
        fixed = lb == ub
        stall = 0
        bland = False
        since = 0
        limit = self._limit()
        while True:
            if self._iters >= limit:
                raise SolverError(f"iteration limit {limit} reached")
            xB = x[head]
            lbB, ubB = lb[head], ub[head]
            low = xB < lbB - tol.feasibility
            high = xB > ubB + tol.feasibility
            phase1 = bool(low.any() or high.any())
            if phase1:
                cB = np.where(low, -1.0, np.where(high, 1.0, 0.0))
                cfull = None
            else:
                cB = self.c[head]
                cfull = self.c
            y = F.btran(cB)
            d = (0.0 if cfull is None else cfull) - self.fullT @ y
            if self._want_trace and not phase1:
                self._trace.append((float(self.c @ x), self.lagrangian_bound(y, lb, ub)))
            nb = (state != BASIC) & ~fixed
            inc = nb & ((state == AT_LB) | (state == FREE)) & (d < -tol.optimality)
            dec = nb & ((state == AT_UB) | (state == FREE)) & (d > tol.optimality)
            elig = inc | dec
            if not elig.any():
                if phase1:
                    return F, "infeasible"
                return F, "optimal"
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            direction = 1.0 if inc[q] else -1.0
            alpha = F.ftran(self._column(q))
            g = -direction * alpha  # rate of change of x_B per unit step
            if phase1:
                lbE = np.where(low, -np.inf, np.where(high, ubB, lbB))
                ubE = np.where(low, lbB, np.where(high, np.inf, ubB))
            else:
                lbE, ubE = lbB, ubB
            r, t = self._ratio(xB, g, lbE, ubE, bland, head)
            span = ub[q] - lb[q]
            if r < 0 and not np.isfinite(span):
                if phase1:
                    raise SolverError("phase 1 direction unbounded")
                return F, "unbounded"
            if np.isfinite(span) and (r < 0 or span <= t):
                # bound flip of the entering column
                x[head] += span * g
                x[q] = ub[q] if direction > 0 else lb[q]
                state[q] = AT_UB if direction > 0 else AT_LB
                self._iters += 1
                stall = 0
                continue
            x[head] += t * g
            x[q] += direction * t
            leaving = head[r]
            value = lbE[r] if g[r] < 0 else ubE[r]
            if not np.isfinite(value):
                raise SolverError("leaving variable has no finite bound")
            x[leaving] = value
            state[leaving] = AT_LB if value == lb[leaving] else AT_UB
            head[r] = q
            state[q] = BASIC
            F.update(r, alpha)
            self._iters += 1
            since += 1
            stall = stall + 1 if t * abs(d[q]) <= 1e-12 else 0
            if stall >= tol.stall_limit and not bland:
                log.debug("primal simplex stalled; switching to Bland's rule")
                bland = True
            if since >= tol.refactor_every:
                F = self._refactor(head)
                x[head] = self._basic_values(F, head, x)
                since = 0

    def _ratio(self, xB, g, lbE, ubE, bland, head):
        """Harris two-pass ratio test; returns (row, step) or (-1, inf)."""
        tol = self.tol
        dn = g < -tol.pivot
        upm = g > tol.pivot
        dn &= np.isfinite(lbE)
        upm &= np.isfinite(ubE)
        if not (dn.any() or upm.any()):
            return -1, float("inf")
        idx_dn = np.flatnonzero(dn)
        idx_up = np.flatnonzero(upm)
        idx = np.concatenate([idx_dn, idx_up])
        dist = np.concatenate([xB[idx_dn] - lbE[idx_dn], ubE[idx_up] - xB[idx_up]])
        rate = np.abs(g[idx])
        ratios = np.maximum(dist, 0.0) / rate
        if bland:
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            pick = ties[np.argmin(head[idx[ties]])]
            return int(idx[pick]), float(ratios[pick])
        bound = ((np.maximum(dist, 0.0) + tol.feasibility) / rate).min()
        ok = np.flatnonzero(ratios <= bound)
        pick = ok[np.argmax(rate[ok])]
        return int(idx[pick]), float(ratios[pick])
