"""Independent reference implementations used only by the tests.

None of these share code with the package: the tableau simplex works on a
dense standard-form tableau with Bland's rule, the CVaR oracle scans the
Rockafellar-Uryasev objective over sample breakpoints, and the MILP oracle
enumerates every binary assignment.
"""

from __future__ import annotations

import itertools

import numpy as np


def tableau_simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, upper=None):
    """Two-phase dense tableau simplex with Bland's rule.

    Solves ``min c.x  s.t. A_ub x <= b_ub, A_eq x = b_eq, 0 <= x <= upper``.
    Returns ``(status, objective, x)`` with status in
    {"optimal", "infeasible", "unbounded"}.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    rows, rhs, kinds = [], [], []
    if A_ub is not None:
        for a, b in zip(np.atleast_2d(A_ub), np.atleast_1d(b_ub)):
            rows.append(np.asarray(a, float)); rhs.append(float(b)); kinds.append("L")
    if upper is not None:
        for j, u in enumerate(upper):
            if np.isfinite(u):
                e = np.zeros(n); e[j] = 1.0
                rows.append(e); rhs.append(float(u)); kinds.append("L")
    if A_eq is not None:
        for a, b in zip(np.atleast_2d(A_eq), np.atleast_1d(b_eq)):
            rows.append(np.asarray(a, float)); rhs.append(float(b)); kinds.append("E")
    m = len(rows)
    # column layout: x (n) | slack/surplus (one per inequality) | artificial (m)
    n_slack = sum(k != "E" for k in kinds)
    width = n + n_slack + m
    T = np.zeros((m, width + 1))
    basis = []
    si = 0
    for i, (a, b, k) in enumerate(zip(rows, rhs, kinds)):
        sign = -1.0 if b < 0 else 1.0
        T[i, :n] = sign * a
        if k == "L":
            T[i, n + si] = sign
            si += 1
        T[i, n + n_slack + i] = 1.0
        T[i, -1] = sign * b
        basis.append(n + n_slack + i)
    basis = np.array(basis)

    def run(cost, allowed):
        while True:
            cb = cost[basis]
            reduced = cost[:width] - cb @ T[:, :width]
            enter = [j for j in range(width) if allowed[j] and reduced[j] < -1e-10]
            if not enter:
                return "optimal"
            q = enter[0]
            col = T[:, q]
            best, r = None, None
            for i in range(m):
                if col[i] > 1e-10:
                    ratio = T[i, -1] / col[i]
                    if best is None or ratio < best - 1e-12 or (
                        abs(ratio - best) <= 1e-12 and basis[i] < basis[r]
                    ):
                        best, r = ratio, i
            if r is None:
                return "unbounded"
            T[r] /= T[r, q]
            for i in range(m):
                if i != r and T[i, q] != 0.0:
                    T[i] -= T[i, q] * T[r]
            basis[r] = q

    phase1 = np.zeros(width)
    phase1[n + n_slack:] = 1.0
    run(phase1, np.ones(width, dtype=bool))
    if T[:, -1] @ phase1[basis] > 1e-7 * max(1.0, np.abs(rhs).max(initial=0.0)):
        return "infeasible", float("nan"), None
    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n + n_slack:
            nz = [j for j in range(n + n_slack) if abs(T[i, j]) > 1e-9]
            if nz:
                q = nz[0]
                T[i] /= T[i, q]
                for k in range(m):
                    if k != i and T[k, q] != 0.0:
                        T[k] -= T[k, q] * T[i]
                basis[i] = q
    cost = np.zeros(width)
    cost[:n] = c
    allowed = np.ones(width, dtype=bool)
    allowed[n + n_slack:] = False
    status = run(cost, allowed)
    if status == "unbounded":
        return "unbounded", -float("inf"), None
    x = np.zeros(width)
    x[basis] = T[:, -1]
    return "optimal", float(c @ x[:n]), x[:n]


def cvar_breakpoint_scan(samples, probs, beta):
    """min_W W + (1/beta) sum p max(0, x - W), scanned over the sample values.

    The objective is piecewise linear and convex in W with breakpoints at the
    samples, so the minimum is attained at one of them.
    """
    x = np.asarray(samples, dtype=float)
    p = np.asarray(probs, dtype=float)
    best = float("inf")
    for w in x:
        val = w + np.sum(p * np.maximum(0.0, x - w)) / beta
        best = min(best, val)
    return best


def enumerate_milp(c, A_ub, b_ub, binary, upper, A_eq=None, b_eq=None):
    """Exhaustive MILP oracle: fix every binary assignment, solve the rest by tableau."""
    c = np.asarray(c, float)
    bins = np.flatnonzero(binary)
    cont = np.flatnonzero(~np.asarray(binary))
    best, best_x = float("inf"), None
    for combo in itertools.product((0.0, 1.0), repeat=len(bins)):
        xb = np.array(combo)
        shift_ub = b_ub - A_ub[:, bins] @ xb
        const = c[bins] @ xb
        if cont.size == 0:
            ok = np.all(shift_ub >= -1e-9)
            if A_eq is not None:
                ok = ok and np.allclose(A_eq[:, bins] @ xb, b_eq, atol=1e-9)
            if ok and const < best:
                best, best_x = const, xb
            continue
        kw = {}
        if A_eq is not None:
            kw = dict(A_eq=A_eq[:, cont], b_eq=b_eq - A_eq[:, bins] @ xb)
        status, obj, x = tableau_simplex(c[cont], A_ub[:, cont], shift_ub,
                                         upper=np.asarray(upper)[cont], **kw)
        if status == "optimal" and obj + const < best:
            best = obj + const
            full = np.zeros(c.size)
            full[bins] = xb
            full[cont] = x
            best_x = full
    return best, best_x
