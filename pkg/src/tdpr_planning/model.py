"""Abstract sparse MILP container shared by the formulation, the solvers and MPS I/O."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

Symbol = tuple  # e.g. ("g", "T1", 1, 2, 5)

INF = float("inf")


def symbol_name(symbol: Symbol) -> str:
    """Render a symbol as a whitespace-free column/row name, e.g. ``g(T1,1,2,5)``."""
    head, *rest = symbol
    if not rest:
        return str(head)
    return f"{head}({','.join(str(v) for v in rest)})"


class VariableIndex:
    """Bidirectional map between symbolic variables and column numbers."""

    def __init__(self) -> None:
        self._symbols: list[Symbol] = []
        self._cols: dict[Symbol, int] = {}
        self._names: dict[str, int] = {}

    def add(self, symbol: Symbol) -> int:
        if symbol in self._cols:
            raise KeyError(f"symbol {symbol!r} already registered")
        name = symbol_name(symbol)
        if name in self._names:
            raise KeyError(f"column name {name!r} already registered")
        col = len(self._symbols)
        self._symbols.append(symbol)
        self._cols[symbol] = col
        self._names[name] = col
        return col

    def __len__(self) -> int:
        return len(self._symbols)

    def __contains__(self, symbol: Hashable) -> bool:
        return symbol in self._cols

    def col(self, symbol: Symbol) -> int:
        return self._cols[symbol]

    def get(self, symbol: Symbol, default=None):
        return self._cols.get(symbol, default)

    def symbol(self, col: int) -> Symbol:
        return self._symbols[col]

    def name(self, col: int) -> str:
        return symbol_name(self._symbols[col])

    def col_by_name(self, name: str) -> int:
        return self._names[name]

    def names(self) -> list[str]:
        return [symbol_name(s) for s in self._symbols]

    def symbols(self, kind: str | None = None) -> list[Symbol]:
        if kind is None:
            return list(self._symbols)
        return [s for s in self._symbols if s[0] == kind]

    def cols(self, kind: str) -> np.ndarray:
        return np.array([c for c, s in enumerate(self._symbols) if s[0] == kind], dtype=np.int64)


def row_bounds(sense: np.ndarray, rhs: np.ndarray, rng: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row activity bounds ``lo <= a.x <= hi`` using MPS RANGES semantics (NaN = no range)."""
    lo = np.full(rhs.shape, -INF)
    hi = np.full(rhs.shape, INF)
    has = ~np.isnan(rng)
    r = np.where(has, rng, 0.0)
    L, G, E = sense == "L", sense == "G", sense == "E"
    hi[L] = rhs[L]
    lo[L & has] = rhs[L & has] - np.abs(r[L & has])
    lo[G] = rhs[G]
    hi[G & has] = rhs[G & has] + np.abs(r[G & has])
    lo[E] = rhs[E]
    hi[E] = rhs[E]
    pos = E & has & (r >= 0)
    neg = E & has & (r < 0)
    hi[pos] = rhs[pos] + r[pos]
    lo[neg] = rhs[neg] + r[neg]
    return lo, hi


@dataclass(eq=False)
class MilpModel:
    """Minimisation MILP in sparse triplet form.

    Triplets are canonical: sorted by (row, col), duplicates merged and exact
    zeros removed.  ``row_range`` holds MPS-style ranges, NaN where absent.
    """

    name: str
    col_names: list[str]
    obj: np.ndarray
    col_lb: np.ndarray
    col_ub: np.ndarray
    binary: np.ndarray
    row_names: list[str]
    row_sense: np.ndarray
    rhs: np.ndarray
    row_range: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    obj_offset: float = 0.0
    col_kind: np.ndarray | None = None
    index: VariableIndex | None = None
    row_index: dict[Symbol, int] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def matrix(self):
        import scipy.sparse as sp

        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return row_bounds(self.row_sense, self.rhs, self.row_range)

    def triplet_set(self) -> set[tuple[str, str, float]]:
        return {
            (self.row_names[r], self.col_names[c], float(v))
            for r, c, v in zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist())
        }

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.obj @ x) + self.obj_offset

    def copy(self) -> "MilpModel":
        new = copy.copy(self)
        new.col_lb = self.col_lb.copy()
        new.col_ub = self.col_ub.copy()
        new.obj = self.obj.copy()
        new.meta = dict(self.meta)
        return new

    def with_bounds(self, cols: Sequence[int], lb, ub) -> "MilpModel":
        new = self.copy()
        new.col_lb[np.asarray(cols, dtype=np.int64)] = lb
        new.col_ub[np.asarray(cols, dtype=np.int64)] = ub
        return new

    def with_objective(self, obj: np.ndarray, offset: float = 0.0) -> "MilpModel":
        new = self.copy()
        new.obj = np.asarray(obj, dtype=float).copy()
        new.obj_offset = offset
        return new

    def relaxed(self) -> "MilpModel":
        new = self.copy()
        new.binary = np.zeros(self.n_cols, dtype=bool)
        return new


class ModelBuilder:
    """Incremental construction of a :class:`MilpModel` keyed by symbols."""

    def __init__(self, name: str = "model") -> None:
        self.name = name
        self.index = VariableIndex()
        self._obj: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._bin: list[bool] = []
        self._kind: list[str] = []
        self._row_syms: list[Symbol] = []
        self._row_pos: dict[Symbol, int] = {}
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._r: list[int] = []
        self._c: list[int] = []
        self._v: list[float] = []

    def add_var(self, symbol: Symbol, lb: float = 0.0, ub: float = INF, cost: float = 0.0,
                binary: bool = False, kind: str = "aux") -> int:
        if not (np.isfinite(cost)):
            raise ValueError(f"non-finite cost for {symbol!r}")
        col = self.index.add(symbol)
        self._obj.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._bin.append(bool(binary))
        self._kind.append(kind)
        return col

    def col(self, symbol: Symbol) -> int:
        return self.index.col(symbol)

    def add_row(self, symbol: Symbol, terms: Iterable[tuple[int, float]], sense: str, rhs: float) -> int:
        if sense not in ("L", "G", "E"):
            raise ValueError(f"bad row sense {sense!r}")
        if symbol in self._row_pos:
            raise KeyError(f"row {symbol!r} already registered")
        row = len(self._row_syms)
        self._row_pos[symbol] = row
        self._row_syms.append(symbol)
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        for c, v in terms:
            if v != 0.0:
                self._r.append(row)
                self._c.append(c)
                self._v.append(float(v))
        return row

    def build(self, meta: dict | None = None) -> MilpModel:
        n, m = len(self.index), len(self._row_syms)
        rows = np.asarray(self._r, dtype=np.int64)
        cols = np.asarray(self._c, dtype=np.int64)
        vals = np.asarray(self._v, dtype=float)
        rows, cols, vals = canonical_triplets(rows, cols, vals, m, n)
        return MilpModel(
            name=self.name,
            col_names=self.index.names(),
            obj=np.asarray(self._obj, dtype=float),
            col_lb=np.asarray(self._lb, dtype=float),
            col_ub=np.asarray(self._ub, dtype=float),
            binary=np.asarray(self._bin, dtype=bool),
            row_names=[symbol_name(s) for s in self._row_syms],
            row_sense=np.asarray(self._sense, dtype="<U1"),
            rhs=np.asarray(self._rhs, dtype=float),
            row_range=np.full(m, np.nan),
            rows=rows,
            cols=cols,
            vals=vals,
            col_kind=np.asarray(self._kind, dtype=object),
            index=self.index,
            row_index=dict(self._row_pos),
            meta=dict(meta or {}),
        )


def canonical_triplets(rows, cols, vals, m: int, n: int):
    """Sort by (row, col), sum duplicates, drop zeros."""
    if len(rows) == 0:
        return rows.astype(np.int64), cols.astype(np.int64), vals.astype(float)
    if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
        raise ValueError("triplet references an unregistered row or column")
    key = rows * n + cols
    order = np.argsort(key, kind="stable")
    key, vals = key[order], vals[order]
    uniq, start = np.unique(key, return_index=True)
    summed = np.add.reduceat(vals, start)
    keep = summed != 0.0
    uniq, summed = uniq[keep], summed[keep]
    return (uniq // n).astype(np.int64), (uniq % n).astype(np.int64), summed.astype(float)


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap-limit"


@dataclass(eq=False)
class Solution:
    status: str
    objective: float
    values: np.ndarray
    mip_gap: float = 0.0
    bound: float = float("nan")
    breakdown: dict[str, float] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)
    duals: np.ndarray | None = None
    iterations: int = 0
    nodes: int = 0
    index: VariableIndex | None = None

    def value(self, symbol: Symbol) -> float:
        if self.index is None:
            raise ValueError("solution carries no variable index")
        return float(self.values[self.index.col(symbol)])

    def get(self, symbol: Symbol, default: float = 0.0) -> float:
        if self.index is None or symbol not in self.index:
            return default
        return float(self.values[self.index.col(symbol)])

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, GAP_LIMIT) and self.values is not None and len(self.values) > 0
