"""Free-format MPS export/import and plain-text solution files."""

from __future__ import annotations

import math
import os
import warnings
from pathlib import Path

import numpy as np

from ..model import INF, MilpModel, VariableIndex, canonical_triplets

MAX_NAME = 255


class MpsError(ValueError):
    pass


def _num(v: float) -> str:
    return repr(float(v))


def _check_name(name: str) -> None:
    if not name or len(name) > MAX_NAME or any(c.isspace() for c in name):
        raise MpsError(f"invalid MPS name {name!r} (non-empty, no whitespace, <= {MAX_NAME} chars)")


def _objective_row(model: MilpModel) -> str:
    name = "obj"
    taken = set(model.row_names)
    while name in taken:
        name = "_" + name
    return name


def mps_lines(model: MilpModel) -> list[str]:
    for n in model.col_names:
        _check_name(n)
    for n in model.row_names:
        _check_name(n)
    _check_name(model.name)
    objrow = _objective_row(model)
    out = [f"NAME {model.name}", "ROWS", f" N  {objrow}"]
    out += [f" {s}  {n}" for s, n in zip(model.row_sense.tolist(), model.row_names)]

    out.append("COLUMNS")
    csc_order = np.lexsort((model.rows, model.cols))
    rows, cols, vals = model.rows[csc_order], model.cols[csc_order], model.vals[csc_order]
    starts = np.searchsorted(cols, np.arange(model.n_cols + 1))
    in_int = False
    marker = 0
    for j, name in enumerate(model.col_names):
        if model.binary[j] and not in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
        elif not model.binary[j] and in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        entries = []
        if model.obj[j] != 0.0:
            entries.append((objrow, model.obj[j]))
        for k in range(starts[j], starts[j + 1]):
            entries.append((model.row_names[rows[k]], vals[k]))
        if not entries:
            # keep empty columns visible so the column order survives a round trip
            entries.append((objrow, 0.0))
        out += [f"    {name} {r} {_num(v)}" for r, v in entries]
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")

    out.append("RHS")
    if model.obj_offset != 0.0:
        out.append(f"    RHS {objrow} {_num(-model.obj_offset)}")
    out += [f"    RHS {n} {_num(v)}" for n, v in zip(model.row_names, model.rhs.tolist()) if v != 0.0]

    has_rng = ~np.isnan(model.row_range)
    if has_rng.any():
        out.append("RANGES")
        out += [f"    RNG {model.row_names[i]} {_num(model.row_range[i])}" for i in np.flatnonzero(has_rng)]

    out.append("BOUNDS")
    for j, name in enumerate(model.col_names):
        lo, hi = float(model.col_lb[j]), float(model.col_ub[j])
        if model.binary[j] and lo == 0.0 and hi == 1.0:
            out.append(f" BV BND {name}")
        elif lo == hi:
            out.append(f" FX BND {name} {_num(lo)}")
        elif lo == -INF and hi == INF:
            out.append(f" FR BND {name}")
        else:
            if lo == -INF:
                out.append(f" MI BND {name}")
            elif lo != 0.0 or hi < 0.0 or model.binary[j]:
                out.append(f" LO BND {name} {_num(lo)}")
            if hi != INF:
                out.append(f" UP BND {name} {_num(hi)}")
            elif model.binary[j]:
                out.append(f" PL BND {name}")
    out.append("ENDATA")
    return out


def write_mps(model: MilpModel, path: str | os.PathLike) -> Path:
    """Write ``model`` as free-format MPS; output is a deterministic function of the model."""
    path = Path(path)
    text = "\n".join(mps_lines(model)) + "\n"
    try:
        path.write_text(text, encoding="ascii")
    except OSError as exc:
        raise MpsError(f"cannot write {path}: {exc}") from exc
    return path


def read_mps(path: str | os.PathLike) -> MilpModel:
    """Parse a free-format MPS file written by :func:`write_mps` (or any tool using the same subset)."""
    name = "model"
    objrow = None
    row_names: list[str] = []
    row_pos: dict[str, int] = {}
    sense: list[str] = []
    col_names: list[str] = []
    col_pos: dict[str, int] = {}
    binary: list[bool] = []
    obj: dict[int, float] = {}
    trip_r: list[int] = []
    trip_c: list[int] = []
    trip_v: list[float] = []
    rhs: dict[int, float] = {}
    rng: dict[int, float] = {}
    bounds: list[tuple[str, int, float]] = []
    offset = 0.0
    section = None
    integer = False

    def fail(lineno: int, msg: str):
        raise MpsError(f"{path}:{lineno}: {msg}")

    def col_of(cname: str) -> int:
        if cname not in col_pos:
            col_pos[cname] = len(col_names)
            col_names.append(cname)
            binary.append(integer)
        return col_pos[cname]

    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("*"):
                continue
            tok = line.split()
            if not line[0].isspace():
                section = tok[0]
                if section == "NAME":
                    name = tok[1] if len(tok) > 1 else name
                elif section == "ENDATA":
                    break
                elif section not in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "OBJSENSE"):
                    fail(lineno, f"unknown section {section!r}")
                continue
            if section == "ROWS":
                if len(tok) != 2 or tok[0] not in ("N", "L", "G", "E"):
                    fail(lineno, "malformed ROWS entry")
                if tok[0] == "N":
                    if objrow is None:
                        objrow = tok[1]
                    continue
                row_pos[tok[1]] = len(row_names)
                row_names.append(tok[1])
                sense.append(tok[0])
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    if tok[2] == "'INTORG'":
                        integer = True
                    elif tok[2] == "'INTEND'":
                        integer = False
                    else:
                        fail(lineno, "bad MARKER")
                    continue
                if len(tok) not in (3, 5):
                    fail(lineno, "malformed COLUMNS entry")
                j = col_of(tok[0])
                for rname, val in zip(tok[1::2], tok[2::2]):
                    v = float(val)
                    if rname == objrow:
                        obj[j] = obj.get(j, 0.0) + v
                    elif rname in row_pos:
                        trip_r.append(row_pos[rname])
                        trip_c.append(j)
                        trip_v.append(v)
                    else:
                        fail(lineno, f"unknown row {rname!r}")
            elif section in ("RHS", "RANGES"):
                if len(tok) not in (3, 5):
                    fail(lineno, f"malformed {section} entry")
                for rname, val in zip(tok[1::2], tok[2::2]):
                    v = float(val)
                    if rname == objrow and section == "RHS":
                        offset = -v
                    elif rname in row_pos:
                        (rhs if section == "RHS" else rng)[row_pos[rname]] = v
                    else:
                        fail(lineno, f"unknown row {rname!r}")
            elif section == "BOUNDS":
                kind = tok[0]
                if kind in ("FR", "MI", "PL", "BV"):
                    if len(tok) < 3:
                        fail(lineno, "malformed BOUNDS entry")
                    val = 0.0
                elif len(tok) == 4:
                    val = float(tok[3])
                else:
                    fail(lineno, "malformed BOUNDS entry")
                if tok[2] not in col_pos:
                    fail(lineno, f"unknown column {tok[2]!r}")
                bounds.append((kind, col_pos[tok[2]], val))
            else:
                fail(lineno, "data outside a section")

    n, m = len(col_names), len(row_names)
    lb = np.zeros(n)
    ub = np.full(n, INF)
    is_bin = np.asarray(binary, dtype=bool)
    # integer marker without explicit bounds means [0, 1] under the usual convention
    ub[is_bin] = 1.0
    explicit_lo = set()
    for kind, j, v in bounds:
        if kind == "UP":
            ub[j] = v
            if v < 0 and j not in explicit_lo:
                lb[j] = -INF
        elif kind == "LO":
            lb[j] = v
            explicit_lo.add(j)
        elif kind == "FX":
            lb[j] = ub[j] = v
        elif kind == "FR":
            lb[j], ub[j] = -INF, INF
        elif kind == "MI":
            lb[j] = -INF
        elif kind == "PL":
            ub[j] = INF
        elif kind == "BV":
            lb[j], ub[j] = 0.0, 1.0
            is_bin[j] = True
        else:
            raise MpsError(f"{path}: unsupported bound type {kind!r}")
    r, c, v = canonical_triplets(np.asarray(trip_r, dtype=np.int64), np.asarray(trip_c, dtype=np.int64),
                                 np.asarray(trip_v, dtype=float), m, n)
    objv = np.zeros(n)
    for j, val in obj.items():
        objv[j] = val
    return MilpModel(
        name=name,
        col_names=col_names,
        obj=objv,
        col_lb=lb,
        col_ub=ub,
        binary=is_bin,
        row_names=row_names,
        row_sense=np.asarray(sense, dtype="<U1"),
        rhs=np.array([rhs.get(i, 0.0) for i in range(m)]),
        row_range=np.array([rng.get(i, np.nan) for i in range(m)]),
        rows=r,
        cols=c,
        vals=v,
        obj_offset=offset,
    )


def _names(index) -> list[str]:
    if isinstance(index, VariableIndex):
        return index.names()
    if isinstance(index, MilpModel):
        return list(index.col_names)
    return list(index)


def write_solution(path: str | os.PathLike, index, values) -> Path:
    """One ``name value`` line per column, values rendered to round-trip exactly."""
    names = _names(index)
    values = np.asarray(values, dtype=float)
    if len(values) != len(names):
        raise ValueError(f"{len(values)} values for {len(names)} columns")
    path = Path(path)
    path.write_text("".join(f"{n} {_num(v)}\n" for n, v in zip(names, values.tolist())), encoding="ascii")
    return path


def read_solution(path: str | os.PathLike, index, strict: bool = False) -> np.ndarray:
    """Column vector aligned to ``index`` from a ``name value`` file.

    Blank lines and ``#`` comments are ignored.  Columns the file does not
    name default to 0 and a single warning reports how many there were.
    Unknown names are an error in ``strict`` mode and skipped (with a warning)
    otherwise.
    """
    names = _names(index)
    pos = {n: i for i, n in enumerate(names)}
    x = np.zeros(len(names))
    seen = np.zeros(len(names), dtype=bool)
    unknown = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tok = body.split()
            if len(tok) != 2:
                raise MpsError(f"{path}:{lineno}: expected 'name value', got {line.rstrip()!r}")
            try:
                val = float(tok[1])
            except ValueError:
                raise MpsError(f"{path}:{lineno}: bad value {tok[1]!r}") from None
            if not math.isfinite(val):
                raise MpsError(f"{path}:{lineno}: non-finite value for {tok[0]}")
            j = pos.get(tok[0])
            if j is None:
                if strict:
                    raise MpsError(f"{path}:{lineno}: unknown variable {tok[0]!r}")
                unknown += 1
                continue
            x[j] = val
            seen[j] = True
    missing = int((~seen).sum())
    if missing:
        warnings.warn(f"{missing} column(s) missing from {path}; set to 0", stacklevel=2)
    if unknown:
        warnings.warn(f"{unknown} unknown variable name(s) in {path} ignored", stacklevel=2)
    return x
