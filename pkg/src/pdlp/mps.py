"""MPS reader (fixed and free format).

Fields are split on whitespace, which covers free format and every fixed
format file whose names contain no spaces. Integer markers and SOS sections
are rejected rather than silently relaxed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from pdlp.problem import LpProblem, check


class MpsError(ValueError):
    """Malformed MPS input; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class UnsupportedFeatureError(MpsError):
    pass


class _Builder:
    def __init__(self):
        self.name = ""
        self.maximize = False
        self.objective_row: str | None = None
        self.row_index: dict[str, int] = {}
        self.row_types: list[str] = []
        self.row_names: list[str] = []
        self.col_index: dict[str, int] = {}
        self.col_names: list[str] = []
        self.entries: dict[tuple[int, int], float] = {}
        self.cost: dict[int, float] = {}
        self.rhs: dict[int, float] = {}
        self.objective_offset = 0.0
        self.ranges: dict[int, float] = {}
        self.var_lower: dict[int, float] = {}
        self.var_upper: dict[int, float] = {}
        self.free_rows: set[str] = set()  # N rows after the first are ignored

    def column(self, name: str) -> int:
        j = self.col_index.get(name)
        if j is None:
            j = self.col_index[name] = len(self.col_names)
            self.col_names.append(name)
        return j


def _number(token: str, lineno: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise MpsError(f"expected a number, got {token!r}", lineno) from None
    if np.isnan(v):
        raise MpsError("NaN is not a valid value", lineno)
    return v


def _pairs(tokens: list[str], lineno: int):
    """``name value [name value]`` after the leading set/column name."""
    if len(tokens) not in (2, 4):
        raise MpsError(f"expected 1 or 2 (name, value) pairs, got {len(tokens)} fields", lineno)
    for a in range(0, len(tokens), 2):
        yield tokens[a], _number(tokens[a + 1], lineno)


def parse_mps(text: str) -> LpProblem:
    b = _Builder()
    section = None
    saw_end = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if not raw[0].isspace():
            head = line.split()
            keyword = head[0].upper()
            if keyword == "NAME":
                section = "NAME"
                b.name = " ".join(head[1:])
                continue
            if keyword == "OBJSENSE":
                section = "OBJSENSE"
                if len(head) > 1:
                    b.maximize = _sense(head[1], lineno)
                continue
            if keyword in ("SOS", "SETS"):
                raise UnsupportedFeatureError("SOS sections are not supported", lineno)
            if keyword in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = keyword
                continue
            if keyword == "ENDATA":
                saw_end = True
                break
            if keyword in ("QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX"):
                raise UnsupportedFeatureError(f"{keyword} (quadratic terms) is not supported", lineno)
            raise MpsError(f"unknown section {head[0]!r}", lineno)

        tokens = line.split()
        if section is None or section == "NAME":
            raise MpsError("data line outside of a section", lineno)
        if section == "OBJSENSE":
            b.maximize = _sense(tokens[0], lineno)
        elif section == "ROWS":
            _row(b, tokens, lineno)
        elif section == "COLUMNS":
            _columns(b, tokens, lineno)
        elif section == "RHS":
            _rhs(b, tokens, lineno)
        elif section == "RANGES":
            _ranges(b, tokens, lineno)
        elif section == "BOUNDS":
            _bounds(b, tokens, lineno)
    if not saw_end:
        raise MpsError("missing ENDATA")
    if b.objective_row is None:
        raise MpsError("no objective (N) row")
    return _assemble(b)


def read_mps(path) -> LpProblem:
    path = Path(path)
    if path.suffix == ".gz":
        import gzip

        with gzip.open(path, "rt") as f:
            return parse_mps(f.read())
    return parse_mps(path.read_text())


def _sense(token: str, lineno: int) -> bool:
    t = token.upper()
    if t in ("MAX", "MAXIMIZE"):
        return True
    if t in ("MIN", "MINIMIZE"):
        return False
    raise MpsError(f"unknown objective sense {token!r}", lineno)


def _row(b: _Builder, tokens, lineno):
    if len(tokens) != 2:
        raise MpsError("ROWS lines need a type and a name", lineno)
    kind, name = tokens[0].upper(), tokens[1]
    if kind not in ("N", "L", "G", "E"):
        raise MpsError(f"unknown row type {tokens[0]!r}", lineno)
    if name in b.row_index or name == b.objective_row or name in b.free_rows:
        raise MpsError(f"duplicate row {name!r}", lineno)
    if kind == "N":
        if b.objective_row is None:
            b.objective_row = name
        else:
            b.free_rows.add(name)
        return
    b.row_index[name] = len(b.row_names)
    b.row_names.append(name)
    b.row_types.append(kind)


def _columns(b: _Builder, tokens, lineno):
    if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
        raise UnsupportedFeatureError("integrality markers are not supported", lineno)
    if any(t.strip("'\"").upper() in ("INTORG", "INTEND") for t in tokens):
        raise UnsupportedFeatureError("integrality markers are not supported", lineno)
    j = b.column(tokens[0])
    for row, value in _pairs(tokens[1:], lineno):
        if row == b.objective_row:
            b.cost[j] = b.cost.get(j, 0.0) + value
        elif row in b.free_rows:
            continue
        elif row in b.row_index:
            key = (b.row_index[row], j)
            b.entries[key] = b.entries.get(key, 0.0) + value
        else:
            raise MpsError(f"unknown row {row!r}", lineno)


def _set_values(tokens, lineno):
    # the set name is optional in free format: an odd count means it is present
    body = tokens[1:] if len(tokens) % 2 == 1 else tokens
    return _pairs(body, lineno)


def _rhs(b: _Builder, tokens, lineno):
    for row, value in _set_values(tokens, lineno):
        if row == b.objective_row:
            # an objective rhs is the negated constant term
            b.objective_offset = -value
        elif row in b.free_rows:
            continue
        elif row in b.row_index:
            b.rhs[b.row_index[row]] = value
        else:
            raise MpsError(f"unknown row {row!r}", lineno)


def _ranges(b: _Builder, tokens, lineno):
    for row, value in _set_values(tokens, lineno):
        if row not in b.row_index:
            raise MpsError(f"unknown or non-constraint row {row!r} in RANGES", lineno)
        b.ranges[b.row_index[row]] = value


_BOUND_TYPES = {"LO", "UP", "FX", "FR", "MI", "PL", "BV", "LI", "UI", "SC"}


def _bounds(b: _Builder, tokens, lineno):
    kind = tokens[0].upper()
    if kind not in _BOUND_TYPES:
        raise MpsError(f"unknown bound type {tokens[0]!r}", lineno)
    if kind in ("BV", "LI", "UI", "SC"):
        raise UnsupportedFeatureError(f"bound type {kind} (integer) is not supported", lineno)
    needs_value = kind in ("LO", "UP", "FX")
    rest = tokens[1:]
    # optional bound-set name: [set] column [value]
    expected = 2 if needs_value else 1
    if len(rest) == expected + 1:
        rest = rest[1:]
    elif len(rest) != expected:
        raise MpsError(f"malformed {kind} bound", lineno)
    col = rest[0]
    if col not in b.col_index:
        raise MpsError(f"unknown column {col!r}", lineno)
    j = b.col_index[col]
    value = _number(rest[1], lineno) if needs_value else 0.0
    if kind == "LO":
        b.var_lower[j] = value
    elif kind == "UP":
        b.var_upper[j] = value
        # classic convention: a negative upper bound with default lower makes it -inf
        if value < 0 and j not in b.var_lower:
            b.var_lower[j] = -np.inf
    elif kind == "FX":
        b.var_lower[j] = b.var_upper[j] = value
    elif kind == "FR":
        b.var_lower[j], b.var_upper[j] = -np.inf, np.inf
    elif kind == "MI":
        b.var_lower[j] = -np.inf
    else:  # PL
        b.var_upper[j] = np.inf


def _assemble(b: _Builder) -> LpProblem:
    m, n = len(b.row_names), len(b.col_names)
    con_lower = np.full(m, -np.inf)
    con_upper = np.full(m, np.inf)
    for i, kind in enumerate(b.row_types):
        rhs = b.rhs.get(i, 0.0)
        rng = b.ranges.get(i)
        if kind == "L":
            con_upper[i] = rhs
            if rng is not None:
                con_lower[i] = rhs - abs(rng)
        elif kind == "G":
            con_lower[i] = rhs
            if rng is not None:
                con_upper[i] = rhs + abs(rng)
        else:
            con_lower[i] = con_upper[i] = rhs
            if rng is not None:
                if rng > 0:
                    con_upper[i] = rhs + rng
                else:
                    con_lower[i] = rhs + rng
    var_lower = np.zeros(n)
    var_upper = np.full(n, np.inf)
    for j, v in b.var_lower.items():
        var_lower[j] = v
    for j, v in b.var_upper.items():
        var_upper[j] = v

    if b.entries:
        keys = np.array(list(b.entries.keys()), dtype=np.int64)
        vals = np.fromiter(b.entries.values(), dtype=np.float64, count=len(b.entries))
        A = sp.csr_matrix((vals, (keys[:, 0], keys[:, 1])), shape=(m, n))
    else:
        A = sp.csr_matrix((m, n))
    c = np.zeros(n)
    for j, v in b.cost.items():
        c[j] = v
    offset = b.objective_offset
    if b.maximize:
        c, offset = -c, -offset
    problem = LpProblem(A, c, con_lower, con_upper, var_lower, var_upper,
                        objective_offset=offset, name=b.name,
                        var_names=tuple(b.col_names), con_names=tuple(b.row_names),
                        maximize=b.maximize)
    check(problem)
    return problem


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _range_row(lo: float, hi: float) -> tuple[str, float, float]:
    """Row type, rhs and RANGES width that reproduce ``[lo, hi]`` exactly if possible.

    ``E lo`` with a positive width gives ``[lo, lo + w]``; ``L hi`` gives
    ``[hi - w, hi]``. One ulp steps of ``w`` move the rounded sum by whole ulps
    of the larger operand, so one of the two forms usually hits exactly. Some
    intervals have no exact encoding; the upper bound is then one ulp off.
    """
    for kind, base, target, sign in (("E", lo, hi, 1.0), ("L", hi, lo, -1.0)):
        w = abs(hi - lo)
        for _ in range(8):
            err = (base + sign * w) - target
            if err == 0:
                return kind, base, float(w)
            w = np.nextafter(w, -np.inf if err * sign > 0 else np.inf)
    return "E", lo, float(hi - lo)


def write_mps(problem: LpProblem, destination=None) -> str:
    """Free-format MPS text for ``problem``; also written to ``destination`` if given.

    Rows and columns get generated names when the problem carries none.
    Ranged rows are written as E or L rows with a RANGES entry. Rows free on
    both sides become extra N rows, which readers drop.
    """
    m, n = problem.num_cons, problem.num_vars
    rows = list(problem.con_names) if problem.con_names else [f"R{i}" for i in range(m)]
    cols = list(problem.var_names) if problem.var_names else [f"C{j}" for j in range(n)]
    lines = [f"NAME {problem.name or 'unnamed'}"]
    if problem.maximize:
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(" N OBJ")
    rhs, ranges = [], []
    for i in range(m):
        lo, hi = problem.con_lower[i], problem.con_upper[i]
        if lo == hi:
            kind, value = "E", lo
        elif np.isfinite(lo) and np.isfinite(hi):
            kind, value, width = _range_row(lo, hi)
            ranges.append((rows[i], width))
        elif np.isfinite(hi):
            kind, value = "L", hi
        elif np.isfinite(lo):
            kind, value = "G", lo
        else:
            kind, value = "N", 0.0
        lines.append(f" {kind} {rows[i]}")
        if kind != "N" and value != 0.0:
            rhs.append((rows[i], value))
    # the file stores the model's own sense, so undo the internal negation
    sign = -1.0 if problem.maximize else 1.0
    lines.append("COLUMNS")
    A = problem.matrix_csc
    for j in range(n):
        if problem.objective[j] != 0.0:
            lines.append(f"    {cols[j]} OBJ {_fmt(sign * problem.objective[j])}")
        for p in range(A.indptr[j], A.indptr[j + 1]):
            lines.append(f"    {cols[j]} {rows[A.indices[p]]} {_fmt(A.data[p])}")
    lines.append("RHS")
    if problem.objective_offset != 0.0:
        lines.append(f"    RHS OBJ {_fmt(-sign * problem.objective_offset)}")
    lines += [f"    RHS {r} {_fmt(v)}" for r, v in rhs]
    if ranges:
        lines.append("RANGES")
        lines += [f"    RNG {r} {_fmt(v)}" for r, v in ranges]
    lines.append("BOUNDS")
    for j in range(n):
        lo, hi = problem.var_lower[j], problem.var_upper[j]
        if lo == hi:
            lines.append(f" FX BND {cols[j]} {_fmt(lo)}")
            continue
        if lo == -np.inf and hi == np.inf:
            lines.append(f" FR BND {cols[j]}")
            continue
        if lo == -np.inf:
            lines.append(f" MI BND {cols[j]}")
        elif lo != 0.0:
            lines.append(f" LO BND {cols[j]} {_fmt(lo)}")
        if hi != np.inf:
            lines.append(f" UP BND {cols[j]} {_fmt(hi)}")
    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    if destination is not None:
        Path(destination).write_text(text)
    return text
