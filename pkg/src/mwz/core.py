"""Core state model: schema, data tables, the validity predicate and the
checked operation algebra.

A ``State`` pairs a ``Schema`` (tables of typed, optionally modeled columns)
with in-memory ``DataTable``s.  All state values are immutable; operations
produce new states, which is what makes snapshots, undo and error atomicity
free.  ``ValidState`` wraps a state that passed ``validate_state``; build one
only through ``validate_state`` or ``unsafe_valid_state``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence


# ---------------------------------------------------------------------------
# Values


class MissingType:
    """Singleton marker for an absent cell. The only representation of one."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Missing"

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


Missing = MissingType()

#: A cell value: int, finite float, str, or Missing.
Value = Any


def is_missing(v: Value) -> bool:
    return v is Missing


def check_value(v: Value) -> None:
    """Reject values outside the Value domain (NaN/inf floats, bools, ...)."""
    if v is Missing or isinstance(v, str):
        return
    if isinstance(v, bool):
        raise OpError(ErrorKind.TYPE_MISMATCH, "bool is not a cell value")
    if isinstance(v, int):
        return
    if isinstance(v, float):
        if not math.isfinite(v):
            raise OpError(ErrorKind.TYPE_MISMATCH, f"non-finite real {v!r}")
        return
    raise OpError(ErrorKind.TYPE_MISMATCH, f"bad cell value {v!r}")


def value_key(v: Value):
    """Total order over values: numerics interleaved, then strings, Missing last."""
    if v is Missing:
        return (2, 0)
    if isinstance(v, str):
        return (1, v)
    return (0, v)


def value_eq_key(v: Value):
    """Exact-identity key for pk uniqueness: floats compare by bits."""
    if isinstance(v, float):
        return ("f", v.hex())
    if isinstance(v, bool):  # normalized away by check_value, but be safe
        return ("i", int(v))
    if isinstance(v, int):
        return ("i", v)
    if isinstance(v, str):
        return ("s", v)
    return ("m",)


# ---------------------------------------------------------------------------
# Errors


class ErrorKind(enum.Enum):
    NAME_CONFLICT = "NameConflict"
    TYPE_MISMATCH = "TypeMismatch"
    KEY_VIOLATION = "KeyViolation"
    CYCLE_DETECTED = "CycleDetected"
    FD_VIOLATION = "FDViolation"
    UNSUPPORTED_MODEL = "UnsupportedModel"
    MISSING_TARGET = "MissingTarget"
    PARSE_ERROR = "ParseError"


class OpError(Exception):
    """A failed operation. Carries a machine-checkable kind and location.

    Because states are immutable, a raised OpError never leaves a partial
    mutation behind: the pre-op ValidState is untouched and reusable.
    """

    def __init__(self, kind: ErrorKind, message: str,
                 location: tuple[str, str | None] | None = None):
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.location = location

    def __repr__(self):
        loc = f" at {self.location}" if self.location else ""
        return f"OpError({self.kind.value}: {self.message}{loc})"


# ---------------------------------------------------------------------------
# Column types


@dataclass(frozen=True)
class IntT:
    def __repr__(self):
        return "int"


@dataclass(frozen=True)
class RealT:
    def __repr__(self):
        return "real"


@dataclass(frozen=True)
class StrT:
    def __repr__(self):
        return "string"


@dataclass(frozen=True)
class Upto:
    """Domain: integers [0, n-1]."""

    n: int

    def __repr__(self):
        return f"upto({self.n})"


@dataclass(frozen=True)
class LinkT:
    """Domain: 0-based row indices of the named table."""

    table: str

    def __repr__(self):
        return f"link({self.table})"


INT_T = IntT()
REAL_T = RealT()
STR_T = StrT()

ColumnType = Any  # IntT | RealT | StrT | Upto | LinkT


# ---------------------------------------------------------------------------
# Model expressions


@dataclass(frozen=True)
class Input:
    def __repr__(self):
        return "input"


INPUT = Input()


@dataclass(frozen=True)
class CDiscrete:
    """Categorical with Dirichlet prior: p ~ Dir(alpha), cell ~ Discrete(p)."""

    n: int
    alpha: tuple[float, ...]

    def __repr__(self):
        return f"CDiscrete(N={self.n})"


def cdiscrete(n: int, alpha: Sequence[float] | None = None) -> CDiscrete:
    if alpha is None:
        alpha = (1.0,) * n
    return CDiscrete(n, tuple(float(a) for a in alpha))


@dataclass(frozen=True)
class CGaussian:
    """Gaussian with conjugate priors: mu ~ N(mean_mean, prec=mean_prec),
    tau ~ Gamma(prec_shape, scale=prec_scale), cell ~ N(mu, prec=tau)."""

    mean_mean: float = 0.0
    mean_prec: float = 1.0
    prec_shape: float = 1.0
    prec_scale: float = 1.0


@dataclass(frozen=True)
class Indexed:
    """Per-domain-value parameter copies of a base model, selected by the
    value of ``index_column`` reached by following ``index_path`` links."""

    base: Any
    index_path: tuple[str, ...]
    index_column: str


@dataclass(frozen=True)
class PolyReg:
    """Noisy polynomial regression on a same-table domain column.

    value = sum_i coeff_i * dom**i + noise, noise ~ N(0, prec=tau_noise);
    coeff_i ~ N(0, prec=coeff_prior_prec), tau_noise ~ Gamma(shape, scale).
    """

    degree: int
    dom_column: str
    coeff_prior_prec: float = 1e-6
    noise_prec_shape: float = 1.0
    noise_prec_scale: float = 1.0


@dataclass(frozen=True)
class LinkDeref:
    """Deterministic copy of a column in the table reached by a link column."""

    link_column: str
    target_column: str


ModelExpr = Any


def indexed_chain(model: ModelExpr) -> tuple[ModelExpr, list[tuple[tuple[str, ...], str]]]:
    """Unwrap Indexed layers; returns (base, [(path, index_column), ...])
    innermost index first."""
    dims: list[tuple[tuple[str, ...], str]] = []
    while isinstance(model, Indexed):
        dims.append((model.index_path, model.index_column))
        model = model.base
    dims.reverse()
    return model, dims


def same_table_refs(model: ModelExpr) -> set[str]:
    """Same-table column names a model expression depends on."""
    refs: set[str] = set()
    while isinstance(model, Indexed):
        if model.index_path:
            refs.add(model.index_path[0])
        else:
            refs.add(model.index_column)
        model = model.base
    if isinstance(model, PolyReg):
        refs.add(model.dom_column)
    elif isinstance(model, LinkDeref):
        refs.add(model.link_column)
    return refs


# ---------------------------------------------------------------------------
# Schema / data


@dataclass(frozen=True)
class Column:
    name: str
    ctype: ColumnType
    model: ModelExpr = INPUT
    is_pk: bool = False
    is_latent: bool = False


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]

    def col_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def col_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise OpError(ErrorKind.MISSING_TARGET, f"no column {name!r} in table {self.name!r}",
                      (self.name, name))

    def column(self, name: str) -> Column:
        return self.columns[self.col_index(name)]

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)


@dataclass(frozen=True)
class Schema:
    tables: tuple[Table, ...]

    def table_index(self, name: str) -> int:
        for i, t in enumerate(self.tables):
            if t.name == name:
                return i
        raise OpError(ErrorKind.MISSING_TARGET, f"no table {name!r}", (name, None))

    def table(self, name: str) -> Table:
        return self.tables[self.table_index(name)]

    def has_table(self, name: str) -> bool:
        return any(t.name == name for t in self.tables)


@dataclass(frozen=True)
class DataTable:
    tablename: str
    colnames: tuple[str, ...]
    grid: tuple[tuple[Value, ...], ...]  # row-major

    @property
    def nrows(self) -> int:
        return len(self.grid)

    def col(self, name: str) -> list[Value]:
        i = self.colnames.index(name)
        return [row[i] for row in self.grid]


@dataclass(frozen=True)
class State:
    schema: Schema
    data: tuple[DataTable, ...]

    def data_for(self, table: str) -> DataTable:
        for dt in self.data:
            if dt.tablename == table:
                return dt
        raise OpError(ErrorKind.MISSING_TARGET, f"no data for table {table!r}", (table, None))


def empty_state() -> State:
    return State(Schema(()), ())


# ---------------------------------------------------------------------------
# Validity


@dataclass(frozen=True)
class ValidState:
    """Opaque wrapper certifying the wrapped state passed validate_state.

    Do not construct directly; use validate_state or unsafe_valid_state.
    """

    state: State


def unsafe_valid_state(state: State) -> ValidState:
    """Wrap without checking. The caller asserts validity."""
    return ValidState(state)


def _cell_conforms(v: Value, ctype: ColumnType, rowcounts: dict[str, int]) -> bool:
    if v is Missing:
        return True
    if isinstance(ctype, IntT):
        return isinstance(v, int) and not isinstance(v, bool)
    if isinstance(ctype, RealT):
        return (isinstance(v, float) and math.isfinite(v)) or (
            isinstance(v, int) and not isinstance(v, bool))
    if isinstance(ctype, StrT):
        return isinstance(v, str)
    if isinstance(ctype, Upto):
        return isinstance(v, int) and not isinstance(v, bool) and 0 <= v < ctype.n
    if isinstance(ctype, LinkT):
        n = rowcounts.get(ctype.table, 0)
        return isinstance(v, int) and not isinstance(v, bool) and 0 <= v < n
    return False


def _index_dim(ctype: ColumnType, rowcounts: dict[str, int]) -> int | None:
    if isinstance(ctype, Upto):
        return ctype.n
    if isinstance(ctype, LinkT):
        return rowcounts[ctype.table]
    return None


def _resolve_index_target(schema: Schema, table: Table,
                          path: tuple[str, ...], index_column: str) -> tuple[Table, Column]:
    """Follow link columns from `table` along `path`, returning the table and
    column the index finally points at.  Raises on any broken step."""
    cur = table
    for link_name in path:
        link_col = cur.column(link_name)
        if not isinstance(link_col.ctype, LinkT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"index path column {link_name!r} is not a link",
                          (cur.name, link_name))
        cur = schema.table(link_col.ctype.table)
    return cur, cur.column(index_column)


def _check_model(schema: Schema, table: Table, col_idx: int,
                 rowcounts: dict[str, int]) -> None:
    """Model/type compatibility plus forward-only reference checks for one column."""
    col = table.columns[col_idx]
    model = col.model
    loc = (table.name, col.name)
    earlier = {c.name for c in table.columns[:col_idx]}
    for ref in same_table_refs(model):
        if not table.has_column(ref):
            raise OpError(ErrorKind.MISSING_TARGET, f"model references unknown column {ref!r}", loc)
        if ref not in earlier:
            raise OpError(ErrorKind.CYCLE_DETECTED,
                          f"column {col.name!r} references {ref!r} declared after it", loc)

    base, dims = indexed_chain(model)
    for path, icol in dims:
        target_table, target_col = _resolve_index_target(schema, table, path, icol)
        if _index_dim(target_col.ctype, rowcounts) is None:
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"index column {icol!r} is not discrete", loc)
        if isinstance(base, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL, "Indexed base may not be input", loc)

    if isinstance(base, Input):
        return
    if isinstance(base, CDiscrete):
        dim = _index_dim(col.ctype, rowcounts)
        if dim is None:
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"CDiscrete on non-discrete column type {col.ctype!r}", loc)
        if base.n != dim:
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"CDiscrete dimension {base.n} != column dimension {dim}", loc)
        if len(base.alpha) != base.n or any(a <= 0 for a in base.alpha):
            raise OpError(ErrorKind.TYPE_MISMATCH, "bad Dirichlet concentration vector", loc)
    elif isinstance(base, CGaussian):
        if not isinstance(col.ctype, RealT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"CGaussian on column type {col.ctype!r}", loc)
        if base.mean_prec <= 0 or base.prec_shape <= 0 or base.prec_scale <= 0:
            raise OpError(ErrorKind.TYPE_MISMATCH, "CGaussian hyperparameters must be > 0", loc)
    elif isinstance(base, PolyReg):
        if base.degree not in (1, 2):
            raise OpError(ErrorKind.TYPE_MISMATCH, f"PolyReg degree {base.degree} not in {{1,2}}", loc)
        if not isinstance(col.ctype, RealT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"PolyReg range column type {col.ctype!r} is not real", loc)
        dom = table.column(base.dom_column)
        if not isinstance(dom.ctype, (RealT, IntT)):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"PolyReg domain column type {dom.ctype!r} is not numeric", loc)
        if base.coeff_prior_prec <= 0 or base.noise_prec_shape <= 0 or base.noise_prec_scale <= 0:
            raise OpError(ErrorKind.TYPE_MISMATCH, "PolyReg hyperparameters must be > 0", loc)
    elif isinstance(base, LinkDeref):
        link_col = table.column(base.link_column)
        if not isinstance(link_col.ctype, LinkT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"LinkDeref column {base.link_column!r} is not a link", loc)
        target_table = schema.table(link_col.ctype.table)
        target = target_table.column(base.target_column)
        if target.ctype != col.ctype:
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"LinkDeref type {col.ctype!r} != target type {target.ctype!r}", loc)
    else:
        raise OpError(ErrorKind.UNSUPPORTED_MODEL, f"unknown model {base!r}", loc)


def validate_state(schema: Schema, data: Sequence[DataTable]) -> ValidState:
    """The full validity predicate. Returns a ValidState or raises OpError
    with the first violated category: naming/alignment, cell typing,
    model compatibility, key uniqueness, acyclicity."""
    data = tuple(data)

    # (a) naming and schema-data alignment
    seen_tables: set[str] = set()
    for t in schema.tables:
        if t.name in seen_tables:
            raise OpError(ErrorKind.NAME_CONFLICT, f"duplicate table {t.name!r}", (t.name, None))
        seen_tables.add(t.name)
        seen_cols: set[str] = set()
        for c in t.columns:
            if c.name in seen_cols:
                raise OpError(ErrorKind.NAME_CONFLICT,
                              f"duplicate column {c.name!r} in table {t.name!r}", (t.name, c.name))
            seen_cols.add(c.name)
    if len(data) != len(schema.tables):
        raise OpError(ErrorKind.NAME_CONFLICT,
                      f"{len(schema.tables)} schema tables vs {len(data)} data tables")
    for t, dt in zip(schema.tables, data):
        if dt.tablename != t.name:
            raise OpError(ErrorKind.NAME_CONFLICT,
                          f"data table {dt.tablename!r} does not match schema table {t.name!r}",
                          (t.name, None))
        if list(dt.colnames) != t.col_names():
            raise OpError(ErrorKind.NAME_CONFLICT,
                          f"data columns {list(dt.colnames)} != schema columns {t.col_names()}",
                          (t.name, None))
        width = len(dt.colnames)
        for row in dt.grid:
            if len(row) != width:
                raise OpError(ErrorKind.PARSE_ERROR,
                              f"ragged row in table {t.name!r}", (t.name, None))

    rowcounts = {dt.tablename: dt.nrows for dt in data}
    positions = {t.name: i for i, t in enumerate(schema.tables)}

    # type well-formedness and table-level acyclicity
    for ti, t in enumerate(schema.tables):
        for c in t.columns:
            if isinstance(c.ctype, Upto) and c.ctype.n < 1:
                raise OpError(ErrorKind.TYPE_MISMATCH, f"upto({c.ctype.n}) needs n >= 1",
                              (t.name, c.name))
            if isinstance(c.ctype, LinkT):
                if c.ctype.table not in positions:
                    raise OpError(ErrorKind.MISSING_TARGET,
                                  f"link to unknown table {c.ctype.table!r}", (t.name, c.name))
                if positions[c.ctype.table] >= ti:
                    raise OpError(ErrorKind.CYCLE_DETECTED,
                                  f"link from {t.name!r} to non-earlier table {c.ctype.table!r}",
                                  (t.name, c.name))

    # (b) cell conformance
    for t, dt in zip(schema.tables, data):
        for ci, c in enumerate(t.columns):
            for ri, row in enumerate(dt.grid):
                v = row[ci]
                if not _cell_conforms(v, c.ctype, rowcounts):
                    raise OpError(ErrorKind.TYPE_MISMATCH,
                                  f"row {ri}: value {v!r} does not conform to {c.ctype!r}",
                                  (t.name, c.name))

    # (c) model/type compatibility, forward-only references
    for t in schema.tables:
        for ci, c in enumerate(t.columns):
            if c.is_pk and not isinstance(c.model, Input):
                raise OpError(ErrorKind.KEY_VIOLATION,
                              f"primary key column {c.name!r} must be unmodeled", (t.name, c.name))
            _check_model(schema, t, ci, rowcounts)

    # latent columns hold no data
    for t, dt in zip(schema.tables, data):
        for ci, c in enumerate(t.columns):
            if c.is_latent:
                if any(row[ci] is not Missing for row in dt.grid):
                    raise OpError(ErrorKind.TYPE_MISMATCH,
                                  f"latent column {c.name!r} has data", (t.name, c.name))

    # (d) primary key uniqueness: a table's pk columns form one composite key
    for t, dt in zip(schema.tables, data):
        pk_idx = [ci for ci, c in enumerate(t.columns) if c.is_pk]
        if not pk_idx:
            continue
        seen: set = set()
        for row in dt.grid:
            vals = [row[ci] for ci in pk_idx]
            if any(v is Missing for v in vals):
                continue
            k = tuple(value_eq_key(v) for v in vals)
            if k in seen:
                raise OpError(ErrorKind.KEY_VIOLATION,
                              f"duplicate primary key value {tuple(vals)!r}",
                              (t.name, t.columns[pk_idx[0]].name))
            seen.add(k)

    return ValidState(State(schema, data))


def revalidate(state: State) -> ValidState:
    return validate_state(state.schema, state.data)


# ---------------------------------------------------------------------------
# Operation algebra


@dataclass(frozen=True)
class Op:
    """A checked state transformer: ValidState -> (result, ValidState).

    Failure raises OpError; immutability guarantees the input state is
    observably unchanged.  bind/pure satisfy the monad laws.
    """

    fn: Callable[[ValidState], tuple[Any, ValidState]]

    def run(self, vs: ValidState) -> tuple[Any, ValidState]:
        return self.fn(vs)

    def bind(self, k: Callable[[Any], "Op"]) -> "Op":
        def step(vs: ValidState):
            r, vs1 = self.fn(vs)
            return k(r).run(vs1)
        return Op(step)

    def then(self, nxt: "Op") -> "Op":
        """Sequence, discarding this op's result (OpMonad Combine)."""
        return self.bind(lambda _r: nxt)

    def map(self, f: Callable[[Any], Any]) -> "Op":
        return self.bind(lambda r: pure(f(r)))


def pure(x: Any) -> Op:
    """Yield x without touching state (OpMonad Return)."""
    return Op(lambda vs: (x, vs))


def unit() -> Op:
    return pure(None)


def for_each(items: Iterable[Any], f: Callable[[Any], Op]) -> Op:
    """Run f(item) left to right, discarding results (OpMonad For)."""
    items = list(items)

    def step(vs: ValidState):
        cur = vs
        for it in items:
            _, cur = f(it).run(cur)
        return None, cur
    return Op(step)


def sequence(ops: Sequence[Op]) -> Op:
    """Run ops left to right, collecting results."""
    def step(vs: ValidState):
        out = []
        cur = vs
        for op in ops:
            r, cur = op.run(cur)
            out.append(r)
        return out, cur
    return Op(step)


def run_op(op: Op, vs: ValidState) -> tuple[Any, ValidState]:
    """Run op on vs. Raises OpError on failure, leaving vs reusable."""
    return op.run(vs)


def get_state() -> Op:
    """Expose the current (schema, data) to host code. The returned values are
    immutable, so the session state cannot be disturbed through them."""
    return Op(lambda vs: ((vs.state.schema, vs.state.data), vs))


def state_op(build: Callable[[State], tuple[Any, State]]) -> Op:
    """Lift a raw state transformer into an Op; the output state is
    re-validated, so a buggy transformer can never leak an invalid state."""
    def step(vs: ValidState):
        result, new_state = build(vs.state)
        return result, revalidate(new_state)
    return Op(step)


def read_op(f: Callable[[State], Any]) -> Op:
    """A read-only op: computes a result, state unchanged."""
    return Op(lambda vs: (f(vs.state), vs))


# ---------------------------------------------------------------------------
# Structural helpers shared by the operation modules


def replace_table(state: State, table_name: str, new_table: Table,
                  new_dt: DataTable) -> State:
    ti = state.schema.table_index(table_name)
    tables = list(state.schema.tables)
    data = list(state.data)
    tables[ti] = new_table
    data[ti] = new_dt
    return State(Schema(tuple(tables)), tuple(data))


def replace_column(state: State, table_name: str, col_name: str,
                   new_col: Column,
                   new_values: Sequence[Value] | None = None) -> State:
    t = state.schema.table(table_name)
    dt = state.data_for(table_name)
    ci = t.col_index(col_name)
    cols = list(t.columns)
    cols[ci] = new_col
    if new_values is not None:
        grid = tuple(row[:ci] + (v,) + row[ci + 1:]
                     for row, v in zip(dt.grid, new_values))
    else:
        grid = dt.grid
    names = tuple(c.name for c in cols)
    return replace_table(state, table_name, Table(t.name, tuple(cols)),
                         DataTable(t.name, names, grid))


def append_column(state: State, table_name: str, col: Column,
                  values: Sequence[Value]) -> State:
    t = state.schema.table(table_name)
    dt = state.data_for(table_name)
    if t.has_column(col.name):
        raise OpError(ErrorKind.NAME_CONFLICT,
                      f"column {col.name!r} already exists in {table_name!r}",
                      (table_name, col.name))
    if len(values) != dt.nrows:
        raise OpError(ErrorKind.PARSE_ERROR, "column length mismatch", (table_name, col.name))
    cols = t.columns + (col,)
    grid = tuple(row + (v,) for row, v in zip(dt.grid, values))
    return replace_table(state, table_name, Table(t.name, cols),
                         DataTable(t.name, tuple(c.name for c in cols), grid))


def insert_table(state: State, table: Table, dt: DataTable,
                 before: str | None = None) -> State:
    if state.schema.has_table(table.name):
        raise OpError(ErrorKind.NAME_CONFLICT, f"table {table.name!r} already exists",
                      (table.name, None))
    tables = list(state.schema.tables)
    data = list(state.data)
    pos = state.schema.table_index(before) if before is not None else len(tables)
    tables.insert(pos, table)
    data.insert(pos, dt)
    return State(Schema(tuple(tables)), tuple(data))


def _stable_toposort(names: list[str], edges: set[tuple[str, str]]) -> list[str] | None:
    """Kahn's algorithm choosing the smallest original index among ready nodes.
    edges are (before, after) pairs. Returns None on a cycle."""
    pos = {n: i for i, n in enumerate(names)}
    indeg = {n: 0 for n in names}
    succ: dict[str, list[str]] = {n: [] for n in names}
    for a, b in edges:
        indeg[b] += 1
        succ[a].append(b)
    ready = sorted((n for n in names if indeg[n] == 0), key=pos.__getitem__)
    out: list[str] = []
    while ready:
        n = ready.pop(0)
        out.append(n)
        changed = False
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
                changed = True
        if changed:
            ready.sort(key=pos.__getitem__)
    return out if len(out) == len(names) else None


def _column_dep_edges(table: Table) -> set[tuple[str, str]]:
    edges: set[tuple[str, str]] = set()
    for c in table.columns:
        for ref in same_table_refs(c.model):
            if table.has_column(ref):
                edges.add((ref, c.name))
    return edges


def reorder_columns_for(state: State, table_name: str, dependent: str,
                        referenced: set[str]) -> State:
    """Stably reorder columns so every referenced column precedes dependent,
    keeping existing model dependencies satisfied. Raises CycleDetected when
    no ordering exists."""
    t = state.schema.table(table_name)
    dt = state.data_for(table_name)
    t.col_index(dependent)
    for r in referenced:
        t.col_index(r)
    edges = _column_dep_edges(t)
    edges |= {(r, dependent) for r in referenced if r != dependent}
    if any(a == b for a, b in edges):
        raise OpError(ErrorKind.CYCLE_DETECTED,
                      f"column {dependent!r} cannot depend on itself", (table_name, dependent))
    order = _stable_toposort(t.col_names(), edges)
    if order is None:
        raise OpError(ErrorKind.CYCLE_DETECTED,
                      f"cyclic column dependency involving {dependent!r}", (table_name, dependent))
    if order == t.col_names():
        return state
    idx = [t.col_index(n) for n in order]
    cols = tuple(t.columns[i] for i in idx)
    grid = tuple(tuple(row[i] for i in idx) for row in dt.grid)
    return replace_table(state, table_name, Table(t.name, cols),
                         DataTable(t.name, tuple(order), grid))


def ensure_dependency_order(table: str, dependent: str, referenced: set[str]) -> Op:
    """Make every column in `referenced` precede `dependent` in `table`,
    reordering stably if needed."""
    return state_op(lambda s: (None, reorder_columns_for(s, table, dependent, set(referenced))))


def reorder_tables_for(state: State, primary: str, foreign: str) -> State:
    """Ensure `primary` is ordered before `foreign`, reordering tables stably
    while keeping all link references forward-only."""
    schema = state.schema
    pi, fi = schema.table_index(primary), schema.table_index(foreign)
    if primary == foreign:
        raise OpError(ErrorKind.CYCLE_DETECTED, f"table {primary!r} cannot link to itself",
                      (primary, None))
    if pi < fi:
        return state
    names = [t.name for t in schema.tables]
    edges: set[tuple[str, str]] = {(primary, foreign)}
    for t in schema.tables:
        for c in t.columns:
            if isinstance(c.ctype, LinkT):
                edges.add((c.ctype.table, t.name))
    order = _stable_toposort(names, edges)
    if order is None:
        raise OpError(ErrorKind.CYCLE_DETECTED,
                      f"cyclic table reference between {primary!r} and {foreign!r}",
                      (primary, None))
    by_name = {t.name: (t, dt) for t, dt in zip(schema.tables, state.data)}
    tables = tuple(by_name[n][0] for n in order)
    data = tuple(by_name[n][1] for n in order)
    return State(Schema(tables), data)
