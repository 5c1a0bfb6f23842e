"""Column typing operations: casts, nominal domains via unique-value tables,
link binding, type inference and latent column creation."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .core import (
    Column, DataTable, ErrorKind, INPUT, Input, IntT, LinkT, Missing, Op,
    OpError, RealT, State, StrT, Table, Upto, Value, append_column,
    insert_table, pure, replace_column, replace_table, reorder_tables_for,
    state_op, value_eq_key,
)


# -- type targets -----------------------------------------------------------


@dataclass(frozen=True)
class ToInt:
    pass


@dataclass(frozen=True)
class ToReal:
    pass


@dataclass(frozen=True)
class ToUpto:
    n: int


TypeTarget = object


def _parse_int(v: Value) -> int:
    if isinstance(v, bool):
        raise ValueError("bool")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return int(v.strip(), 10)
    raise ValueError(f"cannot read {v!r} as int")


def _parse_real(v: Value) -> float:
    if isinstance(v, bool):
        raise ValueError("bool")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        x = float(v.strip())
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError("non-finite")
        return x
    raise ValueError(f"cannot read {v!r} as real")


def _is_link_target_pk(state: State, table: str, col: str) -> bool:
    """True when (table, col) is a pk of a table some link column points at."""
    t = state.schema.table(table)
    if not t.column(col).is_pk:
        return False
    for other in state.schema.tables:
        for c in other.columns:
            if isinstance(c.ctype, LinkT) and c.ctype.table == table:
                return True
    return False


def type_cast(table: str, col: str, target: TypeTarget) -> Op:
    """Retype an unmodeled column, parsing string numerals as needed."""
    def build(state: State):
        t = state.schema.table(table)
        c = t.column(col)
        if not isinstance(c.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"cannot retype modeled column {col!r}", (table, col))
        if _is_link_target_pk(state, table, col):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"cannot retype linked primary key {col!r}", (table, col))
        values = state.data_for(table).col(col)
        out: list[Value] = []
        if isinstance(target, ToReal):
            new_type = RealT()
            conv = _parse_real
        elif isinstance(target, (ToInt, ToUpto)):
            new_type = Upto(target.n) if isinstance(target, ToUpto) else IntT()
            conv = _parse_int
        else:
            raise OpError(ErrorKind.PARSE_ERROR, f"unknown type target {target!r}", (table, col))
        for v in values:
            if v is Missing:
                out.append(Missing)
                continue
            try:
                x = conv(v)
            except (ValueError, TypeError):
                raise OpError(ErrorKind.TYPE_MISMATCH,
                              f"value {v!r} does not fit {new_type!r}", (table, col))
            if isinstance(target, ToUpto) and not (0 <= x < target.n):
                raise OpError(ErrorKind.TYPE_MISMATCH,
                              f"value {x} outside [0, {target.n - 1}]", (table, col))
            out.append(x)
        return None, replace_column(state, table, col, replace(c, ctype=new_type), out)
    return state_op(build)


def _uniques_name(state: State, cols: Sequence[str]) -> str:
    base = "T_" + "_".join(cols)
    name = base
    counter = 2
    while state.schema.has_table(name):
        name = f"{base}_{counter}"
        counter += 1
    return name


def create_table_uniques(table: str, cols: Sequence[str]) -> Op:
    """New table, ordered before the source, holding the distinct fully
    observed tuples of `cols` (first-occurrence order), all marked pk.
    Returns the new table's name."""
    cols = list(cols)
    if not cols:
        raise OpError(ErrorKind.PARSE_ERROR, "need at least one column")

    def build(state: State):
        t = state.schema.table(table)
        for c in cols:
            if not isinstance(t.column(c).model, Input):
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              f"column {c!r} is modeled", (table, c))
        dt = state.data_for(table)
        idx = [t.col_index(c) for c in cols]
        seen = set()
        rows: list[tuple[Value, ...]] = []
        for row in dt.grid:
            tup = tuple(row[i] for i in idx)
            if any(v is Missing for v in tup):
                continue
            key = tuple(value_eq_key(v) for v in tup)
            if key not in seen:
                seen.add(key)
                rows.append(tup)
        name = _uniques_name(state, cols)
        new_cols = tuple(Column(c, t.column(c).ctype, INPUT, is_pk=True) for c in cols)
        new_table = Table(name, new_cols)
        new_dt = DataTable(name, tuple(cols), tuple(rows))
        return name, insert_table(state, new_table, new_dt, before=table)
    return state_op(build)


def link(primary_table: str, col_pairs: Sequence[tuple[str, str]],
         foreign_table: str, link_col: str) -> Op:
    """Bind foreign tuples to matching primary-key rows: the link column holds
    the 0-based row index in the primary table. A single column mapped onto
    itself is replaced in place by the link column."""
    col_pairs = [tuple(p) for p in col_pairs]

    def build(state: State):
        pt = state.schema.table(primary_table)
        ft = state.schema.table(foreign_table)
        pdt = state.data_for(primary_table)
        fdt = state.data_for(foreign_table)
        for fcol, pcol in col_pairs:
            if not pt.column(pcol).is_pk:
                raise OpError(ErrorKind.KEY_VIOLATION,
                              f"{pcol!r} is not a primary key of {primary_table!r}",
                              (primary_table, pcol))
            if not isinstance(ft.column(fcol).model, Input):
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              f"foreign column {fcol!r} is modeled", (foreign_table, fcol))
        pidx = [pt.col_index(p) for _, p in col_pairs]
        mapping: dict[tuple, int] = {}
        for ri, row in enumerate(pdt.grid):
            key = tuple(value_eq_key(row[i]) for i in pidx)
            mapping[key] = ri
        fidx = [ft.col_index(f) for f, _ in col_pairs]
        indices: list[Value] = []
        for row in fdt.grid:
            tup = tuple(row[i] for i in fidx)
            if any(v is Missing for v in tup):
                indices.append(Missing)
                continue
            key = tuple(value_eq_key(v) for v in tup)
            if key not in mapping:
                raise OpError(ErrorKind.KEY_VIOLATION,
                              f"foreign tuple {tup!r} has no match in {primary_table!r}",
                              (foreign_table, link_col))
            indices.append(mapping[key])

        state = reorder_tables_for(state, primary_table, foreign_table)
        ft = state.schema.table(foreign_table)
        new_col = Column(link_col, LinkT(primary_table), INPUT)
        in_place = (len(col_pairs) == 1 and col_pairs[0][0] == link_col)
        if in_place or ft.has_column(link_col):
            # replace/retarget the existing column
            old = ft.column(link_col)
            if not isinstance(old.model, Input):
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              f"cannot retarget modeled column {link_col!r}",
                              (foreign_table, link_col))
            state = replace_column(state, foreign_table, link_col,
                                   replace(old, ctype=LinkT(primary_table), model=INPUT),
                                   indices)
        else:
            state = append_column(state, foreign_table, new_col, indices)
        return None, state
    return state_op(build)


def type_nominal(table: str, col: str) -> Op:
    """Type a column as nominal: a unique-value domain table plus an in-place
    link. Returns the domain table's name."""
    def check(state: State):
        t = state.schema.table(table)
        c = t.column(col)
        if not isinstance(c.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"column {col!r} is modeled", (table, col))
        if isinstance(c.ctype, (Upto, LinkT)):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"TypeNominal on {c.ctype!r} column is redundant and disallowed",
                          (table, col))
        return None, state

    return state_op(check).then(
        create_table_uniques(table, [col]).bind(
            lambda nt: link(nt, [(col, col)], table, col).then(pure(nt))))


def type_infer(table: str, col: str) -> Op:
    """Infer a column's type from its data. Nominal when the table is large
    and under 5% of values are distinct; otherwise int, then real, then
    nominal as a last resort. Returns the resulting column type."""
    def step(vs):
        state = vs.state
        t = state.schema.table(table)
        c = t.column(col)
        if not isinstance(c.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"column {col!r} is modeled", (table, col))
        if isinstance(c.ctype, (Upto, LinkT)):
            return c.ctype, vs  # already nominal; nothing to do
        values = [v for v in state.data_for(table).col(col) if v is not Missing]
        nrows = state.data_for(table).nrows
        distinct = len({value_eq_key(v) for v in values})
        if nrows >= 20 and values and distinct / len(values) < 0.05:
            _, vs2 = type_nominal(table, col).run(vs)
            return vs2.state.schema.table(table).column(col).ctype, vs2
        for op in (type_cast(table, col, ToInt()), type_cast(table, col, ToReal())):
            try:
                _, vs2 = op.run(vs)
            except OpError:
                continue
            return vs2.state.schema.table(table).column(col).ctype, vs2
        _, vs2 = type_nominal(table, col).run(vs)
        return vs2.state.schema.table(table).column(col).ctype, vs2
    return Op(step)


def type_infer_table(table: str) -> Op:
    """type_infer over each currently unmodeled, non-pk column in order."""
    def step(vs):
        names = [c.name for c in vs.state.schema.table(table).columns]
        cur = vs
        for name in names:
            c = cur.state.schema.table(table).column(name)
            if c.is_pk or not isinstance(c.model, Input):
                continue
            _, cur = type_infer(table, name).run(cur)
        return None, cur
    return Op(step)


def new_column(table: str, name: str, kind: Upto | LinkT) -> Op:
    """Append a latent column (all cells Missing)."""
    def build(state: State):
        t = state.schema.table(table)
        if t.has_column(name):
            raise OpError(ErrorKind.NAME_CONFLICT,
                          f"column {name!r} already exists in {table!r}", (table, name))
        if isinstance(kind, LinkT) and not state.schema.has_table(kind.table):
            raise OpError(ErrorKind.MISSING_TARGET,
                          f"link target table {kind.table!r} does not exist", (table, name))
        nrows = state.data_for(table).nrows
        col = Column(name, kind, INPUT, is_latent=True)
        return None, append_column(state, table, col, [Missing] * nrows)
    return state_op(build)
