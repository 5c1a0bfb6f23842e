"""Random state and operation generators for property and fuzz suites."""
from __future__ import annotations

import numpy as np

from mwz import (
    Column, DataTable, INPUT, INT_T, Missing, Op, REAL_T, STR_T, Schema,
    Table, Upto, cdiscrete, get_state, pure, validate_state,
)
from mwz.typing_ops import (
    ToInt, ToReal, ToUpto, create_table_uniques, new_column, type_cast,
    type_infer, type_nominal,
)
from mwz.model_ops import index, lin_reg, model, model_discrete, model_gaussian


def random_state(rng: np.random.Generator, max_rows: int = 50):
    """One-table state with a random mix of column types and missing cells."""
    n_rows = int(rng.integers(1, max_rows + 1))
    n_cols = int(rng.integers(1, 5))
    cols, grids = [], []
    for ci in range(n_cols):
        kind = rng.choice(["int", "real", "str", "upto", "numstr"])
        name = f"c{ci}"
        if kind == "int":
            cols.append(Column(name, INT_T))
            vals = [int(rng.integers(-5, 6)) for _ in range(n_rows)]
        elif kind == "real":
            cols.append(Column(name, REAL_T))
            vals = [float(np.round(rng.normal(), 3)) for _ in range(n_rows)]
        elif kind == "upto":
            n = int(rng.integers(2, 5))
            cols.append(Column(name, Upto(n)))
            vals = [int(rng.integers(n)) for _ in range(n_rows)]
        elif kind == "numstr":
            cols.append(Column(name, STR_T))
            vals = [str(int(rng.integers(0, 9))) for _ in range(n_rows)]
        else:
            cols.append(Column(name, STR_T))
            vals = [rng.choice(["a", "b", "c", "dd"]) for _ in range(n_rows)]
        vals = [Missing if rng.random() < 0.1 else v for v in vals]
        grids.append(vals)
    rows = tuple(tuple(g[r] for g in grids) for r in range(n_rows))
    t = Table("t0", tuple(cols))
    dt = DataTable("t0", tuple(c.name for c in cols), rows)
    return validate_state(Schema((t,)), (dt,))


def random_op(rng: np.random.Generator, vs) -> Op:
    """An operation applicable (or plausibly applicable) to the state; may
    fail at run time, which callers treat as a legitimate outcome."""
    t = rng.choice(list(vs.state.schema.tables))
    c = rng.choice(list(t.columns))
    choice = rng.choice([
        "pure", "get", "cast_real", "cast_int", "cast_upto", "nominal",
        "infer", "uniques", "newcol", "mdiscrete", "mgaussian", "model",
        "index", "linreg"])
    if choice == "pure":
        return pure(int(rng.integers(100)))
    if choice == "get":
        return get_state().map(lambda sd: len(sd[0].tables))
    if choice == "cast_real":
        return type_cast(t.name, c.name, ToReal())
    if choice == "cast_int":
        return type_cast(t.name, c.name, ToInt())
    if choice == "cast_upto":
        return type_cast(t.name, c.name, ToUpto(int(rng.integers(2, 6))))
    if choice == "nominal":
        return type_nominal(t.name, c.name)
    if choice == "infer":
        return type_infer(t.name, c.name)
    if choice == "uniques":
        return create_table_uniques(t.name, [c.name])
    if choice == "newcol":
        return new_column(t.name, f"n{int(rng.integers(1000))}",
                          Upto(int(rng.integers(2, 5))))
    if choice == "mdiscrete":
        return model_discrete(t.name, c.name)
    if choice == "mgaussian":
        return model_gaussian(t.name, c.name)
    if choice == "model":
        return model(t.name, c.name)
    if choice == "index":
        c2 = rng.choice(list(t.columns))
        return index(t.name, c.name, [], c2.name)
    c2 = rng.choice(list(t.columns))
    return lin_reg(t.name, c.name, c2.name)
