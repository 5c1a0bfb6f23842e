"""CSV loading and directory save/load of whole states.

A saved state directory holds one ``<table>.csv`` per table plus
``schema.json`` (the stable JSON shape from ``schema_doc``).  Cells render
by column type; empty CSV cells are Missing.  Files are written atomically
(temp file + rename).
"""
from __future__ import annotations

import csv
import json
import os
from typing import Sequence

from .core import (
    Column, DataTable, ErrorKind, INPUT, IntT, LinkT, Missing, Op, OpError,
    RealT, STR_T, Schema, State, StrT, Table, Upto, ValidState,
    validate_state,
)
from .schema_doc import schema_from_json, schema_to_json


def read_csv_table(path: str, table_name: str) -> tuple[Table, DataTable]:
    """Parse an RFC-4180 CSV with a header row into an all-string,
    all-input table; empty cells become Missing."""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            rows = list(reader)
    except OSError as e:
        raise OpError(ErrorKind.PARSE_ERROR, f"cannot read {path}: {e}",
                      (table_name, None))
    if not rows:
        raise OpError(ErrorKind.PARSE_ERROR, f"{path}: missing header row",
                      (table_name, None))
    header = rows[0]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise OpError(ErrorKind.NAME_CONFLICT,
                      f"{path}: duplicate or empty column names in header",
                      (table_name, None))
    grid = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise OpError(ErrorKind.PARSE_ERROR,
                          f"{path}: row at line {lineno} has {len(row)} cells, "
                          f"expected {len(header)}", (table_name, None))
        grid.append(tuple(Missing if cell == "" else cell for cell in row))
    t = Table(table_name, tuple(Column(h, STR_T, INPUT) for h in header))
    dt = DataTable(table_name, tuple(header), tuple(grid))
    return t, dt


def load_csv(path: str, table_name: str = "tmain") -> Op:
    """Add a CSV file as a new all-string input table."""
    def step(vs: ValidState):
        state = vs.state
        if state.schema.has_table(table_name):
            raise OpError(ErrorKind.NAME_CONFLICT,
                          f"table {table_name!r} already exists", (table_name, None))
        t, dt = read_csv_table(path, table_name)
        new = State(Schema(state.schema.tables + (t,)), state.data + (dt,))
        return None, validate_state(new.schema, new.data)
    return Op(step)


# ---------------------------------------------------------------------------


def _render_cell(v) -> str:
    if v is Missing:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_cell(text: str, ctype):
    if text == "":
        return Missing
    if isinstance(ctype, (IntT, Upto, LinkT)):
        return int(text)
    if isinstance(ctype, RealT):
        return float(text)
    return text


def _atomic_write(path: str, content: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(content)
    os.replace(tmp, path)


def save_state_dir(state: State, dirpath: str) -> None:
    """One CSV per table plus schema.json; loadable back to an equal state."""
    os.makedirs(dirpath, exist_ok=True)
    _atomic_write(os.path.join(dirpath, "schema.json"),
                  json.dumps(schema_to_json(state.schema), indent=2) + "\n")
    for t, dt in zip(state.schema.tables, state.data):
        import io as _io
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(dt.colnames)
        for row in dt.grid:
            w.writerow([_render_cell(v) for v in row])
        _atomic_write(os.path.join(dirpath, f"{t.name}.csv"), buf.getvalue())


def load_state_dir(dirpath: str) -> ValidState:
    schema_path = os.path.join(dirpath, "schema.json")
    try:
        with open(schema_path, encoding="utf-8") as f:
            schema = schema_from_json(json.load(f))
    except OSError as e:
        raise OpError(ErrorKind.PARSE_ERROR, f"cannot read {schema_path}: {e}")
    except (KeyError, ValueError) as e:
        raise OpError(ErrorKind.PARSE_ERROR, f"bad schema.json: {e}")
    data = []
    for t in schema.tables:
        path = os.path.join(dirpath, f"{t.name}.csv")
        try:
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.reader(f))
        except OSError as e:
            raise OpError(ErrorKind.PARSE_ERROR, f"cannot read {path}: {e}",
                          (t.name, None))
        if not rows or tuple(rows[0]) != tuple(c.name for c in t.columns):
            raise OpError(ErrorKind.PARSE_ERROR,
                          f"{path}: header does not match schema", (t.name, None))
        grid = []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(t.columns):
                raise OpError(ErrorKind.PARSE_ERROR,
                              f"{path}: row at line {lineno} has wrong arity",
                              (t.name, None))
            try:
                grid.append(tuple(_parse_cell(cell, c.ctype)
                                  for cell, c in zip(row, t.columns)))
            except ValueError as e:
                raise OpError(ErrorKind.TYPE_MISMATCH,
                              f"{path}: line {lineno}: {e}", (t.name, None))
        data.append(DataTable(t.name, tuple(c.name for c in t.columns),
                              tuple(grid)))
    return validate_state(schema, tuple(data))


def save_state(dirpath: str) -> Op:
    """Write the current state to a directory (read-only on the state)."""
    def step(vs: ValidState):
        save_state_dir(vs.state, dirpath)
        return None, vs
    return Op(step)
