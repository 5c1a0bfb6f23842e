"""Operations that attach and couple probabilistic models on columns: base
conjugate models, indexing, polynomial regression, functional-dependency
capture, Naive Bayes and the schema-derived Inferno clustering model."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .core import (
    CDiscrete, CGaussian, Column, ErrorKind, INPUT, Indexed, Input, IntT,
    LinkDeref, LinkT, Missing, Op, OpError, PolyReg, RealT, Schema, State,
    StrT, Table, Upto, Value, append_column, cdiscrete, ensure_dependency_order,
    for_each, pure, replace_column, reorder_columns_for, state_op, value_eq_key,
)
from .typing_ops import create_table_uniques, link, new_column, type_nominal


@dataclass(frozen=True)
class InfernoHandle:
    """Leaf tables given a latent cluster column by the inferno operation."""

    leaf_tables: tuple[str, ...]


CLUSTER_COL = "cluster"


def _dimension(state: State, ctype) -> int | None:
    if isinstance(ctype, Upto):
        return ctype.n
    if isinstance(ctype, LinkT):
        return state.data_for(ctype.table).nrows
    return None


def model_discrete(table: str, col: str) -> Op:
    """Conjugate Dirichlet-categorical model on an upto or link column."""
    def build(state: State):
        t = state.schema.table(table)
        c = t.column(col)
        if not isinstance(c.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"column {col!r} is already modeled", (table, col))
        dim = _dimension(state, c.ctype)
        if dim is None:
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"ModelDiscrete needs an upto or link column, got {c.ctype!r}",
                          (table, col))
        if c.is_pk:
            raise OpError(ErrorKind.KEY_VIOLATION,
                          f"cannot model primary key {col!r}", (table, col))
        return None, replace_column(state, table, col, replace(c, model=cdiscrete(dim)))
    return state_op(build)


def model_gaussian(table: str, col: str, hyper: dict | None = None) -> Op:
    """Conjugate Normal-Gamma model on a real column (int columns widen)."""
    def build(state: State):
        t = state.schema.table(table)
        c = t.column(col)
        if not isinstance(c.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"column {col!r} is already modeled", (table, col))
        if c.is_pk:
            raise OpError(ErrorKind.KEY_VIOLATION,
                          f"cannot model primary key {col!r}", (table, col))
        if isinstance(c.ctype, IntT):
            c = replace(c, ctype=RealT())
        elif not isinstance(c.ctype, RealT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"ModelGaussian needs a real or int column, got {c.ctype!r}",
                          (table, col))
        kwargs = dict(mean_mean=0.0, mean_prec=1.0, prec_shape=1.0, prec_scale=1.0)
        if hyper:
            kwargs.update(hyper)
        return None, replace_column(state, table, col, replace(c, model=CGaussian(**kwargs)))
    return state_op(build)


def model(table: str, col: str) -> Op:
    """Place the default distribution for the column's type."""
    def step(vs):
        c = vs.state.schema.table(table).column(col)
        if isinstance(c.ctype, StrT):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"string column {col!r} has no default model; run TypeNominal first",
                          (table, col))
        if isinstance(c.ctype, (Upto, LinkT)):
            return model_discrete(table, col).run(vs)
        return model_gaussian(table, col).run(vs)
    return Op(step)


def index(table: str, range_col: str, path: Sequence[str], domain_col: str) -> Op:
    """Index a modeled range column's distribution by a discrete domain column,
    optionally reached through a chain of link columns."""
    path = tuple(path)

    def build(state: State):
        t = state.schema.table(table)
        rc = t.column(range_col)
        if isinstance(rc.model, Input):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"range column {range_col!r} is not modeled", (table, range_col))
        # resolve the domain column through the path
        cur = t
        for link_name in path:
            lc = cur.column(link_name)
            if not isinstance(lc.ctype, LinkT):
                raise OpError(ErrorKind.TYPE_MISMATCH,
                              f"path column {link_name!r} is not a link", (cur.name, link_name))
            cur = state.schema.table(lc.ctype.table)
        dc = cur.column(domain_col)
        if _dimension(state, dc.ctype) is None:
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"domain column {domain_col!r} is not discrete", (cur.name, domain_col))
        new_model = Indexed(rc.model, path, domain_col)
        state = replace_column(state, table, range_col, replace(rc, model=new_model))
        anchor = path[0] if path else domain_col
        state = reorder_columns_for(state, table, range_col, {anchor})
        return None, state
    return state_op(build)


def poly_reg(degree: int, table: str, range_col: str, dom_col: str,
             coeff_prior_prec: float = 1e-6,
             noise_prec_shape: float = 1.0, noise_prec_scale: float = 1.0) -> Op:
    """Noisy polynomial regression of range_col on dom_col (degree 1 or 2)."""
    def build(state: State):
        if degree not in (1, 2):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"regression degree {degree} not in {{1,2}}", (table, range_col))
        t = state.schema.table(table)
        rc = t.column(range_col)
        if not isinstance(rc.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"range column {range_col!r} is already modeled", (table, range_col))
        if isinstance(rc.ctype, IntT):
            rc = replace(rc, ctype=RealT())
        elif not isinstance(rc.ctype, RealT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"regression range must be numeric, got {rc.ctype!r}",
                          (table, range_col))
        dc = t.column(dom_col)
        if not isinstance(dc.ctype, (RealT, IntT)):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"regression domain must be numeric, got {dc.ctype!r}", (table, dom_col))
        m = PolyReg(degree, dom_col, coeff_prior_prec, noise_prec_shape, noise_prec_scale)
        state = replace_column(state, table, range_col, replace(rc, model=m))
        state = reorder_columns_for(state, table, range_col, {dom_col})
        return None, state
    return state_op(build)


def lin_reg(table: str, range_col: str, dom_col: str, **kw) -> Op:
    return poly_reg(1, table, range_col, dom_col, **kw)


def quad_reg(table: str, range_col: str, dom_col: str, **kw) -> Op:
    return poly_reg(2, table, range_col, dom_col, **kw)


def exact(main_table: str, domain_link_col: str, range_col: str) -> Op:
    """Capture a functional dependency: move the range column's values into
    the link's domain table and rewrite the range model as a link dereference."""
    def build(state: State):
        t = state.schema.table(main_table)
        lc = t.column(domain_link_col)
        if not isinstance(lc.ctype, LinkT):
            raise OpError(ErrorKind.TYPE_MISMATCH,
                          f"{domain_link_col!r} is not a link column", (main_table, domain_link_col))
        rc = t.column(range_col)
        if not isinstance(rc.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"range column {range_col!r} is modeled", (main_table, range_col))
        domain_table = lc.ctype.table
        dt = state.data_for(main_table)
        li = t.col_index(domain_link_col)
        ri = t.col_index(range_col)

        # verify the FD and build the map link-row -> range value
        fd: dict[int, Value] = {}
        for row in dt.grid:
            lv, rv = row[li], row[ri]
            if lv is Missing or rv is Missing:
                continue
            if lv in fd:
                if value_eq_key(fd[lv]) != value_eq_key(rv):
                    raise OpError(ErrorKind.FD_VIOLATION,
                                  f"{domain_link_col!r} does not determine {range_col!r}: "
                                  f"row {lv} maps to both {fd[lv]!r} and {rv!r}",
                                  (main_table, range_col))
            else:
                fd[lv] = rv

        dtab = state.schema.table(domain_table)
        if dtab.has_column(range_col):
            raise OpError(ErrorKind.NAME_CONFLICT,
                          f"domain table {domain_table!r} already has column {range_col!r}",
                          (domain_table, range_col))
        n_domain = state.data_for(domain_table).nrows
        new_vals = [fd.get(i, Missing) for i in range(n_domain)]
        state = append_column(state, domain_table,
                              Column(range_col, rc.ctype, INPUT), new_vals)

        # blank the main-table range cells wherever the link is present
        blanked = [Missing if row[li] is not Missing else row[ri] for row in dt.grid]
        deref = LinkDeref(domain_link_col, range_col)
        state = replace_column(state, main_table, range_col,
                               replace(rc, model=deref), blanked)
        state = reorder_columns_for(state, main_table, range_col, {domain_link_col})
        return None, state
    return state_op(build)


def _determined_by(dt, dom_idx: list[int], rng_idx: int) -> bool:
    groups: dict[tuple, object] = {}
    for row in dt.grid:
        key = tuple(value_eq_key(row[i]) for i in dom_idx)
        if any(row[i] is Missing for i in dom_idx):
            continue
        rv = row[rng_idx]
        if rv is Missing:
            continue
        k = value_eq_key(rv)
        if key in groups and groups[key] != k:
            return False
        groups[key] = k
    return True


def exact_infer(main_table: str, domain_cols: Sequence[str]) -> Op:
    """Find every eligible column functionally determined by the domain tuple,
    materialize the domain table and link if needed, and Exact each range
    column. Returns the range column names."""
    domain_cols = list(domain_cols)
    if not domain_cols:
        raise OpError(ErrorKind.PARSE_ERROR, "need at least one domain column")

    def step(vs):
        state = vs.state
        t = state.schema.table(main_table)
        dt = state.data_for(main_table)
        for c in domain_cols:
            if not isinstance(t.column(c).model, Input):
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              f"domain column {c!r} is modeled", (main_table, c))
        dom_idx = [t.col_index(c) for c in domain_cols]
        ranges: list[str] = []
        for c in t.columns:
            if c.name in domain_cols or c.is_pk or c.is_latent:
                continue
            if not isinstance(c.model, Input) or isinstance(c.ctype, LinkT):
                continue
            if _determined_by(dt, dom_idx, t.col_index(c.name)):
                ranges.append(c.name)
        if not ranges:
            return [], vs

        link_col = "_".join(domain_cols)
        existing = t.column(link_col) if t.has_column(link_col) else None
        if existing is not None and isinstance(existing.ctype, LinkT):
            cur = vs  # domain link already in place
        else:
            def bind_domain(nt):
                pairs = [(c, c) for c in domain_cols]
                return link(nt, pairs, main_table, link_col).then(pure(nt))
            _, cur = create_table_uniques(main_table, domain_cols).bind(bind_domain).run(vs)
        for rc in ranges:
            _, cur = exact(main_table, link_col, rc).run(cur)
        return ranges, cur
    return Op(step)


def naive_bayes(table: str, class_col: str) -> Op:
    """Class column modeled discretely; every feature column modeled and
    indexed by the class."""
    def step(vs):
        t = vs.state.schema.table(table)
        cc = t.column(class_col)
        if not isinstance(cc.model, Input):
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"class column {class_col!r} is already modeled", (table, class_col))
        features = [c.name for c in t.columns
                    if c.name != class_col and not c.is_pk and not c.is_latent
                    and isinstance(c.model, Input)]
        cur = vs
        if isinstance(cc.ctype, StrT):
            _, cur = type_nominal(table, class_col).run(cur)
        _, cur = model_discrete(table, class_col).run(cur)
        for f in features:
            fc = cur.state.schema.table(table).column(f)
            if isinstance(fc.ctype, StrT):
                _, cur = type_nominal(table, f).run(cur)
            _, cur = model(table, f).run(cur)
            _, cur = index(table, f, [], class_col).run(cur)
        return None, cur
    return Op(step)


def _is_trivial_link_target(schema: Schema, table_name: str) -> bool:
    """Trivial targets are pure nominal-domain tables: every column is a pk."""
    return all(c.is_pk for c in schema.table(table_name).columns)


def _nontrivial_links(schema: Schema, table: Table) -> list[Column]:
    return [c for c in table.columns
            if isinstance(c.ctype, LinkT)
            and not _is_trivial_link_target(schema, c.ctype.table)]


def _cluster_paths(schema: Schema, table: Table) -> list[tuple[tuple[str, ...], str]]:
    """All (link path, cluster table) pairs from a body table to reachable
    leaf-table cluster columns."""
    out: list[tuple[tuple[str, ...], str]] = []
    for lc in _nontrivial_links(schema, table):
        target = schema.table(lc.ctype.table)
        if _nontrivial_links(schema, target):
            for sub_path, leaf in _cluster_paths(schema, target):
                out.append(((lc.name,) + sub_path, leaf))
        else:
            out.append(((lc.name,), target.name))
    return out


def _concrete_columns(schema: Schema, table: Table) -> list[str]:
    """Columns clustered by inferno: everything except primary keys, the
    cluster column itself and links to nontrivial tables."""
    out = []
    for c in table.columns:
        if c.is_pk or c.name == CLUSTER_COL:
            continue
        if isinstance(c.ctype, LinkT) and not _is_trivial_link_target(schema, c.ctype.table):
            continue
        out.append(c.name)
    return out


def inferno(default_clusters: int = 4) -> Op:
    """Schema-derived clustering: leaf tables get a latent cluster column and
    every concrete column is indexed by its own (leaf) or every reachable
    (body) cluster, realizing the cross-product clustering."""
    def step(vs):
        cur = vs
        schema = cur.state.schema
        leaves = [t.name for t in schema.tables
                  if not _nontrivial_links(schema, t) and not _is_trivial_link_target(schema, t.name)]
        for leaf in leaves:
            if cur.state.schema.table(leaf).has_column(CLUSTER_COL):
                raise OpError(ErrorKind.NAME_CONFLICT,
                              f"table {leaf!r} already has a {CLUSTER_COL!r} column",
                              (leaf, CLUSTER_COL))
            _, cur = new_column(leaf, CLUSTER_COL, Upto(default_clusters)).run(cur)
            _, cur = model_discrete(leaf, CLUSTER_COL).run(cur)
        for tname in [t.name for t in cur.state.schema.tables]:
            schema = cur.state.schema
            t = schema.table(tname)
            if _is_trivial_link_target(schema, tname):
                continue
            is_leaf = tname in leaves
            dims = ([((), tname)] if is_leaf
                    else _cluster_paths(schema, t))
            for cname in _concrete_columns(schema, t):
                if cname == CLUSTER_COL:
                    continue
                c = t.column(cname)
                if isinstance(c.ctype, StrT):
                    continue  # raw strings are left for TypeNominal
                if isinstance(c.model, Input) and not c.is_latent:
                    _, cur = model(tname, cname).run(cur)
                elif isinstance(c.model, Input):
                    continue
                for path, _leaf in dims:
                    _, cur = index(tname, cname, path, CLUSTER_COL).run(cur)
        return InfernoHandle(tuple(leaves)), cur
    return Op(step)


def set_cluster_count(table: str, k: int) -> Op:
    """Re-dimension a leaf table's latent cluster column to k clusters."""
    def build(state: State):
        if k < 1:
            raise OpError(ErrorKind.TYPE_MISMATCH, f"cluster count {k} must be >= 1",
                          (table, CLUSTER_COL))
        t = state.schema.table(table)
        if not t.has_column(CLUSTER_COL):
            raise OpError(ErrorKind.MISSING_TARGET,
                          f"table {table!r} has no {CLUSTER_COL!r} column", (table, CLUSTER_COL))
        c = t.column(CLUSTER_COL)
        if not c.is_latent:
            raise OpError(ErrorKind.MISSING_TARGET,
                          f"{CLUSTER_COL!r} in {table!r} is not latent", (table, CLUSTER_COL))
        new_model = c.model
        if isinstance(new_model, CDiscrete):
            new_model = cdiscrete(k)
        return None, replace_column(state, table, CLUSTER_COL,
                                    replace(c, ctype=Upto(k), model=new_model))
    return state_op(build)
