"""Compiles a valid state into an executable probabilistic model and runs
conjugate Gibbs sampling, closed-form discrete evidence, and forward
sampling for fixtures.

The sampler is uncollapsed: per iteration it draws every parameter group
from its conjugate full conditional, then every missing/latent cell from its
full conditional given parameters and the rest of the data.  The RNG is
numpy's PCG64; identical (state, config) pairs give identical results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import (
    CDiscrete, CGaussian, ErrorKind, Indexed, Input, LinkDeref, LinkT,
    Missing, Op, OpError, PolyReg, State, Upto, ValidState, indexed_chain,
)

LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Public result types


@dataclass(frozen=True)
class InferenceConfig:
    burnin: int = 500
    samples: int = 2000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise OpError(ErrorKind.PARSE_ERROR, "samples must be >= 1")


@dataclass(frozen=True)
class PointMass:
    value: Any


@dataclass(frozen=True)
class GaussianM:
    mean: float
    variance: float


@dataclass(frozen=True)
class DiscreteM:
    probs: tuple[float, ...]

    def argmax(self) -> int:
        return int(np.argmax(self.probs))


@dataclass(frozen=True)
class InferenceResult:
    #: "table.col" -> {index config tuple -> {param name -> summary}}
    param_summaries: dict
    #: (table, row, col) -> PointMass | GaussianM | DiscreteM
    cell_marginals: dict


# ---------------------------------------------------------------------------
# Compilation


@dataclass
class DimSpec:
    steps: list[tuple[str, int, str]]  # (table, link col idx, next table)
    final_table: str
    final_ci: int
    final_col: str
    size: int


@dataclass(eq=False)
class CompiledColumn:
    table: str
    name: str
    ci: int
    kind: str  # 'discrete' | 'gaussian' | 'polyreg' | 'linkderef'
    dims: list[DimSpec] = field(default_factory=list)
    n: int = 0
    alpha: np.ndarray | None = None
    hyper: CGaussian | None = None
    degree: int = 0
    dom_ci: int = -1
    coeff_prec: float = 0.0
    noise_shape: float = 0.0
    noise_scale: float = 0.0
    link_ci: int = -1
    target_table: str = ""
    target_ci: int = -1

    @property
    def key(self) -> tuple[str, str]:
        return (self.table, self.name)

    def configs(self):
        return product(*(range(d.size) for d in self.dims))


@dataclass
class CompiledModel:
    state: State
    columns: list[CompiledColumn]
    by_key: dict[tuple[str, str], CompiledColumn]


def _dim_size(state: State, ctype) -> int:
    if isinstance(ctype, Upto):
        return ctype.n
    if isinstance(ctype, LinkT):
        return state.data_for(ctype.table).nrows
    raise OpError(ErrorKind.TYPE_MISMATCH, f"not a discrete type: {ctype!r}")


def _col_fully_observed(state: State, table: str, name: str) -> bool:
    return all(v is not Missing for v in state.data_for(table).col(name))


def compile_model(vs: ValidState) -> CompiledModel:
    """Deterministically lower a valid state to parameter blocks and sites.

    Raises UnsupportedModel when nothing is modeled or when a model depends
    on an unmodeled input column with missing values (cannot condition)."""
    state = vs.state
    columns: list[CompiledColumn] = []
    for t, dt in zip(state.schema.tables, state.data):
        for ci, c in enumerate(t.columns):
            if isinstance(c.model, Input):
                continue
            base, raw_dims = indexed_chain(c.model)
            dims: list[DimSpec] = []
            for path, icol in raw_dims:
                steps = []
                cur = t
                for link_name in path:
                    lci = cur.col_index(link_name)
                    link_col = cur.columns[lci]
                    nxt = link_col.ctype.table
                    if isinstance(link_col.model, Input) and not _col_fully_observed(
                            state, cur.name, link_name):
                        raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                                      f"index path {link_name!r} is an unmodeled input "
                                      "with missing values", (cur.name, link_name))
                    steps.append((cur.name, lci, nxt))
                    cur = state.schema.table(nxt)
                fci = cur.col_index(icol)
                fcol = cur.columns[fci]
                if isinstance(fcol.model, Input) and not _col_fully_observed(
                        state, cur.name, icol):
                    raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                                  f"index column {icol!r} is an unmodeled input "
                                  "with missing values", (cur.name, icol))
                dims.append(DimSpec(steps, cur.name, fci, icol,
                                    _dim_size(state, fcol.ctype)))
            cc = CompiledColumn(t.name, c.name, ci, "", dims=dims)
            if isinstance(base, CDiscrete):
                cc.kind = "discrete"
                cc.n = base.n
                cc.alpha = np.asarray(base.alpha, dtype=float)
            elif isinstance(base, CGaussian):
                cc.kind = "gaussian"
                cc.hyper = base
            elif isinstance(base, PolyReg):
                cc.kind = "polyreg"
                cc.degree = base.degree
                cc.dom_ci = t.col_index(base.dom_column)
                cc.coeff_prec = base.coeff_prior_prec
                cc.noise_shape = base.noise_prec_shape
                cc.noise_scale = base.noise_prec_scale
                dom = t.columns[cc.dom_ci]
                if isinstance(dom.model, Input) and not _col_fully_observed(
                        state, t.name, dom.name):
                    raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                                  f"regression domain {dom.name!r} is an unmodeled input "
                                  "with missing values", (t.name, dom.name))
            elif isinstance(base, LinkDeref):
                cc.kind = "linkderef"
                cc.link_ci = t.col_index(base.link_column)
                link_col = t.columns[cc.link_ci]
                cc.target_table = link_col.ctype.table
                cc.target_ci = state.schema.table(cc.target_table).col_index(base.target_column)
                for ri, row in enumerate(dt.grid):
                    if row[ci] is Missing and row[cc.link_ci] is Missing:
                        raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                                      f"row {ri}: missing cell with missing link in "
                                      f"{c.name!r}", (t.name, c.name))
            else:
                raise OpError(ErrorKind.UNSUPPORTED_MODEL, f"cannot compile {base!r}",
                              (t.name, c.name))
            columns.append(cc)
    if not columns:
        raise OpError(ErrorKind.UNSUPPORTED_MODEL, "no modeled columns to compile")
    return CompiledModel(state, columns, {c.key: c for c in columns})


# ---------------------------------------------------------------------------
# Gibbs sampling


def _as_float(v) -> float:
    return float(v)


class _Sampler:
    def __init__(self, compiled: CompiledModel, cfg: InferenceConfig):
        self.compiled = compiled
        self.cfg = cfg
        self.rng = np.random.Generator(np.random.PCG64(cfg.seed))
        state = compiled.state
        self.grids: dict[str, list[list]] = {
            dt.tablename: [list(row) for row in dt.grid] for dt in state.data}
        self.params: dict[tuple[str, str], dict[tuple, dict]] = {}
        # missing-cell sites, in schema order
        self.sites: list[tuple[CompiledColumn, int]] = []
        for cc in compiled.columns:
            if cc.kind == "linkderef":
                continue
            dt = state.data_for(cc.table)
            for ri, row in enumerate(dt.grid):
                if row[cc.ci] is Missing:
                    self.sites.append((cc, ri))
        self._build_dependents()
        self._init_cells()
        self._init_params()
        # accumulators
        self.kept = 0
        self.cell_acc: dict[tuple[CompiledColumn, int], Any] = {}
        for cc, ri in self.sites:
            if cc.kind == "discrete":
                self.cell_acc[(cc, ri)] = np.zeros(cc.n)
            else:
                self.cell_acc[(cc, ri)] = [0.0, 0.0]  # sum, sumsq
        self.param_acc: dict[tuple[str, str], dict[tuple, dict]] = {}
        self._site_probs: dict[tuple[tuple[str, str], int], np.ndarray] = {}

    # -- dependency bookkeeping --------------------------------------------

    def _build_dependents(self):
        """Map source column key -> [(role, dependent compiled column, dim index)]."""
        deps: dict[tuple[str, str], list[tuple[str, CompiledColumn, int]]] = {}

        def add(table, ci, role, cc, di):
            t = self.compiled.state.schema.table(table)
            key = (table, t.columns[ci].name)
            deps.setdefault(key, []).append((role, cc, di))

        for cc in self.compiled.columns:
            for di, dim in enumerate(cc.dims):
                for (tbl, lci, _nxt) in dim.steps:
                    add(tbl, lci, "index", cc, di)
                add(dim.final_table, dim.final_ci, "index", cc, di)
            if cc.kind == "polyreg":
                add(cc.table, cc.dom_ci, "dom", cc, 0)
            if cc.kind == "linkderef":
                add(cc.target_table, cc.target_ci, "copy", cc, 0)
                add(cc.table, cc.link_ci, "copylink", cc, 0)
        self.deps = deps

    def _resolve_config(self, cc: CompiledColumn, ri: int) -> tuple | None:
        cfg = []
        for dim in cc.dims:
            cur_t, cur_r = cc.table, ri
            ok = True
            for (tbl, lci, nxt) in dim.steps:
                v = self.grids[cur_t][cur_r][lci]
                if v is Missing:
                    ok = False
                    break
                cur_t, cur_r = nxt, v
            if not ok:
                return None
            v = self.grids[dim.final_table][cur_r][dim.final_ci]
            if v is Missing:
                return None
            cfg.append(v)
        return tuple(cfg)

    def _dim_visits(self, cc: CompiledColumn, di: int, ri: int) -> list[tuple[str, int, int]]:
        """Cells visited when resolving dim di of cc starting at row ri."""
        visited = []
        dim = cc.dims[di]
        cur_t, cur_r = cc.table, ri
        for (tbl, lci, nxt) in dim.steps:
            visited.append((cur_t, cur_r, lci))
            v = self.grids[cur_t][cur_r][lci]
            if v is Missing:
                return visited
            cur_t, cur_r = nxt, v
        visited.append((dim.final_table, cur_r, dim.final_ci))
        return visited

    def _dependent_cells(self, table: str, name: str, ri: int, ci: int):
        """Cells whose full conditional involves the cell (table, ri, ci).

        Returns (stochastic deps as (cc, row), observed copy constraint or None).
        """
        out: list[tuple[CompiledColumn, int]] = []
        constraint = None
        for role, cc, di in self.deps.get((table, name), ()):
            if role == "dom":
                if self.grids[cc.table][ri][cc.ci] is not None:
                    out.append((cc, ri))
            elif role == "index":
                grid = self.grids[cc.table]
                for r2 in range(len(grid)):
                    for (vt, vr, vc) in self._dim_visits(cc, di, r2):
                        if vt == table and vr == ri and vc == ci:
                            out.append((cc, r2))
                            break
            elif role == "copy":
                # observed main cells whose link points at this row pin the value
                dt = self.compiled.state.data_for(cc.table)
                for r2, row in enumerate(dt.grid):
                    if row[cc.ci] is not Missing and row[cc.link_ci] == ri:
                        constraint = row[cc.ci]
            elif role == "copylink":
                dt = self.compiled.state.data_for(cc.table)
                if dt.grid[ri][cc.ci] is not Missing:
                    # observed copy constrains which rows this link may select
                    out.append((cc, ri))
        return out, constraint

    # -- initialization -----------------------------------------------------

    def _init_cells(self):
        for cc, ri in self.sites:
            if cc.kind == "discrete":
                self.grids[cc.table][ri][cc.ci] = int(self.rng.integers(cc.n))
            else:
                observed = [_as_float(v) for v in
                            self.compiled.state.data_for(cc.table).col(cc.name)
                            if v is not Missing]
                center = float(np.mean(observed)) if observed else 0.0
                spread = float(np.std(observed)) if len(observed) > 1 else 1.0
                self.grids[cc.table][ri][cc.ci] = center + spread * float(
                    self.rng.standard_normal())

    def _init_params(self):
        for cc in self.compiled.columns:
            if cc.kind == "linkderef":
                continue
            groups = {}
            for cfg in cc.configs():
                if cc.kind == "discrete":
                    groups[cfg] = {"p": self.rng.dirichlet(cc.alpha)}
                elif cc.kind == "gaussian":
                    h = cc.hyper
                    groups[cfg] = {
                        "mu": h.mean_mean,
                        "tau": float(self.rng.gamma(h.prec_shape, h.prec_scale))}
                else:
                    groups[cfg] = {
                        "w": np.zeros(cc.degree + 1),
                        "tau": float(self.rng.gamma(cc.noise_shape, cc.noise_scale))}
            self.params[cc.key] = groups

    # -- likelihoods --------------------------------------------------------

    def _cell_loglik(self, cc: CompiledColumn, ri: int) -> float:
        if cc.kind == "linkderef":
            lv = self.grids[cc.table][ri][cc.link_ci]
            v = self.grids[cc.table][ri][cc.ci]
            if v is Missing or lv is Missing:
                return 0.0
            tv = self.grids[cc.target_table][lv][cc.target_ci]
            if tv is Missing:
                return 0.0
            return 0.0 if v == tv else -np.inf
        cfg = self._resolve_config(cc, ri)
        if cfg is None:
            return 0.0
        g = self.params[cc.key][cfg]
        v = self.grids[cc.table][ri][cc.ci]
        if cc.kind == "discrete":
            p = g["p"][v]
            return math.log(p) if p > 0 else -np.inf
        if cc.kind == "gaussian":
            tau = g["tau"]
            d = _as_float(v) - g["mu"]
            return 0.5 * (math.log(tau) - LOG_2PI) - 0.5 * tau * d * d
        x = _as_float(self.grids[cc.table][ri][cc.dom_ci])
        mean = _poly(g["w"], x)
        tau = g["tau"]
        d = _as_float(v) - mean
        return 0.5 * (math.log(tau) - LOG_2PI) - 0.5 * tau * d * d

    # -- parameter step -----------------------------------------------------

    def _draw_params(self, observed_only: bool = False):
        for cc in self.compiled.columns:
            if cc.kind == "linkderef":
                continue
            grid = self.grids[cc.table]
            odt = self.compiled.state.data_for(cc.table)
            stats: dict[tuple, list] = {}
            for ri in range(len(grid)):
                if observed_only and odt.grid[ri][cc.ci] is Missing:
                    continue
                cfg = self._resolve_config(cc, ri)
                if cfg is None:
                    continue
                v = grid[ri][cc.ci]
                if v is Missing:
                    continue
                stats.setdefault(cfg, []).append((ri, v))
            groups = self.params[cc.key]
            for cfg in cc.configs():
                rows = stats.get(cfg, [])
                if cc.kind == "discrete":
                    counts = np.zeros(cc.n)
                    for _, v in rows:
                        counts[v] += 1
                    groups[cfg]["p"] = self.rng.dirichlet(cc.alpha + counts)
                elif cc.kind == "gaussian":
                    h = cc.hyper
                    xs = np.array([_as_float(v) for _, v in rows])
                    n = len(xs)
                    tau = groups[cfg]["tau"]
                    prec = h.mean_prec + tau * n
                    mean = (h.mean_prec * h.mean_mean + tau * xs.sum()) / prec
                    mu = mean + float(self.rng.standard_normal()) / math.sqrt(prec)
                    shape = h.prec_shape + n / 2.0
                    rate = 1.0 / h.prec_scale + 0.5 * float(((xs - mu) ** 2).sum())
                    tau = float(self.rng.gamma(shape, 1.0 / rate))
                    groups[cfg]["mu"] = mu
                    groups[cfg]["tau"] = tau
                else:
                    d = cc.degree
                    xs = np.array([_as_float(grid[ri][cc.dom_ci]) for ri, _ in rows])
                    ys = np.array([_as_float(v) for _, v in rows])
                    X = np.vander(xs, d + 1, increasing=True) if len(xs) else np.zeros((0, d + 1))
                    tau = groups[cfg]["tau"]
                    lam = cc.coeff_prec * np.eye(d + 1) + tau * (X.T @ X)
                    chol = np.linalg.cholesky(lam)
                    m = np.linalg.solve(lam, tau * (X.T @ ys)) if len(xs) else np.zeros(d + 1)
                    z = self.rng.standard_normal(d + 1)
                    w = m + np.linalg.solve(chol.T, z)
                    resid = ys - X @ w if len(xs) else ys
                    shape = cc.noise_shape + len(xs) / 2.0
                    rate = 1.0 / cc.noise_scale + 0.5 * float((resid ** 2).sum())
                    tau = float(self.rng.gamma(shape, 1.0 / rate))
                    groups[cfg]["w"] = w
                    groups[cfg]["tau"] = tau

    # -- cell step ----------------------------------------------------------

    def _resample_cell(self, cc: CompiledColumn, ri: int):
        name = cc.name
        deps, constraint = self._dependent_cells(cc.table, name, ri, cc.ci)
        # blocked move: dependent cells that are unobserved leaves (no
        # dependents of their own) are marginalized out of this update and
        # redrawn from their full conditionals right after, which keeps
        # near-deterministic couplings (e.g. regression pairs) mixing
        live, dropped = [], []
        orig = self.compiled.state
        for dcc, dr in deps:
            if (dcc.kind != "linkderef"
                    and orig.data_for(dcc.table).grid[dr][dcc.ci] is Missing
                    and (dcc.table, dcc.name) not in self.deps):
                dropped.append((dcc, dr))
            else:
                live.append((dcc, dr))
        deps = live
        self._resample_cell_inner(cc, ri, deps, constraint)
        for dcc, dr in dropped:
            self._resample_cell(dcc, dr)

    def _resample_cell_inner(self, cc: CompiledColumn, ri: int, deps, constraint):
        if constraint is not None:
            self.grids[cc.table][ri][cc.ci] = constraint
            if cc.kind == "discrete":
                probs = np.zeros(cc.n)
                probs[constraint] = 1.0
                self._site_probs[(cc.key, ri)] = probs
            return
        if cc.kind == "discrete":
            cfg = self._resolve_config(cc, ri)
            prior = self.params[cc.key][cfg]["p"] if cfg is not None else np.full(
                cc.n, 1.0 / cc.n)
            lw = np.log(np.maximum(prior, 1e-300))
            if deps:
                cell = self.grids[cc.table][ri]
                for v in range(cc.n):
                    cell[cc.ci] = v
                    lw[v] += sum(self._cell_loglik(dcc, dr) for dcc, dr in deps)
            lw -= logsumexp(lw)
            probs = np.exp(lw)
            probs /= probs.sum()
            v = int(np.searchsorted(np.cumsum(probs), self.rng.random(), side="right"))
            v = min(v, cc.n - 1)
            self.grids[cc.table][ri][cc.ci] = v
            self._site_probs[(cc.key, ri)] = probs
            return

        # real-valued cell
        cfg = self._resolve_config(cc, ri)
        if cc.kind == "gaussian":
            g = self.params[cc.key][cfg]
            prior_mean, prior_prec = g["mu"], g["tau"]
        else:
            g = self.params[cc.key][cfg]
            x = _as_float(self.grids[cc.table][ri][cc.dom_ci])
            prior_mean, prior_prec = _poly(g["w"], x), g["tau"]
        lin_deps = []
        general = False
        for dcc, dr in deps:
            if dcc.kind == "polyreg" and dcc.degree == 1:
                dcfg = self._resolve_config(dcc, dr)
                dg = self.params[dcc.key][dcfg]
                y = _as_float(self.grids[dcc.table][dr][dcc.ci])
                lin_deps.append((dg["w"][0], dg["w"][1], dg["tau"], y))
            else:
                general = True
        if not general:
            prec = prior_prec
            num = prior_prec * prior_mean
            for w0, w1, tau, y in lin_deps:
                prec += tau * w1 * w1
                num += tau * w1 * (y - w0)
            mean = num / prec
            v = mean + float(self.rng.standard_normal()) / math.sqrt(prec)
            self.grids[cc.table][ri][cc.ci] = v
            return

        def logdens(x_val: float) -> float:
            self.grids[cc.table][ri][cc.ci] = x_val
            d = x_val - prior_mean
            out = 0.5 * math.log(prior_prec) - 0.5 * prior_prec * d * d
            for dcc, dr in deps:
                out += self._cell_loglik(dcc, dr)
            return out

        cur = _as_float(self.grids[cc.table][ri][cc.ci])
        v = _slice_sample(logdens, cur, 1.0 / math.sqrt(prior_prec), self.rng)
        self.grids[cc.table][ri][cc.ci] = v

    # -- collection ---------------------------------------------------------

    def _collect(self):
        self.kept += 1
        for cc, ri in self.sites:
            if cc.kind == "discrete":
                self.cell_acc[(cc, ri)] += self._site_probs.get(
                    (cc.key, ri), np.full(cc.n, 1.0 / cc.n))
            else:
                v = _as_float(self.grids[cc.table][ri][cc.ci])
                acc = self.cell_acc[(cc, ri)]
                acc[0] += v
                acc[1] += v * v
        for cc in self.compiled.columns:
            if cc.kind == "linkderef":
                continue
            acc = self.param_acc.setdefault(cc.key, {})
            for cfg, g in self.params[cc.key].items():
                dst = acc.setdefault(cfg, {})
                if cc.kind == "discrete":
                    _acc_vec(dst, "probs", g["p"])
                elif cc.kind == "gaussian":
                    _acc_scalar(dst, "mean", g["mu"])
                    _acc_scalar(dst, "prec", g["tau"])
                else:
                    # kinematics-style parameterization: degree 1 is b + a·x,
                    # degree 2 is c + b·x + (a/2)·x²
                    if cc.degree == 1:
                        _acc_scalar(dst, "b", float(g["w"][0]))
                        _acc_scalar(dst, "a", float(g["w"][1]))
                    else:
                        _acc_scalar(dst, "c", float(g["w"][0]))
                        _acc_scalar(dst, "b", float(g["w"][1]))
                        _acc_scalar(dst, "a", 2.0 * float(g["w"][2]))
                    _acc_scalar(dst, "noise_prec", g["tau"])

    def run(self) -> InferenceResult:
        # warm start: alternate fitting parameters to observed cells only with
        # imputation, so early imputations cannot collapse the noise precisions
        for _ in range(10):
            self._draw_params(observed_only=True)
            for cc, ri in self.sites:
                self._resample_cell(cc, ri)
        total = self.cfg.burnin + self.cfg.samples * self.cfg.thin
        for it in range(total):
            self._draw_params()
            for cc, ri in self.sites:
                self._resample_cell(cc, ri)
            if it >= self.cfg.burnin and (it - self.cfg.burnin) % self.cfg.thin == 0:
                self._collect()
        return self._result()

    def _result(self) -> InferenceResult:
        n = self.kept
        summaries: dict = {}
        for key, groups in self.param_acc.items():
            out = {}
            for cfg, acc in groups.items():
                entry = {}
                for nm, (s, ss, is_vec) in acc.items():
                    if is_vec:
                        mean = s / n
                        var = np.maximum(ss / n - mean ** 2, 0.0)
                        entry[nm] = {"mean": tuple(mean), "variance": tuple(var)}
                    else:
                        mean = s / n
                        var = max(ss / n - mean * mean, 0.0)
                        entry[nm] = {"mean": mean, "variance": var}
                out[cfg] = entry
            summaries[f"{key[0]}.{key[1]}"] = out

        marginals: dict = {}
        state = self.compiled.state
        site_index = {(cc.key, ri): (cc, ri) for cc, ri in self.sites}
        for cc in self.compiled.columns:
            dt = state.data_for(cc.table)
            for ri, row in enumerate(dt.grid):
                v = row[cc.ci]
                loc = (cc.table, ri, cc.name)
                if v is not Missing:
                    marginals[loc] = PointMass(v)
                    continue
                if cc.kind == "linkderef":
                    lv = row[cc.link_ci]
                    tname = state.schema.table(cc.target_table).columns[cc.target_ci].name
                    tv = state.data_for(cc.target_table).grid[lv][cc.target_ci]
                    if tv is not Missing:
                        marginals[loc] = PointMass(tv)
                    else:
                        tcc = self.compiled.by_key.get((cc.target_table, tname))
                        if tcc is not None and (tcc, lv) in self.cell_acc:
                            marginals[loc] = self._site_marginal(tcc, lv)
                        else:
                            marginals[loc] = PointMass(Missing)
                    continue
                marginals[loc] = self._site_marginal(cc, ri)
        return InferenceResult(summaries, marginals)

    def _site_marginal(self, cc: CompiledColumn, ri: int):
        acc = self.cell_acc[(cc, ri)]
        n = self.kept
        if cc.kind == "discrete":
            probs = np.asarray(acc) / n
            probs = probs / probs.sum()
            return DiscreteM(tuple(probs))
        mean = acc[0] / n
        var = max(acc[1] / n - mean * mean, 0.0)
        return GaussianM(mean, var)


def _acc_scalar(dst: dict, name: str, v: float):
    if name not in dst:
        dst[name] = [0.0, 0.0, False]
    dst[name][0] += v
    dst[name][1] += v * v


def _acc_vec(dst: dict, name: str, v: np.ndarray):
    if name not in dst:
        dst[name] = [np.zeros_like(v), np.zeros_like(v), True]
    dst[name][0] += v
    dst[name][1] += v * v


def _poly(w: np.ndarray, x: float) -> float:
    out = 0.0
    for c in reversed(w):
        out = out * x + c
    return float(out)


def _slice_sample(logdens, x0: float, w: float, rng, max_steps: int = 50) -> float:
    """Univariate slice sampler with stepping out and shrinkage (Neal 2003)."""
    y0 = logdens(x0)
    log_u = y0 + math.log(max(rng.random(), 1e-300))
    left = x0 - w * rng.random()
    right = left + w
    steps = max_steps
    while steps > 0 and logdens(left) > log_u:
        left -= w
        steps -= 1
    steps = max_steps
    while steps > 0 and logdens(right) > log_u:
        right += w
        steps -= 1
    for _ in range(200):
        x1 = left + (right - left) * rng.random()
        if logdens(x1) > log_u:
            return x1
        if x1 < x0:
            left = x1
        else:
            right = x1
    return x0


def gibbs_infer(vs: ValidState, cfg: InferenceConfig | None = None) -> InferenceResult:
    """Posterior parameter summaries and per-missing-cell marginals by
    conjugate Gibbs sampling. Deterministic per (state, config)."""
    if cfg is None:
        cfg = InferenceConfig()
    compiled = compile_model(vs)
    return _Sampler(compiled, cfg).run()


# ---------------------------------------------------------------------------
# Closed-form discrete evidence


def _evidence_value(state: State) -> float:
    total = 0.0
    compiled = compile_model(ValidState(state))
    for cc in compiled.columns:
        if cc.kind != "discrete":
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"log evidence needs fully observed discrete models; "
                          f"column {cc.name!r} is {cc.kind}; switch to cross-validation",
                          (cc.table, cc.name))
        dt = state.data_for(cc.table)
        sampler_free = {}
        for ri, row in enumerate(dt.grid):
            v = row[cc.ci]
            if v is Missing:
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              f"log evidence needs fully observed data; column {cc.name!r} "
                              "has missing cells; switch to cross-validation",
                              (cc.table, cc.name))
            cfg = _observed_config(compiled, cc, ri)
            counts = sampler_free.setdefault(cfg, np.zeros(cc.n))
            counts[v] += 1
        a = cc.alpha
        a_sum = a.sum()
        for counts in sampler_free.values():
            total += float(gammaln(a_sum) - gammaln(a_sum + counts.sum())
                           + (gammaln(a + counts) - gammaln(a)).sum())
    return total


def _observed_config(compiled: CompiledModel, cc: CompiledColumn, ri: int) -> tuple:
    cfg = []
    for dim in cc.dims:
        cur_t, cur_r = cc.table, ri
        for (tbl, lci, nxt) in dim.steps:
            v = compiled.state.data_for(cur_t).grid[cur_r][lci]
            if v is Missing:
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              "log evidence needs observed index columns",
                              (cc.table, cc.name))
            cur_t, cur_r = nxt, v
        v = compiled.state.data_for(dim.final_table).grid[cur_r][dim.final_ci]
        if v is Missing:
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          "log evidence needs observed index columns",
                          (cc.table, cc.name))
        cfg.append(v)
    return tuple(cfg)


def score_log_evidence() -> Op:
    """Exact log marginal likelihood of the observed data under the current
    model; defined for fully observed (indexed) discrete models."""
    def step(vs: ValidState):
        try:
            compile_model(vs)
        except OpError as e:
            if "no modeled columns" in e.message:
                return 0.0, vs  # probability 1 for the empty model
            raise
        return _evidence_value(vs.state), vs
    return Op(step)


# ---------------------------------------------------------------------------
# Forward sampling


def sample_dataset(vs: ValidState, true_params: dict, n_rows, seed: int = 0):
    """Forward-sample a dataset ancestrally in dependency order.

    ``true_params`` maps "table.col" to a parameter assignment:
      discrete: {"probs": [..]} or {"probs": {config: [..]}}
      gaussian: {"mean": m, "prec": t} (optionally per config)
      polyreg:  {"coeffs": [w0..wd], "noise_prec": t}
      input:    {"values": [..]}
    ``n_rows`` is a row count or a {table: count} mapping; tables absent from
    the mapping keep their existing data. Latent columns are sampled
    internally but emitted as Missing. Deterministic per seed.
    """
    from .core import DataTable

    state = vs.state
    rng = np.random.Generator(np.random.PCG64(seed))
    if isinstance(n_rows, int):
        counts = {t.name: n_rows for t in state.schema.tables}
    else:
        counts = dict(n_rows)
    work: dict[str, list[list]] = {}
    out: list[DataTable] = []
    for t in state.schema.tables:
        dt = state.data_for(t.name)
        if t.name not in counts:
            work[t.name] = [list(r) for r in dt.grid]
            out.append(dt)
            continue
        n = counts[t.name]
        rows = [[Missing] * len(t.columns) for _ in range(n)]
        work[t.name] = rows
        for ci, c in enumerate(t.columns):
            key = f"{t.name}.{c.name}"
            spec = true_params.get(key)
            if isinstance(c.model, Input):
                if spec is not None and "values" in spec:
                    vals = spec["values"]
                    if len(vals) != n:
                        raise OpError(ErrorKind.PARSE_ERROR,
                                      f"{key}: {len(vals)} values for {n} rows")
                    for ri in range(n):
                        rows[ri][ci] = vals[ri]
                elif c.is_latent:
                    pass
                else:
                    raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                                  f"input column {key} needs provided values",
                                  (t.name, c.name))
                continue
            base, raw_dims = indexed_chain(c.model)
            for ri in range(n):
                cfg = _work_config(state, work, t, ci, ri, raw_dims)
                if isinstance(base, CDiscrete):
                    p = _group_param(spec, "probs", cfg, key)
                    rows[ri][ci] = int(rng.choice(len(p), p=np.asarray(p) / np.sum(p)))
                elif isinstance(base, CGaussian):
                    m = _group_param(spec, "mean", cfg, key)
                    tau = _group_param(spec, "prec", cfg, key)
                    rows[ri][ci] = float(m + rng.standard_normal() / math.sqrt(tau))
                elif isinstance(base, PolyReg):
                    w = _group_param(spec, "coeffs", cfg, key)
                    tau = _group_param(spec, "noise_prec", cfg, key)
                    x = _as_float(rows[ri][t.col_index(base.dom_column)])
                    rows[ri][ci] = float(_poly(np.asarray(w, dtype=float), x)
                                         + rng.standard_normal() / math.sqrt(tau))
                elif isinstance(base, LinkDeref):
                    lci = t.col_index(base.link_column)
                    lv = rows[ri][lci]
                    if lv is Missing:
                        raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                                      f"{key}: cannot dereference a missing link",
                                      (t.name, c.name))
                    tgt = state.schema.table(t.column(base.link_column).ctype.table)
                    rows[ri][ci] = work[tgt.name][lv][tgt.col_index(base.target_column)]
                else:
                    raise OpError(ErrorKind.UNSUPPORTED_MODEL, f"cannot sample {base!r}",
                                  (t.name, c.name))
        emitted = [tuple(Missing if t.columns[ci].is_latent else row[ci]
                         for ci in range(len(t.columns))) for row in rows]
        out.append(DataTable(t.name, tuple(c.name for c in t.columns), tuple(emitted)))
    return tuple(out)


def _work_config(state: State, work: dict, t, ci: int, ri: int, raw_dims) -> tuple:
    cfg = []
    for path, icol in raw_dims:
        cur_t, cur_r = t, ri
        for link_name in path:
            lv = work[cur_t.name][cur_r][cur_t.col_index(link_name)]
            if lv is Missing:
                raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                              f"missing link {link_name!r} while sampling", (cur_t.name, link_name))
            cur_t = state.schema.table(cur_t.column(link_name).ctype.table)
            cur_r = lv
        v = work[cur_t.name][cur_r][cur_t.col_index(icol)]
        if v is Missing:
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"missing index value {icol!r} while sampling", (cur_t.name, icol))
        cfg.append(v)
    return tuple(cfg)


def _group_param(spec: dict | None, name: str, cfg: tuple, key: str):
    if spec is None or name not in spec:
        raise OpError(ErrorKind.UNSUPPORTED_MODEL, f"no true parameter {name!r} for {key}")
    val = spec[name]
    if isinstance(val, dict):
        if cfg not in val:
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"no true parameter {name!r} for {key} config {cfg}")
        return val[cfg]
    return val
