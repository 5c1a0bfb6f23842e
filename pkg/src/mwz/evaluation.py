"""Model scoring and search: k-fold cross-validation, coordinate-descent
cluster-count sweeps, and missing-data degradation analysis.

All routines are read-only state operations: they evaluate models on
temporarily blanked copies of the data and return reports, leaving the
input state untouched.  Everything is deterministic per seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DataTable, ErrorKind, LinkT, Missing, Op, OpError, Upto, ValidState,
    revalidate, replace,
)
from .inference import (
    DiscreteM, GaussianM, InferenceConfig, PointMass, gibbs_infer,
)
from .model_ops import InfernoHandle, CLUSTER_COL, set_cluster_count


@dataclass(frozen=True)
class CVReport:
    column: str
    k: int
    fold_errors: tuple[float, ...]
    mean_error: float
    metric: str  # "RMSE" | "ErrorRate"


@dataclass(frozen=True)
class SweepReport:
    chosen: dict  # leaf table -> cluster count
    trace: tuple  # of (table, k, mean_error)
    best_error: float


@dataclass(frozen=True)
class MissingReport:
    grid: tuple  # of (m_cells, round 1..5, rmse)


# ---------------------------------------------------------------------------


def _blank_cells(vs: ValidState, cells) -> ValidState:
    """Copy of the state with the given (table, row, col) cells set Missing."""
    state = vs.state
    by_table: dict[str, list[tuple[int, str]]] = {}
    for t, r, c in cells:
        by_table.setdefault(t, []).append((r, c))
    new_data = []
    for dt in state.data:
        if dt.tablename not in by_table:
            new_data.append(dt)
            continue
        t = state.schema.table(dt.tablename)
        grid = [list(row) for row in dt.grid]
        for r, c in by_table[dt.tablename]:
            grid[r][t.col_index(c)] = Missing
        new_data.append(DataTable(dt.tablename, dt.colnames,
                                  tuple(tuple(row) for row in grid)))
    return revalidate(replace(state, data=tuple(new_data)))


def _predict(marginal):
    if isinstance(marginal, GaussianM):
        return marginal.mean
    if isinstance(marginal, DiscreteM):
        return marginal.argmax()
    if isinstance(marginal, PointMass):
        return marginal.value
    raise OpError(ErrorKind.UNSUPPORTED_MODEL, f"no prediction for {marginal!r}")


def _is_discrete_type(ctype) -> bool:
    return isinstance(ctype, (Upto, LinkT))


def cross_validate_kfold_rmse(table: str, col: str, k: int,
                              cfg: InferenceConfig | None = None,
                              seed: int = 0) -> Op:
    """k-fold cross-validation of one modeled column: rows with an observed
    value are seeded-shuffled into k near-equal folds; each fold is blanked,
    the model refit, and the cells predicted (posterior mean for real
    columns, argmax for discrete). Metric is RMSE for real columns and 0-1
    error rate for discrete ones."""
    if cfg is None:
        cfg = InferenceConfig()

    def step(vs: ValidState):
        state = vs.state
        t = state.schema.table(table)
        c = t.column(col)
        dt = state.data_for(table)
        ci = t.col_index(col)
        eligible = [ri for ri, row in enumerate(dt.grid) if row[ci] is not Missing]
        if k < 1 or len(eligible) < k:
            raise OpError(ErrorKind.MISSING_TARGET,
                          f"need at least {k} rows with observed {col!r}; "
                          f"have {len(eligible)}", (table, col))
        rng = np.random.Generator(np.random.PCG64(seed))
        order = [eligible[i] for i in rng.permutation(len(eligible))]
        folds = [order[i::k] for i in range(k)]
        discrete = _is_discrete_type(c.ctype)
        errors = []
        for fi, fold in enumerate(folds):
            held = [(table, ri, col) for ri in fold]
            blanked = _blank_cells(vs, held)
            fold_cfg = replace(cfg, seed=cfg.seed + fi)
            result = gibbs_infer(blanked, fold_cfg)
            if discrete:
                wrong = sum(1 for ri in fold
                            if _predict(result.cell_marginals[(table, ri, col)])
                            != dt.grid[ri][ci])
                errors.append(wrong / len(fold))
            else:
                sq = [(float(_predict(result.cell_marginals[(table, ri, col)]))
                       - float(dt.grid[ri][ci])) ** 2 for ri in fold]
                errors.append(math.sqrt(sum(sq) / len(sq)))
        report = CVReport(col, k, tuple(errors), sum(errors) / len(errors),
                          "ErrorRate" if discrete else "RMSE")
        return report, vs
    return Op(step)


# ---------------------------------------------------------------------------


def sweep_number_clusters(handle: InfernoHandle, target_table: str,
                          target_col: str, k_min: int = 1, k_max: int = 6,
                          folds: int = 5, cfg: InferenceConfig | None = None,
                          seed: int = 0) -> Op:
    """Coordinate descent over the latent cluster counts of the handle's leaf
    tables: per table, each count in [k_min, k_max] is scored by k-fold
    cross-validation of the target column and the argmin kept (ties break
    toward the smaller count); passes repeat until no count changes."""
    if cfg is None:
        cfg = InferenceConfig()
    leaves = list(handle.leaf_tables)
    if k_min < 1 or k_max < k_min:
        raise OpError(ErrorKind.PARSE_ERROR, f"bad cluster range [{k_min}, {k_max}]")

    def step(vs: ValidState):
        chosen = {}
        for leaf in leaves:
            cur = vs.state.schema.table(leaf).column(CLUSTER_COL).ctype.n
            chosen[leaf] = min(max(cur, k_min), k_max)
        cache: dict[tuple, float] = {}
        trace = []

        def error_of(config: dict) -> float:
            key = tuple(config[l] for l in leaves)
            if key in cache:
                return cache[key]
            cur = vs
            for leaf in leaves:
                _, cur = set_cluster_count(leaf, config[leaf]).run(cur)
            report, _ = cross_validate_kfold_rmse(
                target_table, target_col, folds, cfg, seed).run(cur)
            cache[key] = report.mean_error
            return report.mean_error

        max_passes = (k_max - k_min + 1) ** len(leaves)
        for _pass in range(max_passes + 1):
            changed = False
            for leaf in leaves:
                best_k, best_err = None, None
                for k in range(k_min, k_max + 1):
                    trial = dict(chosen)
                    trial[leaf] = k
                    err = error_of(trial)
                    trace.append((leaf, k, err))
                    if best_err is None or err < best_err:
                        best_k, best_err = k, err
                if best_k != chosen[leaf]:
                    chosen[leaf] = best_k
                    changed = True
            if not changed:
                break
        else:
            raise OpError(ErrorKind.UNSUPPORTED_MODEL,
                          f"cluster sweep failed to settle within {max_passes} passes")
        return SweepReport(dict(chosen), tuple(trace), error_of(chosen)), vs
    return Op(step)


# ---------------------------------------------------------------------------


def missing_data_analysis(cols, m_grid, cfg: InferenceConfig | None = None,
                          seed: int = 0) -> Op:
    """Degradation curve: for each m in m_grid, five independent rounds each
    hold out m uniformly random observed cells across the given columns,
    refit, and report one pooled RMSE (discrete cells contribute the squared
    distance between true and predicted category index)."""
    if cfg is None:
        cfg = InferenceConfig()
    cols = [tuple(c) for c in cols]

    def step(vs: ValidState):
        state = vs.state
        pool = []
        for table, col in cols:
            t = state.schema.table(table)
            ci = t.col_index(col)
            dt = state.data_for(table)
            for ri, row in enumerate(dt.grid):
                if row[ci] is not Missing:
                    pool.append((table, ri, col))
        if m_grid and max(m_grid) > len(pool):
            raise OpError(ErrorKind.MISSING_TARGET,
                          f"cannot hold out {max(m_grid)} cells; only "
                          f"{len(pool)} observed")
        rng = np.random.Generator(np.random.PCG64(seed))
        grid_rows = []
        round_no = 0
        for m in m_grid:
            for rnd in range(1, 6):
                round_no += 1
                if m == 0:
                    grid_rows.append((m, rnd, 0.0))
                    continue
                picks = [pool[i] for i in rng.choice(len(pool), size=m, replace=False)]
                blanked = _blank_cells(vs, picks)
                result = gibbs_infer(blanked, replace(cfg, seed=cfg.seed + round_no))
                sq = 0.0
                for (table, ri, col) in picks:
                    t = state.schema.table(table)
                    truth = state.data_for(table).grid[ri][t.col_index(col)]
                    pred = _predict(result.cell_marginals[(table, ri, col)])
                    sq += (float(pred) - float(truth)) ** 2
                grid_rows.append((m, rnd, math.sqrt(sq / m)))
        return MissingReport(tuple(grid_rows)), vs
    return Op(step)
