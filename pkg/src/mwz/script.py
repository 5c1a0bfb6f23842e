"""Line-oriented command language over the operation library.

Grammar: one command per line; ``#`` starts a comment; tokens are
whitespace-separated with double-quoted strings for names containing
spaces.  A command is either ``Verb args...`` or ``name = Verb args...``;
the assigned form prints ``name = value`` with the operation's result.

Meta-verbs: ``load path [table]``, ``save dir``, ``snapshot name``,
``restore name``, ``print``.
"""
from __future__ import annotations

import shlex
from dataclasses import dataclass, field

from .core import ErrorKind, LinkT, Op, OpError, Upto, ValidState, empty_state, validate_state
from .inference import InferenceConfig, score_log_evidence
from .evaluation import (
    cross_validate_kfold_rmse, missing_data_analysis, sweep_number_clusters,
)
from .io import load_csv, save_state
from .model_ops import (
    InfernoHandle, exact, exact_infer, index, inferno, lin_reg, model,
    model_discrete, model_gaussian, naive_bayes, quad_reg, set_cluster_count,
)
from .schema_doc import render_schema
from .typing_ops import (
    ToReal, ToUpto, create_table_uniques, new_column, type_cast, type_infer,
    type_infer_table, type_nominal,
)

SCRIPT_VERBS = (
    "TypeReal", "TypeUpto", "TypeNominal", "TypeInfer", "TypeInferTable",
    "NewColumn", "CreateTableUniques", "Link", "ModelDiscrete",
    "ModelGaussian", "Model", "Index", "LinReg", "QuadReg", "Exact",
    "ExactInfer", "NaiveBayes", "Inferno", "SetClusterCount",
    "ScoreLogEvidence", "CrossValidate_kFold_RMSE", "SweepNumberClusters",
    "MissingDataAnalysis", "GetState",
)
META_VERBS = ("load", "save", "snapshot", "restore", "print")


@dataclass
class ScriptCommand:
    verb: str
    args: list[str]
    assign: str | None = None
    line: int = 0


def parse_script(text: str) -> list[ScriptCommand]:
    commands = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True, posix=True)
        except ValueError as e:
            raise OpError(ErrorKind.PARSE_ERROR, f"line {lineno}: {e}")
        if not tokens:
            continue
        assign = None
        if len(tokens) >= 3 and tokens[1] == "=":
            assign = tokens[0]
            tokens = tokens[2:]
        verb, args = tokens[0], tokens[1:]
        if verb not in SCRIPT_VERBS and verb not in META_VERBS:
            raise OpError(ErrorKind.PARSE_ERROR,
                          f"line {lineno}: unknown verb {verb!r}")
        commands.append(ScriptCommand(verb, args, assign, lineno))
    return commands


def _arity(cmd: ScriptCommand, n_min: int, n_max: int | None = None):
    n_max = n_min if n_max is None else n_max
    if not (n_min <= len(cmd.args) <= (10**9 if n_max < 0 else n_max)):
        raise OpError(ErrorKind.PARSE_ERROR,
                      f"line {cmd.line}: {cmd.verb} takes "
                      f"{n_min}{'' if n_max == n_min else '+'} args, "
                      f"got {len(cmd.args)}")


def _int(cmd: ScriptCommand, tok: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise OpError(ErrorKind.PARSE_ERROR,
                      f"line {cmd.line}: expected an integer, got {tok!r}")


@dataclass
class ScriptRunner:
    """Executes parsed commands sequentially over one evolving state."""
    seed: int = 0
    cfg: InferenceConfig = None
    vs: ValidState = field(default_factory=empty_state)
    snapshots: dict = field(default_factory=dict)
    last_inferno: InfernoHandle | None = None
    transcript: list = field(default_factory=list)

    def __post_init__(self):
        if self.cfg is None:
            self.cfg = InferenceConfig(burnin=200, samples=500, seed=self.seed)
        if not isinstance(self.vs, ValidState):
            self.vs = validate_state(self.vs.schema, self.vs.data)

    def say(self, text: str):
        self.transcript.append(text)

    def execute(self, cmd: ScriptCommand):
        result = self._dispatch(cmd)
        if cmd.assign is not None:
            self.say(f"{cmd.assign} = {_fmt(result)}")
        return result

    def run(self, commands) -> None:
        for cmd in commands:
            self.execute(cmd)

    def _op(self, op: Op):
        result, self.vs = op.run(self.vs)
        return result

    def _dispatch(self, cmd: ScriptCommand):
        v, a = cmd.verb, cmd.args
        if v == "load":
            _arity(cmd, 1, 2)
            return self._op(load_csv(a[0], a[1] if len(a) == 2 else "tmain"))
        if v == "save":
            _arity(cmd, 1)
            return self._op(save_state(a[0]))
        if v == "snapshot":
            _arity(cmd, 1)
            self.snapshots[a[0]] = self.vs
            return None
        if v == "restore":
            _arity(cmd, 1)
            if a[0] not in self.snapshots:
                raise OpError(ErrorKind.MISSING_TARGET,
                              f"line {cmd.line}: no snapshot {a[0]!r}")
            self.vs = self.snapshots[a[0]]
            return None
        if v in ("print", "GetState"):
            _arity(cmd, 0)
            doc = render_schema(self.vs.state.schema)
            self.say(doc.rstrip("\n"))
            return doc
        if v == "TypeReal":
            _arity(cmd, 2)
            return self._op(type_cast(a[0], a[1], ToReal()))
        if v == "TypeUpto":
            _arity(cmd, 3)
            return self._op(type_cast(a[0], a[1], ToUpto(_int(cmd, a[2]))))
        if v == "TypeNominal":
            _arity(cmd, 2)
            return self._op(type_nominal(a[0], a[1]))
        if v == "TypeInfer":
            _arity(cmd, 2)
            return self._op(type_infer(a[0], a[1]))
        if v == "TypeInferTable":
            _arity(cmd, 1)
            return self._op(type_infer_table(a[0]))
        if v == "NewColumn":
            _arity(cmd, 3)
            kind = _parse_new_type(cmd, a[2])
            return self._op(new_column(a[0], a[1], kind))
        if v == "CreateTableUniques":
            _arity(cmd, 2, -1)
            return self._op(create_table_uniques(a[0], a[1:]))
        if v == "Link":
            _arity(cmd, 4, -1)
            primary, foreign, link_col = a[0], a[1], a[2]
            pairs = []
            for tok in a[3:]:
                f, _, p = tok.partition(":")
                pairs.append((f, p or f))
            from .typing_ops import link as link_op
            return self._op(link_op(primary, pairs, foreign, link_col))
        if v == "ModelDiscrete":
            _arity(cmd, 2)
            return self._op(model_discrete(a[0], a[1]))
        if v == "ModelGaussian":
            _arity(cmd, 2)
            return self._op(model_gaussian(a[0], a[1]))
        if v == "Model":
            _arity(cmd, 2)
            return self._op(model(a[0], a[1]))
        if v == "Index":
            _arity(cmd, 3)
            parts = a[2].split(".")
            return self._op(index(a[0], a[1], parts[:-1], parts[-1]))
        if v == "LinReg":
            _arity(cmd, 3)
            return self._op(lin_reg(a[0], a[1], a[2]))
        if v == "QuadReg":
            _arity(cmd, 3)
            return self._op(quad_reg(a[0], a[1], a[2]))
        if v == "Exact":
            _arity(cmd, 3)
            return self._op(exact(a[0], a[1], a[2]))
        if v == "ExactInfer":
            _arity(cmd, 2, -1)
            return self._op(exact_infer(a[0], a[1:]))
        if v == "NaiveBayes":
            _arity(cmd, 2)
            return self._op(naive_bayes(a[0], a[1]))
        if v == "Inferno":
            _arity(cmd, 0, 1)
            k = _int(cmd, a[0]) if a else 4
            self.last_inferno = self._op(inferno(k))
            return self.last_inferno
        if v == "SetClusterCount":
            _arity(cmd, 2)
            return self._op(set_cluster_count(a[0], _int(cmd, a[1])))
        if v == "ScoreLogEvidence":
            _arity(cmd, 0)
            return self._op(score_log_evidence())
        if v == "CrossValidate_kFold_RMSE":
            _arity(cmd, 3)
            report = self._op(cross_validate_kfold_rmse(
                a[0], a[1], _int(cmd, a[2]), self.cfg, seed=self.seed))
            return report.mean_error
        if v == "SweepNumberClusters":
            _arity(cmd, 2, 5)
            if self.last_inferno is None:
                raise OpError(ErrorKind.MISSING_TARGET,
                              f"line {cmd.line}: SweepNumberClusters needs a "
                              "prior Inferno")
            k_min = _int(cmd, a[2]) if len(a) > 2 else 1
            k_max = _int(cmd, a[3]) if len(a) > 3 else 6
            folds = _int(cmd, a[4]) if len(a) > 4 else 5
            report = self._op(sweep_number_clusters(
                self.last_inferno, a[0], a[1], k_min, k_max, folds,
                self.cfg, seed=self.seed))
            self.say("chosen clusters: " + ", ".join(
                f"{t}={k}" for t, k in sorted(report.chosen.items())))
            return report.best_error
        if v == "MissingDataAnalysis":
            _arity(cmd, 2, -1)
            m_grid = [_int(cmd, tok) for tok in a[0].split(",")]
            cols = []
            for tok in a[1:]:
                table, _, col = tok.partition(".")
                if not col:
                    raise OpError(ErrorKind.PARSE_ERROR,
                                  f"line {cmd.line}: expected table.column, "
                                  f"got {tok!r}")
                cols.append((table, col))
            report = self._op(missing_data_analysis(
                cols, m_grid, self.cfg, seed=self.seed))
            for m, rnd, rmse in report.grid:
                self.say(f"holdout m={m} round={rnd} rmse={rmse:.4f}")
            return report
        raise OpError(ErrorKind.PARSE_ERROR,
                      f"line {cmd.line}: unknown verb {v!r}")


def _parse_new_type(cmd: ScriptCommand, tok: str):
    if tok.startswith("upto(") and tok.endswith(")"):
        return Upto(_int(cmd, tok[5:-1]))
    if tok.startswith("link(") and tok.endswith(")"):
        return LinkT(tok[5:-1])
    raise OpError(ErrorKind.PARSE_ERROR,
                  f"line {cmd.line}: expected upto(N) or link(Table), got {tok!r}")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return repr(value)


def run_script_text(text: str, seed: int = 0,
                    cfg: InferenceConfig | None = None) -> ScriptRunner:
    runner = ScriptRunner(seed=seed, cfg=cfg)
    runner.run(parse_script(text))
    return runner
