"""Interactive probabilistic model construction for tabular data.

States pair a typed, optionally modeled schema with in-memory tables;
operations are checked state transformers composed monadically; inference
is conjugate Gibbs sampling over the modeled columns.
"""
from .core import (
    CDiscrete, CGaussian, Column, DataTable, ErrorKind, INPUT, INT_T,
    Indexed, Input, IntT, LinkDeref, LinkT, Missing, Op, OpError, PolyReg,
    REAL_T, RealT, STR_T, Schema, State, StrT, Table, Upto, ValidState,
    cdiscrete, empty_state, for_each, get_state, pure, run_op, sequence,
    unit, validate_state,
)
from .typing_ops import (
    ToInt, ToReal, ToUpto, create_table_uniques, link, new_column,
    type_cast, type_infer, type_infer_table, type_nominal,
)
from .model_ops import (
    InfernoHandle, exact, exact_infer, index, inferno, lin_reg, model,
    model_discrete, model_gaussian, naive_bayes, poly_reg, quad_reg,
    set_cluster_count,
)
from .inference import (
    CompiledModel, DiscreteM, GaussianM, InferenceConfig, InferenceResult,
    PointMass, compile_model, gibbs_infer, sample_dataset,
    score_log_evidence,
)
from .evaluation import (
    CVReport, MissingReport, SweepReport, cross_validate_kfold_rmse,
    missing_data_analysis, sweep_number_clusters,
)
from .io import load_csv, load_state_dir, save_state, save_state_dir
from .schema_doc import (
    parse_schema, render_schema, schema_from_json, schema_to_json,
)
from .script import ScriptRunner, parse_script, run_script_text

__version__ = "0.1.0"
