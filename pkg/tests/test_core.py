"""State, validity and operation-composition behavior."""
import copy

import numpy as np
import pytest

from mwz import (
    CGaussian, Column, DataTable, ErrorKind, INPUT, INT_T, Indexed, LinkT,
    Missing, Op, OpError, REAL_T, STR_T, Schema, Table, Upto, ValidState,
    cdiscrete, empty_state, for_each, get_state, pure, sequence, unit,
    validate_state,
)
from opgen import random_op, random_state


def run_or_err(op, vs):
    try:
        return ("ok", op.run(vs))
    except OpError as e:
        return ("err", e.kind)


# ---------------------------------------------------------------------------
# Monad laws


class TestMonadLaws:
    def test_laws_on_random_instances(self):
        rng = np.random.default_rng(42)
        states = [random_state(rng, max_rows=12) for _ in range(40)]
        checked = 0
        while checked < 1000:
            vs = states[int(rng.integers(len(states)))]
            x = int(rng.integers(10))
            fop = random_op(rng, vs)
            f = lambda v: fop.map(lambda r: (v, r))
            g = lambda v: pure(("g", v))
            op = random_op(rng, vs)

            # left identity: pure(x).bind(f) == f(x)
            assert run_or_err(pure(x).bind(f), vs) == run_or_err(f(x), vs)
            # right identity: op.bind(pure) == op
            assert run_or_err(op.bind(pure), vs) == run_or_err(op, vs)
            # associativity
            lhs = op.bind(f).bind(g)
            rhs = op.bind(lambda v: f(v).bind(g))
            assert run_or_err(lhs, vs) == run_or_err(rhs, vs)
            checked += 1

    def test_sequence_and_for_each(self):
        vs = random_state(np.random.default_rng(0))
        results, out = sequence([pure(1), pure(2), pure(3)]).run(vs)
        assert results == [1, 2, 3] and out == vs
        _, out = for_each([1, 2], lambda i: unit()).run(vs)
        assert out == vs

    def test_get_state_reads_without_change(self):
        vs = random_state(np.random.default_rng(1))
        (schema, data), out = get_state().run(vs)
        assert schema == vs.state.schema and data == vs.state.data
        assert out == vs


# ---------------------------------------------------------------------------
# Validity


def one_table(cols, rows):
    t = Table("t", tuple(cols))
    dt = DataTable("t", tuple(c.name for c in cols), tuple(rows))
    return Schema((t,)), (dt,)


class TestValidity:
    def test_duplicate_column_names_rejected(self):
        schema, data = one_table(
            [Column("a", INT_T), Column("a", INT_T)], [(1, 2)])
        with pytest.raises(OpError) as e:
            validate_state(schema, data)
        assert e.value.kind is ErrorKind.NAME_CONFLICT

    def test_duplicate_table_names_rejected(self):
        t = Table("t", (Column("a", INT_T),))
        dt = DataTable("t", ("a",), ((1,),))
        with pytest.raises(OpError) as e:
            validate_state(Schema((t, t)), (dt, dt))
        assert e.value.kind is ErrorKind.NAME_CONFLICT

    def test_schema_data_misalignment_rejected(self):
        t = Table("t", (Column("a", INT_T),))
        dt = DataTable("other", ("a",), ((1,),))
        with pytest.raises(OpError):
            validate_state(Schema((t,)), (dt,))

    def test_cell_type_conformance(self):
        schema, data = one_table([Column("a", Upto(2))], [(2,)])
        with pytest.raises(OpError) as e:
            validate_state(schema, data)
        assert e.value.kind is ErrorKind.TYPE_MISMATCH

    def test_missing_cells_conform(self):
        schema, data = one_table([Column("a", REAL_T)], [(Missing,)])
        validate_state(schema, data)

    def test_link_out_of_range_rejected(self):
        t0 = Table("t0", (Column("k", STR_T, INPUT, is_pk=True),))
        t1 = Table("t1", (Column("l", LinkT("t0")),))
        d0 = DataTable("t0", ("k",), (("x",),))
        d1 = DataTable("t1", ("l",), ((1,),))
        with pytest.raises(OpError):
            validate_state(Schema((t0, t1)), (d0, d1))

    def test_forward_reference_only(self):
        # a link may only point at an earlier table
        t0 = Table("t0", (Column("l", LinkT("t1")),))
        t1 = Table("t1", (Column("k", STR_T, INPUT, is_pk=True),))
        d0 = DataTable("t0", ("l",), ((0,),))
        d1 = DataTable("t1", ("k",), (("x",),))
        with pytest.raises(OpError):
            validate_state(Schema((t0, t1)), (d0, d1))

    def test_pk_uniqueness_float_bits(self):
        schema, data = one_table(
            [Column("a", REAL_T, INPUT, is_pk=True)], [(0.0,), (-0.0,)])
        # 0.0 and -0.0 differ bitwise, so both keys are allowed
        validate_state(schema, data)
        schema, data = one_table(
            [Column("a", REAL_T, INPUT, is_pk=True)], [(1.5,), (1.5,)])
        with pytest.raises(OpError) as e:
            validate_state(schema, data)
        assert e.value.kind is ErrorKind.KEY_VIOLATION

    def test_pk_uniqueness_ignores_missing(self):
        # only duplicate observed values violate key uniqueness
        schema, data = one_table(
            [Column("a", INT_T, INPUT, is_pk=True)], [(Missing,), (Missing,)])
        validate_state(schema, data)

    def test_model_type_compat(self):
        schema, data = one_table([Column("a", Upto(3), cdiscrete(2))],
                                 [(0,)])
        with pytest.raises(OpError) as e:
            validate_state(schema, data)
        assert e.value.kind is ErrorKind.TYPE_MISMATCH

    def test_gaussian_on_discrete_rejected(self):
        schema, data = one_table([Column("a", Upto(3), CGaussian())], [(0,)])
        with pytest.raises(OpError):
            validate_state(schema, data)

    def test_same_table_index_must_precede(self):
        cols = [Column("rain", Upto(2), Indexed(cdiscrete(2), (), "cloudy")),
                Column("cloudy", Upto(2), cdiscrete(2))]
        schema, data = one_table(cols, [(0, 0)])
        with pytest.raises(OpError) as e:
            validate_state(schema, data)
        assert e.value.kind is ErrorKind.CYCLE_DETECTED

    def test_missing_index_target_rejected(self):
        schema, data = one_table(
            [Column("a", Upto(2), Indexed(cdiscrete(2), (), "nope"))], [(0,)])
        with pytest.raises(OpError):
            validate_state(schema, data)

    def test_empty_state_is_valid(self):
        s = empty_state()
        validate_state(s.schema, s.data)


# ---------------------------------------------------------------------------
# Closure and atomicity


class TestClosure:
    def test_ops_preserve_validity_and_atomicity(self):
        rng = np.random.default_rng(7)
        states = [random_state(rng, max_rows=20) for _ in range(30)]
        for _ in range(400):
            vs = states[int(rng.integers(len(states)))]
            before = copy.deepcopy(vs)
            for _ in range(3):
                op = random_op(rng, vs)
                try:
                    _, out = op.run(vs)
                except OpError:
                    assert vs == before
                    continue
                validate_state(out.state.schema, out.state.data)
                assert vs == before  # input untouched either way
                vs, before = out, copy.deepcopy(out)

    def test_failure_is_atomic_mid_composition(self):
        vs = random_state(np.random.default_rng(3))
        boom = Op(lambda v: (_ for _ in ()).throw(
            OpError(ErrorKind.PARSE_ERROR, "boom")))
        composite = pure(1).then(boom)
        before = copy.deepcopy(vs)
        with pytest.raises(OpError):
            composite.run(vs)
        assert vs == before
