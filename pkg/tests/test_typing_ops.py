"""Casting, nominal domains, linking and type inference."""
import pytest

from mwz import (
    Column, DataTable, ErrorKind, INPUT, INT_T, LinkT, Missing, OpError,
    REAL_T, STR_T, Schema, Table, Upto, validate_state,
)
from mwz.typing_ops import (
    ToInt, ToReal, ToUpto, create_table_uniques, link, new_column,
    type_cast, type_infer, type_infer_table, type_nominal,
)


def str_table(name, coldata):
    cols = tuple(Column(c, STR_T) for c, _ in coldata)
    rows = tuple(zip(*(vals for _, vals in coldata)))
    t = Table(name, cols)
    dt = DataTable(name, tuple(c for c, _ in coldata), rows)
    return validate_state(Schema((t,)), (dt,))


class TestCast:
    def test_to_real_parses_and_keeps_missing(self):
        vs = str_table("t", [("a", ["1.5", " 2 ", Missing])])
        _, out = type_cast("t", "a", ToReal()).run(vs)
        assert out.state.schema.table("t").column("a").ctype == REAL_T
        assert out.state.data_for("t").col("a") == [1.5, 2.0, Missing]

    def test_to_int_rejects_fraction(self):
        vs = str_table("t", [("a", ["1", "2.5"])])
        with pytest.raises(OpError) as e:
            type_cast("t", "a", ToInt()).run(vs)
        assert e.value.kind is ErrorKind.TYPE_MISMATCH

    def test_to_upto_range_checked(self):
        vs = str_table("t", [("a", ["0", "1", "2"])])
        _, out = type_cast("t", "a", ToUpto(3)).run(vs)
        assert out.state.schema.table("t").column("a").ctype == Upto(3)
        with pytest.raises(OpError):
            type_cast("t", "a", ToUpto(2)).run(vs)

    def test_cannot_cast_modeled_column(self):
        from mwz.model_ops import model_gaussian
        vs = str_table("t", [("a", ["1", "2"])])
        _, vs = type_cast("t", "a", ToReal()).run(vs)
        _, vs = model_gaussian("t", "a").run(vs)
        with pytest.raises(OpError) as e:
            type_cast("t", "a", ToReal()).run(vs)
        assert e.value.kind is ErrorKind.UNSUPPORTED_MODEL


class TestUniquesAndLink:
    def test_uniques_first_occurrence_order(self):
        vs = str_table("t", [("g", ["b", "a", "b", Missing, "c"])])
        name, out = create_table_uniques("t", ["g"]).run(vs)
        assert name == "T_g"
        dom = out.state.data_for("T_g")
        assert [r[0] for r in dom.grid] == ["b", "a", "c"]
        assert out.state.schema.table("T_g").column("g").is_pk
        # new table ordered before the source
        names = [t.name for t in out.state.schema.tables]
        assert names.index("T_g") < names.index("t")

    def test_uniques_name_collision_suffix(self):
        vs = str_table("t", [("g", ["a", "b"])])
        name1, vs = create_table_uniques("t", ["g"]).run(vs)
        name2, vs = create_table_uniques("t", ["g"]).run(vs)
        assert (name1, name2) == ("T_g", "T_g_2")

    def test_link_unmatched_tuple_fails(self):
        t0 = Table("dom", (Column("k", STR_T, INPUT, is_pk=True),))
        t1 = Table("t", (Column("k", STR_T),))
        d0 = DataTable("dom", ("k",), (("a",),))
        d1 = DataTable("t", ("k",), (("a",), ("zz",)))
        vs = validate_state(Schema((t0, t1)), (d0, d1))
        with pytest.raises(OpError) as e:
            link("dom", [("k", "k")], "t", "k").run(vs)
        assert e.value.kind is ErrorKind.KEY_VIOLATION

    def test_nominal_roundtrip_through_links(self):
        vs = str_table("t", [("g", ["x", "y", "x", Missing])])
        dom_name, out = type_nominal("t", "g").run(vs)
        t = out.state.schema.table("t")
        assert t.column("g").ctype == LinkT(dom_name)
        dom_rows = [r[0] for r in out.state.data_for(dom_name).grid]
        derefed = [Missing if v is Missing else dom_rows[v]
                   for v in out.state.data_for("t").col("g")]
        assert derefed == ["x", "y", "x", Missing]

    def test_nominal_on_upto_rejected(self):
        vs = str_table("t", [("g", ["0", "1"])])
        _, vs = type_cast("t", "g", ToUpto(2)).run(vs)
        with pytest.raises(OpError):
            type_nominal("t", "g").run(vs)


class TestInfer:
    def test_prefers_int_then_real_then_nominal(self):
        vs = str_table("t", [("a", ["1", "2"]), ("b", ["1.5", "2"]),
                             ("c", ["x", "y"])])
        ct, vs = type_infer("t", "a").run(vs)
        assert ct == INT_T
        ct, vs = type_infer("t", "b").run(vs)
        assert ct == REAL_T
        ct, vs = type_infer("t", "c").run(vs)
        assert isinstance(ct, LinkT)

    def test_low_cardinality_large_table_goes_nominal(self):
        # 100 rows, 2 distinct numeric-looking labels -> nominal, not int
        vals = [str(i % 2) for i in range(100)]
        vs = str_table("t", [("a", vals)])
        ct, _ = type_infer("t", "a").run(vs)
        assert isinstance(ct, LinkT)

    def test_infer_is_idempotent_on_typed_columns(self):
        vs = str_table("t", [("a", ["1", "2"])])
        ct1, vs1 = type_infer("t", "a").run(vs)
        ct2, vs2 = type_infer("t", "a").run(vs1)
        assert ct1 == ct2 and vs1 == vs2

    def test_infer_table_types_everything(self):
        vs = str_table("t", [("a", ["1", "2"]), ("b", ["x", "y"])])
        _, out = type_infer_table("t").run(vs)
        t = out.state.schema.table("t")
        assert t.column("a").ctype == INT_T
        assert isinstance(t.column("b").ctype, LinkT)


class TestNewColumn:
    def test_new_latent_column_all_missing(self):
        vs = str_table("t", [("a", ["1", "2"])])
        _, out = new_column("t", "z", Upto(4)).run(vs)
        c = out.state.schema.table("t").column("z")
        assert c.is_latent and c.ctype == Upto(4)
        assert out.state.data_for("t").col("z") == [Missing, Missing]

    def test_name_conflict_rejected(self):
        vs = str_table("t", [("a", ["1"])])
        with pytest.raises(OpError) as e:
            new_column("t", "a", Upto(2)).run(vs)
        assert e.value.kind is ErrorKind.NAME_CONFLICT
