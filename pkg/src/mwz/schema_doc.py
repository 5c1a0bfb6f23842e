"""Textual schema document (render/parse, exact round-trip) and a stable
JSON shape for schemas.

The document lists, per table, one line per column: name, flags, type and
model, e.g.::

    table tmain
      cloudy : link(T_cloudy) = CDiscrete(N=2, alpha=[1.0, 1.0])
      rain : link(T_rain) = CDiscrete(N=2, alpha=[1.0, 1.0])[cloudy]

Indexed models render as the base model followed by one ``[path.col]``
suffix per index dimension; deterministic link copies render as
``link.column``.
"""
from __future__ import annotations

import re

from .core import (
    CDiscrete, CGaussian, Column, ErrorKind, INPUT, INT_T, Indexed, Input,
    IntT, LinkDeref, LinkT, OpError, PolyReg, REAL_T, RealT, STR_T, Schema,
    StrT, Table, Upto, indexed_chain,
)

_BARE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_BARE_PREFIX = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _name(s: str) -> str:
    return s if _BARE.match(s) else '"' + s.replace('"', '\\"') + '"'


def _num(x: float) -> str:
    return repr(int(x)) if isinstance(x, float) and x.is_integer() else repr(x)


def render_type(ctype) -> str:
    if isinstance(ctype, IntT):
        return "int"
    if isinstance(ctype, RealT):
        return "real"
    if isinstance(ctype, StrT):
        return "str"
    if isinstance(ctype, Upto):
        return f"upto({ctype.n})"
    if isinstance(ctype, LinkT):
        return f"link({_name(ctype.table)})"
    raise OpError(ErrorKind.PARSE_ERROR, f"unknown type {ctype!r}")


def render_model(model) -> str:
    base, dims = indexed_chain(model)
    if isinstance(base, Input):
        text = "input"
    elif isinstance(base, CDiscrete):
        alpha = ", ".join(_num(a) for a in base.alpha)
        text = f"CDiscrete(N={base.n}, alpha=[{alpha}])"
    elif isinstance(base, CGaussian):
        text = (f"CGaussian(mean_mean={_num(base.mean_mean)}, "
                f"mean_prec={_num(base.mean_prec)}, "
                f"prec_shape={_num(base.prec_shape)}, "
                f"prec_scale={_num(base.prec_scale)})")
    elif isinstance(base, PolyReg):
        head = "LinReg" if base.degree == 1 else "QuadReg"
        text = (f"{head}({_name(base.dom_column)}, "
                f"coeff_prior_prec={_num(base.coeff_prior_prec)}, "
                f"noise_prec_shape={_num(base.noise_prec_shape)}, "
                f"noise_prec_scale={_num(base.noise_prec_scale)})")
    elif isinstance(base, LinkDeref):
        text = f"{_name(base.link_column)}.{_name(base.target_column)}"
    else:
        raise OpError(ErrorKind.PARSE_ERROR, f"unknown model {base!r}")
    for path, icol in dims:
        text += "[" + ".".join(_name(p) for p in (*path, icol)) + "]"
    return text


def render_schema(schema: Schema) -> str:
    lines = []
    for t in schema.tables:
        lines.append(f"table {_name(t.name)}")
        for c in t.columns:
            flags = ("" + (" pk" if c.is_pk else "")
                     + (" latent" if c.is_latent else ""))
            lines.append(f"  {_name(c.name)}{flags} : {render_type(c.ctype)}"
                         f" = {render_model(c.model)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Parsing


class _Scan:
    def __init__(self, text: str, where: str):
        self.text = text
        self.pos = 0
        self.where = where

    def err(self, msg: str):
        raise OpError(ErrorKind.PARSE_ERROR, f"{msg} at {self.where!r}",
                      (self.where, None))

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def eof(self) -> bool:
        self.ws()
        return self.pos >= len(self.text)

    def lit(self, s: str):
        self.ws()
        if not self.text.startswith(s, self.pos):
            self.err(f"expected {s!r}")
        self.pos += len(s)

    def try_lit(self, s: str) -> bool:
        self.ws()
        if self.text.startswith(s, self.pos):
            self.pos += len(s)
            return True
        return False

    def name(self) -> str:
        self.ws()
        if self.pos < len(self.text) and self.text[self.pos] == '"':
            out, i = [], self.pos + 1
            while i < len(self.text) and self.text[i] != '"':
                if self.text[i] == "\\":
                    i += 1
                out.append(self.text[i])
                i += 1
            if i >= len(self.text):
                self.err("unterminated quote")
            self.pos = i + 1
            return "".join(out)
        m = _BARE_PREFIX.match(self.text[self.pos:])
        if not m:
            self.err("expected a name")
        self.pos += m.end()
        return m.group(0)

    def number(self) -> float:
        self.ws()
        m = re.match(r"[-+]?\d+(\.\d+)?([eE][-+]?\d+)?", self.text[self.pos:])
        if not m:
            self.err("expected a number")
        self.pos += m.end()
        return float(m.group(0))

    def integer(self) -> int:
        return int(self.number())


def parse_type(sc: _Scan):
    if sc.try_lit("int"):
        return INT_T
    if sc.try_lit("real"):
        return REAL_T
    if sc.try_lit("str"):
        return STR_T
    if sc.try_lit("upto("):
        n = sc.integer()
        sc.lit(")")
        return Upto(n)
    if sc.try_lit("link("):
        t = sc.name()
        sc.lit(")")
        return LinkT(t)
    sc.err("expected a type")


def _kwargs(sc: _Scan, names) -> dict:
    out = {}
    for i, nm in enumerate(names):
        if i:
            sc.lit(",")
        sc.lit(nm)
        sc.lit("=")
        out[nm] = sc.number()
    sc.lit(")")
    return out


def parse_model(sc: _Scan):
    if sc.try_lit("input"):
        model = INPUT
    elif sc.try_lit("CDiscrete("):
        sc.lit("N=")
        n = sc.integer()
        sc.lit(",")
        sc.lit("alpha=[")
        alpha = [sc.number()]
        while sc.try_lit(","):
            alpha.append(sc.number())
        sc.lit("]")
        sc.lit(")")
        model = CDiscrete(n, tuple(alpha))
    elif sc.try_lit("CGaussian("):
        kw = _kwargs(sc, ["mean_mean", "mean_prec", "prec_shape", "prec_scale"])
        model = CGaussian(**kw)
    elif sc.try_lit("LinReg(") or sc.try_lit("QuadReg("):
        degree = 2 if sc.text[:sc.pos].endswith("QuadReg(") else 1
        dom = sc.name()
        sc.lit(",")
        kw = _kwargs(sc, ["coeff_prior_prec", "noise_prec_shape", "noise_prec_scale"])
        model = PolyReg(degree, dom, **kw)
    else:
        link = sc.name()
        sc.lit(".")
        target = sc.name()
        model = LinkDeref(link, target)
    while sc.try_lit("["):
        parts = [sc.name()]
        while sc.try_lit("."):
            parts.append(sc.name())
        sc.lit("]")
        model = Indexed(model, tuple(parts[:-1]), parts[-1])
    return model


def parse_schema(text: str) -> Schema:
    tables: list[Table] = []
    cur_name = None
    cur_cols: list[Column] = []

    def flush():
        nonlocal cur_name, cur_cols
        if cur_name is not None:
            tables.append(Table(cur_name, tuple(cur_cols)))
        cur_name, cur_cols = None, []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sc = _Scan(line, f"line {lineno}")
        if sc.try_lit("table "):
            flush()
            cur_name = sc.name()
            continue
        if cur_name is None:
            sc.err("column line before any table")
        name = sc.name()
        is_pk = sc.try_lit("pk")
        is_latent = sc.try_lit("latent")
        sc.lit(":")
        ctype = parse_type(sc)
        sc.lit("=")
        model = parse_model(sc)
        if not sc.eof():
            sc.err("trailing text")
        cur_cols.append(Column(name, ctype, model, is_pk=is_pk, is_latent=is_latent))
    flush()
    return Schema(tuple(tables))


# ---------------------------------------------------------------------------
# JSON shape


def type_to_json(ctype) -> dict:
    if isinstance(ctype, IntT):
        return {"kind": "int"}
    if isinstance(ctype, RealT):
        return {"kind": "real"}
    if isinstance(ctype, StrT):
        return {"kind": "str"}
    if isinstance(ctype, Upto):
        return {"kind": "upto", "n": ctype.n}
    if isinstance(ctype, LinkT):
        return {"kind": "link", "table": ctype.table}
    raise OpError(ErrorKind.PARSE_ERROR, f"unknown type {ctype!r}")


def type_from_json(d: dict):
    kind = d["kind"]
    if kind == "int":
        return INT_T
    if kind == "real":
        return REAL_T
    if kind == "str":
        return STR_T
    if kind == "upto":
        return Upto(d["n"])
    if kind == "link":
        return LinkT(d["table"])
    raise OpError(ErrorKind.PARSE_ERROR, f"unknown type kind {kind!r}")


def model_to_json(model) -> dict:
    if isinstance(model, Input):
        return {"kind": "input"}
    if isinstance(model, CDiscrete):
        return {"kind": "cdiscrete", "n": model.n, "alpha": list(model.alpha)}
    if isinstance(model, CGaussian):
        return {"kind": "cgaussian", "mean_mean": model.mean_mean,
                "mean_prec": model.mean_prec, "prec_shape": model.prec_shape,
                "prec_scale": model.prec_scale}
    if isinstance(model, Indexed):
        return {"kind": "indexed", "base": model_to_json(model.base),
                "index_path": list(model.index_path),
                "index_column": model.index_column}
    if isinstance(model, PolyReg):
        return {"kind": "polyreg", "degree": model.degree,
                "dom_column": model.dom_column,
                "coeff_prior_prec": model.coeff_prior_prec,
                "noise_prec_shape": model.noise_prec_shape,
                "noise_prec_scale": model.noise_prec_scale}
    if isinstance(model, LinkDeref):
        return {"kind": "linkderef", "link_column": model.link_column,
                "target_column": model.target_column}
    raise OpError(ErrorKind.PARSE_ERROR, f"unknown model {model!r}")


def model_from_json(d: dict):
    kind = d["kind"]
    if kind == "input":
        return INPUT
    if kind == "cdiscrete":
        return CDiscrete(d["n"], tuple(float(a) for a in d["alpha"]))
    if kind == "cgaussian":
        return CGaussian(d["mean_mean"], d["mean_prec"], d["prec_shape"],
                         d["prec_scale"])
    if kind == "indexed":
        return Indexed(model_from_json(d["base"]), tuple(d["index_path"]),
                       d["index_column"])
    if kind == "polyreg":
        return PolyReg(d["degree"], d["dom_column"], d["coeff_prior_prec"],
                       d["noise_prec_shape"], d["noise_prec_scale"])
    if kind == "linkderef":
        return LinkDeref(d["link_column"], d["target_column"])
    raise OpError(ErrorKind.PARSE_ERROR, f"unknown model kind {kind!r}")


def schema_to_json(schema: Schema) -> dict:
    return {"tables": [
        {"name": t.name,
         "columns": [
             {"name": c.name, "type": type_to_json(c.ctype),
              "model": model_to_json(c.model), "pk": c.is_pk,
              "latent": c.is_latent}
             for c in t.columns]}
        for t in schema.tables]}


def schema_from_json(d: dict) -> Schema:
    return Schema(tuple(
        Table(t["name"], tuple(
            Column(c["name"], type_from_json(c["type"]),
                   model_from_json(c["model"]), is_pk=c["pk"],
                   is_latent=c["latent"])
            for c in t["columns"]))
        for t in d["tables"]))
