"""HTTP/JSON service exposing undoable model-construction sessions.

Endpoints::

    POST /sessions                      multipart CSV upload -> {"id": ...}
    POST /sessions/{id}/ops             {"command": "..."} -> {"entry": ...}
    POST /sessions/{id}/undo | /redo    -> {"entry": ...}
    GET  /sessions/{id}/state           -> {"schemaDoc", "dataPreview"}
    GET  /sessions/{id}/history         -> {"cursor", "entries": [...]}
    GET  /sessions/{id}/contextOps      ?table=&col= -> {"groups": {...}}

Errors are JSON ``{"kind", "message", "location"}``.  Scoring commands
annotate the current history entry instead of appending a new one.  Within
a session requests serialize; sessions are independent.
"""
from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse

from .core import (
    ErrorKind, Input, IntT, LinkT, OpError, RealT, StrT, Upto, ValidState,
    empty_state, validate_state,
)
from .inference import InferenceConfig
from .io import load_csv
from .schema_doc import render_schema
from .script import ScriptCommand, ScriptRunner, parse_script

SCORE_VERBS = {"ScoreLogEvidence", "CrossValidate_kFold_RMSE",
               "SweepNumberClusters", "MissingDataAnalysis"}
PREVIEW_ROWS = 50


@dataclass
class HistoryEntry:
    command: str
    vs: ValidState
    score: float | None = None
    label: str | None = None


@dataclass
class Session:
    id: str
    runner: ScriptRunner
    history: list = field(default_factory=list)
    cursor: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def current(self) -> HistoryEntry:
        return self.history[self.cursor]


def _error_response(e: OpError, status: int = 422) -> JSONResponse:
    return JSONResponse(status_code=status, content={
        "kind": e.kind.name, "message": e.message,
        "location": list(e.location) if e.location else None})


def _entry_json(session: Session, idx: int) -> dict:
    e = session.history[idx]
    return {"index": idx, "command": e.command,
            "schemaDoc": render_schema(e.vs.state.schema),
            "score": e.score, "label": e.label,
            "current": idx == session.cursor}


def _render_value(v):
    from .core import Missing
    return None if v is Missing else v


def create_app(cfg: InferenceConfig | None = None) -> FastAPI:
    app = FastAPI(title="mwz session service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    if cfg is None:
        cfg = InferenceConfig(burnin=200, samples=500, seed=0)

    def get_session(sid: str) -> Session:
        with store_lock:
            s = sessions.get(sid)
        if s is None:
            raise OpError(ErrorKind.MISSING_TARGET, f"no session {sid!r}")
        return s

    @app.exception_handler(OpError)
    async def _handle(request: Request, exc: OpError):
        status = 404 if exc.kind is ErrorKind.MISSING_TARGET else 422
        return _error_response(exc, status)

    @app.post("/sessions")
    async def create_session(files: list[UploadFile]):
        if not files:
            raise OpError(ErrorKind.PARSE_ERROR, "need at least one CSV upload")
        import os
        import tempfile
        runner = ScriptRunner(seed=cfg.seed, cfg=cfg)
        for i, up in enumerate(files):
            stem = os.path.splitext(os.path.basename(up.filename or ""))[0]
            table = "tmain" if len(files) == 1 else (stem or f"t{i}")
            body = await up.read()
            with tempfile.NamedTemporaryFile("wb", suffix=".csv",
                                             delete=False) as tmp:
                tmp.write(body)
                path = tmp.name
            try:
                _, runner.vs = load_csv(path, table).run(runner.vs)
            finally:
                os.unlink(path)
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, runner)
        session.history.append(HistoryEntry("load", runner.vs))
        with store_lock:
            sessions[sid] = session
        return {"id": sid}

    @app.post("/sessions/{sid}/ops")
    async def apply_op(sid: str, body: dict):
        session = get_session(sid)
        command = body.get("command", "")
        with session.lock:
            commands = parse_script(command)
            if len(commands) != 1:
                raise OpError(ErrorKind.PARSE_ERROR,
                              "expected exactly one command")
            cmd = commands[0]
            runner = session.runner
            runner.vs = session.current.vs
            result = runner.execute(cmd)
            if cmd.verb in SCORE_VERBS:
                entry = session.current
                if isinstance(result, float):
                    entry.score = result
                entry.label = cmd.assign or entry.label
            else:
                del session.history[session.cursor + 1:]
                session.history.append(HistoryEntry(command, runner.vs,
                                                    label=cmd.assign))
                session.cursor += 1
            return {"entry": _entry_json(session, session.cursor),
                    "transcript": runner.transcript[:]}

    @app.post("/sessions/{sid}/undo")
    async def undo(sid: str):
        session = get_session(sid)
        with session.lock:
            if session.cursor == 0:
                return JSONResponse(status_code=409, content={
                    "kind": "MISSING_TARGET", "message": "nothing to undo",
                    "location": None})
            session.cursor -= 1
            return {"entry": _entry_json(session, session.cursor)}

    @app.post("/sessions/{sid}/redo")
    async def redo(sid: str):
        session = get_session(sid)
        with session.lock:
            if session.cursor >= len(session.history) - 1:
                return JSONResponse(status_code=409, content={
                    "kind": "MISSING_TARGET", "message": "nothing to redo",
                    "location": None})
            session.cursor += 1
            return {"entry": _entry_json(session, session.cursor)}

    @app.get("/sessions/{sid}/state")
    async def get_state(sid: str):
        session = get_session(sid)
        with session.lock:
            state = session.current.vs.state
            preview = {}
            for t, dt in zip(state.schema.tables, state.data):
                preview[t.name] = {
                    "columns": list(dt.colnames),
                    "rows": [[_render_value(v) for v in row]
                             for row in dt.grid[:PREVIEW_ROWS]],
                    "totalRows": dt.nrows,
                }
            return {"schemaDoc": render_schema(state.schema),
                    "dataPreview": preview}

    @app.get("/sessions/{sid}/history")
    async def history(sid: str):
        session = get_session(sid)
        with session.lock:
            return {"cursor": session.cursor,
                    "entries": [_entry_json(session, i)
                                for i in range(len(session.history))]}

    @app.get("/sessions/{sid}/contextOps")
    async def context_ops(sid: str, table: str, col: str):
        session = get_session(sid)
        with session.lock:
            state = session.current.vs.state
            t = state.schema.table(table)
            c = t.column(col)
            return {"groups": _context_groups(c)}

    return app


def _context_groups(c) -> dict:
    typing, base, coupling = [], [], []
    unmodeled = isinstance(c.model, Input)
    if unmodeled:
        if isinstance(c.ctype, StrT):
            typing += ["TypeNominal", "TypeReal", "TypeInfer"]
        elif isinstance(c.ctype, (IntT, RealT)):
            if isinstance(c.ctype, IntT):
                typing += ["TypeReal", "TypeUpto"]
            typing += ["TypeNominal", "TypeInfer"]
            base += ["ModelGaussian", "Model"]
            coupling += ["LinReg", "QuadReg"]
        elif isinstance(c.ctype, (Upto, LinkT)):
            base += ["ModelDiscrete", "Model"]
    else:
        coupling += ["Index"]
    groups = {}
    if typing:
        groups["Typing"] = typing
    if base:
        groups["Base Models"] = base
    if coupling:
        groups["Coupling"] = coupling
    return groups


app = create_app()
