"""Session-oriented JSON/HTTP API for live and simulated searches.

The server holds the catalog and an optional trained checkpoint read-only;
each session is an independent SearchSession engine guarded by its own lock,
so interleaved clients can never contaminate each other's transcripts.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agent.core import encode_state
from .agent.network import QNetwork
from .catalog import Catalog
from .config import Config
from .interactions import InteractionKind, build_pivot_trees
from .policies import Policy, make_policy
from .relevance import LikelihoodParams, Polarity, default_params, percentile_rank
from .session import SearchSession
from .simuser import SimulatedUser, UserNoise

__all__ = ["ApiError", "create_app"]


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


class CreateSessionBody(BaseModel):
    mode: str = "live"
    policy: str | None = None
    target_id: int | None = None
    seed: int = 0
    max_iterations: int = 10


class FeedbackBody(BaseModel):
    kind: str | None = None
    attr: int | None = None
    ref_id: int | None = None
    polarity: str | None = None
    response: str | None = None
    embedding: list[float] | None = None
    exemplar_id: int | None = None


@dataclass
class SessionBox:
    engine: SearchSession
    policy: Policy
    mode: str
    user: SimulatedUser | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServerState:
    def __init__(self, catalog: Catalog, params: LikelihoodParams,
                 net: QNetwork | None, noise: UserNoise, cfg: Config):
        self.catalog = catalog
        self.params = params
        self.net = net
        self.noise = noise
        self.cfg = cfg
        self.trees = build_pivot_trees(catalog)
        self.sessions: dict[str, SessionBox] = {}


def _item_json(catalog: Catalog, item_id: int, features: bool = False) -> dict:
    it = catalog.item(item_id)
    doc = {"id": it.id, "image_uri": it.image_uri, "attrs": [float(x) for x in it.attrs]}
    if features:
        doc["features"] = [float(x) for x in it.features]
    return doc


def _page_json(catalog: Catalog, ids: list[int]) -> list[dict]:
    return [_item_json(catalog, i) for i in ids]


def _polarity(raw: str | None, what: str) -> Polarity:
    try:
        return Polarity(raw)
    except ValueError:
        raise ApiError(422, "validation",
                       f"{what} must be one of more|less|equal, got {raw!r}") from None


def create_app(catalog: Catalog, net: QNetwork | None = None,
               params: LikelihoodParams | None = None,
               noise: UserNoise | None = None,
               cfg: Config | None = None,
               ui_dir: str | Path | None = None) -> FastAPI:
    """Build the API around one catalog and an optional trained arbiter."""
    cfg = cfg or Config()
    params = params or default_params(catalog, cfg.likelihood.sigma_scale,
                                      cfg.likelihood.tau_scale, cfg.likelihood.floor)
    state = ServerState(catalog, params, net, noise or cfg.user, cfg)
    app = FastAPI(title="mixsearch", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def on_api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error": "validation", "detail": str(exc.errors())})

    def get_box(session_id: str) -> SessionBox:
        box = state.sessions.get(session_id)
        if box is None:
            raise ApiError(404, "not_found", f"no session {session_id}")
        return box

    def locked(box: SessionBox) -> threading.Lock:
        if not box.lock.acquire(blocking=False):
            raise ApiError(409, "conflict", "another request is mutating this session")
        return box.lock

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if body.mode not in ("live", "simulated"):
            raise ApiError(422, "validation", f"mode must be live|simulated, got {body.mode!r}")
        policy_name = body.policy or ("rl" if state.net is not None else "prr")
        try:
            policy = make_policy(policy_name, state.net)
        except ValueError as exc:
            status = 400 if "network" in str(exc) else 422
            raise ApiError(status, "bad_policy", str(exc)) from None

        target_id = body.target_id
        if target_id is not None and not 0 <= target_id < catalog.n:
            raise ApiError(404, "not_found", f"no item {target_id}")
        user = None
        if body.mode == "simulated":
            if target_id is None:
                rng = np.random.default_rng([body.seed, 0x7A26])
                target_id = int(rng.integers(0, catalog.n))
            user = state.noise.make_user(catalog, target_id, body.seed)
        engine = SearchSession(catalog, state.params, target_id=target_id,
                               page_size=state.cfg.train.page_size,
                               max_iterations=body.max_iterations,
                               trees=state.trees)
        session_id = uuid.uuid4().hex
        state.sessions[session_id] = SessionBox(engine=engine, policy=policy,
                                                mode=body.mode, user=user)
        return {
            "session_id": session_id,
            "mode": body.mode,
            "policy": policy.name,
            "target_id": target_id,
            "n_items": catalog.n,
            "page_size": engine.page_size,
            "attribute_names": list(catalog.attribute_names),
            "iteration": 0,
            "top_page": _page_json(catalog, engine.displayed_page()),
        }

    @app.get("/sessions/{session_id}/request")
    def get_request(session_id: str):
        box = get_box(session_id)
        lock = locked(box)
        try:
            engine = box.engine
            if engine.finished:
                raise ApiError(409, "session_finished",
                               "session already finished; no further requests")
            if engine.pending is None:
                st = encode_state(engine, state.cfg.train.history, state.cfg.train.top_k)
                action = box.policy.select(engine, st)
                engine.begin(action)
            _action, request = engine.pending
            doc: dict = {"kind": request.kind.value}
            if request.kind is InteractionKind.QUESTION:
                doc["attr"] = request.attr
                doc["attribute_name"] = catalog.attribute_names[request.attr]
                doc["pivot"] = _item_json(catalog, request.pivot_id)
            return {
                "session_id": session_id,
                "iteration": engine.iteration,
                "finished": False,
                "request": doc,
                "top_page": _page_json(catalog, engine.displayed_page()),
            }
        finally:
            lock.release()

    def _simulated_feedback(box: SessionBox):
        engine, user = box.engine, box.user
        assert user is not None
        _action, request = engine.pending
        if request.kind is InteractionKind.FREEFORM:
            attr, ref, pol = user.choose_freeform(engine.displayed_page())
            return engine.apply_freeform(attr, ref, pol)
        if request.kind is InteractionKind.QUESTION:
            return engine.apply_answer(user.answer_question(request.attr, request.pivot_id))
        return engine.apply_sketch(user.produce_sketch())

    def _live_feedback(box: SessionBox, body: FeedbackBody):
        engine = box.engine
        _action, request = engine.pending
        if body.kind is None or body.kind != request.kind.value:
            raise ApiError(409, "kind_mismatch",
                           f"pending request is {request.kind.value}, got {body.kind!r}")
        if request.kind is InteractionKind.FREEFORM:
            if body.attr is None or body.ref_id is None:
                raise ApiError(422, "validation", "freeform feedback needs attr and ref_id")
            if not 0 <= body.attr < catalog.m:
                raise ApiError(422, "validation", f"attribute {body.attr} out of range")
            if body.ref_id not in engine.displayed_page():
                raise ApiError(422, "ref_not_displayed",
                               f"item {body.ref_id} is not on the displayed page")
            return engine.apply_freeform(body.attr, body.ref_id,
                                         _polarity(body.polarity, "polarity"))
        if request.kind is InteractionKind.QUESTION:
            return engine.apply_answer(_polarity(body.response, "response"))
        # sketch: explicit embedding or an exemplar item pick
        if body.embedding is not None:
            emb = np.asarray(body.embedding, dtype=np.float64)
            if emb.shape != (catalog.d,):
                raise ApiError(422, "validation",
                               f"embedding length {emb.shape[0]} != d={catalog.d}")
        elif body.exemplar_id is not None:
            if not 0 <= body.exemplar_id < catalog.n:
                raise ApiError(404, "not_found", f"no item {body.exemplar_id}")
            emb = catalog.features[body.exemplar_id]
        else:
            raise ApiError(422, "validation", "sketch feedback needs embedding or exemplar_id")
        return engine.apply_sketch(emb)

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: FeedbackBody):
        box = get_box(session_id)
        lock = locked(box)
        try:
            engine = box.engine
            if engine.finished:
                raise ApiError(409, "session_finished", "session already finished")
            if engine.pending is None:
                raise ApiError(409, "no_pending_request",
                               "fetch /request before posting feedback")
            if box.mode == "simulated":
                if body.kind is not None:
                    raise ApiError(409, "kind_mismatch",
                                   "simulated sessions fill feedback automatically; "
                                   "post an empty body")
                record = _simulated_feedback(box)
            else:
                try:
                    record = _live_feedback(box, body)
                except ValueError as exc:
                    raise ApiError(422, "validation", str(exc)) from None
            return {
                "session_id": session_id,
                "iteration": record.iteration,
                "action": record.action.name.lower(),
                "kind": record.request.kind.value,
                "top_page": _page_json(catalog, list(record.top_page)),
                "percentile_rank": record.pr,
                "reward": record.reward,
                "success": record.success,
                "finished": engine.finished,
            }
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        box = get_box(session_id)
        engine = box.engine
        records = []
        for rec in engine.records:
            doc = {
                "iteration": rec.iteration,
                "action": rec.action.name.lower(),
                "kind": rec.request.kind.value,
                "top_page": list(rec.top_page),
                "percentile_rank": rec.pr,
                "reward": rec.reward,
                "success": rec.success,
            }
            records.append(doc)
        return {
            "session_id": session_id,
            "mode": box.mode,
            "policy": box.policy.name,
            "target_id": engine.target_id,
            "iteration": engine.iteration,
            "finished": engine.finished,
            "succeeded": engine.succeeded,
            "initial_top_page": list(engine.rankings[0][: engine.page_size]),
            "initial_percentile_rank": (
                None if engine.target_id is None
                else percentile_rank(engine.rankings[0], engine.target_id)
            ),
            "records": records,
        }

    @app.get("/catalog/items/{item_id}")
    def get_item(item_id: int):
        if not 0 <= item_id < catalog.n:
            raise ApiError(404, "not_found", f"no item {item_id}")
        return _item_json(catalog, item_id, features=True)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", response_class=HTMLResponse)
        def index():
            return '<meta http-equiv="refresh" content="0; url=/ui/">'
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return ("<h1>mixsearch API</h1><p>No UI build found. "
                    "Endpoints: POST /sessions, GET /sessions/{id}/request, "
                    "POST /sessions/{id}/feedback, GET /sessions/{id}/history, "
                    "GET /catalog/items/{id}</p>")

    return app
