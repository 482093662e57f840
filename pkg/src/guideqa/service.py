"""HTTP service: sessions, two-mode messaging, source inspection, ratings.

All endpoints live under /api/v1 and require the configured bearer token.
Pipeline failures never fail the request: the assistant message degrades to an
apology flagged `degraded`, so the client always gets a well-formed reply.
"""

from __future__ import annotations

import os
import time
from dataclasses import asdict
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .agent import trace_to_json
from .config import AppConfig
from .engine import QaEngine
from .errors import GuideQaError, NotFoundError, ValidationError
from .store import ROLE_ASSISTANT, ROLE_USER, SessionStore

MODE_ENHANCED = "enhanced"
MODE_AGENTIC = "agentic"

DEGRADED_APOLOGY = (
    "Je suis désolé, une erreur interne a empêché de générer la réponse. "
    "Veuillez réessayer. / Sorry, an internal error prevented generating the "
    "answer. Please try again."
)


class CreateSessionRequest(BaseModel):
    title: str = Field(max_length=200)


class PostMessageRequest(BaseModel):
    text: str
    mode: str


class RatingRequest(BaseModel):
    score: int
    comment: str | None = None


def create_app(engine: QaEngine, store: SessionStore, auth_token: str,
               static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="guideqa", docs_url=None, redoc_url=None)

    def require_token(authorization: str | None = Header(default=None)) -> None:
        if authorization != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    @app.exception_handler(GuideQaError)
    async def on_engine_error(_, exc: GuideQaError):
        if isinstance(exc, NotFoundError):
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        if isinstance(exc, ValidationError):
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/api/v1/health")
    def health(_: None = Depends(require_token)):
        return {"status": "ok"}

    @app.post("/api/v1/sessions")
    def create_session(body: CreateSessionRequest, _: None = Depends(require_token)):
        return store.create_session(body.title).to_dict()

    @app.get("/api/v1/sessions")
    def list_sessions(_: None = Depends(require_token)):
        return [s.to_dict(with_messages=False) for s in store.list_sessions()]

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str, _: None = Depends(require_token)):
        return store.get_session(session_id).to_dict()

    @app.post("/api/v1/sessions/{session_id}/messages")
    def post_message(session_id: str, body: PostMessageRequest, _: None = Depends(require_token)):
        if not body.text.strip():
            raise ValidationError("message text must be non-empty")
        if body.mode not in (MODE_ENHANCED, MODE_AGENTIC):
            raise ValidationError(f"mode must be '{MODE_ENHANCED}' or '{MODE_AGENTIC}'")
        store.get_session(session_id)  # 404 before any work
        store.add_message(session_id, role=ROLE_USER, text=body.text, mode=body.mode)

        started = time.perf_counter()
        try:
            if body.mode == MODE_ENHANCED:
                answer = engine.ask_enhanced(body.text)
                trace = None
            else:
                answer, agent_trace = engine.ask_agentic(body.text)
                trace = trace_to_json(agent_trace)
            citations = [asdict(c) for c in answer.citations]
            # an uncited answer over a non-empty corpus lacks the product's
            # traceability guarantee, so it is flagged
            degraded = bool(engine.chunks) and not citations
            assistant = store.add_message(
                session_id,
                role=ROLE_ASSISTANT,
                text=answer.text,
                mode=body.mode,
                citations=citations,
                trace=trace,
                latency_s=time.perf_counter() - started,
                degraded=degraded,
            )
        except GuideQaError:
            assistant = store.add_message(
                session_id,
                role=ROLE_ASSISTANT,
                text=DEGRADED_APOLOGY,
                mode=body.mode,
                citations=[],
                trace=None,
                latency_s=time.perf_counter() - started,
                degraded=True,
            )
        return assistant.to_dict()

    @app.get("/api/v1/sources/{chunk_id}")
    def get_source(chunk_id: str, _: None = Depends(require_token)):
        source = engine.get_source(chunk_id)
        return {
            "chunk_id": source.chunk_id,
            "filename": source.filename,
            "page": source.page,
            "full_chunk_text": source.text,
            "html": source.html,
        }

    @app.post("/api/v1/messages/{message_id}/rating")
    def rate_message(message_id: str, body: RatingRequest, _: None = Depends(require_token)):
        rating = store.rate_message(message_id, body.score, body.comment)
        return rating.to_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="webui")

    return app


def app_from_config(cfg: AppConfig) -> FastAPI:
    token = os.environ.get(cfg.service.auth_token_env, "")
    if not token:
        raise ValidationError(
            f"auth token environment variable {cfg.service.auth_token_env!r} is not set"
        )
    engine = QaEngine.from_config(cfg)
    store = SessionStore(cfg.storage.state_dir)
    return create_app(engine, store, token, static_dir=cfg.service.static_dir)


def run_service(cfg: AppConfig) -> None:
    import uvicorn

    uvicorn.run(app_from_config(cfg), host=cfg.service.host, port=cfg.service.port)
