"""HTTP face of the orchestrator.

Endpoints mirror the library calls one to one; errors come back as
machine-readable {code, message} bodies. Sessions live in process memory;
method state belongs to the repository and is optionally persisted to a
snapshot file after every mutating call.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import persistence
from .errors import (
    MethodForgeError,
    RankingError,
    SessionError,
    TransportError,
    UnknownMethodError,
)
from .model import Method
from .orchestrator import Orchestrator, Session


class CreateSessionBody(BaseModel):
    user_id: str | None = None


class QueryBody(BaseModel):
    text: str = Field(min_length=1)


class RankBody(BaseModel):
    turn: int = Field(ge=0)
    ordering: list[int]


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _method_view(orchestrator: Orchestrator, method: Method) -> dict:
    scope_key, node_id = orchestrator.repository.placement_of(method.id)
    return {
        "id": method.id,
        "problem": method.problem.text,
        "solution_parts": [
            {"role": p.role, "text": p.text, "part_score": p.part_score}
            for p in method.solution.parts
        ],
        "external_refs": [
            {"descriptor": r.descriptor, "link": r.link} for r in method.solution.external_refs
        ],
        "format": method.format.value,
        "scope": scope_key,
        "source": method.source.value,
        "created_at": method.created_at,
        "score": {
            "effectiveness": method.score.effectiveness,
            "rated": method.score.rated,
            "times_used": method.score.times_used,
            "times_top_ranked": method.score.times_top_ranked,
        },
        "node_id": node_id,
    }


def create_app(orchestrator: Orchestrator, repository_path: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="methodforge", version="0.1.0")
    sessions: dict[str, Session] = {}
    repo_path = Path(repository_path) if repository_path else None

    def _persist() -> None:
        if repo_path is not None:
            persistence.save(orchestrator.repository, repo_path)

    def _session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "session_not_found", f"unknown session: {session_id}")
        return session

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(MethodForgeError)
    async def _domain_error(_request: Request, exc: MethodForgeError):
        status, code = 400, "bad_request"
        if isinstance(exc, UnknownMethodError):
            status, code = 404, "method_not_found"
        elif isinstance(exc, SessionError):
            status, code = 404, "turn_not_found"
        elif isinstance(exc, RankingError):
            status, code = 409, "ranking_rejected"
        elif isinstance(exc, TransportError):
            status, code = 502, "gateway_unreachable"
        return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "methods": len(orchestrator.repository.methods)}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody | None = None):
        session = orchestrator.create_session(user_id=body.user_id if body else None)
        sessions[session.session_id] = session
        return {"session_id": session.session_id, "user_id": session.user_id}

    @app.post("/sessions/{session_id}/query")
    def query(session_id: str, body: QueryBody):
        session = _session(session_id)
        response = orchestrator.handle_query(session, body.text)
        _persist()
        return {
            "outputs": [{"tag": tag, "text": text} for tag, text in response.outputs],
            "applied_method_ids": list(response.applied_method_ids),
            "fallback_used": response.fallback_used,
            "turn_index": response.turn_index,
        }

    @app.post("/sessions/{session_id}/rank")
    def rank(session_id: str, body: RankBody):
        session = _session(session_id)
        updated = orchestrator.submit_ranking(session, body.turn, body.ordering)
        _persist()
        return {"effectiveness": updated}

    @app.get("/sessions/{session_id}/transcript")
    def transcript(session_id: str):
        return orchestrator.transcript_dict(_session(session_id))

    @app.get("/methods")
    def list_methods():
        return {
            "methods": [
                _method_view(orchestrator, m) for m in orchestrator.repository.list_methods()
            ]
        }

    @app.get("/methods/{method_id}")
    def get_method(method_id: str):
        return _method_view(orchestrator, orchestrator.repository.get(method_id))

    @app.delete("/methods/{method_id}")
    def delete_method(method_id: str):
        orchestrator.repository.get(method_id)
        orchestrator.repository.remove_method(method_id)
        _persist()
        return {"removed": method_id}

    @app.post("/repository/reset")
    def reset_repository():
        orchestrator.repository.reset()
        _persist()
        return {"reset": True}

    return app
