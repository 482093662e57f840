"""Session/message/rating persistence: append-only JSON-lines event logs.

One log per entity family; the in-memory projection is rebuilt by replaying
the logs at startup, so a process restart recovers every session, message,
rating and trace bit-for-bit. Adequate at guideline scale and dependency-free.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import NotFoundError, StorageError, ValidationError

MAX_TITLE_CHARS = 200

ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

_SESSIONS_LOG = "sessions.jsonl"
_MESSAGES_LOG = "messages.jsonl"
_RATINGS_LOG = "ratings.jsonl"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Rating:
    score: int
    comment: str | None
    created_at: str

    def to_dict(self) -> dict:
        return {"score": self.score, "comment": self.comment, "created_at": self.created_at}


@dataclass
class Message:
    message_id: str
    session_id: str
    seq: int
    role: str
    text: str
    mode: str
    created_at: str
    citations: list[dict] = field(default_factory=list)
    trace: list[dict] | None = None
    latency_s: float = 0.0
    degraded: bool = False
    rating: Rating | None = None

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "session_id": self.session_id,
            "seq": self.seq,
            "role": self.role,
            "text": self.text,
            "mode": self.mode,
            "created_at": self.created_at,
            "citations": self.citations,
            "trace": self.trace,
            "latency_s": self.latency_s,
            "degraded": self.degraded,
            "rating": self.rating.to_dict() if self.rating else None,
        }


@dataclass
class Session:
    session_id: str
    title: str
    created_at: str
    created_seq: int
    messages: list[Message] = field(default_factory=list)

    def to_dict(self, with_messages: bool = True) -> dict:
        out = {
            "session_id": self.session_id,
            "title": self.title,
            "created_at": self.created_at,
            "message_count": len(self.messages),
        }
        if with_messages:
            out["messages"] = [m.to_dict() for m in self.messages]
        return out


class SessionStore:
    """Event-sourced store for chat state under one state directory."""

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        try:
            self.state_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create state directory {self.state_dir}: {exc}") from exc
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._messages: dict[str, Message] = {}
        self._session_counter = 0
        self._replay()

    # -- event log plumbing ------------------------------------------------

    def _append(self, log_name: str, event: dict) -> None:
        path = self.state_dir / log_name
        try:
            with path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event, ensure_ascii=False) + "\n")
                handle.flush()
        except OSError as exc:
            raise StorageError(f"cannot append to {path}: {exc}") from exc

    def _read_events(self, log_name: str) -> list[dict]:
        path = self.state_dir / log_name
        if not path.is_file():
            return []
        events = []
        try:
            for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise StorageError(f"corrupt event at {path}:{lineno}: {exc}") from exc
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc
        return events

    def _replay(self) -> None:
        for event in self._read_events(_SESSIONS_LOG):
            session = Session(
                session_id=event["session_id"],
                title=event["title"],
                created_at=event["created_at"],
                created_seq=event["created_seq"],
            )
            self._sessions[session.session_id] = session
            self._session_counter = max(self._session_counter, session.created_seq)
        for event in self._read_events(_MESSAGES_LOG):
            rating_raw = event.get("rating")
            message = Message(
                message_id=event["message_id"],
                session_id=event["session_id"],
                seq=event["seq"],
                role=event["role"],
                text=event["text"],
                mode=event["mode"],
                created_at=event["created_at"],
                citations=event.get("citations", []),
                trace=event.get("trace"),
                latency_s=event.get("latency_s", 0.0),
                degraded=event.get("degraded", False),
                rating=Rating(**rating_raw) if rating_raw else None,
            )
            session = self._sessions.get(message.session_id)
            if session is None:
                raise StorageError(
                    f"message {message.message_id!r} references unknown session "
                    f"{message.session_id!r}"
                )
            session.messages.append(message)
            self._messages[message.message_id] = message
        for event in self._read_events(_RATINGS_LOG):
            message = self._messages.get(event["message_id"])
            if message is None:
                raise StorageError(
                    f"rating references unknown message {event['message_id']!r}"
                )
            message.rating = Rating(
                score=event["score"],
                comment=event.get("comment"),
                created_at=event["created_at"],
            )

    # -- sessions ----------------------------------------------------------

    def create_session(self, title: str) -> Session:
        if len(title) > MAX_TITLE_CHARS:
            raise ValidationError(f"session title exceeds {MAX_TITLE_CHARS} characters")
        with self._lock:
            self._session_counter += 1
            session = Session(
                session_id=uuid.uuid4().hex,
                title=title,
                created_at=_now_iso(),
                created_seq=self._session_counter,
            )
            self._sessions[session.session_id] = session
            self._append(
                _SESSIONS_LOG,
                {
                    "session_id": session.session_id,
                    "title": session.title,
                    "created_at": session.created_at,
                    "created_seq": session.created_seq,
                },
            )
        return session

    def list_sessions(self) -> list[Session]:
        """Newest first; the creation counter breaks same-timestamp ties."""
        return sorted(
            self._sessions.values(), key=lambda s: (s.created_at, s.created_seq), reverse=True
        )

    def get_session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return session

    # -- messages ----------------------------------------------------------

    def add_message(
        self,
        session_id: str,
        role: str,
        text: str,
        mode: str,
        citations: list[dict] | None = None,
        trace: list[dict] | None = None,
        latency_s: float = 0.0,
        degraded: bool = False,
    ) -> Message:
        if role not in (ROLE_USER, ROLE_ASSISTANT):
            raise ValidationError(f"unknown message role {role!r}")
        if role == ROLE_USER and (citations or trace):
            raise ValidationError("user messages cannot carry citations or a trace")
        if trace is not None and mode != "agentic":
            raise ValidationError("only agentic messages carry a trace")
        with self._lock:
            session = self.get_session(session_id)
            seq = len(session.messages) + 1
            message = Message(
                message_id=f"{session_id}:{seq:06d}",
                session_id=session_id,
                seq=seq,
                role=role,
                text=text,
                mode=mode,
                created_at=_now_iso(),
                citations=list(citations or []),
                trace=trace,
                latency_s=latency_s,
                degraded=degraded,
            )
            session.messages.append(message)
            self._messages[message.message_id] = message
            self._append(_MESSAGES_LOG, message.to_dict())
        return message

    def get_message(self, message_id: str) -> Message:
        message = self._messages.get(message_id)
        if message is None:
            raise NotFoundError(f"unknown message {message_id!r}")
        return message

    # -- ratings -----------------------------------------------------------

    def rate_message(self, message_id: str, score: int, comment: str | None = None) -> Rating:
        """Store a 0-10 rating on an assistant message; re-rating overwrites."""
        if not isinstance(score, int) or not 0 <= score <= 10:
            raise ValidationError(f"rating score must be an integer in [0, 10], got {score!r}")
        with self._lock:
            message = self.get_message(message_id)
            if message.role != ROLE_ASSISTANT:
                raise ValidationError("only assistant messages can be rated")
            rating = Rating(score=score, comment=comment, created_at=_now_iso())
            message.rating = rating
            self._append(
                _RATINGS_LOG,
                {
                    "message_id": message_id,
                    "score": score,
                    "comment": comment,
                    "created_at": rating.created_at,
                },
            )
        return rating
