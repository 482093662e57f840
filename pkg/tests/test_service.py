from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from guideqa.engine import QaEngine
from guideqa.providers import ScriptedLanguageProvider
from guideqa.service import create_app
from guideqa.store import SessionStore
from guideqa.vectorstore import build_collection, embed_chunks

from .conftest import FIXTURES_DIR, write_cli_config

TOKEN = "test-token"
AUTH = {"Authorization": f"Bearer {TOKEN}"}


def make_engine(fixture_chunks, mock_embedder, llm=None) -> QaEngine:
    records = embed_chunks(fixture_chunks, mock_embedder)
    collection = build_collection("guide", 64, records)
    llm = llm or ScriptedLanguageProvider.from_file(FIXTURES_DIR / "llm_script.json")
    return QaEngine(
        chunks=fixture_chunks, collection=collection, embedder=mock_embedder, llm=llm
    )


@pytest.fixture
def client(tmp_path, fixture_chunks, mock_embedder):
    engine = make_engine(fixture_chunks, mock_embedder)
    store = SessionStore(tmp_path / "state")
    app = create_app(engine, store, TOKEN)
    return TestClient(app)


class TestAuth:
    def test_missing_token_rejected(self, client):
        assert client.get("/api/v1/sessions").status_code == 401

    def test_wrong_token_rejected(self, client):
        response = client.get(
            "/api/v1/sessions", headers={"Authorization": "Bearer wrong"}
        )
        assert response.status_code == 401

    def test_health_with_token(self, client):
        response = client.get("/api/v1/health", headers=AUTH)
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}


class TestSessions:
    def test_create_then_get_empty(self, client):
        created = client.post("/api/v1/sessions", json={"title": "Cas clinique"}, headers=AUTH)
        assert created.status_code == 200
        session_id = created.json()["session_id"]
        fetched = client.get(f"/api/v1/sessions/{session_id}", headers=AUTH).json()
        assert fetched["title"] == "Cas clinique"
        assert fetched["messages"] == []

    def test_listing_newest_first(self, client):
        first = client.post("/api/v1/sessions", json={"title": "un"}, headers=AUTH).json()
        second = client.post("/api/v1/sessions", json={"title": "deux"}, headers=AUTH).json()
        listing = client.get("/api/v1/sessions", headers=AUTH).json()
        assert len(listing) == 2
        assert listing[0]["session_id"] == second["session_id"]
        assert listing[1]["session_id"] == first["session_id"]

    def test_unknown_session_404(self, client):
        assert client.get("/api/v1/sessions/nope", headers=AUTH).status_code == 404

    def test_title_length_enforced(self, client):
        response = client.post("/api/v1/sessions", json={"title": "x" * 201}, headers=AUTH)
        assert response.status_code == 422


class TestMessages:
    def post_question(self, client, mode="enhanced", text="Quand administrer le BCG ?"):
        session = client.post("/api/v1/sessions", json={"title": "t"}, headers=AUTH).json()
        message = client.post(
            f"/api/v1/sessions/{session['session_id']}/messages",
            json={"text": text, "mode": mode},
            headers=AUTH,
        )
        return session, message

    def test_enhanced_reply_has_citation(self, client):
        _, response = self.post_question(client)
        assert response.status_code == 200
        message = response.json()
        assert message["role"] == "assistant"
        assert not message["degraded"]
        assert len(message["citations"]) >= 1
        assert message["trace"] is None

    def test_agentic_reply_has_trace_with_one_finish(self, client):
        _, response = self.post_question(client, mode="agentic")
        message = response.json()
        assert message["trace"] is not None
        finishes = [s for s in message["trace"] if s["action"]["type"] == "finish"]
        assert len(finishes) == 1
        assert message["trace"][-1]["action"]["type"] == "finish"

    def test_arabic_text_stored_byte_exact(self, client):
        arabic = "ما هو جدول التطعيم؟"
        session, _ = self.post_question(client, text=arabic)
        thread = client.get(f"/api/v1/sessions/{session['session_id']}", headers=AUTH).json()
        assert thread["messages"][0]["text"] == arabic

    def test_message_ids_strictly_increasing(self, client):
        session, _ = self.post_question(client)
        self_id = session["session_id"]
        client.post(
            f"/api/v1/sessions/{self_id}/messages",
            json={"text": "Et le HBV ?", "mode": "enhanced"},
            headers=AUTH,
        )
        thread = client.get(f"/api/v1/sessions/{self_id}", headers=AUTH).json()
        seqs = [m["seq"] for m in thread["messages"]]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)

    def test_unknown_mode_rejected(self, client):
        _, response = self.post_question(client, mode="simple")
        assert response.status_code == 422

    def test_empty_text_rejected(self, client):
        _, response = self.post_question(client, text="   ")
        assert response.status_code == 422

    def test_unknown_session_404(self, client):
        response = client.post(
            "/api/v1/sessions/nope/messages",
            json={"text": "q", "mode": "enhanced"},
            headers=AUTH,
        )
        assert response.status_code == 404

    def test_pipeline_failure_degrades(self, tmp_path, fixture_chunks, mock_embedder):
        class ExplodingLLM:
            name = "exploding"

            def generate(self, system, content):
                raise ConnectionError("llm down")

        engine = make_engine(fixture_chunks, mock_embedder, llm=ExplodingLLM())
        store = SessionStore(tmp_path / "state2")
        client = TestClient(create_app(engine, store, TOKEN))
        session = client.post("/api/v1/sessions", json={"title": "t"}, headers=AUTH).json()
        message = client.post(
            f"/api/v1/sessions/{session['session_id']}/messages",
            json={"text": "q", "mode": "enhanced"},
            headers=AUTH,
        ).json()
        assert message["degraded"] is True
        assert message["citations"] == []
        assert "désolé" in message["text"].lower() or "sorry" in message["text"].lower()


class TestSources:
    def test_cited_source_contains_excerpt(self, client):
        session = client.post("/api/v1/sessions", json={"title": "t"}, headers=AUTH).json()
        message = client.post(
            f"/api/v1/sessions/{session['session_id']}/messages",
            json={"text": "Quand administrer le BCG ?", "mode": "enhanced"},
            headers=AUTH,
        ).json()
        citation = message["citations"][0]
        source = client.get(f"/api/v1/sources/{citation['chunk_id']}", headers=AUTH).json()
        assert citation["excerpt"] in source["full_chunk_text"]
        assert source["filename"]

    def test_table_source_carries_html(self, client, fixture_chunks):
        table_id = next(c.element_id for c in fixture_chunks if c.variant == "table")
        source = client.get(f"/api/v1/sources/{table_id}", headers=AUTH).json()
        assert source["html"] and source["html"].startswith("<table>")

    def test_unknown_chunk_404(self, client):
        assert client.get("/api/v1/sources/nope", headers=AUTH).status_code == 404


class TestRatings:
    def rate(self, client, score, comment=None):
        session = client.post("/api/v1/sessions", json={"title": "t"}, headers=AUTH).json()
        message = client.post(
            f"/api/v1/sessions/{session['session_id']}/messages",
            json={"text": "Quand administrer le BCG ?", "mode": "enhanced"},
            headers=AUTH,
        ).json()
        body = {"score": score}
        if comment is not None:
            body["comment"] = comment
        return session, message, client.post(
            f"/api/v1/messages/{message['message_id']}/rating", json=body, headers=AUTH
        )

    def test_rating_persisted_and_returned(self, client):
        session, message, response = self.rate(client, 10, "parfait")
        assert response.status_code == 200
        thread = client.get(f"/api/v1/sessions/{session['session_id']}", headers=AUTH).json()
        stored = thread["messages"][-1]["rating"]
        assert stored["score"] == 10 and stored["comment"] == "parfait"

    def test_bounds_enforced(self, client):
        _, _, ok_zero = self.rate(client, 0)
        assert ok_zero.status_code == 200
        _, _, too_big = self.rate(client, 11)
        assert too_big.status_code == 422
        _, _, negative = self.rate(client, -1)
        assert negative.status_code == 422

    def test_re_rating_overwrites(self, client):
        session, message, _ = self.rate(client, 7)
        client.post(
            f"/api/v1/messages/{message['message_id']}/rating",
            json={"score": 3},
            headers=AUTH,
        )
        thread = client.get(f"/api/v1/sessions/{session['session_id']}", headers=AUTH).json()
        assert thread["messages"][-1]["rating"]["score"] == 3

    def test_user_message_not_ratable(self, client):
        session = client.post("/api/v1/sessions", json={"title": "t"}, headers=AUTH).json()
        client.post(
            f"/api/v1/sessions/{session['session_id']}/messages",
            json={"text": "q", "mode": "enhanced"},
            headers=AUTH,
        )
        thread = client.get(f"/api/v1/sessions/{session['session_id']}", headers=AUTH).json()
        user_id = thread["messages"][0]["message_id"]
        response = client.post(
            f"/api/v1/messages/{user_id}/rating", json={"score": 5}, headers=AUTH
        )
        assert response.status_code == 422


def test_uncited_agentic_answer_flagged_degraded(tmp_path, fixture_chunks, mock_embedder):
    # a planner that finishes without consulting any tool yields no citations;
    # over a non-empty corpus the service must flag that reply
    from guideqa.providers import ScriptRule

    llm = ScriptedLanguageProvider(
        rules=[ScriptRule(pattern="Decide the next action",
                          response="THOUGHT: je réponds directement\nFINISH: Réponse sans source.")],
        default="",
    )
    engine = make_engine(fixture_chunks, mock_embedder, llm=llm)
    client = TestClient(create_app(engine, SessionStore(tmp_path / "state"), TOKEN))
    session = client.post("/api/v1/sessions", json={"title": "t"}, headers=AUTH).json()
    message = client.post(
        f"/api/v1/sessions/{session['session_id']}/messages",
        json={"text": "q", "mode": "agentic"},
        headers=AUTH,
    ).json()
    assert message["citations"] == []
    assert message["degraded"] is True
    assert message["text"] == "Réponse sans source."


def test_app_from_config(tmp_path, monkeypatch):
    from click.testing import CliRunner

    from guideqa.cli import main as cli_main
    from guideqa.config import load_config
    from guideqa.service import app_from_config

    config_path = write_cli_config(tmp_path, FIXTURES_DIR)
    runner = CliRunner()
    sources = [
        str(FIXTURES_DIR / "corpus" / "guide_vaccinal.elements.json"),
        str(FIXTURES_DIR / "corpus" / "oms_recommandations.elements.json"),
    ]
    assert runner.invoke(cli_main, ["--config", str(config_path), "chunk", *sources]).exit_code == 0
    assert runner.invoke(cli_main, ["--config", str(config_path), "index"]).exit_code == 0

    monkeypatch.setenv("GUIDEQA_TOKEN", "configured-token")
    app = app_from_config(load_config(config_path))
    client = TestClient(app)
    assert client.get(
        "/api/v1/health", headers={"Authorization": "Bearer configured-token"}
    ).json() == {"status": "ok"}


def test_static_frontend_mounted_when_configured(tmp_path, fixture_chunks, mock_embedder):
    static_dir = tmp_path / "dist"
    static_dir.mkdir()
    (static_dir / "index.html").write_text("<!doctype html><title>webui</title>", encoding="utf-8")
    engine = make_engine(fixture_chunks, mock_embedder)
    client = TestClient(
        create_app(engine, SessionStore(tmp_path / "state"), TOKEN, static_dir=static_dir)
    )
    page = client.get("/")
    assert page.status_code == 200
    assert "webui" in page.text
    # API routes keep priority over the static mount
    assert client.get("/api/v1/health", headers=AUTH).json() == {"status": "ok"}


def test_app_from_config_requires_token(tmp_path, monkeypatch):
    from guideqa.config import load_config
    from guideqa.errors import ValidationError as VErr
    from guideqa.service import app_from_config

    config_path = write_cli_config(tmp_path, FIXTURES_DIR)
    monkeypatch.delenv("GUIDEQA_TOKEN", raising=False)
    with pytest.raises(VErr, match="GUIDEQA_TOKEN"):
        app_from_config(load_config(config_path))


def test_concurrent_messages_across_sessions(client):
    # distinct sessions may post in parallel; every reply lands in its session
    from concurrent.futures import ThreadPoolExecutor

    sessions = [
        client.post("/api/v1/sessions", json={"title": f"s{i}"}, headers=AUTH).json()
        for i in range(4)
    ]

    def post(session):
        return client.post(
            f"/api/v1/sessions/{session['session_id']}/messages",
            json={"text": "Quand administrer le BCG ?", "mode": "enhanced"},
            headers=AUTH,
        ).status_code

    with ThreadPoolExecutor(max_workers=4) as pool:
        statuses = list(pool.map(post, sessions))
    assert statuses == [200] * 4
    for session in sessions:
        thread = client.get(f"/api/v1/sessions/{session['session_id']}", headers=AUTH).json()
        assert [m["role"] for m in thread["messages"]] == ["user", "assistant"]
        assert [m["seq"] for m in thread["messages"]] == [1, 2]


def test_restart_recovers_full_state(tmp_path, fixture_chunks, mock_embedder):
    state_dir = tmp_path / "state"
    engine = make_engine(fixture_chunks, mock_embedder)

    client = TestClient(create_app(engine, SessionStore(state_dir), TOKEN))
    session = client.post("/api/v1/sessions", json={"title": "durable"}, headers=AUTH).json()
    message = client.post(
        f"/api/v1/sessions/{session['session_id']}/messages",
        json={"text": "Quand administrer le BCG ?", "mode": "agentic"},
        headers=AUTH,
    ).json()
    client.post(
        f"/api/v1/messages/{message['message_id']}/rating",
        json={"score": 9, "comment": "utile"},
        headers=AUTH,
    )

    # a fresh store over the same directory replays the event logs
    reborn = TestClient(create_app(engine, SessionStore(state_dir), TOKEN))
    thread = reborn.get(f"/api/v1/sessions/{session['session_id']}", headers=AUTH).json()
    assert thread["title"] == "durable"
    assert len(thread["messages"]) == 2
    recovered = thread["messages"][-1]
    assert recovered["text"] == message["text"]
    assert recovered["citations"] == message["citations"]
    assert recovered["trace"] == message["trace"]
    assert recovered["rating"]["score"] == 9
    assert recovered["rating"]["comment"] == "utile"
