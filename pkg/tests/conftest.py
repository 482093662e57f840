from __future__ import annotations

import json
from pathlib import Path

import pytest

from guideqa.corpus import (
    CleaningSpec,
    DocumentElement,
    ElementMetadata,
    chunk_by_title,
    clean_elements,
    load_elements,
)
from guideqa.providers import MockEmbeddingProvider, ScriptedLanguageProvider

FIXTURES_DIR = Path(__file__).parent / "fixtures"

FIXTURE_CLEANING = CleaningSpec(
    delimiter_pairs=(("Sommaire", "Préambule"),),
    drop_kinds=frozenset({"Footer"}),
)


def make_element(
    element_id: str,
    kind: str = "NarrativeText",
    text: str = "",
    filename: str = "doc.pdf",
    page: int | None = None,
    html: str | None = None,
    languages: tuple[str, ...] = ("fr",),
) -> DocumentElement:
    return DocumentElement(
        element_id=element_id,
        kind=kind,
        text=text,
        metadata=ElementMetadata(
            filename=filename,
            filetype="application/pdf",
            page=page,
            languages=languages,
            text_as_html=html,
        ),
    )


class FailingLLM:
    """Raises on every call; exercises provider-failure paths."""

    name = "failing-llm"

    def generate(self, system_instructions: str, user_content: str) -> str:
        raise ConnectionError("transport down")


class StaticLLM:
    name = "static-llm"

    def __init__(self, response: str):
        self.response = response
        self.calls: list[tuple[str, str]] = []

    def generate(self, system_instructions: str, user_content: str) -> str:
        self.calls.append((system_instructions, user_content))
        return self.response


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def guide_elements():
    with (FIXTURES_DIR / "corpus" / "guide_vaccinal.elements.json").open("rb") as handle:
        return load_elements(handle)


@pytest.fixture
def oms_elements():
    with (FIXTURES_DIR / "corpus" / "oms_recommandations.elements.json").open("rb") as handle:
        return load_elements(handle)


@pytest.fixture
def fixture_chunks(guide_elements, oms_elements):
    chunks = chunk_by_title(clean_elements(guide_elements, FIXTURE_CLEANING))
    chunks += chunk_by_title(clean_elements(oms_elements, FIXTURE_CLEANING))
    return chunks


@pytest.fixture
def mock_embedder() -> MockEmbeddingProvider:
    return MockEmbeddingProvider(dimension=64)


@pytest.fixture
def fixture_llm() -> ScriptedLanguageProvider:
    return ScriptedLanguageProvider.from_file(FIXTURES_DIR / "llm_script.json")


def write_cli_config(tmp_path: Path, fixtures_dir: Path) -> Path:
    """A config file pointing storage at tmp_path and providers at the fixtures."""
    config_path = tmp_path / "guideqa.toml"
    work = tmp_path / "work"
    config_path.write_text(
        f"""
[providers]
llm = "mock"
embedding = "mock"
embedding_dimension = 64
llm_script = {json.dumps(str(fixtures_dir / 'llm_script.json'))}

[corpus]
drop_kinds = ["Footer"]
delimiter_pairs = [["Sommaire", "Préambule"]]

[storage]
chunks_path = {json.dumps(str(work / 'chunks.json'))}
collection_root = {json.dumps(str(work / 'collections'))}
collection_name = "guide_chunks"
state_dir = {json.dumps(str(work / 'state'))}
report_dir = {json.dumps(str(work / 'reports'))}

[service]
auth_token_env = "GUIDEQA_TOKEN"
""",
        encoding="utf-8",
    )
    return config_path
