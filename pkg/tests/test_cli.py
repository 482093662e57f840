from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from guideqa.cli import main

from .conftest import FIXTURES_DIR, write_cli_config


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_path(tmp_path):
    return write_cli_config(tmp_path, FIXTURES_DIR)


SOURCES = [
    str(FIXTURES_DIR / "corpus" / "guide_vaccinal.elements.json"),
    str(FIXTURES_DIR / "corpus" / "oms_recommandations.elements.json"),
]


def run_ok(runner, config_path, *args):
    result = runner.invoke(main, ["--config", str(config_path), *args])
    assert result.exit_code == 0, result.output
    return result


class TestConfigHandling:
    def test_missing_config_exits_1_naming_path(self, runner, tmp_path):
        missing = tmp_path / "absent.toml"
        result = runner.invoke(main, ["--config", str(missing), "ingest", SOURCES[0]])
        assert result.exit_code == 1
        assert str(missing) in result.output

    def test_bad_toml_exits_1(self, runner, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("not = [valid", encoding="utf-8")
        result = runner.invoke(main, ["--config", str(bad), "ingest", SOURCES[0]])
        assert result.exit_code == 1


class TestIngest:
    def test_reports_kind_counts(self, runner, config_path):
        result = run_ok(runner, config_path, "ingest", SOURCES[0])
        assert "12 elements" in result.output
        assert "Title=4" in result.output
        assert "Table=1" in result.output

    def test_invalid_elements_exit_1(self, runner, config_path, tmp_path):
        broken = tmp_path / "broken.json"
        broken.write_text('[{"element_id": "a", "type": "Title"}]', encoding="utf-8")
        result = runner.invoke(
            main, ["--config", str(config_path), "ingest", str(broken)]
        )
        assert result.exit_code == 1
        assert "text" in result.output


class TestPipelineCommands:
    def test_chunk_then_index_then_ask(self, runner, config_path, tmp_path):
        chunk_result = run_ok(runner, config_path, "chunk", *SOURCES)
        assert "wrote 6 chunks" in chunk_result.output
        chunks_file = tmp_path / "work" / "chunks.json"
        assert chunks_file.is_file()
        payload = json.loads(chunks_file.read_text(encoding="utf-8"))
        assert payload["version"] == "1"

        index_result = run_ok(runner, config_path, "index")
        assert "indexed 6 chunks" in index_result.output
        assert (tmp_path / "work" / "collections" / "guide_chunks" / "manifest.json").is_file()

        ask_result = run_ok(
            runner, config_path, "ask", "--question", "Quand administrer le BCG ?", "--json"
        )
        document = json.loads(ask_result.output)
        assert document["answer"] == "Le BCG est administré à la naissance, en une dose unique. [1]"
        assert len(document["citations"]) >= 1
        assert document["trace"] is None

    def test_ask_agentic_emits_trace(self, runner, config_path):
        run_ok(runner, config_path, "chunk", *SOURCES)
        run_ok(runner, config_path, "index")
        result = run_ok(
            runner,
            config_path,
            "ask",
            "--question",
            "Quand administrer le BCG ?",
            "--mode",
            "agentic",
            "--json",
        )
        document = json.loads(result.output)
        assert document["trace"] is not None
        assert document["trace"][-1]["action"]["type"] == "finish"
        assert len(document["citations"]) >= 1

    def test_ask_without_index_exits_2(self, runner, config_path):
        result = runner.invoke(
            main, ["--config", str(config_path), "ask", "--question", "q"]
        )
        assert result.exit_code == 2
        assert "chunk" in result.output  # hints at the missing build step

    def test_ask_human_format(self, runner, config_path):
        run_ok(runner, config_path, "chunk", *SOURCES)
        run_ok(runner, config_path, "index")
        result = run_ok(
            runner, config_path, "ask", "--question", "Quand administrer le BCG ?"
        )
        assert "Sources:" in result.output
        assert "latency:" in result.output


class TestEnrichment:
    def test_chunk_with_table_enrichment(self, runner, tmp_path):
        script = tmp_path / "enrich_script.json"
        script.write_text(
            json.dumps(
                {
                    "default": "",
                    "rules": [
                        {
                            "pattern": "Décris en une ou deux phrases",
                            "response": "Tableau des âges d'administration par vaccin.",
                        }
                    ],
                }
            ),
            encoding="utf-8",
        )
        config_path = tmp_path / "guideqa.toml"
        work = tmp_path / "work"
        config_path.write_text(
            f"""
[providers]
llm_script = {json.dumps(str(script))}

[corpus]
enrich_tables = true
drop_kinds = ["Footer"]
delimiter_pairs = [["Sommaire", "Préambule"]]

[storage]
chunks_path = {json.dumps(str(work / 'chunks.json'))}
""",
            encoding="utf-8",
        )
        result = runner.invoke(main, ["--config", str(config_path), "chunk", SOURCES[0]])
        assert result.exit_code == 0, result.output
        payload = json.loads((work / "chunks.json").read_text(encoding="utf-8"))
        tables = [c for c in payload["chunks"] if c["variant"] == "table"]
        assert tables[0]["ai_description"] == "Tableau des âges d'administration par vaccin."


class TestBenchGen:
    def test_dataset_written(self, runner, config_path, tmp_path):
        run_ok(runner, config_path, "chunk", *SOURCES)
        out = tmp_path / "dataset.json"
        run_ok(runner, config_path, "bench-gen", "--out", str(out))
        assert out.is_file()
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["version"] == "1"
        # 6 fixture chunks, three tiered questions each
        assert len(payload["items"]) == 18
        assert {i["difficulty"] for i in payload["items"]} == {"easy", "medium", "hard"}


class TestEvalCommand:
    def write_records(self, tmp_path):
        lines = []
        spec = {
            "fact_based": (0.50, 22.20),
            "complex": (1.00, 12.09),
            "cross_document": (0.70, 15.87),
        }
        n = 0
        for category, (acc, latency) in spec.items():
            for i in range(10):
                n += 1
                lines.append(
                    json.dumps(
                        {
                            "question_id": f"q{n}",
                            "system": "SystemA",
                            "category": category,
                            "human_score": 2 if i < acc * 10 else 0,
                            "correct": i < acc * 10,
                            "latency_s": latency,
                            "has_citation": True,
                        }
                    )
                )
        path = tmp_path / "records.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_report_files_and_figures(self, runner, config_path, tmp_path):
        records = self.write_records(tmp_path)
        out_dir = tmp_path / "reports"
        result = run_ok(
            runner, config_path, "eval", "--records", str(records), "--out-dir", str(out_dir)
        )
        assert "Average Score" in result.output
        assert (out_dir / "report.json").is_file()
        assert (out_dir / "report.txt").is_file()
        for name in ("accuracy_by_category.png", "overall_summary.png", "qualitative_complex.png"):
            blob = (out_dir / name).read_bytes()
            assert blob[:8] == b"\x89PNG\r\n\x1a\n"
        payload = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
        assert payload["systems"][0]["average_score"] == pytest.approx(2.2 / 3)

    def test_missing_records_file_exits_nonzero(self, runner, config_path, tmp_path):
        result = runner.invoke(
            main,
            ["--config", str(config_path), "eval", "--records", str(tmp_path / "none.jsonl")],
        )
        assert result.exit_code != 0
