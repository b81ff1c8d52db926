"""End-to-end command-line behavior on the bundled sample corpus."""

import json

import pytest

from shoptalk.cli import main

from conftest import write_jsonl


@pytest.fixture
def snapshot_dir(tmp_path, sample_corpus_paths):
    meta, reviews = sample_corpus_paths
    out = tmp_path / "snapshot"
    code = main(["ingest", "--meta", str(meta), "--reviews", str(reviews),
                 "--out", str(out)])
    assert code == 0
    return out


class TestIngest:
    def test_valid_corpus(self, tmp_path, sample_corpus_paths, capsys):
        meta, reviews = sample_corpus_paths
        out = tmp_path / "snap"
        code = main(["ingest", "--meta", str(meta), "--reviews", str(reviews),
                     "--out", str(out)])
        assert code == 0
        assert (out / "catalog.jsonl").exists()
        assert (out / "reviews.jsonl").exists()
        report = json.loads((out / "ingest_report.json").read_text())
        assert report["products"] >= 30
        assert report["reviews"] >= 300

    def test_missing_file_names_path(self, tmp_path, capsys):
        code = main(["ingest", "--meta", str(tmp_path / "nope.jsonl"),
                     "--reviews", str(tmp_path / "also-nope.jsonl"),
                     "--out", str(tmp_path / "out")])
        assert code != 0
        assert "nope.jsonl" in capsys.readouterr().err

    def test_strict_mode_names_malformed_line(self, tmp_path, capsys):
        meta = tmp_path / "meta.jsonl"
        lines = [json.dumps({"id": f"B{i}", "title": f"t{i}"}) for i in range(16)]
        lines.append("{broken json")
        meta.write_text("\n".join(lines) + "\n")
        write_jsonl(tmp_path / "reviews.jsonl", [])
        code = main(["ingest", "--meta", str(meta),
                     "--reviews", str(tmp_path / "reviews.jsonl"),
                     "--out", str(tmp_path / "out"), "--strict"])
        assert code != 0
        assert "line 17" in capsys.readouterr().err

    def test_lenient_mode_counts_malformed(self, tmp_path, capsys):
        meta = tmp_path / "meta.jsonl"
        meta.write_text('{"id": "B1", "title": "a"}\n{broken\n')
        write_jsonl(tmp_path / "reviews.jsonl", [])
        code = main(["ingest", "--meta", str(meta),
                     "--reviews", str(tmp_path / "reviews.jsonl"),
                     "--out", str(tmp_path / "out")])
        assert code == 0
        report = json.loads((tmp_path / "out" / "ingest_report.json").read_text())
        assert report["metadata"]["malformed"] == 1


class TestGenerate:
    def test_generates_dataset_and_report(self, tmp_path, snapshot_dir, capsys):
        out = tmp_path / "run"
        code = main(["generate", "--snapshot", str(snapshot_dir),
                     "--out", str(out), "--seed", "7", "--per-template", "1"])
        assert code == 0
        dataset = (out / "dataset.jsonl").read_text().splitlines()
        assert len(dataset) == 14
        report = json.loads((out / "report.json").read_text())
        assert report["successes"] == 14
        assert report["config"]["per_template"] == 1
        assert "generated 14/14" in capsys.readouterr().out

    def test_seed_is_mandatory(self, tmp_path, snapshot_dir):
        with pytest.raises(SystemExit) as exc_info:
            main(["generate", "--snapshot", str(snapshot_dir),
                  "--out", str(tmp_path / "x")])
        assert exc_info.value.code == 2

    def test_identical_runs_byte_identical(self, tmp_path, snapshot_dir):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            code = main(["generate", "--snapshot", str(snapshot_dir),
                         "--out", str(out), "--seed", "123",
                         "--per-template", "2"])
            assert code == 0
        assert (out_a / "dataset.jsonl").read_bytes() == (out_b / "dataset.jsonl").read_bytes()

    def test_config_file_precedence(self, tmp_path, snapshot_dir):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"per_template": 1, "top_k": 2}))
        out = tmp_path / "run"
        # flag overrides config for per_template; config overrides default top_k
        code = main(["generate", "--snapshot", str(snapshot_dir),
                     "--out", str(out), "--seed", "7",
                     "--config", str(config), "--per-template", "2"])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["per_template"] == 2
        assert report["config"]["top_k"] == 2

    def test_unknown_config_key_rejected(self, tmp_path, snapshot_dir, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"per_templat": 1}))
        code = main(["generate", "--snapshot", str(snapshot_dir),
                     "--out", str(tmp_path / "x"), "--seed", "7",
                     "--config", str(config)])
        assert code == 1
        assert "per_templat" in capsys.readouterr().err

    def test_unsatisfiable_template_reported_exit_zero(self, tmp_path, capsys):
        # all-positive corpus: DenyDisagreement can never be grounded
        write_jsonl(tmp_path / "meta.jsonl", [{"id": "B1", "title": "Sunny 5"}])
        write_jsonl(tmp_path / "reviews.jsonl", [
            {"id": "r1", "product_id": "B1",
             "text": "The battery is great. The screen is good. The camera is nice."},
        ])
        snap = tmp_path / "snap"
        assert main(["ingest", "--meta", str(tmp_path / "meta.jsonl"),
                     "--reviews", str(tmp_path / "reviews.jsonl"),
                     "--out", str(snap)]) == 0
        templates = tmp_path / "templates.json"
        templates.write_text(json.dumps([
            {"id": 1, "pairs": ["RequestInform", "DenyDisagreement", "RequestInform"]},
        ]))
        out = tmp_path / "run"
        code = main(["generate", "--snapshot", str(snap), "--out", str(out),
                     "--seed", "3", "--templates", str(templates),
                     "--per-template", "2", "--retry-budget", "4"])
        assert code == 0  # exhaustion is data, not failure
        assert (out / "dataset.jsonl").read_text() == ""
        report = json.loads((out / "report.json").read_text())
        assert report["successes"] == 0
        assert len(report["exhausted"]) == 2
        assert "exhausted: template 1" in capsys.readouterr().out

    def test_custom_templates_file(self, tmp_path, snapshot_dir):
        templates = tmp_path / "templates.json"
        templates.write_text(json.dumps([
            {"id": 77, "pairs": ["SearchAgreement", "RequestInform"]},
        ]))
        out = tmp_path / "run"
        code = main(["generate", "--snapshot", str(snapshot_dir),
                     "--out", str(out), "--seed", "7",
                     "--templates", str(templates), "--per-template", "2"])
        assert code == 0
        records = [json.loads(l) for l in (out / "dataset.jsonl").read_text().splitlines()]
        assert {r["template_id"] for r in records} == {77}


class TestValidateCommand:
    def test_clean_dataset_exit_zero(self, tmp_path, snapshot_dir, capsys):
        out = tmp_path / "run"
        main(["generate", "--snapshot", str(snapshot_dir), "--out", str(out),
              "--seed", "7", "--per-template", "1"])
        code = main(["validate", "--dataset", str(out / "dataset.jsonl"),
                     "--snapshot", str(snapshot_dir)])
        assert code == 0
        assert "violations: 0" in capsys.readouterr().out

    def test_mutated_dataset_exit_one(self, tmp_path, snapshot_dir, capsys):
        out = tmp_path / "run"
        main(["generate", "--snapshot", str(snapshot_dir), "--out", str(out),
              "--seed", "7", "--per-template", "1"])
        dataset = out / "dataset.jsonl"
        records = [json.loads(l) for l in dataset.read_text().splitlines()]
        for turn in records[0]["turns"]:
            if turn["grounding"]:
                turn["text"] = "tampered " + turn["text"][9:]
                break
        dataset.write_text("\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n")
        report_path = tmp_path / "violations.jsonl"
        code = main(["validate", "--dataset", str(dataset),
                     "--snapshot", str(snapshot_dir),
                     "--out", str(report_path)])
        assert code == 1
        printed = capsys.readouterr().out
        assert "grounding" in printed
        violations = [json.loads(l) for l in report_path.read_text().splitlines()]
        assert len(violations) == 1
        assert violations[0]["rule"] == "grounding"


class TestHelp:
    def test_help_documents_schema_version(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["generate", "--help"])
        assert exc_info.value.code == 0
        assert "schema_version 1" in capsys.readouterr().out


class TestStatsCommand:
    def test_stats_match_generation_report(self, tmp_path, snapshot_dir, capsys):
        out = tmp_path / "run"
        main(["generate", "--snapshot", str(snapshot_dir), "--out", str(out),
              "--seed", "7", "--per-template", "2"])
        stats_path = tmp_path / "stats.json"
        code = main(["stats", "--dataset", str(out / "dataset.jsonl"),
                     "--out", str(stats_path)])
        assert code == 0
        stats_record = json.loads(stats_path.read_text())
        report = json.loads((out / "report.json").read_text())
        assert stats_record["conversations"] == report["successes"]
        assert stats_record["per_template"] == report["per_template"]
        assert stats_record["span_reuse"] == 0
