import json

import pytest

from sentinel.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "corpus"
    assert main(["synth", "--n", "300", "--seed", "17", "--out", str(out)]) == 0
    return out


class TestUsage:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0

    def test_missing_required_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["detect", "--in", "x.ndjson", "--out", "y.ndjson"])
        assert exc.value.code == 2

    def test_unknown_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_serve_without_state(self, capsys, monkeypatch):
        monkeypatch.delenv("SENTINEL_STATE", raising=False)
        with pytest.raises(SystemExit) as exc:
            main(["serve"])
        assert exc.value.code == 2

    def test_missing_input_file_is_runtime_error(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "sessionize", "--in", str(tmp_path / "absent.ndjson"),
            "--out", str(tmp_path / "out.ndjson"),
        )
        assert code == 1
        assert "error:" in err


class TestPipeline:
    def test_end_to_end(self, capsys, corpus_dir, tmp_path):
        records = corpus_dir / "records.ndjson"
        rules = corpus_dir / "rules.json"
        truth = corpus_dir / "truth.json"

        ingested = tmp_path / "ingested.ndjson"
        code, out, _ = run(
            capsys, "ingest", "--format", "ndjson", "--in", str(records), "--out", str(ingested)
        )
        assert code == 0 and "0 rejected" in out

        sessions = tmp_path / "sessions.ndjson"
        code, out, _ = run(capsys, "sessionize", "--in", str(ingested), "--out", str(sessions))
        assert code == 0 and "300 sessions" in out

        detection = tmp_path / "detection.ndjson"
        code, out, _ = run(
            capsys, "detect", "--in", str(sessions), "--rules", str(rules),
            "--out", str(detection),
        )
        assert code == 0
        flagged = {
            json.loads(line)["session_id"]
            for line in detection.read_text().splitlines()[1:]
            if line
        }
        truth_obj = json.loads(truth.read_text())
        suspicious = {p["session_id"] for p in truth_obj["plans"].values() if p["label"] == 1}
        assert suspicious <= flagged

        vocab = tmp_path / "vocab.json"
        data = tmp_path / "data.ndjson"
        code, out, _ = run(
            capsys, "featurize", "--sessions", str(sessions), "--labels", str(truth),
            "--vocab-out", str(vocab), "--data-out", str(data),
        )
        assert code == 0 and "300 rows" in out

        model = tmp_path / "model.json"
        code, out, _ = run(
            capsys, "train", "--data", str(data), "--kind", "logistic",
            "--epochs", "100", "--vocab", str(vocab), "--out", str(model),
        )
        assert code == 0
        assert json.loads(model.read_text())["kind"] == "logistic"

        report = tmp_path / "cv.json"
        code, out, _ = run(
            capsys, "evaluate", "--data", str(data), "--model", str(model),
            "--folds", "5", "--out", str(report),
        )
        assert code == 0
        obj = json.loads(report.read_text())
        assert obj["k"] == 5
        assert obj["mean_accuracy"] > 0.9

    def test_explore_multi_level_directory(self, capsys, corpus_dir, tmp_path):
        out_dir = tmp_path / "tables"
        code, out, _ = run(
            capsys, "explore", "--in", str(corpus_dir / "records.ndjson"),
            "--level", "daily", "--level", "country", "--out", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "daily.csv").read_text().startswith("bucket,count")
        assert (out_dir / "country.csv").exists()

    def test_explore_keyword_category_needs_rules(self, capsys, corpus_dir, tmp_path):
        code, _, err = run(
            capsys, "explore", "--in", str(corpus_dir / "records.ndjson"),
            "--level", "keyword_category", "--out", str(tmp_path / "kw.csv"),
        )
        assert code == 1 and "error:" in err

    def test_synth_deterministic_files(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            code, _, _ = run(capsys, "synth", "--n", "100", "--seed", "3", "--out", str(out))
            assert code == 0
        assert (a / "records.ndjson").read_bytes() == (b / "records.ndjson").read_bytes()
        assert (a / "truth.json").read_bytes() == (b / "truth.json").read_bytes()

    def test_ingest_csv(self, capsys, tmp_path):
        csv_path = tmp_path / "raw.csv"
        csv_path.write_text(
            "date,time,country,city,url,keywords,duration_seconds\n"
            "2015-01-01,09:00,United States,Chicago,http://x.com/home,annual report,30\n"
        )
        out = tmp_path / "records.ndjson"
        code, stdout, _ = run(
            capsys, "ingest", "--format", "csv", "--in", str(csv_path), "--out", str(out)
        )
        assert code == 0 and "1 parsed" in stdout
        obj = json.loads(out.read_text().splitlines()[0])
        assert obj["country"] == "United States"
