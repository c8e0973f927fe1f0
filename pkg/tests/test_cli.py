import csv
import json

import pytest

from linkevo.cli import main
from linkevo.graphcore import read_snapshots
from linkevo.ingest import build_activity_network, parse_contact_log
from linkevo.pipeline import load_inputs
from linkevo.synth import describe, generate, preset

SMALL = {"n_nodes": 70, "seed": 5}
FAST = ["--classifiers", "logistic,knn,naive_bayes", "--k", "2,28"]


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def report_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "manifest.json"}


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = write_json(root / "synth.json", SMALL)
    assert main(["synth", "--preset", "homophily", "--config", cfg, "--out", str(root / "data")]) == 0
    return root / "data"


class TestSynth:
    def test_files_parse_back(self, data_dir):
        for name in ("contacts.csv", "profiles.csv", "nominations.csv", "schema.json", "truth.json", "manifest.json"):
            assert (data_dir / name).exists()
        inputs = load_inputs(data_dir)
        recs, errs = parse_contact_log(data_dir / "contacts.csv", strict=True)
        assert errs == []
        world = generate(preset("homophily", **SMALL))
        rebuilt = build_activity_network(recs, world.calendar, world.config.threshold, world.participants)
        assert [dict(s.edges) for s in rebuilt] == [dict(s.edges) for s in world.snapshots]
        assert inputs.profiles == world.profiles
        truth = json.loads((data_dir / "truth.json").read_text())
        assert truth == json.loads(json.dumps(describe(world)))

    def test_default_config(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path)]) == 0
        load_inputs(tmp_path)

    def test_reruns_are_byte_identical(self, tmp_path, data_dir):
        cfg = write_json(tmp_path / "synth.json", SMALL)
        assert main(["synth", "--preset", "homophily", "--config", cfg, "--out", str(tmp_path / "again")]) == 0
        assert report_bytes(tmp_path / "again") == report_bytes(data_dir)

    def test_manifest_replays(self, tmp_path, data_dir):
        assert main(["synth", "--config", str(data_dir / "manifest.json"), "--out", str(tmp_path)]) == 0
        assert report_bytes(tmp_path) == report_bytes(data_dir)

    def test_malformed_config_names_the_field(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "bad.json", {"homophily_strength": "strong"})
        assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "homophily_strength" in capsys.readouterr().err
        cfg = write_json(tmp_path / "bad2.json", {"base_dissolution_rate": 3})
        assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "base_dissolution_rate" in capsys.readouterr().err

    def test_unparsable_config(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        assert main(["synth", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2


class TestPipeline:
    def test_formation_grid(self, tmp_path, data_dir):
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path), *FAST]) == 0
        rows = list(csv.DictReader((tmp_path / "tableII.csv").read_text().splitlines()[1:]))
        assert len(rows) == 3 * 3
        assert {r["features"] for r in rows} == {"no_svd", "top_2", "top_28"}
        assert {r["classifier"] for r in rows} == {"logistic", "knn", "naive_bayes"}
        assert len((tmp_path / "tableIV.csv").read_text().splitlines()) == 2
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["status"] == "complete" and "tableII.csv" in man["outputs"]
        assert man["config"]["k_values"] == [2, 28]
        assert set(man["inputs"]) >= {"contacts", "profiles", "nominations"}

    def test_persistence_grid(self, tmp_path, data_dir):
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path), "--task", "persistence",
                     *FAST]) == 0
        rows = list(csv.DictReader((tmp_path / "tableIV.csv").read_text().splitlines()[1:]))
        assert len(rows) == 3 * 3
        assert len((tmp_path / "tableII.csv").read_text().splitlines()) == 2
        assert len((tmp_path / "tableV.csv").read_text().splitlines()) > 2

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path, data_dir):
        first = tmp_path / "a"
        assert main(["pipeline", "--data", str(data_dir), "--out", str(first), "--plots", *FAST]) == 0
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path / "b"), "--plots",
                     "--config", str(first / "manifest.json")]) == 0
        assert report_bytes(first) == report_bytes(tmp_path / "b")

    def test_missing_inputs(self, tmp_path, capsys):
        assert main(["pipeline", "--data", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
        assert "contacts" in capsys.readouterr().err

    def test_bad_flag_values(self, tmp_path, data_dir, capsys):
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path), "--classifiers", "oracle"]) == 2
        assert "classifiers" in capsys.readouterr().err
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path), "--max-hops", "1"]) == 2
        assert "max_hops" in capsys.readouterr().err
        with pytest.raises(SystemExit) as e:
            main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path), "--task", "decay"])
        assert e.value.code == 2

    def test_manifest_from_another_command_rejected(self, tmp_path, data_dir):
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path),
                     "--config", str(data_dir / "manifest.json")]) == 2

    def test_manifest_written_before_outputs(self, tmp_path, data_dir, monkeypatch):
        import linkevo.cli as cli

        def boom(*a, **k):
            raise RuntimeError("disk on fire")
        monkeypatch.setattr(cli, "run", boom)
        assert main(["pipeline", "--data", str(data_dir), "--out", str(tmp_path), *FAST]) == 1
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["status"] == "incomplete" and man["outputs"] == []
        assert [p.name for p in tmp_path.iterdir()] == ["manifest.json"]


class TestStepwise:
    def test_build_dataset_train_eval_rank(self, tmp_path, data_dir, capsys):
        d = str(data_dir)
        assert main(["build", "--data", d, "--out", str(tmp_path / "net")]) == 0
        snaps = read_snapshots(tmp_path / "net" / "activity_edges.csv", tmp_path / "net" / "activity_nodes.csv")
        assert len(snaps) == 4
        ds = str(tmp_path / "ds" / "formation.csv")
        assert main(["dataset", "--data", d, "--out", ds]) == 0
        model = str(tmp_path / "model.json")
        assert main(["train", "--dataset", ds, "--k", "28", "--out", model]) == 0
        capsys.readouterr()
        assert main(["eval", "--model", model, "--dataset", ds, "--out", str(tmp_path / "m.json")]) == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["accuracy"] <= 1.0
        assert result["tp"] + result["fp"] + result["tn"] + result["fn"] > 0
        assert main(["rank", "--model", model, "--top", "3", "--out", str(tmp_path / "r.csv")]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 3
        assert len((tmp_path / "r.csv").read_text().splitlines()) == 1 + 29

    def test_rank_needs_eigenfeatures(self, tmp_path, data_dir):
        ds = str(tmp_path / "formation.csv")
        assert main(["dataset", "--data", str(data_dir), "--out", ds]) == 0
        model = str(tmp_path / "model.json")
        assert main(["train", "--dataset", ds, "--k", "none", "--classifier", "knn", "--out", model]) == 0
        assert main(["rank", "--model", model]) == 2

    def test_stats(self, tmp_path, data_dir, capsys):
        assert main(["stats", "--data", str(data_dir), "--out", str(tmp_path)]) == 0
        assert capsys.readouterr().out == (tmp_path / "summary.txt").read_text()
        assert len((tmp_path / "fig1.csv").read_text().splitlines()) == 2 + 3 * 3
