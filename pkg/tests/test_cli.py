import json

import numpy as np
import pytest

from conceptscope.cli import main
from conceptscope.model import load_dataset


@pytest.fixture(scope="module")
def hexagon_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("hex")
    assert main(["generate", "hexagon", "--out", str(out), "--seed", "0"]) == 0
    return out


FAST_FLAGS = ["--step-size", "0.05", "--leapfrog-steps", "5",
              "--burn-in-steps", "60", "--samples-per-restart", "10",
              "--restarts", "3"]


class TestGenerate:
    def test_hexagon_summary(self, hexagon_dir, capsys):
        main(["generate", "hexagon", "--out", str(hexagon_dir), "--seed", "0"])
        out = capsys.readouterr().out
        assert "15 concepts" in out
        assert "6 valid combinations" in out
        assert (hexagon_dir / "dataset.json").exists()
        assert (hexagon_dir / "catalog.json").exists()

    def test_vitals_summary(self, tmp_path, capsys):
        assert main(["generate", "vitals", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "N=2252" in out
        data = load_dataset(tmp_path / "dataset.json")
        assert data.n_points == 2252

    def test_invalid_config_file_fails_with_diagnostic(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"points_per_cluster": 10, "bogus_field": 3}))
        code = main(["generate", "hexagon", "--config", str(cfg),
                     "--out", str(tmp_path)])
        assert code != 0
        assert "bogus_field" in capsys.readouterr().err

    def test_small_hexagon_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"points_per_cluster": 25}))
        assert main(["generate", "hexagon", "--config", str(cfg),
                     "--out", str(tmp_path)]) == 0
        data = load_dataset(tmp_path / "dataset.json")
        assert data.n_points == 150


class TestPipelineCommand:
    def test_end_to_end_files_and_exit_code(self, hexagon_dir, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["pipeline", "--dataset", str(hexagon_dir / "dataset.json"),
                     "-K", "3", "--out", str(out), "--seed", "1", "-M", "5",
                     *FAST_FLAGS])
        assert code == 0
        for name in ("pool.json", "proposals.json", "report.json",
                     "report.md", "request.json"):
            assert (out / name).exists(), name
        report = json.loads((out / "report.json").read_text())
        assert report["mode"] == "explanations"
        assert "schema_version" in report

    def test_singles_flag_switches_mode(self, hexagon_dir, tmp_path):
        out = tmp_path / "run"
        code = main(["pipeline", "--dataset", str(hexagon_dir / "dataset.json"),
                     "-K", "3", "--out", str(out), "--seed", "1", "-M", "5",
                     "--singles", *FAST_FLAGS])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mode"] == "singles"

    def test_pin_file_switches_to_completions(self, hexagon_dir, tmp_path):
        catalog = json.loads((hexagon_dir / "catalog.json").read_text())
        pin_file = tmp_path / "pin.json"
        pin_file.write_text(json.dumps(
            {"column_index": 0,
             "values": catalog["concepts"][0]["values"]}))
        out = tmp_path / "run"
        code = main(["pipeline", "--dataset", str(hexagon_dir / "dataset.json"),
                     "-K", "3", "--out", str(out), "--seed", "1", "-M", "5",
                     "--pin", str(pin_file), *FAST_FLAGS])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mode"] == "completions"

    def test_missing_dataset_is_clean_error(self, tmp_path):
        assert main(["pipeline", "--dataset", str(tmp_path / "nope.json"),
                     "-K", "3", "--out", str(tmp_path)]) == 2


class TestSampleSelectEvaluate:
    def test_three_stage_flow(self, hexagon_dir, tmp_path, capsys):
        pool = tmp_path / "pool.json"
        assert main(["sample", "--dataset", str(hexagon_dir / "dataset.json"),
                     "-K", "3", "--out", str(pool), "--seed", "2",
                     "--t-acc", "0.5", *FAST_FLAGS]) == 0
        sel = tmp_path / "sel.json"
        assert main(["select", "--dataset", str(hexagon_dir / "dataset.json"),
                     "--pool", str(pool), "--out", str(sel), "-M", "4",
                     "--method", "kmeans", "--metric", "euclidean",
                     "--seed", "2"]) == 0
        rep = tmp_path / "rep.json"
        assert main(["evaluate", "--dataset", str(hexagon_dir / "dataset.json"),
                     "--pool", str(pool), "--proposals", str(sel),
                     "--out", str(rep)]) == 0
        doc = json.loads(rep.read_text())
        assert doc["mode"] == "explanations"
        assert doc["n_proposals"] == 4

    def test_csv_dataset_accepted(self, tmp_path):
        csv = tmp_path / "d.csv"
        rng = np.random.default_rng(0)
        rows = ["a,b,label"]
        for _ in range(40):
            x, z = rng.normal(), rng.normal()
            rows.append(f"{x},{z},{int(x + z > 0)}")
        csv.write_text("\n".join(rows) + "\n")
        pool = tmp_path / "pool.json"
        assert main(["sample", "--dataset", str(csv), "-K", "1",
                     "--out", str(pool), "--t-acc", "0.0", *FAST_FLAGS]) == 0
        assert pool.exists()


class TestDeterminism:
    def test_pipeline_reports_are_byte_identical(self, hexagon_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["pipeline", "--dataset",
                         str(hexagon_dir / "dataset.json"),
                         "-K", "3", "--out", str(out), "--seed", "7", "-M", "5",
                         *FAST_FLAGS]) == 0
            outs.append(out)
        for name in ("pool.json", "proposals.json", "report.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
