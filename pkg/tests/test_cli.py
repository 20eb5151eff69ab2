import hashlib
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from grainsort.cli import cli
from grainsort.dataset import load_dataset


@pytest.fixture()
def runner():
    return CliRunner()


def _write_config(tmp_path, **overrides):
    cfg = {
        "seed": 777,
        "dataset": {
            "per_class_counts": [6, 6, 6],
            "snr_db": [20.0],
        },
        "scene": {"scatterers_per_scene": 30},
        "cv": {"k": 2},
        "svm": {"max_passes": 50},
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            cfg.setdefault(key, {}).update(value)
        else:
            cfg[key] = value
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestSimulate:
    def test_writes_dataset_and_manifest(self, runner, tmp_path):
        config = _write_config(tmp_path)
        out = tmp_path / "run"
        result = runner.invoke(
            cli, ["simulate", "--config", str(config), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        params, ascans = load_dataset(out / "dataset_snr20.gsrd")
        assert len(ascans) == 18
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["per_class_counts"] == [6, 6, 6]
        assert manifest["seed"] == 777
        assert manifest["files"][0]["n_records"] == 18
        assert len(manifest["config_hash"]) == 64

    def test_default_record_split_totals(self, runner, tmp_path):
        # default per-class counts, tiny scenes to keep synthesis fast
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps({"seed": 9, "scene": {"scatterers_per_scene": 10},
                        "scene": {"scatterers_per_scene": 10},
                        "dataset": {"snr_db": [None]}})
        )
        out = tmp_path / "run"
        result = runner.invoke(
            cli, ["simulate", "--config", str(config), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["per_class_counts"] == [1894, 1894, 1893]
        assert manifest["files"][0]["n_records"] == 5681

    def test_rerun_is_byte_identical(self, runner, tmp_path):
        config = _write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            result = runner.invoke(
                cli, ["simulate", "--config", str(config), "--out", str(out)]
            )
            assert result.exit_code == 0, result.output
        digest_a = hashlib.sha256((out_a / "dataset_snr20.gsrd").read_bytes()).hexdigest()
        digest_b = hashlib.sha256((out_b / "dataset_snr20.gsrd").read_bytes()).hexdigest()
        assert digest_a == digest_b

    def test_csv_export_flag(self, runner, tmp_path):
        config = _write_config(tmp_path)
        out = tmp_path / "run_csv"
        result = runner.invoke(
            cli, ["simulate", "--config", str(config), "--out", str(out), "--csv"]
        )
        assert result.exit_code == 0, result.output
        lines = (out / "dataset_snr20.csv").read_text().strip().split("\n")
        assert lines[0].split(",")[:3] == ["label", "re_0", "im_0"]
        assert len(lines) == 1 + 18

    def test_seed_override_changes_data(self, runner, tmp_path):
        config = _write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        runner.invoke(cli, ["simulate", "--config", str(config), "--out", str(out_a)])
        runner.invoke(
            cli,
            ["simulate", "--config", str(config), "--out", str(out_b), "--seed", "778"],
        )
        assert (out_a / "dataset_snr20.gsrd").read_bytes() != (
            out_b / "dataset_snr20.gsrd"
        ).read_bytes()

    def test_bad_config_exits_2(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"seed": 1, "cv": {"k": 0}}))
        result = runner.invoke(
            cli, ["simulate", "--config", str(config), "--out", str(tmp_path / "x")]
        )
        assert result.exit_code == 2
        config.write_text(json.dumps({"seed": 1, "unknown_section": {}}))
        result = runner.invoke(
            cli, ["simulate", "--config", str(config), "--out", str(tmp_path / "y")]
        )
        assert result.exit_code == 2

    def test_missing_config_file_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            cli, ["simulate", "--config", str(tmp_path / "nope.json")]
        )
        assert result.exit_code == 2


@pytest.fixture()
def simulated(runner, tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("sim")
    config = _write_config(tmp_path)
    out = tmp_path / "run"
    result = runner.invoke(cli, ["simulate", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return config, out / "dataset_snr20.gsrd", tmp_path


class TestExtract:
    def test_feature_csv_contract(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out = tmp_path / "feat"
        result = runner.invoke(
            cli,
            ["extract", str(dataset), "--method", "FOS",
             "--config", str(config), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        lines = (out / "features_FOS.csv").read_text().strip().split("\n")
        provenance = [l for l in lines if l.startswith("#")]
        assert any("config_hash=" in l for l in provenance)
        assert any("seed=" in l for l in provenance)
        data = [l for l in lines if not l.startswith("#")]
        assert data[0].split(",")[:2] == ["method_tag", "label"]
        assert len(data) == 1 + 18
        assert len(data[1].split(",")) == 2 + 6

    def test_glrlm_dimension(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out = tmp_path / "feat44"
        result = runner.invoke(
            cli,
            ["extract", str(dataset), "--method", "STFT+GLRLM",
             "--config", str(config), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        lines = [
            l
            for l in (out / "features_STFT_GLRLM.csv").read_text().strip().split("\n")
            if not l.startswith("#")
        ]
        assert len(lines[1].split(",")) == 2 + 44

    def test_truncated_dataset_exits_3(self, runner, simulated):
        config, dataset, tmp_path = simulated
        broken = tmp_path / "broken.gsrd"
        blob = Path(dataset).read_bytes()
        broken.write_bytes(blob[: len(blob) - 7])
        result = runner.invoke(
            cli,
            ["extract", str(broken), "--method", "FOS",
             "--config", str(config), "--out", str(tmp_path / "f")],
        )
        assert result.exit_code == 3
        assert "byte offset" in result.output


class TestTrainPredict:
    def test_train_then_predict_round_trip(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out = tmp_path / "model"
        result = runner.invoke(
            cli,
            ["train", str(dataset), "--method", "DWT+FOS",
             "--config", str(config), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads((out / "model.json").read_text())
        assert doc["method_tag"] == "DWT+FOS"
        assert doc["n_freq"] == 301

        pred_out = tmp_path / "pred"
        result = runner.invoke(
            cli,
            ["predict", str(out / "model.json"), str(dataset), "--out", str(pred_out)],
        )
        assert result.exit_code == 0, result.output
        names = [l for l in result.output.strip().split("\n") if not l.startswith("wrote")]
        assert len(names) == 18
        assert set(names) <= {"levelled", "peaked_cone", "inverted_cone"}
        rows = [
            l
            for l in (pred_out / "predictions.csv").read_text().strip().split("\n")
            if not l.startswith("#")
        ]
        assert rows[0] == "index,label_id,label_name"
        assert len(rows) == 1 + 18

    def test_predict_rejects_wrong_sweep_length(self, runner, simulated, tmp_path):
        config, dataset, sim_tmp = simulated
        out = sim_tmp / "model2"
        runner.invoke(
            cli,
            ["train", str(dataset), "--method", "FOS",
             "--config", str(config), "--out", str(out)],
        )
        other_cfg = tmp_path / "cfg.json"
        other_cfg.write_text(
            json.dumps({
                "seed": 5,
                "radar": {"n_freq": 128},
                "dataset": {"per_class_counts": [2, 2, 2], "snr_db": [None]},
                "scene": {"scatterers_per_scene": 15},
            })
        )
        sim_out = tmp_path / "other"
        result = runner.invoke(
            cli, ["simulate", "--config", str(other_cfg), "--out", str(sim_out)]
        )
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            cli,
            ["predict", str(out / "model.json"), str(sim_out / "dataset_noiseless.gsrd")],
        )
        assert result.exit_code == 3
        assert "sweep" in result.output or "model" in result.output


class TestEvaluate:
    def test_echo_classifier_all_ones(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out = tmp_path / "eval_echo"
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(out),
             "--method", "FOS", "--method", "DCT+FOS", "--echo-classifier"],
        )
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        block = summary["results"]["snr20"]
        assert set(block) == {"FOS", "DCT+FOS"}
        for payload in block.values():
            assert payload["mean"]["ACC"] == 1.0
            assert payload["std"]["ACC"] == 0.0
        assert "100.00±0.00" in (out / "report_snr20.txt").read_text()

    def test_report_files_structure(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out = tmp_path / "eval_svm"
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(out), "--method", "FOS"],
        )
        assert result.exit_code == 0, result.output
        lines = (out / "report_snr20.csv").read_text().strip().split("\n")
        provenance = [l for l in lines if l.startswith("#")]
        assert any(l.startswith("# config_hash=") for l in provenance)
        assert any(l.startswith("# seed=") for l in provenance)
        rows = [l for l in lines if not l.startswith("#")]
        header = rows[0].split(",")
        assert header[:4] == ["method", "metric", "mean", "std"]
        assert header[4:] == ["fold_0", "fold_1"]
        assert len(rows) == 1 + 6  # one method x six metrics

    def test_rerun_reports_byte_identical(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out_a, out_b = tmp_path / "ev_a", tmp_path / "ev_b"
        for out in (out_a, out_b):
            result = runner.invoke(
                cli,
                ["evaluate", "--config", str(config), "--out", str(out),
                 "--method", "FOS"],
            )
            assert result.exit_code == 0, result.output
        assert (out_a / "report_snr20.csv").read_bytes() == (
            out_b / "report_snr20.csv"
        ).read_bytes()
        assert (out_a / "summary.json").read_bytes() == (
            out_b / "summary.json"
        ).read_bytes()

    def test_convergence_failure_exits_4(self, runner, tmp_path):
        config = _write_config(
            tmp_path,
            kernel={"kind": "rbf", "C": 1000.0, "gamma": 0.001},
            svm={"max_passes": 1},
            scene={"scatterers_per_scene": 30, "gain_jitter_db": 6.0},
            dataset={"per_class_counts": [20, 20, 20], "snr_db": [-30.0]},
        )
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(tmp_path / "ev"),
             "--method", "FOS"],
        )
        assert result.exit_code == 4, result.output

    def test_grid_search_reports_best_kernel(self, runner, simulated):
        config, dataset, tmp_path = simulated
        cfg = json.loads(Path(config).read_text())
        cfg["grid"] = {"C": [1.0, 10.0], "gamma": [0.05]}
        grid_config = tmp_path / "grid.json"
        grid_config.write_text(json.dumps(cfg))
        out = tmp_path / "grid_out"
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(grid_config), "--out", str(out),
             "--method", "FOS", "--grid"],
        )
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        payload = summary["results"]["snr20"]["FOS"]
        assert payload["best_kernel"]["C"] in (1.0, 10.0)
        assert len(payload["grid_scan"]) == 2


class TestReport:
    def test_renders_stored_summary(self, runner, simulated):
        config, dataset, tmp_path = simulated
        out = tmp_path / "ev_rep"
        runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(out),
             "--method", "FOS", "--echo-classifier"],
        )
        result = runner.invoke(cli, ["report", str(out / "summary.json")])
        assert result.exit_code == 0, result.output
        assert "FOS+SVM" in result.output
        assert "100.00±0.00" in result.output

    def test_rejects_garbage_summary(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"not\": \"a summary\"}")
        result = runner.invoke(cli, ["report", str(bad)])
        assert result.exit_code == 3


class TestThreadCap:
    def test_env_var_parallel_run_matches_serial(self, runner, simulated, monkeypatch):
        config, dataset, tmp_path = simulated
        out_serial = tmp_path / "serial"
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(out_serial),
             "--method", "FOS", "--method", "DCT+FOS"],
        )
        assert result.exit_code == 0
        monkeypatch.setenv("GRAINSORT_THREADS", "2")
        out_par = tmp_path / "par"
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(out_par),
             "--method", "FOS", "--method", "DCT+FOS"],
        )
        assert result.exit_code == 0
        assert (out_serial / "summary.json").read_bytes() == (
            out_par / "summary.json"
        ).read_bytes()

    def test_invalid_thread_cap_exits_2(self, runner, simulated, monkeypatch):
        config, dataset, tmp_path = simulated
        monkeypatch.setenv("GRAINSORT_THREADS", "lots")
        result = runner.invoke(
            cli,
            ["evaluate", "--config", str(config), "--out", str(tmp_path / "ev2"),
             "--method", "FOS"],
        )
        assert result.exit_code == 2
