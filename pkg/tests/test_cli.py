"""CLI: every subcommand end to end on tiny configs, plus the exit-code map."""

import csv
import json

import numpy as np
import pytest

from hybridnn import datasets as ds
from hybridnn.cli import main

GRAPH_MODEL = {
    "kind": "graph",
    "architecture": {
        "input": {"domain": "complex", "channels": {}},
        "blocks": [
            {"paths": {
                "CC": {"conv": {"c": 4, "k": 3}, "activation": "cAbs"},
                "CR": {"conv": {"c": 4, "k": 3}, "activation": "none", "conversion": "Mag"},
            }},
            {"paths": {"RR": {"conv": {"c": 6, "k": 3}, "activation": "ReLU"}}},
        ],
        "heads": [{"domain": "real", "size": 10}],
    },
}

PROXY_TASK = {"kind": "digit_proxy", "count": 80, "snr_db": 0,
              "max_bins": 24, "time_pool": 25}


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestExitCodes:
    def test_missing_config_file_is_config_error(self, tmp_path):
        code = main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path), "train"])
        assert code == 2

    def test_invalid_json_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["--config", str(bad), "--out", str(tmp_path), "train"]) == 2

    def test_missing_required_section_is_config_error(self, tmp_path):
        cfg = _write_config(tmp_path, {"task": PROXY_TASK})  # no model
        assert main(["--config", cfg, "--out", str(tmp_path / "o"), "train"]) == 2

    def test_missing_dataset_root_is_data_error(self, tmp_path):
        cfg = _write_config(tmp_path, {"source": "audiomnist", "root": str(tmp_path / "none")})
        assert main(["--config", cfg, "--out", str(tmp_path / "o"), "prep-audio"]) == 3

    def test_infeasible_bounds_exit_code_4(self, tmp_path):
        cfg = _write_config(tmp_path, {
            "task": PROXY_TASK,
            "search": {"trials_per_phase": 2, "block_range": [1], "channel_choices": [4],
                        "epochs_per_trial": 1, "max_params": 1},
        })
        assert main(["--config", cfg, "--out", str(tmp_path / "o"), "search"]) == 4

    def test_unknown_search_option_is_config_error(self, tmp_path):
        cfg = _write_config(tmp_path, {"task": PROXY_TASK, "search": {"warp_factor": 9}})
        assert main(["--config", cfg, "--out", str(tmp_path / "o"), "search"]) == 2


class TestGenSinusoid:
    def test_writes_arrays_and_manifest(self, tmp_path):
        cfg = _write_config(tmp_path, {"count": 32})
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out), "--seed", "5", "gen-sinusoid"]) == 0
        stored = np.load(out / "sinusoid.npz")
        assert stored["predictors"].shape == (32, 36)
        assert stored["targets"].shape == (32, 3)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5


class TestPrepAudio:
    def test_proxy_source(self, tmp_path):
        cfg = _write_config(tmp_path, {"source": "proxy", "count": 40})
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out), "prep-audio"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["count"] == 40
        splits = ds.load_split(out / "split.json")
        assert len(splits["train"]) + len(splits["val"]) + len(splits["test"]) == 40

    def test_wav_directory_source(self, tmp_path, rng):
        root = tmp_path / "data" / "07"
        root.mkdir(parents=True)
        for digit in range(10):
            ds.write_wav(root / f"{digit}_07_0.wav", rng.uniform(-0.4, 0.4, 6000))
        cfg = _write_config(tmp_path, {"source": "audiomnist", "root": str(tmp_path / "data")})
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out), "prep-audio"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["count"] == 10


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    """One small trained model shared by the downstream-command tests."""
    tmp_path = tmp_path_factory.mktemp("clirun")
    cfg = _write_config(tmp_path, {
        "task": PROXY_TASK,
        "model": GRAPH_MODEL,
        "hyperparams": {"lr": 0.003, "epochs": 2, "batch_size": 32},
    })
    out = tmp_path / "run"
    code = main(["--config", cfg, "--out", str(out), "--seed", "3", "train"])
    assert code == 0
    return tmp_path, out


class TestTrain:
    def test_report_and_checkpoint_written(self, trained_run):
        _, out = trained_run
        report = json.loads((out / "report.json").read_text())
        assert report["param_count"] > 0
        assert len(report["epochs"]) == 3  # initial + 2 epochs
        checkpoint = json.loads((out / "checkpoint.json").read_text())
        assert checkpoint["model"]["kind"] == "graph"
        assert checkpoint["tensors"]

    def test_mlp_on_sinusoid(self, tmp_path):
        cfg = _write_config(tmp_path, {
            "task": {"kind": "sinusoid", "count": 200},
            "model": {"kind": "mlp", "layer_sizes": [18, 14, 4, 3], "activation": "ELU"},
            "hyperparams": {"lr": 0.001, "epochs": 1, "batch_size": 64},
        })
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out), "train"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["model"]["kind"] == "mlp"


class TestSearchCommand:
    def test_writes_trials_and_best(self, tmp_path):
        cfg = _write_config(tmp_path, {
            "task": PROXY_TASK,
            "search": {"trials_per_phase": 2, "block_range": [1], "channel_choices": [2, 4],
                        "kernel_choices": [3], "epochs_per_trial": 1},
        })
        out = tmp_path / "out"
        assert main(["--config", cfg, "--out", str(out), "--seed", "2", "search"]) == 0
        lines = [json.loads(l) for l in (out / "trials.jsonl").read_text().splitlines()]
        assert lines and all("trial_id" in l for l in lines)
        best = json.loads((out / "best.json").read_text())
        assert best["phase"] == "Done"
        assert best["best_param_count"] > 0


class TestDecodeWeights:
    def test_heatmap_and_blocks(self, tmp_path):
        # an mlp checkpoint has addressable dense layers
        cfg = _write_config(tmp_path, {
            "task": {"kind": "sinusoid", "count": 150},
            "model": {"kind": "mlp", "layer_sizes": [18, 14, 4, 3]},
            "hyperparams": {"lr": 0.001, "epochs": 1},
        })
        run = tmp_path / "run"
        assert main(["--config", cfg, "--out", str(run), "train"]) == 0
        out = tmp_path / "decode"
        code = main(["--out", str(out), "decode-weights",
                     "--checkpoint", str(run / "checkpoint.json")])
        assert code == 0
        svg = (out / "heatmap.svg").read_text()
        assert svg.startswith("<svg") and svg.count("<rect") == 18 * 37
        blocks = json.loads((out / "blocks.json").read_text())
        assert sorted(blocks["row_order"]) == list(range(18))
        assert len(blocks["bias_signs"]) == 18


class TestProbePhase:
    def test_traces_csv(self, tmp_path):
        cfg = _write_config(tmp_path, {
            "task": {"kind": "sinusoid", "count": 150},
            "model": {"kind": "mlp", "layer_sizes": [18, 14, 4, 3]},
            "hyperparams": {"lr": 0.001, "epochs": 1},
        })
        run = tmp_path / "run"
        assert main(["--config", cfg, "--out", str(run), "train"]) == 0
        probe_cfg = _write_config(tmp_path, {"n_points": 21}, name="probe.json")
        out = tmp_path / "probe"
        code = main(["--config", probe_cfg, "--out", str(out), "probe-phase",
                     "--checkpoint", str(run / "checkpoint.json")])
        assert code == 0
        rows = list(csv.reader((out / "traces.csv").read_text().splitlines()))
        assert len(rows) == 22  # header + 21 sweep points
        assert rows[0][0] == "phase"


class TestCropSweep:
    def test_full_curve_layout(self, trained_run, tmp_path):
        base, run = trained_run
        cfg = _write_config(tmp_path, {"task": PROXY_TASK, "ratios": [-0.4, 0.0, 0.4]})
        out = tmp_path / "sweep"
        code = main(["--config", cfg, "--out", str(out), "--seed", "3", "crop-sweep",
                     "--checkpoint", str(run / "checkpoint.json")])
        assert code == 0
        rows = list(csv.DictReader((out / "crop_curve.csv").read_text().splitlines()))
        assert [float(r["crop_ratio"]) for r in rows] == [-0.4, 0.0, 0.4]


class TestReportCommand:
    def test_tables_from_runs(self, trained_run, tmp_path):
        _, run = trained_run
        cfg = _write_config(tmp_path, {"runs": [
            {"report": str(run / "report.json"), "snr_db": 0, "label": "hybrid"},
        ]})
        out = tmp_path / "report"
        assert main(["--config", cfg, "--out", str(out), "report"]) == 0
        table = (out / "table.csv").read_text().splitlines()
        assert table[0] == "SNR,Model,Test loss,Parameters"
        assert table[1].startswith("0 dB,hybrid,")
        assert (out / "table.md").read_text().startswith("| SNR |")

    def test_missing_run_is_data_error(self, tmp_path):
        cfg = _write_config(tmp_path, {"runs": [{"report": str(tmp_path / "gone.json")}]})
        assert main(["--config", cfg, "--out", str(tmp_path / "o"), "report"]) == 3
