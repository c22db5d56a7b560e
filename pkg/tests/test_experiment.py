"""Experiment configs, runner, sweeps, reports, and the CLI surface."""

import csv
import json

import numpy as np
import pytest

from hqrc.cli import main as cli_main
from hqrc.errors import ConfigError
from hqrc.experiment import (
    ExperimentConfig,
    SystemConfig,
    emit_report,
    generate_truth,
    load_config,
    load_summaries,
    load_sweep_axes,
    run_experiment,
    run_sweep,
)

TINY = {
    "system": {"train_steps": 60, "prune_steps": 10, "test_steps": 30},
    "circuit": {"n_qubits": 3},
}


def tiny_config(**over) -> ExperimentConfig:
    d = json.loads(json.dumps(TINY))
    for key, sub in over.items():
        d.setdefault(key, {}).update(sub) if isinstance(sub, dict) else d.__setitem__(key, sub)
    return ExperimentConfig.from_dict(d)


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig()
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_hash_changes_on_any_field(self):
        base = ExperimentConfig()
        probes = [
            ("circuit.n_qubits", 6),
            ("circuit.feature_map", "pi_tanh"),
            ("reservoir.alpha", 0.6),
            ("readout.beta", 1e-6),
            ("noise.shots", 1000),
            ("system.train_steps", 999),
            ("mode", "classical-esn"),
        ]
        hashes = {base.config_hash()}
        for path, val in probes:
            h = base.with_field(path, val).config_hash()
            assert h not in hashes
            hashes.add(h)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"circuit": {"qubits": 3}})

    def test_load_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(TINY))
        cfg = load_config(path)
        assert cfg.system.train_steps == 60
        assert cfg.circuit.n_qubits == 3

    def test_load_toml(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(
            '[system]\ntrain_steps = 60\nprune_steps = 10\ntest_steps = 30\n'
            '[circuit]\nn_qubits = 3\nfeature_map = "pi_tanh"\n'
        )
        cfg = load_config(path)
        assert cfg.circuit.feature_map == "pi_tanh"
        assert cfg.system.test_steps == 30

    def test_sweep_section(self, tmp_path):
        path = tmp_path / "cfg.json"
        doc = dict(TINY)
        doc["sweep"] = {"axes": {"reservoir.alpha": [0.6, 0.7]}, "seeds": [0, 1, 2]}
        path.write_text(json.dumps(doc))
        axes, seeds = load_sweep_axes(path)
        assert axes == {"reservoir.alpha": [0.6, 0.7]}
        assert seeds == [0, 1, 2]
        assert load_config(path).system.train_steps == 60


class TestRunExperiment:
    def test_summary_fields(self):
        s = run_experiment(tiny_config(), 0)
        assert s.mode == "hqrc"
        assert s.vpt >= 0.0
        assert len(s.rmse) == 30
        assert 0.0 <= s.overlap_fraction <= 1.0
        assert s.error is None

    def test_exact_mode_bitwise_reproducible(self):
        cfg = tiny_config()
        s1 = run_experiment(cfg, 7, keep_trajectories=True)
        s2 = run_experiment(cfg, 7, keep_trajectories=True)
        assert s1.vpt == s2.vpt
        np.testing.assert_array_equal(s1.prediction, s2.prediction)
        assert s1.rmse == s2.rmse

    def test_degenerate_single_column_regression(self):
        cfg = tiny_config(system={"train_steps": 11, "prune_steps": 10, "test_steps": 5})
        s = run_experiment(cfg, 0)
        assert s.error is None

    def test_classical_esn_mode(self):
        cfg = tiny_config(mode="classical-esn")
        s = run_experiment(cfg, 0)
        assert s.mode == "classical-esn"
        assert np.isfinite(s.vpt)

    def test_shot_mode_differs_from_exact(self):
        cfg = tiny_config()
        exact = run_experiment(cfg, 0)
        noisy = run_experiment(cfg.with_field("noise.shots", 200), 0)
        assert exact.rmse != noisy.rmse

    def test_double_scroll_system(self):
        cfg = tiny_config(system={"name": "double_scroll", "train_steps": 60,
                                  "prune_steps": 10, "test_steps": 20})
        s = run_experiment(cfg, 0)
        assert s.error is None
        assert s.dt == 0.25

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            run_experiment(tiny_config(mode="hybrid"), 0)

    def test_truth_generation_lengths(self):
        truth = generate_truth(SystemConfig(train_steps=50, test_steps=20))
        assert len(truth) == 71


class TestSweep:
    def test_single_cell_matches_single_run(self):
        cfg = tiny_config()
        cells = run_sweep(cfg, {}, seeds=[0])
        assert len(cells) == 1
        single = run_experiment(cfg, 0)
        assert cells[0].summaries[0].vpt == single.vpt

    def test_grid_shape_and_aggregates(self):
        cells = run_sweep(
            tiny_config(), {"reservoir.alpha": [0.6, 0.7], "readout.beta": [1e-8, 1e-6]},
            seeds=[0, 1],
        )
        assert len(cells) == 4
        for cell in cells:
            agg = cell.aggregates()
            assert agg["n"] == 2
            assert agg["q1"] <= agg["median"] <= agg["q3"]

    def test_failures_recorded_not_raised(self):
        cells = run_sweep(
            tiny_config(), {"circuit.preset": ["enc5cx2", "no-such-preset"]}, seeds=[0]
        )
        ok, bad = cells[0], cells[1]
        assert ok.summaries[0].error is None
        assert "ConfigError" in bad.summaries[0].error
        assert bad.aggregates() == {"n": 0}

    def test_parallel_workers_match_serial(self):
        cfg = tiny_config()
        serial = run_sweep(cfg, {"reservoir.alpha": [0.6, 0.7]}, seeds=[0])
        parallel = run_sweep(cfg, {"reservoir.alpha": [0.6, 0.7]}, seeds=[0], workers=2)
        for a, b in zip(serial, parallel):
            assert [s.vpt for s in a.summaries] == [s.vpt for s in b.summaries]


class TestPresetPipelines:
    @pytest.mark.parametrize("preset", ["L1", "L2", "L3", "L4", "L5"])
    def test_each_preset_runs_end_to_end(self, preset):
        cfg = tiny_config(circuit={"n_qubits": 3, "preset": preset, "n_layers": 2})
        s = run_experiment(cfg, 0)
        assert s.error is None
        assert np.isfinite(s.vpt)


class TestLayerFamilySweep:
    """Reduced layer-family study: box medians cluster in the 4-6 band and
    measurement-feedback stacks underperform (pooled over the five feature
    maps, four seeds per cell)."""

    def test_box_medians_cluster(self):
        base = ExperimentConfig()
        axes = {
            "circuit.preset": ["L1", "L2", "L3"],
            "circuit.n_qubits": [4, 6, 8],
            "circuit.n_layers": [2],
            "circuit.feature_map": [
                "tanh", "pi_tanh", "pi_sigmoid", "identity", "pi_identity"
            ],
        }
        cells = run_sweep(base, axes, seeds=[0, 1, 2, 3], workers=2)
        boxes: dict = {}
        for c in cells:
            key = (c.overrides["circuit.preset"], c.overrides["circuit.n_qubits"])
            for s in c.summaries:
                assert s.error is None
                boxes.setdefault(key, []).append(s.vpt)
        medians = {k: float(np.median(v)) for k, v in boxes.items()}
        in_band = sum(1 for m in medians.values() if 4.0 <= m <= 6.0)
        assert in_band >= len(medians) // 2 + 1, medians
        # feedback stacks trail the pure data-encoding stacks at every size
        for n in (4, 6, 8):
            assert medians[("L3", n)] < max(medians[("L1", n)], medians[("L2", n)])


class TestReports:
    def test_csv_and_json(self, tmp_path):
        summaries = [run_experiment(tiny_config(), s) for s in (0, 1)]
        paths = emit_report(summaries, tmp_path)
        rows = list(csv.DictReader(open(tmp_path / "runs.csv")))
        assert len(rows) == 2
        assert rows[0]["config_hash"] == summaries[0].config_hash
        assert float(rows[0]["vpt"]) == summaries[0].vpt
        records = json.load(open(tmp_path / "runs.json"))
        assert {r["seed"] for r in records} == {0, 1}

    def test_overlap_report_embedded(self, tmp_path):
        s = run_experiment(tiny_config(), 0)
        emit_report([s], tmp_path)
        rec = json.load(open(tmp_path / "runs.json"))[0]
        rep = rec["overlap_report"]
        assert set(rep) == {"box_lo", "box_hi", "pred_mean", "pred_std",
                            "truth_mean", "truth_std"}
        assert len(rep["box_lo"]) == 3

    def test_censored_flag_in_json(self, tmp_path):
        cfg = tiny_config(system={"train_steps": 60, "prune_steps": 10, "test_steps": 3})
        s = run_experiment(cfg, 0)
        emit_report([s], tmp_path)
        rec = json.load(open(tmp_path / "runs.json"))[0]
        assert rec["censored"] == s.vpt_censored

    def test_round_trip_identical_aggregates(self, tmp_path):
        summaries = [run_experiment(tiny_config(), s) for s in (0, 1, 2)]
        emit_report(summaries, tmp_path)
        back = load_summaries(tmp_path / "runs.json")
        assert [s.vpt for s in back] == [s.vpt for s in summaries]
        assert [s.config_hash for s in back] == [s.config_hash for s in summaries]

    def test_trajectory_csv(self, tmp_path):
        s = run_experiment(tiny_config(), 0, keep_trajectories=True)
        paths = emit_report([s], tmp_path, trajectories=True)
        traj_files = [p for p in paths if "trajectory" in p.name]
        assert len(traj_files) == 1
        rows = list(csv.reader(open(traj_files[0])))
        assert rows[0] == ["t", "truth_0", "truth_1", "truth_2", "pred_0", "pred_1", "pred_2"]
        assert len(rows) == 31

    def test_empty_report_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_report([], tmp_path)


class TestCli:
    def test_generate(self, tmp_path, capsys):
        out = tmp_path / "lorenz.csv"
        assert cli_main(["generate", "--system", "lorenz63", "--steps", "50",
                         "--out", str(out)]) == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["t", "x", "y", "z"]
        assert len(rows) == 52

    def test_generate_unknown_system(self, capsys):
        assert cli_main(["generate", "--system", "roessler"]) == 2

    def test_run_with_config(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(TINY))
        out = tmp_path / "report"
        rc = cli_main(["run", "--config", str(cfg_path), "--seed", "3", "--out", str(out)])
        assert rc == 0
        assert (out / "runs.csv").exists()
        assert "seed=3" in capsys.readouterr().out

    def test_run_shots_override(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(TINY))
        rc = cli_main(["run", "--config", str(cfg_path), "--seed", "0", "--shots", "100"])
        assert rc == 0

    def test_run_saves_model_record(self, tmp_path, capsys):
        from hqrc.readout import ReadoutModel

        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(TINY))
        model_path = tmp_path / "model.json"
        rc = cli_main(["run", "--config", str(cfg_path), "--seed", "0",
                       "--save-model", str(model_path)])
        assert rc == 0
        model = ReadoutModel.load(model_path)
        assert model.config_hash == ExperimentConfig.from_dict(TINY).config_hash()
        assert model.scale is not None
        assert model.W_o.shape[0] == 3

    def test_baseline_mode(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(TINY))
        out = tmp_path / "rep"
        rc = cli_main(["baseline", "--config", str(cfg_path), "--seed", "0",
                       "--out", str(out)])
        assert rc == 0
        rows = list(csv.DictReader(open(out / "runs.csv")))
        assert rows[0]["mode"] == "classical-esn"

    def test_sweep_and_report(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        doc = dict(TINY)
        doc["sweep"] = {"axes": {"reservoir.alpha": [0.6, 0.7]}, "seeds": [0]}
        cfg_path.write_text(json.dumps(doc))
        out = tmp_path / "sweep"
        rc = cli_main(["sweep", "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        assert (out / "aggregates.json").exists()
        rows = list(csv.DictReader(open(out / "runs.csv")))
        assert len(rows) == 2

        rc = cli_main(["report", str(out / "runs.json")])
        assert rc == 0
        assert "median" in capsys.readouterr().out
