"""End-to-end tests for the command line runner."""

import csv
import json

import numpy as np
import pytest

from swapnet import cli


def run_cli(argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [dict(zip(header, cells)) for cells in reader]
    return header, rows


def read_sidecar(path):
    with open(str(path) + ".meta.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_config(tmp_path, mapping):
    import yaml

    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(mapping), encoding="utf-8")
    return path


class TestSwapCommand:
    def test_worked_example_row(self, tmp_path):
        out = tmp_path / "swap.csv"
        assert run_cli(["swap", "--out", out]) == 0
        header, rows = read_csv(out)
        assert len(rows) == 1
        row = rows[0]
        assert header[0] == "num_qubits"
        assert int(row["num_qubits"]) == 4
        assert float(row["fidelity_predicted"]) == pytest.approx(
            0.3 / np.sqrt(0.1), abs=1e-12)
        assert float(row["fidelity_simulated"]) == pytest.approx(
            float(row["fidelity_predicted"]), abs=1e-9)
        assert float(row["p0_simulated"]) == pytest.approx(0.1, abs=1e-9)
        assert float(row["mean_repetitions"]) == pytest.approx(10.0, abs=1e-6)
        shared = [float(x) for x in
                  row["spectrum_shared_simulated"].split(";")]
        assert shared == pytest.approx([0.64, 0.27, 0.08, 0.01], abs=1e-9)

    def test_sampling_records_acceptance(self, tmp_path):
        out = tmp_path / "swap.csv"
        assert run_cli(["swap", "--out", out, "--shots", 2000,
                        "--seed", 3]) == 0
        _, rows = read_csv(out)
        freq = float(rows[0]["acceptance_frequency"])
        assert freq == pytest.approx(0.1, abs=3 * np.sqrt(0.09 / 2000))

    def test_sidecar_describes_run(self, tmp_path):
        out = tmp_path / "swap.csv"
        run_cli(["swap", "--out", out, "--seed", 7])
        meta = read_sidecar(out)
        assert meta["subcommand"] == "swap"
        assert meta["schema_version"] == 1
        assert meta["row_count"] == 1
        assert meta["config"]["seed"] == 7
        assert "out" not in meta["config"]
        assert len(meta["config_hash"]) == 64
        header, _ = read_csv(out)
        assert meta["columns"] == header


class TestReproducibility:
    def test_csv_runs_are_byte_identical(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        run_cli(["swap", "--out", first, "--shots", 500, "--seed", 11])
        run_cli(["swap", "--out", second, "--shots", 500, "--seed", 11])
        assert first.read_bytes() == second.read_bytes()
        assert (read_sidecar(first)["config_hash"]
                == read_sidecar(second)["config_hash"])

    def test_json_runs_are_byte_identical(self, tmp_path):
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        for path in (first, second):
            run_cli(["feedforward-demo", "--out", path, "--format", "json",
                     "--shots", 256, "--seed", 5])
        assert first.read_bytes() == second.read_bytes()

    def test_worker_count_does_not_change_output(self, tmp_path, monkeypatch):
        config = write_config(tmp_path, {"points": 6, "shots": 64})
        serial = tmp_path / "serial.csv"
        pooled = tmp_path / "pooled.csv"
        monkeypatch.delenv(cli.WORKERS_ENV, raising=False)
        run_cli(["theta-sweep", "--config", config, "--out", serial])
        monkeypatch.setenv(cli.WORKERS_ENV, "2")
        run_cli(["theta-sweep", "--config", config, "--out", pooled])
        assert serial.read_bytes() == pooled.read_bytes()

    def test_bad_worker_count_is_config_error(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.WORKERS_ENV, "many")
        config = write_config(tmp_path, {"points": 3})
        assert run_cli(["theta-sweep", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 2


class TestConfigHandling:
    def test_config_file_overrides_defaults(self, tmp_path):
        config = write_config(tmp_path, {"points": 7, "theta_max": 1.0})
        out = tmp_path / "sweep.csv"
        assert run_cli(["theta-sweep", "--config", config,
                        "--out", out]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 7
        assert float(rows[-1]["theta"]) == pytest.approx(1.0)

    def test_flag_overrides_config_file(self, tmp_path):
        config = write_config(tmp_path, {"seed": 5})
        out = tmp_path / "swap.csv"
        run_cli(["swap", "--config", config, "--out", out, "--seed", 9])
        assert read_sidecar(out)["config"]["seed"] == 9

    def test_unknown_config_key_rejected(self, tmp_path):
        config = write_config(tmp_path, {"poinst": 7})
        assert run_cli(["theta-sweep", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 2

    def test_unknown_target_kind_rejected(self, tmp_path):
        config = write_config(tmp_path, {"target": {"kind": "bell"}})
        assert run_cli(["swap", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 2

    def test_non_mapping_config_rejected(self, tmp_path):
        config = tmp_path / "config.yaml"
        config.write_text("- 1\n- 2\n", encoding="utf-8")
        assert run_cli(["swap", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 2

    def test_missing_config_file_rejected(self, tmp_path):
        assert run_cli(["swap", "--config", tmp_path / "nope.yaml",
                        "--out", tmp_path / "x.csv"]) == 2

    def test_shots_flag_rejected_without_sampling(self, tmp_path):
        assert run_cli(["random-circuits", "--shots", 10,
                        "--out", tmp_path / "x.csv"]) == 2


class TestExitCodes:
    def test_odd_size_is_config_error(self, tmp_path):
        config = write_config(tmp_path, {"sizes": [5], "samples": 1})
        assert run_cli(["random-circuits", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 2

    def test_oversized_register_is_size_error(self, tmp_path):
        config = write_config(tmp_path, {"sizes": [26], "samples": 1})
        assert run_cli(["random-circuits", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 3

    def test_noise_scan_register_cap(self, tmp_path):
        config = write_config(tmp_path, {"target": {"kind": "ghz", "n": 6},
                                         "sizes": [6],
                                         "sources": ["eta_1q"]})
        assert run_cli(["noise-scan", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 3


class TestNetworkCommand:
    def test_rows_follow_closed_forms(self, tmp_path):
        out = tmp_path / "network.csv"
        assert run_cli(["network", "--out", out]) == 0
        _, rows = read_csv(out)
        assert [int(r["node"]) for r in rows] == [1, 2, 3]
        lam = np.array([0.4, 0.3, 0.2, 0.1])
        for row in rows:
            q = int(row["node"])
            fid = np.sum(lam ** (q + 1)) / np.sqrt(np.sum(lam ** (2 * q + 1)))
            assert float(row["fidelity_predicted"]) == pytest.approx(
                fid, abs=1e-12)
            assert float(row["fidelity_simulated"]) == pytest.approx(
                fid, abs=1e-9)
            assert float(row["cumulative_p0_simulated"]) == pytest.approx(
                float(np.sum(lam ** (2 * q + 1))), abs=1e-9)
        acc = np.prod([float(r["acceptance_simulated"]) for r in rows])
        assert acc == pytest.approx(
            float(rows[-1]["cumulative_p0_simulated"]), abs=1e-9)


class TestThetaSweepCommand:
    def test_default_grid_matches_ideal(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run_cli(["theta-sweep", "--out", out]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 50
        assert float(rows[0]["theta"]) == 0.0
        assert float(rows[0]["fidelity_simulated"]) == pytest.approx(1.0)
        assert float(rows[0]["p0_simulated"]) == pytest.approx(1.0)
        meta = read_sidecar(out)
        assert meta["summary"]["max_fidelity_error"] <= 1e-9
        assert rows[0]["fidelity_noisy"] == ""

    def test_noisy_sweep_fills_noise_columns(self, tmp_path):
        config = write_config(tmp_path, {
            "points": 4,
            "noise": {"source": "eta_1q", "strength": 0.01},
        })
        out = tmp_path / "sweep.csv"
        assert run_cli(["theta-sweep", "--config", config,
                        "--out", out]) == 0
        _, rows = read_csv(out)
        for row in rows:
            assert 0.0 < float(row["fidelity_noisy"]) <= 1.0 + 1e-9
            assert 0.0 < float(row["hellinger_noisy"]) <= 1.0 + 1e-9
        assert float(rows[-1]["fidelity_noisy"]) < 1.0


class TestRandomCircuitsCommand:
    def test_small_sweep_statistics(self, tmp_path):
        config = write_config(tmp_path, {"sizes": [4, 6], "samples": 4})
        out = tmp_path / "rc.csv"
        assert run_cli(["random-circuits", "--config", config,
                        "--out", out]) == 0
        _, rows = read_csv(out)
        assert [int(r["n"]) for r in rows] == [4, 6]
        for row in rows:
            n = int(row["n"])
            assert int(row["cycles"]) == 2 * n
            assert int(row["samples"]) == 4
            p0 = float(row["p0_mean"])
            assert 2.0 ** -n < p0 < 1.0
            assert 0.5 < float(row["fidelity_mean"]) <= 1.0
            assert float(row["repetitions_mean"]) >= 1.0 / p0 - 1e-9


class TestNoiseScanCommand:
    def test_grid_override_and_zero_noise_row(self, tmp_path):
        config = write_config(tmp_path, {
            "target": {"kind": "theta", "theta": 1.0471975511965976},
            "sources": ["eta_1q"],
            "grids": {"eta_1q": [0.0, 0.01]},
        })
        out = tmp_path / "scan.csv"
        assert run_cli(["noise-scan", "--config", config, "--out", out]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 2
        clean, noisy = rows
        assert float(clean["strength"]) == 0.0
        assert float(clean["hellinger"]) == pytest.approx(1.0, abs=1e-9)
        # The swap of a non-uniform spectrum never reaches fidelity 1, so at
        # zero strength the density-matrix run lands on the closed form.
        assert float(clean["state_fidelity"]) == pytest.approx(
            5.0 / np.sqrt(28.0), abs=1e-9)
        assert float(noisy["state_fidelity"]) < float(clean["state_fidelity"])
        assert clean["state_fidelity_stderr"] == ""

    def test_ghz_target_expands_sizes(self, tmp_path):
        config = write_config(tmp_path, {
            "sizes": [2, 3],
            "sources": ["readout"],
            "grids": {"readout": [0.0, 0.02]},
        })
        out = tmp_path / "scan.csv"
        assert run_cli(["noise-scan", "--config", config, "--out", out]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 4
        assert sorted({int(r["num_qubits"]) for r in rows}) == [2, 3]

    def test_spectrum_target_rejected(self, tmp_path):
        config = write_config(tmp_path, {
            "target": {"kind": "spectrum", "coefficients": [0.5, 0.5]}})
        assert run_cli(["noise-scan", "--config", config,
                        "--out", tmp_path / "x.csv"]) == 2


class TestFeedforwardDemoCommand:
    def test_ghz_outcome_classes(self, tmp_path):
        out = tmp_path / "ff.csv"
        assert run_cli(["feedforward-demo", "--out", out, "--shots", 4096,
                        "--seed", 2]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 4
        assert sum(int(r["count"]) for r in rows) == 4096
        for row in rows:
            assert float(row["expected_frequency"]) == 0.25
            assert abs(float(row["z_score"])) < 5.0
        meta = read_sidecar(out)
        assert meta["summary"]["min_corrected_fidelity"] == pytest.approx(
            1.0, abs=1e-9)
        assert meta["summary"]["mode"] == "feedforward_uniform"

    def test_general_mode_for_nonuniform_spectrum(self, tmp_path):
        config = write_config(tmp_path, {
            "target": {"kind": "theta", "theta": 0.9},
            "shots": 512,
        })
        out = tmp_path / "ff.csv"
        assert run_cli(["feedforward-demo", "--config", config,
                        "--out", out]) == 0
        meta = read_sidecar(out)
        assert meta["summary"]["mode"] == "feedforward_general"
        assert meta["summary"]["min_corrected_fidelity"] == pytest.approx(
            1.0, abs=1e-9)


class TestOutputFormats:
    def test_json_format_matches_csv_values(self, tmp_path):
        csv_out = tmp_path / "swap.csv"
        json_out = tmp_path / "swap.json"
        run_cli(["swap", "--out", csv_out])
        run_cli(["swap", "--out", json_out, "--format", "json"])
        _, csv_rows = read_csv(csv_out)
        with open(json_out, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        assert payload["columns"] == list(csv_rows[0].keys())
        row = payload["rows"][0]
        assert row["fidelity_simulated"] == pytest.approx(
            float(csv_rows[0]["fidelity_simulated"]), abs=0)
        assert isinstance(row["spectrum_shared_simulated"], list)

    def test_plot_renders_png(self, tmp_path):
        out = tmp_path / "swap.csv"
        assert run_cli(["swap", "--out", out, "--plot"]) == 0
        png = tmp_path / "swap.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_noise_scan_plot(self, tmp_path):
        config = write_config(tmp_path, {
            "sizes": [2],
            "sources": ["eta_1q", "readout"],
            "grids": {"eta_1q": [0.0, 0.01], "readout": [0.0, 0.02]},
        })
        out = tmp_path / "scan.csv"
        assert run_cli(["noise-scan", "--config", config, "--out", out,
                        "--plot"]) == 0
        assert (tmp_path / "scan.png").exists()
