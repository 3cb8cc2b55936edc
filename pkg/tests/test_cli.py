import json

import numpy as np
import pytest

from realmask import cli, experiments
from realmask.experiments import (
    ExperimentConfig,
    phase_probe,
    probe_vector,
    report_csv,
    report_json,
    run_equivalence,
    run_fig3,
    run_fig4,
    run_fig5,
    write_report,
)


class TestProbes:
    def test_probe_vectors(self):
        assert np.allclose(probe_vector(1), [1, 0, 0, 0])
        assert np.allclose(probe_vector(4), [0.5] * 4)
        assert np.linalg.norm(probe_vector(3)) == pytest.approx(1.0)

    def test_probes_form_complete_basis(self):
        basis = np.column_stack([probe_vector(i) for i in (1, 2, 3, 4)])
        assert abs(np.linalg.det(basis)) > 1e-6  # complete but non-orthogonal

    def test_phase_probe(self):
        v = phase_probe(90.0)
        assert v[1] == pytest.approx(1j / np.sqrt(2))

    def test_bad_probe_index(self):
        with pytest.raises(ValueError):
            probe_vector(5)


class TestDeterminism:
    def test_fig4_reports_byte_identical(self):
        cfg = ExperimentConfig(seed=11)
        a = report_json(run_fig4(cfg))
        b = report_json(run_fig4(cfg))
        assert a == b

    def test_fig5_seed_changes_counts(self):
        fast = ExperimentConfig(seed=1, shots_per_setting=500, phi_grid_deg=(30.0,))
        other = ExperimentConfig(seed=2, shots_per_setting=500, phi_grid_deg=(30.0,))
        r1 = run_fig5(fast, bootstrap=False)
        r2 = run_fig5(other, bootstrap=False)
        assert r1["points"][0]["estimate"] != r2["points"][0]["estimate"]

    def test_fig3_analytic_noiseless(self):
        cfg = ExperimentConfig(seed=0, noise_p=0.0, analytic=True)
        rep = run_fig3(cfg)
        for row in rep["probes"]:
            assert row["fidelity"]["estimate"] == pytest.approx(1.0, abs=1e-12)
            assert row["purity"]["estimate"] == pytest.approx(0.5, abs=1e-12)
            assert row["fidelity"]["error_kind"] == "ci95"
            assert row["purity"]["error_kind"] == "std"

    def test_fig4_analytic_depolarized(self):
        cfg = ExperimentConfig(seed=0, noise_p=0.01, analytic=True)
        rep = run_fig4(cfg)
        # decode is affine in the correlators: fidelity = 1 - 3p/4 exactly.
        assert rep["fidelity"]["estimate"] == pytest.approx(0.9925, abs=1e-12)

    def test_fig5_analytic_endpoints(self):
        cfg = ExperimentConfig(seed=0, noise_p=0.0, analytic=True, phi_grid_deg=(0.0, 90.0))
        rep = run_fig5(cfg)
        assert rep["points"][0]["estimate"] == pytest.approx(1.0, abs=1e-7)
        assert rep["points"][1]["estimate"] == pytest.approx(0.0, abs=1e-7)

    def test_fig3_sampled_noiseless_is_perfect(self):
        # With no noise the output is an eigenstate of every test projector,
        # so all 5000 tests pass and the interval contains zero infidelity.
        cfg = ExperimentConfig(seed=13, noise_p=0.0, shots_per_setting=500)
        rep = run_fig3(cfg)
        for row in rep["probes"]:
            assert row["fidelity"]["estimate"] == 1.0
            assert row["fidelity"]["eps_low"] <= 0.0 <= row["fidelity"]["eps_high"]

    def test_fig4_noiseless_analytic_decodes_exactly(self):
        cfg = ExperimentConfig(seed=0, noise_p=0.0, analytic=True)
        rep = run_fig4(cfg)
        probe = probe_vector(4)
        assert np.abs(np.array(rep["rho_decoded"]) - np.outer(probe, probe)).max() < 1e-12
        assert rep["fidelity"]["estimate"] == pytest.approx(1.0, abs=1e-12)

    def test_fig4_probe1_correlators(self):
        cfg = ExperimentConfig(seed=0, noise_p=0.0, analytic=True)
        rep = run_fig4(cfg, probe=1)
        assert np.abs(np.array(rep["correlators"]) - np.diag([1.0, -1.0, 1.0])).max() < 1e-12


class TestReportFiles:
    def test_fig5_csv_header_pinned(self):
        cfg = ExperimentConfig(seed=3, noise_p=0.0, analytic=True, phi_grid_deg=(0.0, 45.0))
        text = report_csv(run_fig5(cfg))
        lines = text.splitlines()
        assert lines[0] == "phi_deg,concurrence_est,concurrence_std,theory_cos"
        assert len(lines) == 3

    def test_fig3_csv_columns(self):
        cfg = ExperimentConfig(seed=3, analytic=True)
        text = report_csv(run_fig3(cfg))
        assert text.splitlines()[0].startswith("probe,fidelity_est,fidelity_err")

    def test_write_report_creates_files(self, tmp_path):
        cfg = ExperimentConfig(seed=3, analytic=True)
        paths = write_report(run_fig3(cfg), tmp_path)
        assert sorted(p.name for p in paths) == ["fig3.csv", "fig3.json"]
        doc = json.loads((tmp_path / "fig3.json").read_text())
        assert doc["experiment"] == "fig3"

    def test_floats_rendered_at_twelve_digits(self):
        cfg = ExperimentConfig(seed=3, analytic=True, noise_p=1 / 3)
        text = report_json(run_fig4(cfg))
        assert "0.333333333333," in text  # noise_p rounded to 12 significant digits

    def test_every_estimate_labels_its_error(self):
        cfg = ExperimentConfig(seed=5, shots_per_setting=200, qsv_tests=200)
        rep3 = run_fig3(cfg)
        for row in rep3["probes"]:
            assert row["fidelity"]["error_kind"] in ("ci95", "std")
            assert row["purity"]["error_kind"] in ("ci95", "std")
        rep5 = run_fig5(ExperimentConfig(seed=5, shots_per_setting=200, phi_grid_deg=(10.0,)), bootstrap=False)
        assert rep5["points"][0]["error_kind"] == "std"


class TestRuntimeBudget:
    def test_default_pipelines_under_a_minute(self):
        import time

        cfg = ExperimentConfig(seed=6)
        for runner in (run_fig3, run_fig4, run_fig5):
            start = time.perf_counter()
            runner(cfg)
            assert time.perf_counter() - start < 60.0


class TestEquivalence:
    def test_default_run_passes(self):
        rep = run_equivalence(ExperimentConfig(seed=9), n_inputs=25)
        assert rep["pass"] is True
        assert rep["max_infidelity"] < 1e-10

    def test_impossible_threshold_fails(self):
        rep = run_equivalence(ExperimentConfig(seed=9), n_inputs=5, threshold=0.0)
        assert rep["pass"] is False


class TestCommandLine:
    def test_fig5_writes_outputs(self, tmp_path, capsys):
        rc = cli.main([
            "fig5", "--seed", "4", "--shots", "400", "--noise-p", "0",
            "--phi-grid", "0,45", "--out", str(tmp_path),
        ])
        assert rc == 0
        assert (tmp_path / "fig5.csv").exists()
        lines = (tmp_path / "fig5.csv").read_text().splitlines()
        assert lines[0] == "phi_deg,concurrence_est,concurrence_std,theory_cos"

    def test_stdout_json_mode(self, capsys):
        rc = cli.main(["fig4", "--analytic", "--seed", "8"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["experiment"] == "fig4"

    def test_equiv_exit_codes(self, tmp_path, monkeypatch, capsys):
        rc = cli.main(["equiv", "--n-inputs", "10", "--out", str(tmp_path)])
        assert rc == 0

        def fake_run(config, n_inputs):
            return {"experiment": "equivalence", "pass": False, "max_infidelity": 1.0,
                    "threshold": 1e-10, "seed": 0, "n_inputs": n_inputs,
                    "max_infidelity_masker_walk": 1.0, "max_infidelity_masker_optics": 1.0,
                    "max_infidelity_walk_optics": 1.0, "max_infidelity_complex_inputs_walk": 1.0}

        monkeypatch.setattr(experiments, "run_equivalence", fake_run)
        rc = cli.main(["equiv", "--n-inputs", "10", "--out", str(tmp_path)])
        assert rc == 2

    def test_config_file_and_flag_precedence(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 123, "noise_p": 0.5, "analytic": True}))
        rc = cli.main(["fig4", "--config", str(cfg_path), "--noise-p", "0.25"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["seed"] == 123          # from config file
        assert doc["noise_p"] == 0.25      # flag wins

    def test_config_file_rejects_unknown_keys(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"sseed": 1}))
        with pytest.raises(SystemExit):
            cli.main(["fig4", "--config", str(cfg_path)])

    def test_angles_subcommand(self, capsys):
        rc = cli.main(["angles", "--state", "1,1,1,1", "--phi", "90", "--setting", "ZZ"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "H1 = 22.500000 deg" in out
        assert "H2 = 45.000000 deg" in out  # phi/4 + 22.5 at phi = 90
        assert "Q2 = " in out and "H5 = " in out

    def test_angles_requires_an_argument(self):
        with pytest.raises(SystemExit):
            cli.main(["angles"])

    def test_angles_raw_basis(self, capsys):
        rc = cli.main(["angles", "--basis", "0.785398,0,0.785398,1.570796"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "custom basis" in out and "solver residual" in out

    def test_reports_byte_identical_across_processes(self, tmp_path):
        import subprocess
        import sys

        args = ["fig5", "--seed", "77", "--shots", "400", "--noise-p", "0.01",
                "--phi-grid", "0,45,90"]
        outs = []
        for sub in ("a", "b"):
            out_dir = tmp_path / sub
            subprocess.run(
                [sys.executable, "-m", "realmask.cli", *args, "--out", str(out_dir)],
                check=True, capture_output=True,
            )
            outs.append((out_dir / "fig5.json").read_bytes() + (out_dir / "fig5.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_byte_identical_files_for_same_config(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = ["fig3", "--seed", "21", "--shots", "300", "--qsv-tests", "300"]
        cli.main(args + ["--out", str(out1)])
        cli.main(args + ["--out", str(out2)])
        assert (out1 / "fig3.json").read_bytes() == (out2 / "fig3.json").read_bytes()
        assert (out1 / "fig3.csv").read_bytes() == (out2 / "fig3.csv").read_bytes()
