import numpy as np
import pytest

import ftlab
from ftlab import verify
from ftlab.cli import main, parse_config
from ftlab.errors import ConfigError
from ftlab.plant import Plant


class TestParseConfig:
    def test_empty_gives_reference_defaults(self):
        cfg = parse_config("")
        assert cfg.controller == "c1"
        assert cfg.scenario == "case1"
        assert cfg.effective_parameterization == "force_balance"
        assert cfg.effective_dre == "least_squares"
        assert cfg.dt == 5e-4 and cfg.t_final == 10.0
        np.testing.assert_array_equal(cfg.q_d, [2.0, 2.0])
        np.testing.assert_array_equal(cfg.q0, [3.0, 0.0])
        np.testing.assert_allclose(cfg.ftpd.kp, [3.0, 3.0])
        np.testing.assert_allclose(cfg.adapt.upsilon_diag, [50.0, 50.0])
        assert cfg.ls.alpha == 10.0 and cfg.ls.gain_cap == 10.0

    def test_controller_only_pulls_its_gains(self):
        cfg = parse_config("controller=c3")
        assert cfg.controller == "c3"
        assert cfg.tsm.k1 == 2.0 and cfg.tsm.k2 == 1.5 and cfg.tsm.ks == 0.6
        assert cfg.tsm.gamma_tsm == 0.001 and cfg.tsm.k_tsm == 5000.0
        assert cfg.tsm.gamma_lin == 1.0 and cfg.tsm.k_lin == 50.0

    def test_c2_defaults(self):
        cfg = parse_config("controller=c2")
        assert cfg.effective_dre == "kreisselmeier"
        assert cfg.kreis.lambda2 == 1.0 and cfg.kreis.lambda3 == 1.3

    def test_negative_dt_names_key(self):
        with pytest.raises(ConfigError, match="dt"):
            parse_config("dt=-1")

    def test_unknown_key_rejected_with_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("controller=c1\n\nwhatever=1\n")

    def test_sectioned_and_comments(self):
        cfg = parse_config("""
            # a run with heavier links
            controller = c2
            scenario = case2
            sim.t_final = 4.0
            plant.m2 = 1.4
            gains.P = 4
            gains.D = 3,2
            dre.lambda3 = 1.1
        """)
        assert cfg.scenario == "case2" and cfg.t_final == 4.0
        assert cfg.params.m2 == 1.4
        np.testing.assert_allclose(cfg.ftpd.kp, [4.0, 4.0])
        np.testing.assert_allclose(cfg.ftpd.kd, [3.0, 2.0])
        assert cfg.kreis.lambda3 == 1.1

    def test_plant_completion_overridable(self):
        cfg = parse_config("plant.lc2 = 0.2\nplant.I2 = 0.01\n")
        assert cfg.params.lc2 == 0.2 and cfg.params.I2 == 0.01
        assert cfg.params.lc1 == 0.15   # untouched entries keep uniform-rod values

    def test_malformed_lines(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("this is not a config")
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("dt=")
        with pytest.raises(ConfigError, match="q_d"):
            parse_config("q_d=1,2,3")

    def test_bad_gain_combination(self):
        with pytest.raises(ConfigError, match="gains"):
            parse_config("gains.r1=1.0\ngains.r2=1.0")


class TestCliCommands:
    def test_simulate_writes_outputs(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("t_final=0.2\n")
        code = main(["--config", str(cfg), "--out", str(tmp_path / "out"), "simulate"])
        assert code == 0
        trace_file = tmp_path / "out" / "trace.csv"
        metrics_file = tmp_path / "out" / "metrics.txt"
        assert trace_file.exists() and metrics_file.exists()
        header = trace_file.read_text().splitlines()[0]
        assert header.startswith("t,q1,q2,")
        assert "settling_time=" in metrics_file.read_text()

    def test_controller_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("t_final=0.1\n")
        code = main(["--config", str(cfg), "--controller", "c4",
                     "--out", str(tmp_path / "o2"), "simulate"])
        assert code == 0
        header = (tmp_path / "o2" / "trace.csv").read_text().splitlines()[0]
        assert "theta_hat_5" in header

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dt=-1\n")
        assert main(["--config", str(cfg), "--out", str(tmp_path), "simulate"]) == 2

    def test_degeneracy_exit_code(self, tmp_path):
        cfg = tmp_path / "explode.cfg"
        # absurd estimator gain destabilizes the c4 gain-matrix update
        cfg.write_text("controller=c4\nt_final=1.0\ndre.alpha=1e7\n")
        assert main(["--config", str(cfg), "--out", str(tmp_path / "o"),
                     "simulate"]) == 3

    def test_property_failure_exit_code(self, tmp_path, monkeypatch):
        from ftlab import cli as cli_mod
        broken = [verify.PropertyResult("synthetic", False, "injected failure")]
        monkeypatch.setattr(cli_mod.verify, "run_all", lambda t_final: broken)
        assert main(["--out", str(tmp_path), "verify"]) == 4

    def test_sweep_writes_grid(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FTLAB_THREADS", "2")
        cfg = tmp_path / "run.cfg"
        cfg.write_text("t_final=0.05\n")
        code = main(["--config", str(cfg), "--scenario", "case1",
                     "--out", str(tmp_path / "grid"), "sweep"])
        assert code == 0
        for controller in ("c1", "c2", "c3", "c4"):
            assert (tmp_path / "grid" / f"{controller}_case1" / "trace.csv").exists()


class TestVerifySuite:
    def test_clean_build_passes(self):
        results = verify.run_all(t_final=2.0)
        failed = [r.name for r in results if not r.passed]
        assert failed == []

    def test_sign_flip_in_coriolis_trips_skew_symmetry(self):
        plant = Plant.two_link()
        broken = lambda q, qd: -plant.coriolis(q, qd)
        result = verify.check_skew_symmetry(plant, coriolis_fn=broken, n_samples=100)
        assert not result.passed

    def test_wrong_regressor_trips_gravity_factorization(self):
        plant = Plant.two_link()
        broken = lambda q: plant.psi(q)[:, ::-1]   # swapped columns
        result = verify.check_gravity_factorization(plant, psi_fn=broken, n_samples=100)
        assert not result.passed

    def test_wrong_adjugate_trips_cramer_equivalence(self):
        from ftlab import mathx
        broken = lambda a: mathx.adjugate(a).T     # forgot the transpose
        result = verify.check_cramer_matches_adjugate(n_samples=20, adjugate_fn=broken)
        assert not result.passed

    def test_result_lines_render(self):
        result = verify.check_signed_power_odd(n_samples=50)
        assert result.line().startswith("[PASS]")
