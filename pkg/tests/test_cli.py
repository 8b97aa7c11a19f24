import json
import os

import numpy as np
import pytest

from rhcontrol.cli import main


def base_config(**overrides):
    cfg = {
        "preset": "zero",
        "mesh": {"nx": 9, "ny": 9},
        "time": {"T": 0.2, "delta": 0.1, "T_inf": 0.2, "dt": 0.05},
        "cost": {"beta": 1.0, "norm": "l2"},
        "actuators": {"parents": [[[0.25, 0.75], [0.25, 0.75]]],
                      "subdivisions": [[2, 1]]},
        "injection": "load",
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_run_zero_problem(tmp_path):
    cfg_path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    assert main(["run", "--config", cfg_path, "--out", str(out)]) == 0

    state = np.genfromtxt(out / "state.csv", delimiter=",", names=True)
    assert (state["norm_H"] == 0.0).all() and (state["norm_V"] == 0.0).all()
    controls = np.genfromtxt(out / "controls.csv", delimiter=",", names=True)
    assert (controls["u_1"] == 0.0).all() and (controls["u_2"] == 0.0).all()

    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] is True
    metrics = summary["metrics"]
    for key in ("objective_total", "state_L2V", "final_V", "final_H",
                "total_iterations"):
        assert key in metrics
        assert metrics[key] == 0
    assert (out / "state_norms.png").exists()
    assert (out / "controls.png").exists()
    assert (out / "iterations.csv").exists()


def test_no_figures_flag(tmp_path):
    cfg_path = write_config(tmp_path, base_config())
    out = tmp_path / "out"
    assert main(["run", "--config", cfg_path, "--out", str(out),
                 "--no-figures"]) == 0
    assert not (out / "state_norms.png").exists()
    assert (out / "state.csv").exists()


def test_malformed_json_exits_1_without_artifacts(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out = tmp_path / "out"
    assert main(["run", "--config", str(bad), "--out", str(out)]) == 1
    assert not out.exists()  # no partial outputs on config errors
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_1(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 1
    assert "not found" in capsys.readouterr().err


def test_missing_key_is_named(tmp_path, capsys):
    cfg = base_config()
    del cfg["cost"]
    cfg_path = write_config(tmp_path, cfg)
    assert main(["run", "--config", cfg_path, "--out",
                 str(tmp_path / "out")]) == 1
    assert "'cost'" in capsys.readouterr().err


def test_unknown_presets_rejected(tmp_path, capsys):
    cfg_path = write_config(tmp_path, base_config(preset="mystery"))
    assert main(["run", "--config", cfg_path, "--out",
                 str(tmp_path / "out")]) == 1
    assert "mystery" in capsys.readouterr().err

    cfg_path = write_config(tmp_path, base_config(actuators="mystery_layout"))
    assert main(["run", "--config", cfg_path, "--out",
                 str(tmp_path / "out")]) == 1
    assert "mystery_layout" in capsys.readouterr().err


def test_invalid_time_grid_exits_1(tmp_path, capsys):
    cfg = base_config()
    cfg["time"]["delta"] = 0.07  # not a dt multiple
    cfg_path = write_config(tmp_path, cfg)
    assert main(["run", "--config", cfg_path, "--out",
                 str(tmp_path / "out")]) == 1
    assert "config error" in capsys.readouterr().err


def test_theory_subcommand(tmp_path, capsys):
    cfg_path = write_config(tmp_path, base_config())
    assert main(["theory", "--config", cfg_path]) == 0
    out = json.loads(capsys.readouterr().out)
    for key in ("N_ab", "C_U", "gamma1_T", "gamma1_delta", "gamma2",
                "alpha_ell"):
        assert key in out
    assert set(out["gamma2"]) == {"l1_H", "l1_V", "l2_H", "l2_V"}
    assert out["N_ab"] == 0.0  # zero preset has no reaction/convection
    assert out["C_U"] == pytest.approx(2 * 0.125)


def test_theory_flags_degenerate_horizon(tmp_path, capsys):
    cfg = base_config()
    # T == delta leaves no certification interval (T - delta = 0): the run is
    # legal, but the decay certificate must be flagged as unavailable
    cfg["time"] = {"T": 0.1, "delta": 0.1, "T_inf": 0.2, "dt": 0.05}
    cfg_path = write_config(tmp_path, cfg)
    assert main(["theory", "--config", cfg_path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "decay_certificate_error" in out
    assert "zeta" not in out

    cfg["time"]["T"] = 0.15
    cfg["theory"] = {"c_hat_nu": 1e9}  # hopeless constants: eta >= 1
    cfg_path = write_config(tmp_path, cfg)
    assert main(["theory", "--config", cfg_path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "decay_certificate_error" in out


def test_theory_rejects_unknown_override(tmp_path, capsys):
    cfg = base_config(theory={"not_a_constant": 1.0})
    cfg_path = write_config(tmp_path, cfg)
    assert main(["theory", "--config", cfg_path]) == 1
    assert "not_a_constant" in capsys.readouterr().err


def test_sweep_single_element(tmp_path):
    cfg = base_config(sweep=[0.2])
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg_path, "--out", str(out),
                 "--no-figures"]) == 0
    table = (out / "table.csv").read_text().splitlines()
    assert table[0].startswith("T,objective_total,state_L2V,final_V,final_H")
    assert len(table) == 2
    assert (out / "T_0.2" / "summary.json").exists()


def test_sweep_validates_every_row_before_running(tmp_path):
    cfg = base_config(sweep=[0.2, 0.13])  # second row breaks the time grid
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", cfg_path, "--out", str(out)]) == 1
    assert not out.exists()


def test_sweep_rejects_empty_list(tmp_path, capsys):
    cfg_path = write_config(tmp_path, base_config(sweep=[]))
    assert main(["sweep", "--config", cfg_path, "--out",
                 str(tmp_path / "out")]) == 1
    assert "sweep" in capsys.readouterr().err


def test_sweep_threaded_matches_serial(tmp_path, monkeypatch):
    cfg = base_config(preset="pure_heat", sweep=[0.2, 0.15])
    cfg["cost"]["beta"] = 0.01
    cfg_path = write_config(tmp_path, cfg)

    monkeypatch.delenv("RHCONTROL_THREADS", raising=False)
    assert main(["sweep", "--config", cfg_path, "--out",
                 str(tmp_path / "serial"), "--no-figures"]) == 0
    monkeypatch.setenv("RHCONTROL_THREADS", "2")
    assert main(["sweep", "--config", cfg_path, "--out",
                 str(tmp_path / "threaded"), "--no-figures"]) == 0

    serial = (tmp_path / "serial" / "table.csv").read_bytes()
    threaded = (tmp_path / "threaded" / "table.csv").read_bytes()
    assert serial == threaded


def test_run_is_deterministic(tmp_path):
    cfg = base_config(preset="pure_heat")
    cfg["cost"]["beta"] = 0.01
    cfg_path = write_config(tmp_path, cfg)
    for d in ("a", "b"):
        assert main(["run", "--config", cfg_path, "--out",
                     str(tmp_path / d), "--no-figures"]) == 0
    for name in ("state.csv", "controls.csv", "iterations.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()
