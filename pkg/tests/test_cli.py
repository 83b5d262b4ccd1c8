import json

import numpy as np
import pytest

from cvchain.cli import main


def write_config(tmp_path, name="config.json", **overrides):
    cfg = {
        "chain": {"topology": "linear", "n_sites": 3, "omega0": 1.0, "g0": 0.4},
        "grid": {"horizon": 10.0, "n_steps": 200},
        "squeezing": 0.9,
        "objective": "fidelity_negativity",
        "krotov": {"lambda_a": 2.0, "max_iterations": 5},
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path, cfg


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if ln]
    assert lines[0].startswith("# config_sha256=")
    header = lines[1].split(",")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[2:]]
    return header, np.array(rows)


class TestConfigValidation:
    def test_missing_key_names_it(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"chain": {"topology": "linear", "n_sites": 3}}))
        code = main(["simulate", "--config", str(path)])
        err = capsys.readouterr().err
        assert code == 2
        assert "grid" in err and "squeezing" in err and "objective" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        path, _ = write_config(tmp_path, turbo=True)
        code = main(["simulate", "--config", str(path)])
        assert code == 2
        assert "turbo" in capsys.readouterr().err

    def test_all_violations_reported(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "chain": {"topology": "ring", "n_sites": 1},
            "grid": {"horizon": -1.0, "n_steps": 0},
            "squeezing": 0.5,
            "objective": "fidelity",
        }))
        code = main(["simulate", "--config", str(path)])
        err = capsys.readouterr().err
        assert code == 2
        assert err.count("config error:") >= 3

    def test_range_squeezing_needs_lse(self, tmp_path, capsys):
        path, _ = write_config(
            tmp_path, squeezing={"r_min": 0.6, "r_max": 1.0, "n_samples": 3}
        )
        code = main(["simulate", "--config", str(path)])
        assert code == 2
        assert "lse_multi" in capsys.readouterr().err

    def test_x_chain_site_count_enforced(self, tmp_path, capsys):
        path, _ = write_config(tmp_path, chain={"topology": "x_shaped", "n_sites": 5})
        code = main(["simulate", "--config", str(path)])
        assert code == 2
        assert "7" in capsys.readouterr().err


class TestSimulate:
    def test_zero_control_dynamics_values(self, tmp_path):
        path, _ = write_config(
            tmp_path,
            chain={"topology": "linear", "n_sites": 5, "omega0": 1.0, "g0": 0.4},
            grid={"horizon": 15.0, "n_steps": 300},
            squeezing=1.2,
        )
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
        header, rows = read_csv(out / "dynamics.csv")
        assert header[:5] == ["t", "fidelity", "negativity_head", "negativity_tail", "det_gamma"]
        first = dict(zip(header, rows[0]))
        assert first["t"] == 0.0
        assert first["negativity_head"] == pytest.approx(2 * 1.2 / np.log(2), abs=1e-9)
        assert first["negativity_tail"] == pytest.approx(0.0, abs=1e-9)
        assert first["det_gamma"] == pytest.approx(1.0, abs=1e-9)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert 0.0 <= manifest["final_j"] <= 1.0

    def test_zero_coupling_bath_matches_closed(self, tmp_path):
        path_closed, _ = write_config(tmp_path, "closed.json")
        path_open, _ = write_config(
            tmp_path, "open.json",
            bath={"xi": 0.6, "omega_shift": 0.7, "coupling": 0.0, "mode": "non_markov"},
        )
        out_c, out_o = tmp_path / "c", tmp_path / "o"
        assert main(["simulate", "--config", str(path_closed), "--out", str(out_c)]) == 0
        assert main(["simulate", "--config", str(path_open), "--out", str(out_o)]) == 0
        _, rows_c = read_csv(out_c / "dynamics.csv")
        _, rows_o = read_csv(out_o / "dynamics.csv")
        assert np.abs(rows_c - rows_o).max() < 1e-10

    def test_byte_identical_reruns(self, tmp_path):
        path, _ = write_config(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["simulate", "--config", str(path), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(path), "--out", str(out2), "--seedless"]) == 0
        for name in ("dynamics.csv", "controls.csv", "manifest.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestOptimize:
    def test_optimize_emits_expected_files(self, tmp_path):
        path, _ = write_config(tmp_path, emit={"spectrum": True})
        out = tmp_path / "out"
        assert main(["optimize", "--config", str(path), "--out", str(out)]) == 0
        for name in ("controls.csv", "iterations.csv", "residuals.csv", "dynamics.csv",
                     "spectrum.csv", "manifest.json"):
            assert (out / name).exists(), name
        header, rows = read_csv(out / "iterations.csv")
        assert header == ["iteration", "j", "f_residual_1", "n_residual_1"]
        assert rows.shape[0] == 6  # guess evaluation + 5 iterations
        assert np.all(np.diff(rows[:, 1]) <= 1e-10)

    def test_iterations_override(self, tmp_path):
        path, _ = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["optimize", "--config", str(path), "--out", str(out),
                     "--iterations", "2"]) == 0
        _, rows = read_csv(out / "iterations.csv")
        assert rows.shape[0] == 3

    def test_roundtrip_final_j(self, tmp_path):
        # controls written by optimize, re-applied by simulate, reproduce final_j
        path, _ = write_config(tmp_path, krotov={"lambda_a": 2.0, "max_iterations": 12})
        out = tmp_path / "out"
        assert main(["optimize", "--config", str(path), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        out2 = tmp_path / "replay"
        assert main(["simulate", "--config", str(path), "--out", str(out2),
                     "--controls", str(out / "controls.csv")]) == 0
        replay = json.loads((out2 / "manifest.json").read_text())
        assert replay["final_j"] == pytest.approx(manifest["final_j"], abs=1e-10)

    def test_open_roundtrip_final_j(self, tmp_path):
        path, _ = write_config(
            tmp_path,
            bath={"xi": 0.6, "omega_shift": 0.7, "coupling": 0.12, "mode": "non_markov"},
            krotov={"lambda_a": 4.0, "max_iterations": 6, "clamp_amplitude": 8.0,
                    "o_recompute_first": 3, "o_recompute_every": 2},
        )
        out = tmp_path / "out"
        assert main(["optimize", "--config", str(path), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        out2 = tmp_path / "replay"
        assert main(["simulate", "--config", str(path), "--out", str(out2),
                     "--controls", str(out / "controls.csv")]) == 0
        replay = json.loads((out2 / "manifest.json").read_text())
        assert replay["final_j"] == pytest.approx(manifest["final_j"], abs=1e-10)

    def test_runtime_failure_exits_three(self, tmp_path, capsys):
        # memory integration explodes on a grid that under-resolves xi
        path, _ = write_config(
            tmp_path,
            grid={"horizon": 15.0, "n_steps": 50},
            bath={"xi": 500.0, "coupling": 0.12, "mode": "non_markov"},
        )
        with np.errstate(over="ignore", invalid="ignore"):
            code = main(["optimize", "--config", str(path), "--out", str(tmp_path / "x")])
        assert code == 3
        assert "runtime error" in capsys.readouterr().err


class TestSpectrum:
    def test_constant_channel(self, tmp_path):
        lines = ["# config_sha256=feedface", "t,c_raw_1,c_clamped_1"]
        for k in range(2000):
            lines.append(f"{k * 0.0075},0.7,0.7")
        controls = tmp_path / "controls.csv"
        controls.write_text("\n".join(lines) + "\n")
        out = tmp_path / "out"
        assert main(["spectrum", "--controls", str(controls), "--out", str(out)]) == 0
        header, rows = read_csv(out / "spectrum.csv")
        assert header == ["channel"] + [f"bin_{b}" for b in range(10)]
        assert rows[0, 1] == pytest.approx(2000 * 0.7)
        assert np.abs(rows[0, 2:]).max() < 1e-9

    def test_single_tone(self, tmp_path):
        lines = ["t,c_raw_1,c_clamped_1"]
        for k in range(2000):
            c = float(np.sin(2 * np.pi * k / 2000))
            lines.append(f"{k * 0.0075},{c!r},{c!r}")
        controls = tmp_path / "controls.csv"
        controls.write_text("\n".join(lines) + "\n")
        out = tmp_path / "out"
        assert main(["spectrum", "--controls", str(controls), "--out", str(out)]) == 0
        _, rows = read_csv(out / "spectrum.csv")
        assert rows[0, 2] > 100 * rows[0, 1]
        assert rows[0, 2] > 100 * rows[0, 3:].max()

    def test_malformed_column_names_it(self, tmp_path, capsys):
        controls = tmp_path / "controls.csv"
        controls.write_text("t,c_raw_1,c_clamped_1\n0.0,0.1,\n0.01,0.1,oops\n")
        code = main(["spectrum", "--controls", str(controls), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "c_clamped_1" in capsys.readouterr().err


class TestWigner:
    def test_vacuum_tail_slice(self, tmp_path):
        path, _ = write_config(
            tmp_path,
            chain={"topology": "linear", "n_sites": 4, "omega0": 1.0, "g0": 0.4},
            grid={"horizon": 5.0, "n_steps": 100},
            squeezing=0.8,
            wigner={"n_points": 21, "extent": 3.0},
        )
        out = tmp_path / "out"
        assert main(["wigner", "--config", str(path), "--out", str(out), "--times", "0"]) == 0
        header, rows = read_csv(out / "wigner_t0_modes3-4.csv")
        assert header == ["a", "b", "w"]
        center = rows[(rows[:, 0] == 0.0) & (rows[:, 1] == 0.0)]
        assert center[0, 2] == pytest.approx(np.pi ** -2, abs=1e-12)
        # point symmetry of zero-mean states
        w = rows[:, 2].reshape(21, 21)
        assert np.allclose(w, w[::-1, ::-1], atol=1e-12)

    def test_time_outside_grid_rejected(self, tmp_path, capsys):
        path, _ = write_config(tmp_path)
        code = main(["wigner", "--config", str(path), "--out", str(tmp_path / "o"),
                     "--times", "11.0"])
        assert code == 2
        assert "outside" in capsys.readouterr().err
