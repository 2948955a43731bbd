import json

import numpy as np
import pytest

import tomoq
from tomoq import fileio
from tomoq.harness import (
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    main,
    resolve_protocol,
    resolve_state,
    validate_config,
)


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestConfig:
    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            validate_config({"command": "optimize"})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            validate_config({"command": "info", "protocol": {"name": "R4"}, "extra": 1})

    def test_protocol_spec_needs_one_kind(self):
        with pytest.raises(ConfigError):
            resolve_protocol({"name": "R4", "polyhedron": "cube"})
        with pytest.raises(ConfigError):
            resolve_protocol({})

    def test_resolve_named_state(self):
        rho = resolve_state({"name": "ghz_noise", "qubits": 2, "f": 0.5})
        assert rho.dim == 4

    def test_resolve_pure_state(self):
        rho = resolve_state({"pure": {"re": [0.6, 0.8]}})
        assert rho.matrix[0, 0].real == pytest.approx(0.36)

    def test_resolve_plate_series(self):
        p = resolve_protocol({"plate_series": {"family": "B9", "delta_pi": 0.356}})
        assert p.m == 9


class TestCommands:
    def test_info_r4(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"command": "info", "protocol": {"name": "R4"}})
        assert main(["info", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
        report = json.loads((tmp_path / "info.json").read_text())
        assert report["K"] == pytest.approx(np.sqrt(3), abs=1e-9)
        assert report["version"] == tomoq.__version__
        assert report["config"]["protocol"]["name"] == "R4"

    def test_info_r16_and_incomplete_file(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"command": "info", "protocol": {"name": "R16"}})
        main(["info", "--config", cfg, "--out", str(tmp_path)])
        report = json.loads((tmp_path / "info.json").read_text())
        assert report["K"] == pytest.approx(3.0, abs=1e-9)

        proto = tomoq.protocol_from_amplitudes(np.array([[1.0, 0.0], [0.0, 1.0]]))
        pfile = tmp_path / "hv.json"
        pfile.write_text(json.dumps(fileio.protocol_to_json(proto)))
        cfg2 = write_config(tmp_path, {"command": "info", "protocol": {"file": str(pfile)},
                                       "out": "hv_info.json"}, name="cfg2.json")
        main(["info", "--config", cfg2, "--out", str(tmp_path)])
        report2 = json.loads((tmp_path / "hv_info.json").read_text())
        assert report2["class"] == "incomplete"

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"command": "info"})
        assert main(["info", "--config", cfg]) == EXIT_CONFIG

    def test_command_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"command": "info", "protocol": {"name": "R4"}})
        assert main(["bounds", "--config", cfg]) == EXIT_CONFIG

    def test_bounds(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"command": "bounds", "dim": 8, "rank": 1})
        assert main(["bounds", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
        report = json.loads((tmp_path / "bounds.json").read_text())
        assert report["nu"] == 14
        assert report["L_min_opt"] == pytest.approx(7.0)
        assert report["polyhedron_white_noise_floor"] == pytest.approx((10**3 - 1) / 4)

    def test_distribution(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "command": "distribution",
            "protocol": {"polyhedron": "tetrahedron", "qubits": 1},
            "state": {"name": "white_noise", "qubits": 1},
            "n": 1e4,
        })
        assert main(["distribution", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
        report = json.loads((tmp_path / "distribution.json").read_text())
        assert report["L"] == pytest.approx(2.25, abs=1e-9)
        assert len(report["d"]) == 3
        assert report["band"]["z_lo"] < report["band"]["z_hi"]

    def test_scan_bloch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "command": "scan", "scan_type": "bloch",
            "protocol": {"polyhedron": "cube", "qubits": 1},
            "grid": 400,
        })
        assert main(["scan", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
        report = json.loads((tmp_path / "scan_bloch.json").read_text())
        assert report["summary"]["L"]["max"] == pytest.approx(1.125, abs=1e-6)
        rows = (tmp_path / "scan_bloch.csv").read_text().splitlines()
        assert rows[0] == "nx,ny,nz,L,singular"
        assert len(rows) == 401

    def test_simulate_and_reconstruct(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "command": "simulate",
            "protocol": {"polyhedron": "tetrahedron", "qubits": 1},
            "state": {"name": "ghz_noise", "qubits": 1, "f": 0.5},
            "n": 1e4, "trials": 40, "seed": 3,
        })
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
        report = json.loads((tmp_path / "simulate.json").read_text())
        assert report["mean_loss"] > 0
        batch_rows = (tmp_path / "simulate.csv").read_text().splitlines()
        assert batch_rows[0] == "trial,loss,z,converged"
        assert len(batch_rows) == 41

        # counts file round trip through the reconstruct command
        p = tomoq.polyhedron_protocol("tetrahedron", 1)
        rho = tomoq.density_from_pure(np.array([0.6, 0.8]))
        pn = tomoq.normalize_exposures(p, rho, 1e6)
        counts = tomoq.intensities(pn, rho) * pn.exposures()
        cfile = tmp_path / "counts.csv"
        fileio.write_counts_csv(cfile, pn, counts)
        cfg2 = write_config(tmp_path, {
            "command": "reconstruct",
            "protocol": {"polyhedron": "tetrahedron", "qubits": 1},
            "counts": str(cfile),
            "rank": 1,
            "truth": {"pure": {"re": [0.6, 0.8]}},
        }, name="rec.json")
        assert main(["reconstruct", "--config", cfg2, "--out", str(tmp_path)]) == EXIT_OK
        report2 = json.loads((tmp_path / "reconstruct.json").read_text())
        assert report2["fidelity_vs_truth"] > 1 - 1e-9
        assert report2["converged"] is True

    def test_deterministic_outputs(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "command": "distribution",
            "protocol": {"name": "J4"},
            "state": {"name": "white_noise", "qubits": 1},
            "n": 1e4,
        })
        main(["distribution", "--config", cfg, "--out", str(tmp_path)])
        first = (tmp_path / "distribution.json").read_bytes()
        main(["distribution", "--config", cfg, "--out", str(tmp_path)])
        assert (tmp_path / "distribution.json").read_bytes() == first


class TestFileIO:
    def test_state_round_trip(self):
        rho = tomoq.named_state("ghz_noise", 2, f=0.3)
        back = fileio.state_from_json(fileio.state_to_json(rho))
        assert np.abs(back.matrix - rho.matrix).max() < 1e-15

    def test_purified_round_trip(self):
        st = tomoq.purify(tomoq.named_state("ghz_noise", 1, f=0.5))
        back = fileio.purified_from_json(fileio.purified_to_json(st))
        assert np.abs(back.matrix - st.matrix).max() < 1e-15

    def test_protocol_round_trip(self):
        p = tomoq.b9(0.356 * np.pi)
        back = fileio.protocol_from_json(fileio.protocol_to_json(p))
        assert back.m == p.m
        assert np.abs(back.amplitude_matrix() - p.amplitude_matrix()).max() < 1e-15

    def test_protocol_loader_validates(self):
        doc = {"dim": 2, "rows": [{"re": [1.0], "im": [0.0], "t": 1.0}]}
        with pytest.raises(ValueError):
            fileio.protocol_from_json(doc)
        doc2 = {"dim": 2, "rows": [{"re": [1.0, 0.0], "im": [0.0, 0.0], "t": -1.0}]}
        with pytest.raises(ValueError):
            fileio.protocol_from_json(doc2)

    def test_counts_round_trip(self, tmp_path):
        p = tomoq.polyhedron_protocol("tetrahedron", 1)
        path = tmp_path / "counts.csv"
        fileio.write_counts_csv(path, p, np.array([5, 0, 3, 2]))
        ts, ks = fileio.read_counts_csv(path)
        assert np.array_equal(ts, np.ones(4))
        assert np.array_equal(ks, np.array([5.0, 0.0, 3.0, 2.0]))

    def test_counts_malformed_row_reported(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("row_id,t,k\n0,1.0,5\n1,oops,3\n")
        with pytest.raises(ValueError, match="row 3"):
            fileio.read_counts_csv(path)

    def test_counts_header_checked(self, tmp_path):
        path = tmp_path / "bad2.csv"
        path.write_text("a,b,c\n0,1,2\n")
        with pytest.raises(ValueError):
            fileio.read_counts_csv(path)

    def test_batch_csv(self, tmp_path):
        p = tomoq.polyhedron_protocol("tetrahedron", 1)
        batch = tomoq.run_trials(p, tomoq.named_state("white_noise"), 1e3, 5, seed=1)
        path = tmp_path / "batch.csv"
        fileio.batch_to_csv(batch, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 6
        assert lines[0] == "trial,loss,z,converged"
