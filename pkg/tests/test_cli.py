import csv
import json
import math

import numpy as np
import pytest

from gkcs import cli
from gkcs.specfun import ConvergenceError
from gkcs.states import loads_state


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def run(tmp_path, *argv, config=None):
    args = list(argv) + ["--out", str(tmp_path)]
    if config is not None:
        tmp_path.mkdir(parents=True, exist_ok=True)
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(config))
        args += ["--config", str(cfg)]
    return cli.main(args)


class TestSpectrum:
    def test_default_table(self, tmp_path):
        assert run(tmp_path, "spectrum") == 0
        header, rows = read_csv(tmp_path / "spectrum.csv")
        assert header == ["n", "l", "alpha", "E_discrete", "E_continuous", "E_total", "valid"]
        assert np.allclose([r[3] for r in rows], [0.5, 1.5, 2.5])
        assert np.allclose([r[4] for r in rows], 0.5)
        assert all(r[6] == 1 for r in rows)

    def test_invalid_alpha_flagged(self, tmp_path, capsys):
        cfg = {"spectrum": {"n": [0, 0], "l": [0, 1], "alpha": [-1.0, 0.0]}}
        assert run(tmp_path, "spectrum", config=cfg) == 0
        _, rows = read_csv(tmp_path / "spectrum.csv")
        assert [r[6] for r in rows] == [1, 0, 1, 0]
        assert "warning" in capsys.readouterr().err

    def test_shifted_mode(self, tmp_path):
        assert run(tmp_path, "spectrum", "--mode", "shifted", "--kappa", "2") == 0
        _, rows = read_csv(tmp_path / "spectrum.csv")
        assert np.allclose([r[3] for r in rows], [0.0, 2.0, 4.0])

    def test_rerun_is_byte_identical(self, tmp_path):
        run(tmp_path / "a", "spectrum")
        run(tmp_path / "b", "spectrum")
        assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "b" / "spectrum.csv").read_bytes()


class TestWavefunction:
    def test_origin_and_modulus(self, tmp_path):
        assert run(tmp_path, "wavefunction") == 0
        header, rows = read_csv(tmp_path / "wavefunction.csv")
        assert header == ["x", "y", "re_phi", "im_phi"]
        rows = np.array(rows)
        assert len(rows) == 25
        origin = rows[(rows[:, 0] == 0) & (rows[:, 1] == 0)]
        assert origin.tolist() == [[0.0, 0.0, 1.0, 0.0]]
        assert np.allclose(np.hypot(rows[:, 2], rows[:, 3]), 1.0, rtol=0, atol=1e-15)

    def test_gauge_swap(self, tmp_path):
        cfg = {"wavefunction": {"alpha": -0.7, "x": [-1, 1, 3], "y": [-2, 0, 4]}}
        run(tmp_path / "g1", "wavefunction", config=cfg)
        swapped = {"wavefunction": {"alpha": -0.7, "x": [-2, 0, 4], "y": [-1, 1, 3]}}
        run(tmp_path / "g2", "wavefunction", "--gauge", "gauge2", config=swapped)
        _, a = read_csv(tmp_path / "g1" / "wavefunction.csv")
        _, b = read_csv(tmp_path / "g2" / "wavefunction.csv")
        a = {(r[0], r[1]): (r[2], r[3]) for r in a}
        b = {(r[1], r[0]): (r[2], r[3]) for r in b}
        assert a.keys() == b.keys()
        assert all(np.allclose(a[k], b[k], rtol=0, atol=1e-15) for k in a)


class TestCsBuild:
    def test_vacuum_concentration(self, tmp_path):
        assert run(tmp_path, "cs-build", "--mode", "shifted", "--label", "J=0") == 0
        _, rows = read_csv(tmp_path / "discrete.csv")
        probs = np.array([r[1] for r in rows])
        assert probs[0] > 0 and np.all(probs[1:] == 0.0)

    def test_poisson_profile(self, tmp_path):
        assert run(tmp_path, "cs-build", "--mode", "shifted", "--label", "J=4") == 0
        _, rows = read_csv(tmp_path / "discrete.csv")
        k = np.array([r[0] for r in rows])
        poisson = np.exp(-4.0 + k * math.log(4.0) - np.array([math.lgamma(x + 1) for x in k]))
        # columns carry the envelope weight; the profile over k is Poisson
        probs = np.array([r[1] for r in rows])
        assert np.allclose(probs / probs.sum(), poisson / poisson.sum(), rtol=1e-12, atol=0)

    def test_state_round_trip(self, tmp_path):
        assert run(tmp_path, "cs-build", "--label", "J=1.5", "--label", "theta=0.4") == 0
        text = (tmp_path / "state.json").read_text()
        cs = loads_state(text)
        assert cs.discrete.J == 1.5 and cs.continuous.theta == 0.4
        assert np.isclose(cs.norm_sq, cs.f_value ** 2 * cs.discrete.norm_sq
                          + cs.g_value ** 2 * cs.continuous.norm_sq, rtol=1e-14)
        run(tmp_path / "again", "cs-build", "--label", "J=1.5", "--label", "theta=0.4")
        assert (tmp_path / "again" / "state.json").read_text() == text

    def test_explicit_cutoff_too_small(self, tmp_path, capsys):
        assert run(tmp_path, "cs-build", "--cutoff", "2", "--label", "J=30") == 1
        assert "'cutoff'" in capsys.readouterr().err


class TestSweep:
    def test_columns_and_order(self, tmp_path):
        cfg = {"sweep": {"param": "J", "values": [4.0, 0.5, 2.0], "workers": 3}}
        assert run(tmp_path, "sweep", "--mode", "shifted", config=cfg) == 0
        header, rows = read_csv(tmp_path / "sweep.csv")
        assert header == ["J", *cli.SWEEP_COLUMNS]
        assert [r[0] for r in rows] == [4.0, 0.5, 2.0]
        # shifted mode: mean Fock index equals J
        assert np.allclose([r[6] for r in rows], [4.0, 0.5, 2.0], rtol=1e-10)


class TestVerify:
    def test_temporal_only(self, tmp_path):
        assert run(tmp_path, "verify", "temporal") == 0
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert [r["check_name"].split("/")[0] for r in report] == ["temporal"] * 4
        assert all(r["pass"] for r in report) and "runtime_ms" not in report[0]

    def test_timings_flag(self, tmp_path):
        assert run(tmp_path, "verify", "poisson", "--timings") == 0
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert all(r["runtime_ms"] >= 0 for r in report)

    def test_zero_tolerance_exit(self, tmp_path):
        assert run(tmp_path, "verify", "laguerre", "--tol", "*=0") == 2
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert not any(r["pass"] for r in report)

    def test_report_deterministic(self, tmp_path):
        run(tmp_path / "a", "verify", "commutators")
        run(tmp_path / "b", "verify", "commutators")
        assert (tmp_path / "a" / "verify_report.json").read_bytes() == \
            (tmp_path / "b" / "verify_report.json").read_bytes()


class TestErrors:
    @pytest.mark.parametrize("config,field", [
        ({"params": {"m": -1.0}}, "params.m"),
        ({"labels": {"J": -1.0}}, "labels.J"),
        ({"labels": {"beta": 7.0}}, "labels.beta"),
        ({"grid_nodes": 1}, "grid_nodes"),
        ({"verify": {"resolution_orders": [32, 48]}}, "verify.resolution_orders"),
        ({"tolerances": {"nope": 1.0}}, "tolerances.nope"),
        ({"colour": "red"}, "colour"),
    ])
    def test_field_named(self, tmp_path, capsys, config, field):
        assert run(tmp_path, "spectrum", config=config) == 1
        assert f"'{field}'" in capsys.readouterr().err

    def test_bad_override(self, tmp_path, capsys):
        assert run(tmp_path, "verify", "poisson", "--tol", "moments") == 1
        assert "'tolerances'" in capsys.readouterr().err
        assert run(tmp_path, "cs-build", "--label", "K=0") == 1
        assert "'labels.K'" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli.main(["spectrum", "--config", str(tmp_path / "absent.json")]) == 1
        assert "'config'" in capsys.readouterr().err

    def test_convergence_exit(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise ConvergenceError("test", 1.0, 0.5)
        monkeypatch.setattr(cli, "build_state", boom)
        assert run(tmp_path, "cs-build") == 3
        assert "no convergence" in capsys.readouterr().err
