"""CLI subcommands: outputs, determinism, exit codes."""

import json

import numpy as np
import pytest

from toricray.cli import main


def run(argv):
    return main(argv)


def test_profile_staircase(tmp_path):
    out = tmp_path / "profile.csv"
    scenario = json.dumps({
        "name": "stairs",
        "polytope": {"dim": 1, "normals": [[1], [-1]], "offsets": ["0", "-5"]},
        "generator": {"kind": "bumps", "bumps": [
            {"m": 1.0, "alpha": 0.25, "A": 1.0},
            {"m": 2.5, "alpha": 0.25, "A": 0.5},
            {"m": 4.0, "alpha": 0.25, "A": 2.0}]},
    })
    assert run(["profile", "--generator", scenario, "-o", str(out)]) == 0
    rows = np.genfromtxt(out, delimiter=",", names=True, skip_header=1)
    # plateau slopes between the bumps: 0, 1, 1.5, 3.5
    def slope_at(x):
        idx = np.argmin(np.abs(rows["x"] - x))
        return rows["dpsi"][idx]
    assert slope_at(0.4) == pytest.approx(0.0, abs=1e-12)
    assert slope_at(1.8) == pytest.approx(1.0, abs=1e-10)
    assert slope_at(3.2) == pytest.approx(1.5, abs=1e-10)
    assert slope_at(4.8) == pytest.approx(3.5, abs=1e-10)


def test_profile_zero_generator(tmp_path):
    out = tmp_path / "zero.csv"
    scenario = json.dumps({
        "polytope": {"dim": 1, "normals": [[1], [-1]], "offsets": ["0", "-2"]},
        "generator": {"kind": "bumps", "bumps": []},
    })
    assert run(["profile", "--generator", scenario, "-o", str(out)]) == 0
    rows = np.genfromtxt(out, delimiter=",", names=True, skip_header=1)
    assert np.all(rows["psi"] == 0.0)
    assert np.all(rows["d2psi"] == 0.0)


def test_ray_density_deterministic(tmp_path):
    scenario = json.dumps({
        "name": "mini",
        "polytope": {"dim": 1, "normals": [[1], [-1]], "offsets": ["0", "-2"]},
        "generator": {"kind": "bumps", "bumps": [
            {"m": 1.0, "alpha": 0.25, "A": 1.0}]},
        "s_grid": [8, 32],
        "lattice_points": [[1]],
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["ray-density", "--scenario", scenario, "-o", str(out1)]) == 0
    assert run(["ray-density", "--scenario", scenario, "-o", str(out2)]) == 0
    for name in ("density_m1_s8.csv", "density_m1_s32.csv",
                 "pairings_m1.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_gcst_csv(tmp_path):
    scenario = json.dumps({
        "polytope": {"dim": 1, "normals": [[1], [-1]],
                     "offsets": ["-1/2", "-5/2"], "corrected": True},
        "generator": {"kind": "bumps", "bumps": [
            {"m": 1.0, "alpha": 0.5, "A": 4.0}]},
        "s_grid": [4, 16],
        "lattice_points": [[0], [2]],
    })
    assert run(["gcst", "--scenario", scenario, "-o", str(tmp_path)]) == 0
    rows = np.genfromtxt(tmp_path / "gcst.csv", delimiter=",", names=True)
    coeff = {(int(r["m1"]), int(r["s"])): r["coefficient"] for r in rows}
    assert coeff[(0, 4)] == pytest.approx(1.0)
    assert coeff[(2, 16)] == pytest.approx(np.exp(-16.0 * 4.0 * 1.0), rel=1e-10)


def test_decompose_and_q(tmp_path):
    out = tmp_path / "dec.json"
    poly = json.dumps({"dim": 2, "normals": [[1, 0], [0, 1], [-1, -1]],
                       "offsets": ["0", "0", "-3"]})
    pl = json.dumps({"pieces": [{"g": ["0", "0"], "b": "0"},
                                {"g": ["1", "0"], "b": "-1"},
                                {"g": ["0", "1"], "b": "-1"},
                                {"g": ["1", "1"], "b": "-2"}]})
    assert run(["decompose", "--polytope", poly, "--pl", pl,
                "--ceiling", "2", "-o", str(out)]) == 0
    report = json.loads(out.read_text())
    assert len(report["subpolytopes"]) == 4
    assert report["Q_integral"] is True
    assert report["volume_defect"] == "0"


def test_smooth_subcommand(tmp_path):
    out = tmp_path / "sm.csv"
    poly = json.dumps({"dim": 2, "normals": [[1, 0], [0, 1], [-1, -1]],
                       "offsets": ["0", "0", "-3"]})
    pl = json.dumps({"pieces": [{"g": ["0", "0"], "b": "0"},
                                {"g": ["1", "0"], "b": "-1"}]})
    assert run(["smooth", "--polytope", poly, "--pl", pl,
                "--eps", "1/20", "1/10", "-o", str(out)]) == 0
    assert out.exists()
    # the strict control family fails verification: nonzero exit
    assert run(["smooth", "--polytope", poly, "--pl", pl,
                "--eps", "1/20", "1/10", "--variant", "strict",
                "-o", str(tmp_path / "neg.csv")]) == 1


def test_metric_subcommand(tmp_path):
    out = tmp_path / "metric.csv"
    assert run(["--max-s", "1000", "metric", "--scenario",
                "builtin:segment-bump", "-o", str(out)]) == 0
    rows = np.genfromtxt(out, delimiter=",", names=True)
    assert np.all(np.diff(rows["crossing_length"]) > 0)
    assert np.all(np.diff(rows["circle_length"]) < 0)


def test_verify_subset_exit_codes():
    assert run(["verify", "--only", "1,2,3"]) == 0
    assert run(["verify", "--only", "99"]) == 2


def test_input_errors_exit_two(tmp_path):
    assert run(["profile", "--generator", "builtin:not-a-scenario"]) == 2
    assert run(["decompose", "--polytope", "{bad json", "--pl", "{}"]) == 2
