import csv
import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from oscillent.cli import build_parser, config_from_args, load_schema, main, run
from oscillent.storage import read_samples

SCHEMA = load_schema()


def _json(capsys, *argv):
    code = main(list(argv) + ["--json"])
    out = capsys.readouterr().out
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


def _values(doc):
    return {r["method"]: r["value"] for r in doc["results"]}


def test_modes(capsys):
    code, doc = _json(capsys, "modes")
    assert code == 0
    assert doc["modes"]["beta"] == pytest.approx(0.0332779, abs=1e-7)
    assert doc["regime"]["ratios"]["entropy_argument"] == pytest.approx(5.9608, abs=1e-3)


def test_classical_methods(capsys):
    code, doc = _json(capsys, "classical", "--method", "closed_form,quadrature,torus_mc", "--samples", "20000")
    assert code == 0
    v = _values(doc)
    assert v["closed_form"] == pytest.approx(1.7851968085804322, abs=1e-12)
    assert doc["deltas"]["quadrature"] == pytest.approx(0.0, abs=1e-9)
    assert doc["verdicts"]["quadrature"]["pass"] is True


def test_quantum_and_low_excitation(capsys):
    code, doc = _json(capsys, "quantum", "--method", "exact_kernel,low_excitation", "--n", "20", "--m", "20",
                      "--Omega", "10", "--C", "0.1")
    v = _values(doc)
    assert v["exact_kernel"] == pytest.approx(0.028070, abs=2e-5)
    assert v["low_excitation"] == pytest.approx(v["exact_kernel"], rel=0.2)


def test_wkb_csv(capsys, tmp_path):
    out = tmp_path / "lam.csv"
    code, doc = _json(capsys, "wkb", "--out", str(out))
    assert code == 0 and doc["extra"]["dn_max"] == pytest.approx(3.7947, abs=1e-4)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["delta_n", "lambda"]


def test_ground(capsys):
    code, doc = _json(capsys, "ground", "--Omega", "5", "--C", "0.5")
    v = _values(doc)
    assert doc["extra"]["f"] == pytest.approx(5e-4, rel=1e-12)
    assert v["ground_state"] == pytest.approx(4.30e-3, abs=5e-6)
    assert v["exact_kernel"] == pytest.approx(3.12993e-3, rel=1e-4)


def test_sweep_C_is_log_linear(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    code, doc = _json(capsys, "sweep", "--vary", "C", "--from", "0.05", "--to", "0.4", "--points", "6",
                      "--out", str(out), "--figures", str(tmp_path))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    C = np.array([float(r["C"]) for r in rows])
    S = np.array([float(r["S_closed_form"]) for r in rows])
    Sq = np.array([float(r["S_quadrature"]) for r in rows])
    assert np.all(np.diff(S) > 0)
    np.testing.assert_allclose(np.diff(S) / np.diff(np.log(C)), 1.0, rtol=1e-12)
    np.testing.assert_allclose(Sq, S, atol=1e-8)
    assert (tmp_path / "entropy_vs_lnC.svg").exists()


def test_sweep_parallel_matches_serial(capsys):
    args = ["sweep", "--vary", "E2", "--from", "100", "--to", "400", "--points", "3", "--method", "closed_form,wkb_closed_form"]
    _, a = _json(capsys, *args)
    _, b = _json(capsys, *args, "--jobs", "2")
    assert a["extra"]["rows"] == b["extra"]["rows"]


def test_trajectory_samples(capsys, tmp_path):
    out = tmp_path / "traj.bin"
    code, doc = _json(capsys, "trajectory", "--steps", "5000", "--out", str(out))
    assert code == 0
    samples = read_samples(out)
    assert samples.shape == (5001, 2)  # slow-mode (x, p_x)
    assert doc["extra"]["trajectory"]["e_plus_drift"] < 1e-8


@pytest.mark.slow
def test_compare_reports_every_route(capsys, tmp_path):
    code, doc = _json(capsys, "compare", "--samples", "50000", "--steps", "100000", "--figures", str(tmp_path))
    assert code == 0
    methods = [r["method"] for r in doc["results"]]
    assert set(methods) >= {"closed_form", "quadrature", "torus_mc", "trajectory", "exact_kernel", "wkb_kernel",
                            "wkb_closed_form"}
    assert set(doc["verdicts"]) == set(methods) - {"closed_form"}
    assert doc["verdicts"]["wkb_closed_form"]["pass"] and doc["verdicts"]["quadrature"]["pass"]
    assert (tmp_path / "marginal.svg").exists()


def test_reruns_byte_identical(tmp_path):
    path = tmp_path / "r.json"
    blobs = []
    for _ in range(2):
        assert main(["classical", "--method", "torus_mc,quadrature", "--samples", "20000", "--seed", "7",
                     "--out", str(path)]) == 0
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_strict_exit_codes(capsys):
    # literal regime thresholds fail at the reference point
    assert main(["classical", "--method", "closed_form", "--strict"]) == 2
    assert main(["classical", "--method", "closed_form"]) == 0
    # a point that satisfies every regime ratio
    assert main(["classical", "--method", "closed_form", "--strict", "--Omega", "3", "--C", "0.2",
                 "--n", "60", "--m", "60"]) == 0
    capsys.readouterr()


def test_usage_and_domain_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classical", "--bogus"])
    assert exc.value.code == 1
    assert main(["quantum", "--n", "300", "--m", "5"]) == 1
    assert main(["classical", "--method", "exact_kernel"]) == 1
    assert main(["classical", "--C", "4"]) == 1
    assert main(["sweep", "--vary", "nope"]) == 1
    assert "error" in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("C = 0.2\nOmega = 4.0\nseed = 3\nmethod = closed_form\n")
    parser = build_parser()
    cfg = config_from_args(parser.parse_args(["classical", "--config", str(cfgfile), "--C", "0.25"]))
    assert cfg.params.C == 0.25 and cfg.params.Omega == 4.0 and cfg.seed == 3
    assert cfg.methods == ("closed_form",)
    r = run(cfg)
    assert r.results[0].value == pytest.approx(
        math.log(math.pi**2 * 0.25 * math.sqrt(4000) / (math.pi * 16.0)), rel=1e-12)
    cfgfile.write_text("colour = red\n")
    assert main(["classical", "--config", str(cfgfile)]) == 1


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "oscillent", "modes", "--json"], capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["command"] == "modes"
