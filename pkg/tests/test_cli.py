import json

import pytest

from lumpkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "tau2")
    assert code == 0 and json.loads(out)["zero"] is True
    code, out, _ = run(capsys, "verify", "x^2")
    rep = json.loads(out)
    assert code == 1 and rep["residual"] == "4 * x^2 * y^0 + 24 * x^0 * y^0"
    assert rep["schema_version"] == 1 and rep["config"]["target"] == "x^2"
    assert run(capsys, "verify", "hAB")[0] == 0


def test_verify_custom_op_and_file(capsys, tmp_path):
    f = tmp_path / "tau.txt"
    f.write_text("x^2 + y^2 + 3\n")
    assert run(capsys, "verify", str(f))[0] == 0
    assert run(capsys, "verify", "tau2", "--op", "D_x^2 + D_y^2")[0] == 1


def test_usage_errors(capsys):
    assert run(capsys, "verify", "(x")[0] == 2
    assert run(capsys, "verify", "tau2", "--op", "D_q")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "peaks", "--B", "-1", "--no-sup")[0] == 2
    assert run(capsys, "realize", "--A", "1+")[0] == 2


def test_realize(capsys):
    code, out, _ = run(capsys, "realize", "--A", "0", "--B", "0")
    canonical, pretty = out.strip().splitlines()
    assert code == 0
    assert canonical.endswith("+ 1875 * x^0 * y^0")
    assert pretty.endswith("+ 1875")


def test_backlund(capsys):
    code, out, _ = run(capsys, "backlund", "--free-names", "alpha")
    rep = json.loads(out)
    assert code == 0
    assert rep["free_parameters"] == [{"degree": 1, "exponent_z_zbar": [0, 1], "name": "alpha"}]
    code, _, err = run(capsys, "backlund", "--j", "2")
    assert code == 1 and "jn_roots" in err


def test_peaks(capsys):
    code, out, _ = run(capsys, "peaks", "--B", "2", "--no-sup")
    rep = json.loads(out)
    assert code == 0
    assert rep["peaks"][0] == [-1.0, 0.0]
    assert rep["eta_values"] == [1669.0, 2119.0, 2119.0]


def test_eval_grid(capsys, tmp_path):
    out = tmp_path / "u.csv"
    assert run(capsys, "eval-grid", "--family", "U", "--n", "3", "--extent", "1", "-o", str(out))[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,u" and len(lines) == 10
    assert lines[5] == "0,0,1.3333333333333333"


def test_config_file_and_determinism(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"B": 16.0, "no_sup": True}))
    code, out1, _ = run(capsys, "--config", str(cfg), "peaks")
    assert code == 0 and json.loads(out1)["gamma"] == pytest.approx(2.0)
    _, out2, _ = run(capsys, "--config", str(cfg), "peaks")
    assert out1 == out2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nope": 1}))
    assert run(capsys, "--config", str(bad), "peaks", "--B", "2")[0] == 2


def test_balance_reference_and_constants(capsys):
    code, out, _ = run(capsys, "balance", "--check", "reference")
    rep = json.loads(out)
    assert code == 0 and rep["nullity"] == 2
    code, out, _ = run(capsys, "constants")
    assert code == 0 and abs(json.loads(out)["bstar"]) < 1e-8


def test_spectrum_small(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", "--family", "U", "--L", "20", "--N", "96",
                       "--no-stability", "--cache-dir", str(tmp_path))
    rep = json.loads(out)
    assert code == 0
    assert rep["morse_index"] == 1 and rep["kernel_count"] == 2
    assert rep["convention"] == "S"
    code, out, _ = run(capsys, "spectrum", "--family", "U", "--L", "20", "--N", "96",
                       "--no-stability", "--cache-dir", str(tmp_path), "--convention", "paper")
    rep2 = json.loads(out)
    assert rep2["eigenvalues"][0] == pytest.approx(-rep["eigenvalues"][0])
