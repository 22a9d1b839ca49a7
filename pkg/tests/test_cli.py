from __future__ import annotations

import json

import numpy as np
import pytest

from qcert.certificate import dumps, load
from qcert.cli import EXIT_BAD_INPUT, EXIT_INVALID, EXIT_OK, EXIT_REJECTED, EXIT_USAGE, run
from qcert.corpus import CHOI_LAM_TEXT, TamperField, tamper
from qcert.polycore import evaluate
from qcert.polytext import parse_poly


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_certify_verify(capsys, tmp_path):
    code, out, _ = _run(capsys, "gen", "--kind", "soseps", "--eps", "0.001", "--seed", "3")
    assert code == EXIT_OK
    poly = tmp_path / "f.poly"
    poly.write_text(out)
    cert = tmp_path / "f.json"
    code, _, err = _run(capsys, "certify", "-i", str(poly), "-o", str(cert))
    assert code == EXIT_OK and "certified" in err
    report = tmp_path / "r.json"
    code, out, _ = _run(capsys, "verify", "-i", str(poly), "-c", str(cert), "--report", str(report))
    assert code == EXIT_OK and out.startswith("certificate VALID")
    assert json.loads(report.read_text())["passed"] is True


def test_certify_to_stdout(capsys):
    code, out, _ = _run(capsys, "certify", "-i", CHOI_LAM_TEXT)
    assert code == EXIT_OK
    assert json.loads(out)["method"] in ("Structured", "Direct")


def test_negative_is_rejected_with_witness(capsys):
    text = "-(x0^2+x1^2+x2^2+x3^2)^2"
    code, out, _ = _run(capsys, "certify", f"--input={text}")
    assert code == EXIT_REJECTED
    point = json.loads(out[out.index("[") :])
    assert evaluate(parse_poly(text), np.array(point)) < 0


def test_tampered_certificate(capsys, tmp_path):
    f = tmp_path / "f.poly"
    f.write_text(CHOI_LAM_TEXT)
    c = tmp_path / "c.json"
    assert _run(capsys, "certify", "-i", str(f), "-o", str(c))[0] == EXIT_OK
    bad, _ = tamper(load(c), 0, TamperField.P)
    c.write_text(dumps(bad))
    code, out, _ = _run(capsys, "verify", "-i", str(f), "-c", str(c))
    assert code == EXIT_INVALID and "INVALID" in out


def test_unreadable_certificate(capsys, tmp_path):
    c = tmp_path / "c.json"
    c.write_text("{}")
    assert _run(capsys, "verify", "-i", CHOI_LAM_TEXT, "-c", str(c))[0] == EXIT_INVALID


def test_check_sos(capsys):
    code, out, err = _run(capsys, "check-sos", "-i", CHOI_LAM_TEXT)
    assert code == EXIT_OK and out.strip() == "NotSos" and "t* =" in err
    code, out, _ = _run(capsys, "check-sos", "-i", "x0^4 + x1^4 + x2^4 + x3^4")
    assert out.strip() == "IsSos"


def test_min_sphere(capsys):
    code, out, _ = _run(capsys, "min-sphere", "-i", CHOI_LAM_TEXT)
    lines = dict(line.split(" ", 1) for line in out.strip().splitlines())
    assert code == EXIT_OK
    assert abs(float(lines["value"])) <= 1e-9
    assert np.allclose(json.loads(lines["minimizer"]), [-0.5, 0.5, -0.5, 0.5], atol=1e-6)
    assert lines["classification"] == "ZeroOnSphere"


def test_outputs_are_byte_identical(capsys):
    a = _run(capsys, "certify", "-i", CHOI_LAM_TEXT)[1]
    b = _run(capsys, "certify", "-i", CHOI_LAM_TEXT)[1]
    assert a == b
    g1 = _run(capsys, "gen", "--kind", "sos", "-n", "3", "--seed", "8")[1]
    g2 = _run(capsys, "gen", "--kind", "sos", "-n", "3", "--seed", "8")[1]
    assert g1 == g2 and len(g1.splitlines()) == 3


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("QC_SEED", "8")
    env = _run(capsys, "gen", "--kind", "indefinite", "-n", "2")[1]
    flag = _run(capsys, "gen", "--kind", "indefinite", "-n", "2", "--seed", "8")[1]
    monkeypatch.delenv("QC_SEED")
    default = _run(capsys, "gen", "--kind", "indefinite", "-n", "2")[1]
    assert env == flag != default


def test_gen_kinds_parse(capsys):
    for kind in ("sos", "soseps", "choilam", "indefinite"):
        out = _run(capsys, "gen", "--kind", kind, "--seed", "1")[1]
        f = parse_poly(out.strip())
        assert (f.nvars, f.degree) == (4, 4)


def test_batch(capsys, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    (src / "a.poly").write_text("x0^4 + x1^4 + x2^4 + x3^4")
    (src / "b.poly").write_text("-(x0^2+x1^2+x2^2+x3^2)^2")
    (src / "c.txt").write_text("x0^3 +")
    (src / "ignored.md").write_text("not a polynomial")
    code, out, _ = _run(capsys, "certify", "--batch", str(src), "--jobs", "2")
    assert code == EXIT_BAD_INPUT
    assert (src / "a.cert.json").exists()
    assert not (src / "b.cert.json").exists()
    assert len(out.strip().splitlines()) == 3


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        run(["certify", "--method", "magic", "-i", "x0^4"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        run([])
    assert info.value.code == EXIT_USAGE
    assert _run(capsys, "certify")[0] == EXIT_USAGE


@pytest.mark.parametrize("text", ["x0^4 +", "x0^4 + x1^3", "x0^2 + x1^2", "x0^4 + y^4"])
def test_bad_input(capsys, text):
    code, _, err = _run(capsys, "certify", "-i", text)
    assert code == EXIT_BAD_INPUT and "bad input" in err


def test_stdin(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("x0^4 + x1^4 + x2^4 + x3^4\n"))
    code, out, _ = _run(capsys, "check-sos", "-i", "-")
    assert code == EXIT_OK and out.strip() == "IsSos"
