import io
import json

import pytest

from transversal_lab.cli import main
from transversal_lab.io import FamilyDocument


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def closed12(capsys):
    code, out, _ = run(["gen", "discs", "--n", "12", "--closed"], capsys)
    assert code == 0
    return out


def test_gen_metadata_and_family(closed12):
    doc = json.loads(closed12)
    assert doc["metadata"] == {"closed": True, "generator": "discs", "n": 12}
    fam = FamilyDocument.from_dict(doc).to_family()
    assert len(fam) == 12 and not fam.open_flag


def test_gen_is_deterministic(capsys):
    a = run(["gen", "random", "--n", "5", "--d", "3", "--seed", "4", "--parts", "2"], capsys)[1]
    b = run(["gen", "random", "--n", "5", "--d", "3", "--seed", "4", "--parts", "2"], capsys)[1]
    assert a == b


def test_pierce_closed_discs_x_axis(closed12, capsys, monkeypatch):
    code, out, _ = run(["pierce", "--k", "1", "--m", "1"], capsys, closed12, monkeypatch)
    assert code == 0
    cert = json.loads(out)
    assert cert["kind"] == "transversal"
    basis = cert["payload"]["flats"][0]["basis"][0]
    assert abs(basis[1]) < 1e-9  # horizontal


def test_pierce_then_verify(closed12, capsys, monkeypatch, tmp_path):
    fam = tmp_path / "fam.json"
    fam.write_text(closed12)
    cert = tmp_path / "cert.json"
    assert main(["pierce", str(fam), "--k", "1", "--out", str(cert)]) == 0
    code, out, _ = run(["verify", "--family", str(fam), "--cert", str(cert)], capsys)
    assert code == 0 and json.loads(out)["valid"]
    doc = json.loads(cert.read_text())
    doc["payload"]["assignment"].pop()
    cert.write_text(json.dumps(doc))
    assert run(["verify", "--family", str(fam), "--cert", str(cert)], capsys)[0] == 1


def test_independent_discs_exhausted_at_two(capsys, monkeypatch):
    fam = run(["gen", "discs", "--n", "12"], capsys)[1]
    code, out, _ = run(["independent", "--k", "1", "--target", "3"], capsys, fam, monkeypatch)
    payload = json.loads(out)["payload"]
    assert code == 0 and payload["outcome"] == "SequenceExhausted" and payload["length"] == 2


def test_verify_claims_ktok(capsys):
    code, out, _ = run(["verify-claims", "ktok", "--K", "3", "--trials", "10000", "--seed", "7"], capsys)
    rep = json.loads(out)["payload"]
    assert code == 0 and rep["passed"] and rep["max_observed"] <= 2 ** 0.5 * 3 + 1e-6


def test_verify_claims_cone_negative_control(capsys):
    code, out, _ = run(["verify-claims", "cone", "--K", "2", "--D", "10", "--eps1", "0.1",
                        "--trials", "500", "--inflate", "10"], capsys)
    assert code == 0 and json.loads(out)["payload"]["violations"] > 0


def test_dichotomy_outcomes(capsys, monkeypatch):
    two = json.dumps({"ambient_dim": 2, "members": [
        {"parts": [{"center": [0, 0], "radius": 1}]},
        {"parts": [{"center": [9, 0], "radius": 1}]},
        {"parts": [{"center": [0, 9], "radius": 1}]}]})
    code, out, _ = run(["dichotomy", "--k", "0", "--budget", "3"], capsys, two, monkeypatch)
    assert code == 0 and json.loads(out)["kind"] == "transversal"
    code, out, _ = run(["dichotomy", "--k", "0", "--budget", "1", "--target", "3"], capsys, two,
                       monkeypatch)
    assert code == 0 and json.loads(out)["kind"] == "independence"
    concentric = json.dumps({"ambient_dim": 2, "members": [
        {"parts": [{"center": [0, 0], "radius": 1}]},
        {"parts": [{"center": [0.5, 0], "radius": 1}]},
        {"parts": [{"center": [9, 0], "radius": 1}]},
        {"parts": [{"center": [9.5, 0], "radius": 1}]},
        {"parts": [{"center": [0, 9], "radius": 1}]}]})
    code, out, _ = run(["dichotomy", "--k", "0", "--budget", "2", "--target", "4"], capsys,
                       concentric, monkeypatch)
    assert code == 2 and json.loads(out)["payload"]["outcome"] == "UNDECIDED"


def test_project_and_check(capsys, monkeypatch):
    fam = run(["gen", "random", "--n", "4", "--d", "3", "--parts", "2", "--seed", "2"], capsys)[1]
    code, out, _ = run(["project", "orthogonal"], capsys, fam, monkeypatch)
    assert code == 0 and json.loads(out)["ambient_dim"] == 2
    code, out, _ = run(["check-nearball", "--K", "1e9"], capsys, out, monkeypatch)
    assert code == 0 and json.loads(out)["payload"]["passed"]


def test_project_central_precondition(capsys, monkeypatch):
    fam = run(["gen", "random", "--n", "4", "--d", "3"], capsys)[1]
    code, _, err = run(["project", "central"], capsys, fam, monkeypatch)
    assert code == 1 and "cone" in err


def test_invalid_input_exit_one(capsys, monkeypatch):
    assert run(["pierce", "--k", "1"], capsys, "{bad", monkeypatch)[0] == 1
    assert run(["pierce", "--k", "7"], capsys, json.dumps(
        {"ambient_dim": 2, "members": [{"parts": [{"center": [0, 0], "radius": 1}]}]}), monkeypatch)[0] == 1
    assert main(["no-such-command"]) == 1


def test_render_deterministic(closed12, capsys, monkeypatch):
    a = run(["render", "--wedge", "0,2"], capsys, closed12, monkeypatch)[1]
    b = run(["render", "--wedge", "0,2"], capsys, closed12, monkeypatch)[1]
    assert a == b and a.startswith("<svg")
