import json
import subprocess
import sys

import pytest

from intlot import io
from intlot.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def call_json(capsys, *argv):
    code, out, err = call(capsys, *argv, "--json")
    return code, json.loads(out)


def test_empty_pi_nia(capsys):
    code, out, _ = call(capsys, "check", "models/empty_pi.json", "--property", "nia")
    assert code == 0
    assert out.splitlines()[0] == "NIA holds; A = {ω3}"


def test_sqrt2_member_exact_literal(capsys):
    code, out, _ = call(capsys, "price", "models/sqrt2.json", "claims/ci.json", "--member", "{terms:{sqrt2:'1'}}")
    assert code == 0
    assert "member (path" in out and "not-member" not in out


def test_not_member_exit(capsys):
    code, doc = call_json(capsys, "price", "empty_pi", "empty_pi", "--member", "0")
    assert code == 3
    assert doc["membership"]["verdict"] == "not-member"
    assert doc["membership"]["witness"] == [0, 0, 0, 1]


@pytest.mark.parametrize("argv, code", [
    (["check", "sqrt2"], 0),
    (["check", "empty_pi", "--property", "na"], 3),
    (["check", "empty_pi", "--property", "nifl"], 3),
    (["check", "table1", "--mode", "float"], 4),
    (["price", "dense", "dense", "--extension", "dense_quarter"], 3),
    (["hedge", "gap", "gap", "--class", "integer"], 0),
    (["hedge", "gap", "gap", "--class", "integer", "--mode", "float"], 2),
    (["check", "sqrt2", "--radius", "-1"], 2),
    (["price", "sqrt2", "ci", "--member", "-1"], 2),
    (["check", "no/such/model.json"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert call(capsys, *argv)[0] == code


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as e:
        run(["check", "sqrt2", "--bogus"])
    assert e.value.code == 2


@pytest.mark.parametrize("argv", [
    ["check", "dense"],
    ["price", "sqrt2", "cii", "--member", "0"],
    ["hedge", "sqrt2", "ci", "--class", "rational"],
    ["hedge", "gap", "gap", "--copies", "1,2,3"],
    ["varhedge", "table1", "table1"],
    ["examples", "gap"],
])
def test_json_schema(capsys, argv):
    _, doc = call_json(capsys, *argv)
    assert doc["schema"] == 1 and doc["command"] == argv[0]


def test_hedge_json_values(capsys):
    _, doc = call_json(capsys, "hedge", "sqrt2", "ci")
    assert doc["price"]["exact"] == {"q": 0, "terms": {"sqrt2": 3}}
    assert doc["price"]["decimal"].startswith("4.24264")
    _, doc = call_json(capsys, "hedge", "gap", "gap", "--class", "integer")
    assert doc["price"] == {"exact": "1/2", "decimal": "0.5"}


def test_varhedge_defaults_measure(capsys):
    _, doc = call_json(capsys, "varhedge", "sqrt2", "ci")
    assert "measure-from-na-check" in json.dumps(doc)


def test_malformed_json_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "states": ,\n}\n')
    code, _, err = call(capsys, "check", str(bad))
    assert code == 2
    assert f"{bad}:2:" in err


def test_invalid_model_points_at_line(tmp_path, capsys):
    obj = io.model_to_dict(io.load_model(io.data_path("models", "gap")))
    obj["probabilities"] = ["1/2", "1/3"]
    f = tmp_path / "m.json"
    f.write_text(json.dumps(obj, indent=2))
    code, _, err = call(capsys, "check", str(f))
    text = f.read_text().splitlines()
    line = next(i for i, s in enumerate(text, 1) if '"probabilities"' in s)
    assert code == 2 and f"{f}:{line}:" in err and "ProbabilitySum" in err


def test_negative_claim_rejected(tmp_path, capsys):
    f = tmp_path / "c.json"
    f.write_text('{"payoff": [1, -1]}')
    code, _, err = call(capsys, "price", "gap", str(f))
    assert code == 2 and "nonnegative" in err


def test_examples_table2(capsys):
    code, out, _ = call(capsys, "examples", "table2")
    assert code == 0
    assert "cvp: rMSE" in out and "0.901" in out and "8.352" in out


@pytest.mark.parametrize("name", ["gap", "sqrt2", "empty-pi", "dense", "no-cheapest", "corollary", "list"])
def test_examples_run(capsys, name):
    code, out, _ = call(capsys, "examples", name)
    assert code == 0 and out.strip()


def test_lattice_commands(tmp_path, capsys):
    b = tmp_path / "b.txt"
    b.write_text("1 0\n0.999 0.001\n")
    t = tmp_path / "t.txt"
    t.write_text("0.4 -0.3\n")
    code, doc = call_json(capsys, "lattice", "lll", str(b))
    assert code == 0 and doc["lovasz_violations"] == 0
    code, doc = call_json(capsys, "lattice", "cvp", str(b), str(t))
    assert code == 0 and "phi" in doc


@pytest.mark.parametrize("name", io.bundled("models"))
def test_model_round_trip(tmp_path, name):
    src = io.data_path("models", name)
    m = io.load_model(src)
    out = tmp_path / f"{name}.json"
    io.dump_model(m, out)
    assert io.load_model(out) == m
    # field-order-insensitive comparison of the two files after a second pass
    again = tmp_path / "again.json"
    io.dump_model(io.load_model(out), again)
    assert json.loads(again.read_text()) == json.loads(out.read_text())


def test_deterministic_output():
    cmd = [sys.executable, "-m", "intlot", "examples", "dense", "--json"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert a == b and json.loads(a)["schema"] == 1


def test_precision_env(capsys, monkeypatch):
    monkeypatch.setenv("INTLOT_PRECISION", "nope")
    code, _, err = call(capsys, "check", "sqrt2")
    assert code == 2 and "INTLOT_PRECISION" in err
