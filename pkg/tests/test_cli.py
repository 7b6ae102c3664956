import json
import subprocess
import sys
from pathlib import Path

import pytest

from padic_witness.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
WORKED = str(PROBLEMS / "worked_example.json")


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def series(*terms):
    return {"terms": [{"exp": list(e), "coeff": c} for e, c in terms]}


def test_analyze_worked_example(capsys):
    code, out, _ = run(["analyze", WORKED], capsys)
    data = json.loads(out)
    assert code == 0
    assert (data["m"], data["A"], data["q"], data["N"]) == (2, "1", [3], 2)
    assert data["M"] == [[0], [1]]
    assert data["region"]["valuations"] == ["7/3"]


def test_analyze_constant_basis(tmp_path, capsys):
    path = write(tmp_path, "one.json", {"p": 3, "D": 1, "d": 2, "r": 1, "basis": [[series(((0, 0), "1"))]]})
    code, out, _ = run(["analyze", path], capsys)
    assert code == 0 and json.loads(out)["m"] == 1


def test_witness_and_verify_round_trip(tmp_path, capsys):
    cert = str(tmp_path / "cert.json")
    assert run(["witness", WORKED, "--output", cert], capsys)[0] == 0
    data = json.loads(Path(cert).read_text())
    assert data["witness_text"] == ["2^(7/3)"]
    assert data["witness"] == [{"p": 2, "D": 3, "terms": [{"j": 1, "num": "4", "den": "1"}]}]
    assert data["D_witness"] == 3 and data["rank_check"] == 2
    code, out, _ = run(["verify", cert, WORKED], capsys)
    result = json.loads(out)
    assert code == 0 and result["certificate"] == "pass" and result["grid"]["status"] == "pass"


def test_verify_tampered(tmp_path, capsys):
    cert = str(tmp_path / "cert.json")
    run(["witness", WORKED, "--output", cert], capsys)
    data = json.loads(Path(cert).read_text())
    data["levels"][0]["N"] = 1
    bad = write(tmp_path, "bad.json", data)
    code, out, _ = run(["verify", bad], capsys)
    assert code == 1 and json.loads(out)["certificate"] == "fail"


def test_verify_against_other_problem(tmp_path, capsys):
    cert = str(tmp_path / "cert.json")
    run(["witness", WORKED, "--output", cert], capsys)
    other = write(tmp_path, "other.json", {"p": 2, "D": 1, "d": 1, "r": 1, "basis": [[series(((0,), "1"))], [series(((2,), "1"))]]})
    code, out, _ = run(["verify", cert, other], capsys)
    assert code == 1 and json.loads(out)["problem_match"] is False


def test_valset(capsys):
    code, out, _ = run(["valset", str(PROBLEMS / "valset_example.json"), "--precision", "3"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["set"] == ["0", "1"] and data["stabilized"] is True


def test_valset_inconclusive(tmp_path, capsys):
    path = write(
        tmp_path,
        "slow.json",
        {"p": 2, "D": 1, "vectors": [["-1/4", "5", "9/4"], ["-1/4", "-6", "-10"], ["-12", "20", "7"]]},
    )
    code, out, _ = run(["valset", path], capsys)
    assert code == 5 and json.loads(out)["stabilized"] is False


def test_exit_code_schema(tmp_path, capsys):
    path = write(tmp_path, "broken.json", '{"p": 2,\n "D": }')
    code, _, err = run(["analyze", path], capsys)
    assert code == 2 and "broken.json:2" in err
    path = write(tmp_path, "bad_p.json", {"p": 4, "D": 1, "d": 1, "r": 1, "basis": [[series(((0,), "1"))]]})
    assert run(["analyze", path], capsys)[0] == 2
    path = write(tmp_path, "bad_j.json", {"p": 2, "D": 1, "d": 1, "r": 1, "basis": [[{"terms": [{"exp": [0], "coeff": {"terms": [{"j": 3, "num": "1", "den": "1"}]}}]}]]})
    code, _, err = run(["analyze", path], capsys)
    assert code == 2 and "basis[0]" in err
    path = write(tmp_path, "bad_exp.json", {"p": 2, "D": 1, "d": 2, "r": 1, "basis": [[series(((0,), "1"))]]})
    code, _, err = run(["analyze", path], capsys)
    assert code == 2 and "exp" in err


def test_exit_code_dependent(tmp_path, capsys):
    row = [series(((0,), "1"), ((1,), "1"))]
    path = write(tmp_path, "dup.json", {"p": 2, "D": 1, "d": 1, "r": 1, "basis": [row, row]})
    assert run(["analyze", path], capsys)[0] == 3
    assert run(["witness", path], capsys)[0] == 3


def test_exit_code_truncation(tmp_path, capsys):
    s = {"tail": {"kind": "integral", "T": 0}, "terms": [{"exp": [0], "coeff": "1"}]}
    t = {"tail": {"kind": "integral", "T": 0}, "terms": [{"exp": [0], "coeff": "3"}]}
    path = write(tmp_path, "shallow.json", {"p": 2, "D": 1, "d": 1, "r": 1, "basis": [[s], [t]]})
    assert run(["analyze", path], capsys)[0] == 4


def test_vector_problem(capsys, tmp_path):
    cert = str(tmp_path / "cert.json")
    path = str(PROBLEMS / "vector_r2.json")
    assert run(["witness", path, "--output", cert], capsys)[0] == 0
    assert run(["verify", cert, path, "--quiet"], capsys) == (0, "", "")


def test_byte_identical_output(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for target in (a, b):
        run(["witness", str(PROBLEMS / "vector_r2.json"), "--output", str(target)], capsys)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("cmd", ["analyze", "witness"])
def test_entry_point_subprocess(cmd):
    proc = subprocess.run([sys.executable, "-m", "padic_witness", cmd, WORKED], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)
