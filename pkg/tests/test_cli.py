import json

import pytest

from pmc.cli import build_parser, main
from pmc.entropy import EntropyResult
from pmc.harness import ExperimentReport
from pmc.scheme import Transcript


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_entropy(capsys):
    code, out, _ = run(capsys, "entropy", "--field", "3^1", "--matrix", "[[2]]")
    assert code == 0
    res = EntropyResult.from_dict(json.loads(out))
    assert res.value_bits == pytest.approx(0.91830, abs=1e-5)


def test_entropy_linear_and_methods(capsys):
    code, out, _ = run(capsys, "entropy", "--field", "2", "--matrix", "[[2,4],[6,8]]", "--lin-modulus", "8")
    assert json.loads(out)["value_bits"] == pytest.approx(3.0)
    _, a, _ = run(capsys, "entropy", "--field", "5", "--matrix", "[[1,0],[0,1],[1,1]]", "--method", "brute_force")
    _, b, _ = run(capsys, "entropy", "--field", "5", "--matrix", "[[1,0],[0,1],[1,1]]")
    assert json.loads(a)["value_bits"] == pytest.approx(json.loads(b)["value_bits"])


def test_snf(capsys):
    code, out, _ = run(capsys, "snf", "--matrix", "[[2,4],[6,8]]")
    assert code == 0 and json.loads(out)["invariant_factors"] == [2, 4]


def test_capacity(capsys):
    code, out, _ = run(capsys, "capacity", "--n", "2", "--f", "2")
    assert json.loads(out)["c_pir"] == pytest.approx(2 / 3)


def test_matrix_from_file(tmp_path, capsys):
    p = tmp_path / "A.json"
    p.write_text("[[2,4],[6,8]]")
    code, out, _ = run(capsys, "snf", "--matrix", str(p))
    assert json.loads(out)["rank"] == 2


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["entropy", "--field", "6", "--matrix", "[[1]]"], "prime power"),
        (["snf", "--matrix", "[[1,2],[3]]"], "rows"),
        (["snf", "--matrix", "[[1,"], "malformed"),
        (["snf", "--matrix", "nope.json"], "no such file"),
        (["scheme-run", "--field", "5", "--matrix", "[[1]]", "--n", "1"], "--n"),
        (["scheme-run", "--field", "5", "--matrix", "[[1],[2]]", "--v", "2"], "--v"),
        (["entropy", "--field", "5", "--matrix", "[[0]]"], "zero row"),
    ],
)
def test_precondition_errors(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code != 0 and needle in err


def test_unknown_flag_and_bad_seed(capsys):
    code, _, err = run(capsys, "snf", "--matrix", "[[1]]", "--bogus")
    assert code != 0 and "--bogus" in err
    code, _, err = run(capsys, "convergence", "--matrix", "[[1]]", "--q-grid", "5,6")
    assert code != 0 and "prime power" in err
    code, _, _ = run(capsys, "scheme-run", "--field", "5", "--matrix", "[[1]]", "--seed", "-1")
    assert code != 0
    code, _, _ = run(capsys, "scheme-run", "--field", "5", "--matrix", "[[1]]", "--seed", str(2**64))
    assert code != 0


def test_help_lists_flags(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices["scheme-run"]
    text = sub.format_help()
    for flag in ("--field", "--matrix", "--n", "--trials", "--seed", "--output", "--format", "--v"):
        assert flag in text
    conv = parser._subparsers._group_actions[0].choices["convergence"].format_help()
    assert "--q-grid" in conv


def test_scheme_run_roundtrip_and_determinism(tmp_path, capsys):
    args = ["scheme-run", "--field", "3^2", "--matrix", "[[1,0],[0,1],[1,1]]", "--seed", "18446744073709551615"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    tr = Transcript.from_dict(json.loads(a.read_text()))
    assert len(tr.decoded) == 8


def test_experiment_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "scheme-run", "--field", "17", "--matrix", "[[1,0],[0,1],[1,1]]", "--trials", "40")
    rep = ExperimentReport.from_dict(json.loads(out))
    assert rep.trials == 40
    code, out, _ = run(
        capsys, "convergence", "--matrix", "[[1,0],[0,1],[1,1]]", "--q-grid", "5,17", "--trials", "40", "--format", "csv"
    )
    lines = out.strip().splitlines()
    assert lines[0] == "q,n,mu,r,trials,avg_cost,rate,c_pir_r,failure_rate"
    assert [l.split(",")[0] for l in lines[1:]] == ["5", "17"]


def test_privacy_audit_cli(capsys):
    code, out, _ = run(capsys, "privacy-audit", "--field", "5", "--matrix", "[[1,0],[0,1]]")
    assert code == 0 and json.loads(out)["passed"] is True
    code, _, err = run(capsys, "privacy-audit", "--field", "5", "--matrix", "[[1,0],[0,1],[1,1]]", "--budget", "10")
    assert code != 0 and "budget" in err
