import json

import numpy as np
import pytest
from click.testing import CliRunner

from mep3.cli import main
from mep3.io import load_problem
from mep3.discretize import gen_four_point
from mep3.report import HEADER


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


@pytest.fixture
def random5(tmp_path, runner):
    out = tmp_path / "r5.mep"
    res = invoke(runner, "gen", "random", "--n", 5, "--seed", 7, "--out", out)
    assert res.exit_code == 0
    return out, tmp_path / "r5.oracle.csv"


def test_gen_fourpoint_round_trip(tmp_path, runner):
    out = tmp_path / "fp.mep"
    assert invoke(runner, "gen", "fourpoint", "--n", 20, "--out", out).exit_code == 0
    bvp, _ = load_problem(out)
    ref = gen_four_point(20)
    for name in "ABCD":
        for a, b in zip(getattr(ref.problem, name), getattr(bvp.problem, name)):
            assert np.array_equal(a, b)


def test_gen_baer_sizes_match_kept(tmp_path, runner):
    out = tmp_path / "b.mep"
    res = invoke(runner, "gen", "baer", "--gamma", 0, "--beta", 5, "--c", 1, "--b", 3,
                 "--rho", 0, "--sigma", 0, "--n", 60, "--out", out)
    assert res.exit_code == 0
    bvp, _ = load_problem(out)
    assert bvp.problem.sizes == tuple(len(k) for k in bvp.kept)


def test_gen_random_oracle_rows(random5):
    _, oracle = random5
    lines = oracle.read_text().splitlines()
    assert lines[0] == ",".join(HEADER)
    assert len(lines) == 1 + 125


def test_gen_invalid_params_is_usage_error(tmp_path, runner):
    res = runner.invoke(main, ["gen", "baer", "--c", "4", "--out", str(tmp_path / "x.mep")])
    assert res.exit_code == 2


def test_solve_direct_and_compare(random5, tmp_path, runner):
    prob, oracle = random5
    csv = tmp_path / "res.csv"
    res = invoke(runner, "solve", prob, "--method", "direct", "--out", csv)
    assert res.exit_code == 0
    assert len(csv.read_text().splitlines()) == 126
    res = invoke(runner, "compare", csv, oracle, "--tol", 1e-8)
    assert res.exit_code == 0
    rep = json.loads(res.output)
    assert rep["matched"] == 125 and rep["max_mismatch"] < 1e-8


def test_compare_identical_and_perturbed(random5, tmp_path, runner):
    _, oracle = random5
    res = invoke(runner, "compare", oracle, oracle)
    assert res.exit_code == 0 and json.loads(res.output)["max_mismatch"] == 0.0
    lines = oracle.read_text().splitlines()
    fields = lines[4].split(",")
    fields[1] = repr(float(fields[1]) + 1e-3)
    lines[4] = ",".join(fields)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    res = runner.invoke(main, ["compare", str(bad), str(oracle), "--tol", "1e-6"])
    assert res.exit_code == 4
    rep = json.loads(res.output)
    assert [o["row"] for o in rep["offending"]] == [3]


def test_compare_schema_error(random5, tmp_path, runner):
    _, oracle = random5
    junk = tmp_path / "junk.csv"
    junk.write_text("a,b\n")
    res = runner.invoke(main, ["compare", str(junk), str(oracle)])
    assert res.exit_code == 2


def test_solve_jd_matches_oracle_and_is_deterministic(random5, tmp_path, runner):
    prob, oracle = random5
    outs = []
    for k in range(2):
        csv = tmp_path / f"jd{k}.csv"
        res = invoke(runner, "solve", prob, "--method", "jd", "--eta-target", -0.5,
                     "--want", 4, "--seed", 3, "--delta", 1e-6, "--eps", 1e-10,
                     "--trqi-post", 3, "--out", csv)
        assert res.exit_code == 0
        outs.append(csv.read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0].decode().splitlines()) == 5
    assert invoke(runner, "compare", tmp_path / "jd0.csv", oracle).exit_code == 0


def test_solve_si_with_svg(tmp_path, runner):
    prob = tmp_path / "b.mep"
    invoke(runner, "gen", "baer", "--n", 30, "--out", prob)
    svg = tmp_path / "b.svg"
    res = invoke(runner, "solve", prob, "--method", "si", "--eta-target", 0, "--want", 2,
                 "--svg", svg)
    assert res.exit_code == 0
    lines = res.stdout.splitlines()
    assert lines[0] == ",".join(HEADER)
    assert lines[1].split(",")[8:11] == ["0", "0", "0"]
    assert svg.read_text().startswith("<svg")


def test_usage_errors(random5, runner):
    prob, _ = random5
    res = runner.invoke(main, ["solve", str(prob), "--method", "si",
                               "--target", "point", "0", "0", "0"])
    assert res.exit_code == 2
    res = runner.invoke(main, ["solve", str(prob), "--target", "point", "0", "0", "0",
                               "--eta-target", "1"])
    assert res.exit_code == 2
    assert runner.invoke(main, ["solve", "/nonexistent.mep"]).exit_code == 2


def test_solver_failure_exit_code(tmp_path, runner):
    prob = tmp_path / "b.mep"
    invoke(runner, "gen", "baer", "--n", 8, "--out", prob)
    res = runner.invoke(main, ["solve", str(prob), "--method", "direct"])
    assert res.exit_code == 3
    err = json.loads(res.stderr.strip().splitlines()[-1])
    assert err["error"] == "SingularDeltaError"
    res = runner.invoke(main, ["solve", str(prob), "--method", "direct", "--allow-singular"])
    assert res.exit_code == 0


def test_bad_problem_file(tmp_path, runner):
    junk = tmp_path / "junk.mep"
    junk.write_bytes(b"nope")
    res = runner.invoke(main, ["solve", str(junk)])
    assert res.exit_code == 2
    assert json.loads(res.stderr.strip())["error"] == "FormatError"
