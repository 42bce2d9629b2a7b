import json

import pytest

from fip.cli import main
from fip.fileformats import parse_family
from fip.replay import fingerprint
from fip.scenarios import (GOLDEN, Bounds, Scenario, Status, determinism_check, golden,
                           parse_scenario, read_scenario, run_scenario)
from fip.fileformats import ParseError

FAMILY = "family v1 I=3 U=9\nset 0: 0 1 3\nset 1: 2 3\nset 2: 4\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "a.fam").write_text(FAMILY)
    (tmp_path / "bad.fam").write_text("family v1 I=3\n")
    (tmp_path / "f.txt").write_text("1 3 1 0\n")
    (tmp_path / "zero.txt").write_text("0 0 0\n")
    (tmp_path / "w.ce").write_text("0\n1\n2\n3\n4\n5\n6\n")
    (tmp_path / "s.txt").write_text("greedy delay=0\nsilent\n")
    return tmp_path


@pytest.mark.parametrize("name", ["hat-eq1", "permitting-invariant", "range-roundtrip-d2"])
def test_golden_scenarios_pass(name):
    rep = run_scenario(golden(name))
    assert rep.status is Status.PASS, rep.summary()


def test_permitting_scenario_reports_the_audit():
    rep = run_scenario(golden("permitting-invariant"))
    assert "permitting trace audit: ok" in rep.details


def test_malformed_family_is_an_input_error(files):
    sc = Scenario("bad", "hat-transform", {"family": "bad.fam"}, "eq1", files)
    rep = run_scenario(sc)
    assert rep.status is Status.INPUT_ERROR and rep.exit_code == 2
    assert Status.ORACLE_FAILURE.exit_code == 1


def test_unknown_operation_and_oracle():
    assert run_scenario(Scenario("x", "teleport")).status is Status.INPUT_ERROR
    assert run_scenario(Scenario("x", "greedy", {}, "vibes")).status is Status.INPUT_ERROR


def test_budget_too_small_is_undecided():
    sc = Scenario("g", "greedy", {"family": "gen common element=9 I=3 U=9", "budget": "3"})
    assert run_scenario(sc).status is Status.UNDECIDED


def test_scenario_file(files):
    (files / "one.sc").write_text("scenario v1\n# hat check\nname=mine\noperation=hat-transform\n"
                                  "family=a.fam\nn=2\nexpected=eq1\n")
    sc = read_scenario(files / "one.sc")
    assert sc.inputs == {"family": "a.fam", "n": "2"}
    assert run_scenario(sc).status is Status.PASS


@pytest.mark.parametrize("text", ["", "scenario v2\n", "scenario v1\nname=x\n",
                                  "scenario v1\nname=x\noperation=greedy\njunk\n"])
def test_scenario_parse_errors(text):
    with pytest.raises(ParseError):
        parse_scenario(text)


def test_bounds_from_env():
    b = Bounds.from_env({"FIP_INDEX_BOUND": "4", "FIP_STAGE_BOUND": "50"})
    assert (b.index_bound, b.universe_bound, b.stages) == (4, 20, 50)
    with pytest.raises(ParseError):
        Bounds.from_env({"FIP_UNIVERSE_BOUND": "lots"})


def test_env_reaches_inline_generators(monkeypatch):
    monkeypatch.setenv("FIP_INDEX_BOUND", "4")
    monkeypatch.setenv("FIP_UNIVERSE_BOUND", "11")
    rep = run_scenario(Scenario("g", "hyperimmune", {"family": "gen random seed=1"}))
    assert rep.status is Status.PASS
    assert "J = " in rep.details[0]


def test_determinism_of_a_golden_scenario():
    assert determinism_check(golden("hat-bounded")) == []


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    return code, capsys.readouterr()


def test_cli_check(files, capsys):
    code, out = run(capsys, "check", files / "a.fam", "--prop", "F")
    assert code == 1 and "# holds: no" in out.out
    code, out = run(capsys, "check", files / "a.fam", "--prop", "Dbar2", "--chosen", "0,1", "--maximal")
    assert code == 0 and "# maximal: yes" in out.out


def test_cli_hat_output_parses_and_replays(files, capsys):
    code, out = run(capsys, "hat-transform", "--n", 2, files / "a.fam", "--trace", files / "h.trace")
    assert code == 0
    hat = parse_family(out.out)
    code, out2 = run(capsys, "replay", files / "h.trace")
    assert code == 0 and fingerprint(parse_family(out2.out)) == fingerprint(hat)


def test_cli_short_hat_budget_is_undecided(files, capsys):
    code, _ = run(capsys, "hat-transform", "--n", 2, "--stages", 1, files / "a.fam")
    assert code == 3


def test_cli_range_commands(files, capsys):
    code, _ = run(capsys, "encode-range", "--table", files / "f.txt", "-o", files / "r.fam")
    assert code == 0
    code, out = run(capsys, "decode-range", files / "r.fam", "--prop", "F", "--chosen", "0,1,3")
    assert code == 0 and "# range: 0 1 3" in out.out
    code, _ = run(capsys, "decode-range", files / "r.fam", "--prop", "F", "--chosen", "0")
    assert code == 1


def test_cli_solvers(files, capsys):
    assert run(capsys, "solve", "greedy", "--family", files / "a.fam")[0] == 0
    assert run(capsys, "solve", "hyperimmune", "--family", files / "a.fam")[0] == 0
    assert run(capsys, "solve", "hyperimmune", "--family", files / "a.fam",
               "--oracle", files / "zero.txt", "--stages", 3)[0] == 1
    code, out = run(capsys, "solve", "permitting", "--family", files / "a.fam", "--ce", files / "w.ce",
                    "--stages", 5, "--trace", files / "p.jsonl", "--format", "json-lines")
    assert code == 0
    first = json.loads((files / "p.jsonl").read_text().splitlines()[0])
    assert first["kind"] == "permitting"


def test_cli_adversary_and_generic(files, capsys):
    code, out = run(capsys, "adversary", "warmup", "--strategies", files / "s.txt", "--stages", 60)
    assert code == 0 and "# violations: 0" in out.out
    code, _ = run(capsys, "adversary", "full", "--stages", 50, "-o", files / "adv.fam")
    assert code == 0 and parse_family((files / "adv.fam").read_text()).index_bound > 0
    assert run(capsys, "generic", "build", "--family", files / "a.fam", "-o", files / "g.txt")[0] == 0
    code, out = run(capsys, "generic", "extract", "--family", files / "a.fam", "--g", files / "g.txt")
    assert code == 0 and "# maximal: yes" in out.out
    assert run(capsys, "generic", "extract", "--family", files / "a.fam")[0] == 2


def test_cli_truncated_trace(files, capsys):
    run(capsys, "hat-transform", "--n", 2, files / "a.fam", "--trace", files / "h.trace")
    lines = (files / "h.trace").read_text().splitlines()
    (files / "cut.trace").write_text("\n".join(lines[:3]) + "\n")
    assert run(capsys, "replay", files / "cut.trace")[0] == 3


def test_cli_input_errors(files, capsys):
    assert run(capsys, "check", files / "bad.fam", "--prop", "F")[0] == 2
    assert run(capsys, "check", files / "missing.fam", "--prop", "F")[0] == 2
    assert run(capsys, "check", files / "a.fam", "--prop", "Q7")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "replay", files / "a.fam")[0] == 2


def test_cli_scenarios(files, capsys):
    code, out = run(capsys, "scenario", "list")
    assert code == 0 and len(out.out.splitlines()) == len(GOLDEN)
    code, out = run(capsys, "scenario", "run", "hat-eq1", "--determinism")
    assert code == 0 and "determinism: ok" in out.out
    assert run(capsys, "scenario", "run", "nope")[0] == 2
    (files / "bad.sc").write_text("scenario v1\nname=b\noperation=hat-transform\nfamily=bad.fam\n")
    assert run(capsys, "scenario", "file", files / "bad.sc")[0] == 2
