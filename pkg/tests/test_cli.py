import contextlib
import io
import json

import jsonschema
import pytest

from gradium import cli
from gradium.effect_system import EffectChecker


@pytest.fixture(scope="module")
def validator():
    schema = json.loads(cli.SCHEMA_PATH.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


@pytest.fixture
def gradium(validator):
    def invoke(*args):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            status = cli.main([*args, "--json"])
        report = json.loads(out.getvalue())
        validator.validate(report)
        assert report["exit"] == status
        return status, report

    return invoke


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_tick_pair_runs_with_effect_two(gradium):
    status, report = gradium("run", "corpus/tick2.cbpv", "--system", "effect", "--algebra", "nat-cost")
    assert (status, report["effect"], report["terminal"]) == (0, "2", "return ()")


def test_a_tight_effect_bound_is_a_user_error(gradium):
    status, report = gradium("check", "corpus/tick2.cbpv", "--expect-effect", "1")
    assert status == 1 and report["error"]["rule"].startswith("eff")


def test_boxed_source_program_translates_and_checks(gradium):
    status, report = gradium("translate", "corpus/box.lam", "--dialect", "cbn-co", "--check")
    assert status == 0 and report["preserved"]


def test_coeffect_check_reports_grades(gradium):
    status, report = gradium("check", "corpus/return3.cbpv", "--system", "coeffect", "--algebra", "nat-usage")
    assert report["grades"] == {"x": "3"} and report["type"] == "F^3 Unit"
    # granting more uses than needed is fine, fewer is not
    status, report = gradium("check", "corpus/return3.cbpv", "--expect-grades", "x=4")
    assert status == 0
    status, report = gradium("check", "corpus/return3.cbpv", "--expect-grades", "x=2")
    assert status == 1 and report["error"]["rule"]


def test_resource_run_with_junk_at_an_unused_slot(gradium):
    status, report = gradium("run", "corpus/junk_slot.cbpv", "--system", "resource", "--usage", "--env", "x=(),y=<junk>")
    assert status == 0 and report["usage"] == {"x": 2, "y": 0}


def test_junk_where_it_may_be_inspected_is_refused(gradium):
    status, report = gradium("run", "corpus/junk_slot.cbpv", "--system", "resource", "--env", "x=<junk>,y=()")
    assert status == 1 and report["error"]["rule"] == "env"
    status, report = gradium("run", "corpus/junk_slot.cbpv", "--env", "x=(),y=<junk>")
    assert status == 1


def test_environment_values_are_type_checked(gradium, tmp_path):
    path = write(tmp_path, "p.cbpv", "-- mode: coeffect\n-- context: x : Unit * Unit\nreturn^1 x\n")
    assert gradium("run", path, "--env", "x=((), ())")[0] == 0
    assert gradium("run", path, "--env", "x=()")[0] == 1
    assert gradium("run", path)[1]["error"]["rule"] == "env"


@pytest.mark.parametrize("text", ["let x <- in tick", "()!", "tick tick"])
def test_ill_formed_programs_exit_one(gradium, tmp_path, text):
    path = write(tmp_path, "bad.cbpv", f"-- mode: effect\n{text}\n")
    status, report = gradium("check", path)
    assert status == 1 and report["error"]["rule"]


def test_missing_files_and_unknown_algebras_exit_one(gradium):
    assert gradium("check", "corpus/nope.cbpv")[1]["error"]["rule"] == "io"
    assert gradium("check", "corpus/tick2.cbpv", "--algebra", "nat-usage")[0] == 1


def test_budget_exhaustion_is_a_defect(gradium, monkeypatch):
    monkeypatch.setenv("GRADIUM_STEP_BUDGET", "1")
    status, report = gradium("run", "corpus/tick2.cbpv")
    assert status == 3 and report["error"]["kind"] == "BudgetExceeded"


def test_stuck_evaluation_of_unchecked_input_is_a_defect(gradium, tmp_path, monkeypatch):
    from gradium.effect_system import check_program as real
    from gradium.syntax import parse

    path = write(tmp_path, "stuck.cbpv", "-- mode: effect\n()!\n")
    # a checker that waves everything through
    monkeypatch.setattr(cli, "effect_check", lambda prog, alg, bound=None: real(parse("-- mode: effect\nreturn ()"), alg))
    status, report = gradium("run", path)
    assert status == 3


def test_soundness_reports_pass_and_fail(gradium, monkeypatch):
    status, report = gradium("soundness", "--suite", "eff-sound", "--trials", "50")
    assert status == 0 and report["passed"] == 50
    original = EffectChecker.returner
    monkeypatch.setattr(EffectChecker, "returner", lambda self, ctx, m: (original(self, ctx, m)[0], self.alg.unit))
    status, report = gradium("soundness", "--suite", "eff-sound", "--trials", "200", "--seed", "1")
    assert status == 2 and not report["ok"] and report["counterexamples"]


@pytest.mark.parametrize("suite", ["determinism", "subeff", "subcoeff", "co-sound", "res-sound", "preserve-cbv-co"])
def test_every_suite_is_reachable(gradium, suite):
    status, report = gradium("soundness", "--suite", suite, "--trials", "20", "--depth", "3")
    assert status == 0 and report["suite"] == suite


def test_canonical_suite_from_the_command_line(gradium):
    status, report = gradium("soundness", "--suite", "canonical", "--depth", "3")
    assert status == 0 and report["stats"]["terms"] == report["trials"]


def test_human_output_is_deterministic(capsys):
    for _ in range(2):
        assert cli.main(["check", "corpus/tick2.cbpv"]) == 0
    first, second = capsys.readouterr().out.strip().split("\n")
    assert first == second == "F Unit  [effect 2]"


def test_human_errors_go_to_stderr(capsys):
    assert cli.main(["check", "corpus/dup1.cbpv"]) == 1
    captured = capsys.readouterr()
    assert captured.out == "" and captured.err.startswith("error:")
