import contextlib
import io
import json
from pathlib import Path

import jsonschema
import pytest

from gradium import cli

ROOT = Path(__file__).resolve().parent.parent
SIDECARS = sorted((ROOT / "corpus").glob("*.expected.json"))
SCHEMA = jsonschema.Draft202012Validator(json.loads(cli.SCHEMA_PATH.read_text()))


def invoke(args):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        status = cli.main([*args, "--json"])
    report = json.loads(out.getvalue())
    SCHEMA.validate(report)
    report.pop("seconds", None)
    return status, report


@pytest.fixture(autouse=True)
def at_root(monkeypatch):
    monkeypatch.chdir(ROOT)


def test_every_program_has_a_sidecar():
    programs = {p.stem for p in (ROOT / "corpus").iterdir() if p.suffix in (".cbpv", ".lam")}
    assert programs == {p.name.removesuffix(".expected.json") for p in SIDECARS}


@pytest.mark.parametrize("sidecar", SIDECARS, ids=lambda p: p.name.removesuffix(".expected.json"))
def test_sidecar_replays(sidecar):
    for cmd in json.loads(sidecar.read_text())["commands"]:
        assert invoke(cmd["args"]) == (cmd["exit"], cmd["report"])


# hand-derived values for the headline programs, independent of the sidecars
EXPECTED = [
    (["run", "corpus/tick2.cbpv"], {"effect": "2", "terminal": "return ()"}),
    (["check", "corpus/tick_pair.cbpv"], {"effect": "2"}),
    (["run", "corpus/tick_pair_fst.cbpv"], {"effect": "1", "static_effect": "2"}),
    (["check", "corpus/return3.cbpv"], {"grades": {"x": "3"}}),
    (["check", "corpus/dup2.cbpv"], {"type": "Unit ->^2 F^1 (Unit * Unit)"}),
    (["check", "corpus/comp_pair.cbpv"], {"grades": {"x": "2"}}),
    (["check", "corpus/comp_tensor.cbpv"], {"grades": {"x": "3"}}),
    (["run", "corpus/return0.cbpv", "--system", "resource", "--env", "x=<junk>"], {"terminal": "return^0 <junk>"}),
    (["run", "corpus/junk_slot.cbpv", "--system", "resource", "--usage", "--env", "x=(),y=<junk>"], {"usage": {"x": 2, "y": 0}}),
    (["translate", "corpus/bind_cbn.lam", "--check"], {"effect": "0", "preserved": True}),
]


@pytest.mark.parametrize("args,fields", EXPECTED, ids=lambda a: " ".join(a) if isinstance(a, list) else "")
def test_headline_values(args, fields):
    status, report = invoke(args)
    assert status == 0
    assert {k: report.get(k) for k in fields} == fields


def test_single_use_duplication_is_rejected():
    status, report = invoke(["check", "corpus/dup1.cbpv"])
    assert status == 1 and report["error"]["rule"] == "coeff-abs"
