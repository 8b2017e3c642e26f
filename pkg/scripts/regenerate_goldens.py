"""Rewrite corpus/*.expected.json from the current CLI output.

Each sidecar lists CLI invocations for its program together with the exit
status and JSON report they produced.  Review the diff before committing.
"""
from __future__ import annotations

import contextlib
import io
import json
import os
import sys
from pathlib import Path

from gradium.cli import main

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

UNIT_ENV = ["--env", "x=()"]

CASES: dict[str, list[list[str]]] = {
    "tick2.cbpv": [["check"], ["run"], ["check", "--expect-effect", "1"], ["check", "--expect-effect", "2"]],
    "tick_pair.cbpv": [["check"], ["check", "--expect-effect", "1"]],
    "tick_pair_fst.cbpv": [["check"], ["run"]],
    "return3.cbpv": [["check"], ["check", "--expect-grades", "x=2"], ["run", "--system", "resource", "--usage", *UNIT_ENV]],
    "return0.cbpv": [["run", "--system", "resource", "--usage", "--env", "x=<junk>"], ["run", *UNIT_ENV]],
    "dup2.cbpv": [["check"], ["run"]],
    "dup1.cbpv": [["check"]],
    "junk_slot.cbpv": [["run", "--system", "resource", "--usage", "--env", "x=(),y=<junk>"]],
    "value_pair.cbpv": [["check"], ["run", *UNIT_ENV]],
    "shared_pair.cbpv": [["check"], ["run", *UNIT_ENV]],
    "comp_pair.cbpv": [["check"], ["run", *UNIT_ENV]],
    "comp_tensor.cbpv": [["check"], ["run", "--system", "resource", "--usage", *UNIT_ENV]],
    "tensor_to_pair.cbpv": [["check"]],
    "pair_to_tensor.cbpv": [["check"]],
    "tensor_roundtrip.cbpv": [["check"], ["run"]],
    "pair_roundtrip.cbpv": [["check"], ["run"]],
    "box.lam": [["translate", "--dialect", "cbn-co", "--check"]],
    "divide.lam": [["translate", "--check"]],
    "divide_cbv.lam": [["translate", "--check"]],
    "extend.lam": [["translate", "--check"]],
    "extend_cbv.lam": [["translate", "--check"]],
    "tick_app.lam": [["translate", "--check"]],
    "bind_cbn.lam": [["translate", "--check"]],
    "bind_cbv.lam": [["translate", "--check"]],
    "dup_cbv.lam": [["translate", "--check"]],
    "with_cbn.lam": [["translate", "--check"]],
}


def invoke(args: list[str]) -> tuple[int, dict]:
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        status = main([*args, "--json"])
    report = json.loads(out.getvalue())
    report.pop("seconds", None)
    return status, report


def golden(name: str, invocations: list[list[str]]) -> dict:
    path = f"corpus/{name}"
    commands = []
    for extra in invocations:
        args = [extra[0], path, *extra[1:]]
        status, report = invoke(args)
        commands.append({"args": args, "exit": status, "report": report})
    return {"commands": commands}


def regenerate() -> int:
    os.chdir(ROOT)
    for name, invocations in CASES.items():
        sidecar = CORPUS / (Path(name).stem + ".expected.json")
        sidecar.write_text(json.dumps(golden(name, invocations), indent=2, sort_keys=True) + "\n")
        print(f"wrote {sidecar.relative_to(ROOT)}")
    return 0


if __name__ == "__main__":
    sys.exit(regenerate())
