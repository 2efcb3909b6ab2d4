#!/usr/bin/env python3
"""Smoke test for the slsp_py extension module.

Loads the cdylib straight out of the cargo target directory (build it
first with `cargo build -p slsp-python`) and exercises every exported
function against a small module.
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import sys


def load_slsp_py():
    root = pathlib.Path(__file__).resolve().parents[1]
    candidates = [
        root / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libslsp_py.so", "slsp_py.dll", "libslsp_py.dylib")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("slsp_py is not built; run: cargo build -p slsp-python")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    loader = importlib.machinery.ExtensionFileLoader("slsp_py", str(newest))
    spec = importlib.util.spec_from_loader("slsp_py", loader, origin=str(newest))
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


SOURCE = """\
module Smoke

  safeDiv(a: int, b: int): int == a / b
    pre b <> 0

  a(): int == 1
  b(): int == 2

  trace spec = (a() | b()){1,2}

  lemma taut : (p and q) => p
  lemma hope : p => q

end
"""


def main():
    slsp = load_slsp_py()

    # Analysis: a clean module, then a parse error.
    report = slsp.analyze(SOURCE)
    assert report["clean"] is True, report
    assert report["module"] == "Smoke"
    assert report["diagnostics"] == []
    broken = slsp.analyze("module Broken f( end")
    assert broken["clean"] is False
    assert broken["diagnostics"], "parse errors must surface as diagnostics"

    # Proof obligations: one division site, discharged by its precondition.
    obs = slsp.obligations(SOURCE)
    assert len(obs) == 1, obs
    assert obs[0]["kind"] == "division by zero"
    assert obs[0]["name"] == "Smoke.safeDiv"
    assert obs[0]["proved"] is True

    # Combinatorial testing: (a()|b()){1,2} expands to 6 test cases.
    assert slsp.count_tests(SOURCE, "spec") == 6
    tests = slsp.expand_trace(SOURCE, "Smoke.spec")
    assert len(tests) == 6
    assert {tuple(t) for t in tests} == {
        ("a()",),
        ("b()",),
        ("a()", "a()"),
        ("a()", "b()"),
        ("b()", "a()"),
        ("b()", "b()"),
    }
    cases = slsp.execute_trace(SOURCE, "spec")
    assert [c["id"] for c in cases] == [1, 2, 3, 4, 5, 6]
    assert all(c["verdict"] == 1 for c in cases), "all calls are defined: Passed"
    first = cases[0]["sequence"][0]
    assert first["case"] in ("a()", "b()") and first["result"] in ("1", "2")

    # Translation: both renderers, stable across calls.
    assert slsp.languages() == ["latex", "markdown"]
    latex = slsp.render(SOURCE, "latex")
    assert "safeDiv" in latex and "\\Rightarrow" in latex
    assert slsp.render(SOURCE, "markdown").startswith("# ")
    assert slsp.render(SOURCE, "latex") == latex
    try:
        slsp.render(SOURCE, "ascii")
        raise AssertionError("unknown language must raise")
    except ValueError as e:
        assert "ascii" in str(e)

    # Theorem proving: a tautology and a refutable lemma.
    assert slsp.prove(SOURCE, "taut")["status"] == "proved"
    hope = slsp.prove(SOURCE, "Smoke.hope")
    assert hope["status"] == "unproved"
    assert "counterexample" in hope["description"]

    # Interactive session: apply, undo, replay.
    names = [c["name"] for c in slsp.commands()]
    assert "intro" in names and "auto" in names
    session = slsp.ProofSession(SOURCE, "taut")
    assert session.lemma == "Smoke.taut"
    state = session.state()
    assert state["id"] == 0 and state["status"] == "open" and len(state["subgoals"]) == 1
    step1 = session.apply("intro")["state"]
    assert step1["id"] == 1 and step1["rules"] == ["intro"]
    step2 = session.apply("auto")["state"]
    assert step2["status"] == "proved"
    undone = session.undo()
    assert undone == step1
    assert session.apply("auto")["state"]["status"] == "proved"
    assert session.prove()["status"] == "proved"

    # Wire framing: two messages through one byte stream.
    request = json.dumps(
        {"jsonrpc": "2.0", "id": 1, "method": "slsp/TP/lemmas", "params": {}}
    )
    response = json.dumps({"jsonrpc": "2.0", "id": 1, "result": []})
    frame = slsp.encode_frame(request)
    assert frame.startswith(b"Content-Length: ") and b"\r\n\r\n" in frame
    decoded = slsp.decode_frames(frame + slsp.encode_frame(response))
    assert [json.loads(m) for m in decoded] == [json.loads(request), json.loads(response)]
    try:
        slsp.encode_frame('{"jsonrpc": "2.0"}')
        raise AssertionError("structurally invalid message must raise")
    except ValueError:
        pass

    print("smoke test passed")


if __name__ == "__main__":
    main()
