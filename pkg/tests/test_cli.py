import io
import json
import subprocess
import sys

import pytest

from hornap.cli import COMMANDS, run

SPEC_COMMANDS = {
    "entails", "saturate", "verify", "subsumes", "find-ap", "amalgamate", "enumerate-models", "brute-ap",
    "regex2grammar", "derives", "universality", "compile", "claim1", "claim2", "encode-word", "decode",
    "cross-check", "hard-instance",
}


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv, "--format", "json")
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def files(tmp_path):
    horn = tmp_path / "f.horn"
    horn.write_text("rel P/1. rel Q/1. rel R/1.\nP(x) -> Q(x).\nQ(x) -> R(x).\n")
    grm = tmp_path / "g.grm"
    grm.write_text("start S\nterminals a b\nS -> a\n")
    return tmp_path, str(horn), str(grm)


def test_all_subcommands_present():
    assert set(COMMANDS) == SPEC_COMMANDS


def test_entails_tautology(files):
    _, horn, _ = files
    doc = call_json("entails", "--sentence", horn, "--clause", "P(x) -> P(x)")
    assert doc["entailed"] is True and doc["certificate"]["kind"] == "tautology"


def test_entails_and_verify_round_trip(files):
    tmp, horn, _ = files
    cert = tmp / "c.json"
    code, _, err = call("entails", "--sentence", horn, "--clause", "P(a) -> R(a)", "--format", "json", "-o", str(cert))
    assert code == 0, err
    doc = call_json("verify", "--sentence", horn, "--certificate", str(cert))
    assert doc["valid"] is True and doc["certificate"] == "deduction"
    # a tampered side clause is caught at its step
    d = json.loads(cert.read_text())
    d["certificate"]["steps"][0]["sideClauseIndex"] = 1
    cert.write_text(json.dumps(d))
    doc = call_json("verify", "--sentence", horn, "--certificate", str(cert))
    assert doc["valid"] is False and doc["failedStep"] == 1


def test_non_entailment_reports_countermodel(files):
    _, horn, _ = files
    doc = call_json("entails", "--sentence", horn, "--clause", "R(a) -> P(a)")
    assert doc["entailed"] is False and doc["countermodel"]["facts"] == ["R(a)"]


def test_compile_writes_template(files):
    tmp, _, grm = files
    target = tmp / "out.horn"
    code, _, err = call("compile", "--grammar", grm, "-o", str(target))
    assert code == 0, err
    text = target.read_text()
    assert "I(y), T(x1), E(y,x1), Ra(y,x1) -> bot." in text or "E(y,x1), I(y), Ra(y,x1), T(x1) -> bot." in text


def test_compile_find_ap_decode_pipeline(files):
    tmp, _, grm = files
    compiled = tmp / "out.horn"
    assert call("compile", "--grammar", grm, "-o", str(compiled))[0] == 0
    cex = tmp / "cex.json"
    code, _, err = call("find-ap", "--sentence", str(compiled), "--max-vars", "2", "--max-atoms", "8",
                        "--format", "json", "-o", str(cex))
    assert code == 0, err
    assert json.loads(cex.read_text())["found"] is True
    assert call_json("verify", "--sentence", str(compiled), "--certificate", str(cex))["valid"] is True
    assert call_json("decode", "--sentence", str(compiled), "--certificate", str(cex))["word"] == "b"


def test_cross_check(files):
    _, _, grm = files
    doc = call_json("cross-check", "--grammar", grm, "--word-bound", "3")
    assert doc["agree"] is True and doc["shortestRejected"] == "b" == doc["decodedCounterexample"]


def test_bound_mismatch_is_input_error(files):
    _, _, grm = files
    code, _, err = call("cross-check", "--grammar", grm, "--word-bound", "3", "--max-vars", "1")
    assert code == 1 and "bounds" in err


def test_find_ap_nothing_found_is_success(files):
    _, horn, _ = files
    doc = call_json("find-ap", "--sentence", horn, "--max-vars", "2", "--max-atoms", "6")
    assert doc["found"] is False and doc["result"] == "ap holds (complete clauses)"


def test_other_commands(files):
    tmp, horn, grm = files
    assert call_json("derives", "--grammar", grm, "--word", "a")["derives"] is True
    assert call_json("universality", "--grammar", grm, "--word-bound", "2")["shortestRejected"] == "b"
    assert call_json("claim1", "--grammar", grm, "--word", "b")["agree"] is True
    assert call_json("claim2", "--alphabet", "a,b", "--word", "ab")["agree"] is True
    assert call_json("encode-word", "--word", "b")["phi1"] == ["F(y1,x1)"]
    assert call_json("enumerate-models", "--sentence", horn, "--max-size", "1")["count"] == 4
    assert call_json("brute-ap", "--sentence", horn, "--max-size", "2")["found"] is False
    assert call_json("hard-instance", "--k", "2")["productions"] > 0
    assert "S -> a" in call_json("regex2grammar", "--regex", "a", "--alphabet", "a,b")["grammar"]
    doc = call_json("saturate", "--sentence", horn, "--clause", "P(a) -> bot")
    assert doc["atoms"] == ["P(a)", "Q(a)", "R(a)"]
    doc = call_json("subsumes", "--sentence", horn, "--phi", "P(x1)", "--psi", "Q(y1)", "--shared", "x1")
    assert doc["subsumes"] is True
    triple = ("--phi", "P(x1), Q(x1), R(x1)", "--phi1", "R(y1)", "--phi2", "Q(y2), R(y2)", "--shared", "x1")
    doc = call_json("amalgamate", "--sentence", horn, *triple)
    assert doc["outcome"] == "amalgam" and len(doc["amalgam"]["domain"]) == 3
    # the diagrams must already be models
    assert call("amalgamate", "--sentence", horn, "--phi", "P(x1)", "--shared", "x1", "--phi1", "R(y1)", "--phi2", "R(y2)")[0] == 1


def test_input_errors(files):
    tmp, horn, _ = files
    assert call("entails", "--sentence", str(tmp / "missing.horn"), "--clause", "P(x) -> P(x)")[0] == 1
    bad = tmp / "bad.horn"
    bad.write_text("rel P/1.\nP(x,y) -> bot.")
    assert call("entails", "--sentence", str(bad), "--clause", "P(x) -> P(x)")[0] == 1
    assert call("no-such-command")[0] == 1
    assert call("find-ap", "--sentence", horn, "--max-vars", "0")[0] == 1
    assert call("entails", "--sentence", horn)[0] == 1


def test_json_is_deterministic(files):
    tmp, _, grm = files
    first = call("cross-check", "--grammar", grm, "--word-bound", "2", "--format", "json", "--seed", "1")
    second = call("cross-check", "--grammar", grm, "--word-bound", "2", "--format", "json", "--seed", "1")
    assert first == second and first[0] == 0


def test_human_output(files):
    _, horn, _ = files
    code, out, _ = call("entails", "--sentence", horn, "--clause", "P(a) -> R(a)")
    assert code == 0 and "entailed: True" in out


def test_module_entry_point(files):
    _, horn, _ = files
    proc = subprocess.run(
        [sys.executable, "-m", "hornap", "entails", "--sentence", horn, "--clause", "P(x) -> P(x)", "--format", "json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["entailed"] is True


def test_internal_error_exit_code(monkeypatch):
    def broken(args):
        raise AssertionError("amalgam is not strong")

    monkeypatch.setitem(COMMANDS, "encode-word", broken)
    code, _, err = call("encode-word", "--word", "a")
    assert code == 2 and "invariant" in err
