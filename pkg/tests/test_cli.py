import json
import subprocess
import sys

import pytest

from fibdyn.cli import BadInput, main, parse_m


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_m():
    assert parse_m("16") == [16]
    assert parse_m("4..7") == [4, 5, 6, 7]
    for bad in ("x", "9..4"):
        with pytest.raises(BadInput):
            parse_m(bad)


def test_decompose_both_agrees(capsys):
    code, out, _ = run(["decompose", "--m", "16", "--level", "6", "--source", "both"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == 1
    res = doc["output"]["results"][0]
    assert res["agreement"]["agree"] is True
    counts = res["catalog"]["counts"]
    assert counts["minimal_components"] == 4 and counts["periodic"] == 1 and counts["basin_regions"] == 1


def test_identity_report(capsys):
    code, out, _ = run(["decompose", "--m", "2", "--level", "4"], capsys)
    rec = json.loads(out)["output"]["results"][0]["catalog"]
    assert code == 0 and rec["identity_map"] is True and rec["counts"]["periodic"] == 16


def test_engine_m14_families(capsys):
    code, out, _ = run(["decompose", "--m", "14", "--level", "9", "--max-n", "4",
                        "--source", "both"], capsys)
    res = json.loads(out)["output"]["results"][0]
    assert code == 0 and res["agreement"]["agree"]
    levels = sorted({c["level"] for c in res["engine"]["components"] if c["kind"] == "FiniteComponent"})
    assert levels == [3, 5, 6, 7, 8, 9]       # A_k at 3, then M_{n,k} at n + t + 3 with t = 1


def test_bad_input_exit_code(capsys):
    assert run(["decompose", "--m", "1"], capsys)[0] == 2
    assert run(["decompose", "--m", "16", "--level", "2"], capsys)[0] == 2
    assert run(["decompose", "--m", "16", "--max-n", "0"], capsys)[0] == 2
    assert run(["decompose", "--m", "abc"], capsys)[0] == 2
    assert run(["conjecture", "--case", "4", "--max-level", "10"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["decompose"])
    assert exc.value.code == 2


def test_saturation_exit_code(capsys):
    argv = ["decompose", "--m", "28", "--level", "10", "--source", "engine"]
    assert run(argv + ["--fail-on-unresolved", "0"], capsys)[0] == 4
    assert run(argv + ["--fail-on-unresolved", "10000"], capsys)[0] == 0


def test_disagreement_exit_code(capsys, monkeypatch):
    import fibdyn.cli as cli
    from fibdyn.report import Agreement

    monkeypatch.setattr(cli, "compare_reports",
                        lambda a, b: Agreement(agree=False, exact=False, level=a.level,
                                               only_left=[{"class": "component"}]))
    code, out, _ = run(["decompose", "--m", "16", "--level", "6", "--source", "both"], capsys)
    assert code == 3
    assert json.loads(out)["output"]["results"][0]["agreement"]["only_left"]


def test_output_is_deterministic(capsys, tmp_path):
    argv = ["decompose", "--m", "26..30", "--level", "10", "--source", "both"]
    first = run(argv, capsys)[1]
    second = run(argv, capsys)[1]
    assert first == second
    out = tmp_path / "r.json"
    assert main(argv + ["--out", str(out), "--workers", "2"]) == 0
    assert out.read_text() == first


def test_workers_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("FIBDYN_WORKERS", "2")
    code, out, _ = run(["decompose", "--m", "28", "--level", "11", "--source", "engine"], capsys)
    assert code == 0
    monkeypatch.setenv("FIBDYN_WORKERS", "zero")
    assert run(["decompose", "--m", "28"], capsys)[0] == 2
    monkeypatch.setenv("FIBDYN_WORKERS", "0")
    assert run(["decompose", "--m", "28"], capsys)[0] == 2


def test_stream_writes_component_lines(capsys):
    code, _, err = run(["decompose", "--m", "16", "--level", "6", "--source", "engine", "--stream"],
                       capsys)
    lines = [json.loads(x) for x in err.splitlines()]
    assert code == 0 and lines and all(x["m"] == 16 for x in lines)


def test_timing_is_opt_in(capsys):
    _, out, _ = run(["decompose", "--m", "16", "--level", "6"], capsys)
    assert "elapsed_seconds" not in out
    _, out, _ = run(["decompose", "--m", "16", "--level", "6", "--timing"], capsys)
    assert "elapsed_seconds" in out


def test_classify_examples(capsys):
    _, out, _ = run(["classify", "--m", "14", "--level", "3"], capsys)
    rows = json.loads(out)["output"]["results"][0]["cycles"]
    grows = [r["cycle"] for r in rows if r["behavior"] == "StronglyGrows"]
    assert grows == [[1], [3], [5], [7]]
    _, out, _ = run(["classify", "--m", "9", "--level", "1"], capsys)
    rows = json.loads(out)["output"]["results"][0]["cycles"]
    assert rows == [{"cycle": [0, 1], "length": 2, "a_mod_4": 0, "b_mod_2": 1,
                     "behavior": "GrowsTails"}]
    _, out, _ = run(["classify", "--m", "28", "--level", "10"], capsys)
    res = json.loads(out)["output"]["results"][0]
    assert res["template_mismatches"] == 0
    assert sum("template" in r for r in res["cycles"]) == 256
    assert run(["classify", "--m", "28", "--level", "21"], capsys)[0] == 2


def test_verify_command(capsys):
    code, out, _ = run(["verify", "--suite", "periodicity", "--max-l", "8"], capsys)
    assert code == 0 and json.loads(out)["output"]["passed"]
    code, out, _ = run(["verify", "--suite", "lift-laws", "--m", "28", "--level", "11"], capsys)
    doc = json.loads(out)["output"]
    assert code == 0 and doc["suites"][0]["params"] == {"m": [28], "level": 11}
    code, out, _ = run(["verify", "--suite", "valuation", "--max-l", "10", "--format", "text"], capsys)
    assert code == 0 and out.splitlines()[1] == "PASS  valuation"


def test_verify_failure_exit_code(capsys, monkeypatch):
    import fibdyn.cli as cli
    from fibdyn.verify import SuiteResult

    def failing(name, **params):
        res = SuiteResult(name, params)
        res.check("always fails").record(False, why="test")
        return res

    monkeypatch.setattr(cli, "run_suite", failing)
    code, out, _ = run(["verify", "--suite", "gaussian", "--format", "text"], capsys)
    assert code == 1 and "counterexample" in out


def test_conjecture_examples(capsys):
    _, out, _ = run(["conjecture", "--case", "4", "--d", "0", "--max-level", "14"], capsys)
    doc = json.loads(out)["output"]
    assert doc["holds"] and doc["sequence"]["entries"][0]["g"] == 1
    assert all(e["certified"] for e in doc["sequence"]["entries"])
    _, out, _ = run(["conjecture", "--case", "8", "--d", "0", "--max-level", "14"], capsys)
    assert json.loads(out)["output"]["sequence"]["entries"][0]["g"] == 5
    _, out, _ = run(["conjecture", "--case", "4", "--d", "1", "--max-level", "12"], capsys)
    assert json.loads(out)["output"]["sequence"]["entries"][0]["g"] == 5


def test_conjecture_broken_dichotomy_record(capsys, monkeypatch):
    import fibdyn.cli as cli
    from fibdyn.catalog import BrokenDichotomy, GSequence

    def broken(case, d, max_level):
        raise BrokenDichotomy("neither candidate grows", GSequence(case, d, 28))

    monkeypatch.setattr(cli, "g_sequence", broken)
    code, out, _ = run(["conjecture", "--case", "4", "--max-level", "12"], capsys)
    doc = json.loads(out)["output"]
    assert code == 1 and doc["failure"]["kind"] == "broken-dichotomy" and not doc["holds"]


def test_text_formats(capsys):
    for argv in (["decompose", "--m", "28", "--level", "10", "--source", "both"],
                 ["classify", "--m", "16", "--level", "4"],
                 ["conjecture", "--case", "4", "--max-level", "12"]):
        code, out, _ = run(argv + ["--format", "text"], capsys)
        assert code == 0 and out.startswith(f"fibdyn {argv[0]}")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fibdyn", "decompose", "--m", "16", "--level", "5"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["command"] == "decompose"
