import json
import shutil
import time

from click.testing import CliRunner

from sax import library
from sax.cli import main

BIN = str(library.path_of("bin.sax"))


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def test_check_corpus_ok():
    files = [str(library.path_of(f)) for f in library.program_files()]
    r = invoke("check", *files)
    assert r.exit_code == 0, r.output
    assert r.output.count(": ok") == len(files)


def test_check_mutant_fails_with_code():
    m = library.mutants()[0]
    r = invoke("check", str(library.path_of(m["file"])))
    assert r.exit_code == 1 and m["code"] in r.output


def test_run_text_and_json():
    r = invoke("run", BIN, "--entry", "succ", "--arg", "y=6")
    assert r.exit_code == 0
    assert "= 7" in r.output and "status: done" in r.output
    r = invoke("run", BIN, "--entry", "plus2", "--arg", "z=5", "--sched", "random", "--seed", "3", "--json")
    data = json.loads(r.output)
    assert data["status"] == "done" and data["number"] == 7


def test_run_usage_errors():
    assert invoke("run", BIN, "--entry", "succ", "--arg", "y=1", "--sched", "random").exit_code == 2
    assert invoke("run", BIN, "--entry", "succ").exit_code == 2
    assert invoke("run", BIN, "--entry", "nope").exit_code == 2


def test_run_step_limit_is_not_an_error():
    r = invoke("run", BIN, "--entry", "succ", "--arg", "y=6", "--max-steps", "0", "--json")
    assert r.exit_code == 0 and json.loads(r.output)["status"] == "steplimit"


def test_run_rejects_ill_typed_file(tmp_path):
    f = tmp_path / "bad.sax"
    f.write_text("mode m lin\ntype t @ m = +{a: t}\n"
                 "decl loop : |- (x : t)\nproc x <- loop =\n"
                 "  y : t <- case x (a(z) => y <- z) ;\n  case y (a(w) => x.a(w))\n")
    r = invoke("run", str(f), "--entry", "loop", "--json")
    assert r.exit_code == 1 and r.stdout == ""
    assert "UnboundVariable" in r.stderr


def test_trace_lines():
    r = invoke("trace", BIN, "--entry", "main_plus2")
    lines = r.output.splitlines()
    assert r.exit_code == 0 and lines[0].startswith("#0 call ")
    assert any(" read " in line for line in lines)
    r = invoke("trace", BIN, "--entry", "main_plus2", "--json")
    assert json.loads(r.output)[0]["rule"] == "call"


def test_expand_output_rechecks(tmp_path):
    r = invoke("expand", BIN)
    assert r.exit_code == 0
    f = tmp_path / "bin_expanded.sax"
    f.write_text(r.output)
    assert invoke("check", str(f)).exit_code == 0
    assert " => " in r.output


def test_expand_with_include(tmp_path):
    for name in ("mapreduce.sax", "mapreduce_base.sax"):
        shutil.copy(library.path_of(name), tmp_path / name)
    r = invoke("expand", str(tmp_path / "mapreduce.sax"))
    out = tmp_path / "expanded.sax"
    out.write_text(r.output)
    assert invoke("check", str(out)).exit_code == 0


def test_verify_quick():
    t = time.monotonic()
    r = invoke("verify", "--quick")
    assert r.exit_code == 0, r.output
    assert time.monotonic() - t < 10
    assert "FAIL" not in r.output and "confluence" in r.output


def test_verify_inject_is_caught():
    r = invoke("verify", "--quick", "--inject", "corrupt", "--json")
    assert r.exit_code == 1
    assert any(row["result"] == "FAIL" for row in json.loads(r.output))


def test_verify_user_file():
    r = invoke("verify", BIN, "--seeds", "2")
    assert r.exit_code == 0 and "main_plus2" in r.output
