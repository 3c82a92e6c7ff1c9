from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from tajpar.cli import EXIT_IO, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from tajpar.kernels import KERNELS, corpus_path

DATA = Path(__file__).parent / "data"


def _run(*argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


@pytest.fixture
def saxpy_files(tmp_path):
    src = tmp_path / "saxpy.taj"
    src.write_text(corpus_path("saxpy.taj").read_text())
    args = tmp_path / "v.json"
    args.write_text(json.dumps([2.0, [1, 2, 3, 4, 5, 6], [6, 5, 4, 3, 2, 1], 6]))
    return src, args


def test_analyze_writes_map(saxpy_files, tmp_path):
    src, _ = saxpy_files
    m = tmp_path / "m.json"
    code, text = _run("analyze", src, "-o", m)
    assert code == EXIT_OK
    assert json.loads(m.read_text()) == {
        "saxpy(real,array-real,array-real,int):void": [{"start": 4, "length": 8, "slot": 4}]}
    assert "loop@5 iter=i\tparallel\tsolver\tUNSAT" in text
    assert "# 1 loops, 1 annotated" in text


def test_analyze_prints_map_without_out(saxpy_files):
    code, text = _run("analyze", saxpy_files[0])
    assert code == EXIT_OK
    assert '{"saxpy(real,array-real,array-real,int):void":[{"start":4,"length":8,"slot":4}]}' in text


def test_rejections_are_explained(tmp_path):
    code, text = _run("analyze", corpus_path("gseidel2d.taj"))
    assert code == EXIT_OK
    assert "rejected" in text and "\tparallel\t" not in text


def test_run_modes_agree(saxpy_files, tmp_path):
    src, args = saxpy_files
    m = tmp_path / "m.json"
    assert _run("analyze", src, "-o", m)[0] == EXIT_OK
    code, seq = _run("run", src, "--args", args)
    assert code == EXIT_OK
    assert seq.splitlines()[0].startswith("heapDigest ")
    assert seq.splitlines()[2] == "returnValue null"
    assert _run("run", src, "--args", args, "--map", m, "--workers", 4) == (EXIT_OK, seq)
    assert _run("run", src, "--args", args, "--map", m, "--seed", 11) == (EXIT_OK, seq)


def test_oracle_lines():
    args = DATA / "swap_args.json"
    code, text = _run("oracle", corpus_path("swap.taj"), "--args", args)
    assert code == EXIT_OK
    assert text == "swap(array-int,int):void\tloop@3 iter=i\tconflict i=1 i=2 elem 1\n"


def test_emit_smt(tmp_path):
    code, text = _run("emit-smt", corpus_path("chain_write.taj"), "-o", tmp_path / "smt")
    assert code == EXIT_OK
    out = tmp_path / "smt" / "fill_loop2.smt2"
    assert text.strip() == str(out)
    assert out.read_text() == (DATA / "chain_write.smt2").read_text()


def test_report_matches_analyze(tmp_path):
    code, text = _run("report", corpus_path("jacobi2d.taj"), corpus_path("saxpy.taj"))
    assert code == EXIT_OK
    rows = [line.split("\t") for line in text.splitlines()]
    assert rows[0] == ["name", "loops", "id", "analysis_ms", "map_bytes"]
    assert [(r[0], r[1], r[2]) for r in rows[1:]] == [("jacobi2d", "4", "4"), ("saxpy", "1", "1")]


def test_report_default_lists_kernels():
    code, text = _run("report")
    assert code == EXIT_OK
    names = [line.split("\t")[0] for line in text.splitlines()[1:]]
    assert names == [k.name for k in KERNELS]


@pytest.mark.parametrize("argv", [
    ["analyze", "missing.taj"],
    [],
    ["bogus"],
    ["run", "x.taj"],
    ["run", str(corpus_path("saxpy.taj")), "--args", "nope.json"],
    ["run", str(corpus_path("saxpy.taj")), "--args", str(DATA / "swap_args.json")],
    ["run", str(corpus_path("saxpy.taj")), "--args", str(DATA / "swap_args.json"), "--workers", "0"],
    ["analyze", str(corpus_path("saxpy.taj")), "--enum-bound", "0"],
])
def test_usage_errors(argv):
    assert _run(*argv)[0] == EXIT_USAGE


def test_malformed_program_is_usage_error(tmp_path):
    bad = tmp_path / "bad.taj"
    bad.write_text("func f( {\n")
    assert _run("analyze", bad)[0] == EXIT_USAGE


def test_bad_map_is_usage_error(saxpy_files, tmp_path):
    src, args = saxpy_files
    m = tmp_path / "m.json"
    m.write_text('{"f":[{"start":1}]}')
    assert _run("run", src, "--args", args, "--map", m)[0] == EXIT_USAGE


def test_runtime_error_exit(tmp_path):
    args = tmp_path / "a.json"
    args.write_text("[[0.0, 0.0], 2]")
    assert _run("run", corpus_path("montecarlo.taj"), "--args", args)[0] == EXIT_RUNTIME


def test_unwritable_output_is_io_error(saxpy_files, tmp_path):
    target = tmp_path / "dir"
    target.mkdir()
    assert _run("analyze", saxpy_files[0], "-o", target)[0] == EXIT_IO


def test_module_entry_point(saxpy_files):
    proc = subprocess.run([sys.executable, "-m", "tajpar", "analyze", str(saxpy_files[0])],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "1 annotated" in proc.stdout
