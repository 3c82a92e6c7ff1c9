from __future__ import annotations

import pytest

from tajpar.annotate import canonical_loops
from tajpar.kernels import load_corpus
from tajpar.syntax import parse_program


def parse(text: str):
    return parse_program(text)


def loop_by_iter(p, iter_name: str, sig: str | None = None):
    """LoopInfo of the canonical loop whose iteration variable is iter_name."""
    for fsig, f in p.functions.items():
        if sig is not None and fsig != sig:
            continue
        _, _, verdicts = canonical_loops(f)
        for v in verdicts.values():
            if v.canonical and v.info.iter == iter_name:
                return v.info
    raise KeyError(iter_name)


@pytest.fixture
def saxpy():
    return load_corpus("saxpy.taj")


@pytest.fixture
def swap():
    return load_corpus("swap.taj")


# ---------------------------------------------------------------------------
# one summary line per acceptance criterion

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n = int(report.nodeid.rsplit("test_criterion_", 1)[1].split("_", 1)[0])
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[n] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}".rstrip())
