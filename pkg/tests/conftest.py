import textwrap

import pytest

from sax import library
from sax.program import check_text


def checked(text: str):
    """Parse and check a program given inline; fails the test on diagnostics."""
    prog, diags = check_text(textwrap.dedent(text))
    assert not diags, "\n".join(map(str, diags))
    return prog


def diagnostics(text: str):
    return check_text(textwrap.dedent(text))[1]


def codes(text: str) -> list[str]:
    return [d.code for d in diagnostics(text)]


@pytest.fixture(scope="session")
def corpus():
    return library.program


def execute(prog, entry, inputs=None, policy="fifo", seed=None, max_steps=200_000, record=False):
    """Run ``entry`` and return ``(result, decoded tree)``."""
    from sax.runtime import Scheduler, decode, run, start

    engine, cfg, root = start(prog, entry, inputs or {})
    res = run(engine, cfg, Scheduler(policy, seed), max_steps, record=record)
    return res, decode(res.config, root)


_criteria: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


def pytest_runtest_logreport(report):
    marks = getattr(report, "criterion", None)
    if marks is None:
        return
    n, title = marks
    if report.when == "call" or report.outcome != "passed":
        outcome = "PASS" if report.passed else "FAIL"
        prev = _criteria.get(n)
        if prev is None or prev[1] == "PASS":
            _criteria[n] = (title, outcome, report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, outcome, secs = _criteria[n]
        terminalreporter.write_line(f"criterion {n:>2}: {outcome}  {title} ({secs:.1f}s)")
