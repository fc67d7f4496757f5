import pytest

CRITERIA = {
    1: "codec exactness",
    2: "tokenizer laws",
    3: "masking statistics",
    4: "gradient audit",
    5: "residual identity",
    6: "overfit sanity",
    7: "planted-signal recovery",
    8: "ablation machinery",
    9: "metrics exactness",
    10: "reproducibility",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call" or report.failed:
        _outcomes.setdefault(crit, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            continue
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} ({name}): {status}")
