import pytest

_acceptance: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and item.name.startswith("test_criterion"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _acceptance[item.name] = (doc, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")

    def number(name):
        return int(name.split("_")[2])

    for name in sorted(_acceptance, key=number):
        doc, status = _acceptance[name]
        terminalreporter.write_line(f"criterion {number(name):2d}: {status}  {doc}")
