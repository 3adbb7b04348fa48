import re

import pytest

_CRITERIA: dict[int, dict] = {}
_NAME = re.compile(r"test_criterion_(\d+)_")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _NAME.match(item.name)
    if m is None or rep.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[int(m.group(1))] = {
        "name": item.name[m.end():].replace("_", " "),
        "passed": rep.passed,
        "seconds": rep.duration,
        "detail": detail,
    }


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        c = _CRITERIA[num]
        status = "PASS" if c["passed"] else "FAIL"
        line = f"criterion {num:>2} {status}  {c['name']}  ({c['seconds']:.1f}s)"
        if c["detail"]:
            line += f"  {c['detail']}"
        terminalreporter.write_line(line)
