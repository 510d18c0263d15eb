import re

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")

_results: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    label = str(marker.args[0])
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.when == "setup":
        detail = detail or "setup failed"
    _results.setdefault(re.match(r"\d+", label).group(), []).append((label, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=int):
        parts = _results[key]
        ok = all(p for _, p, _ in parts)
        info = " | ".join(f"{lab} {'pass' if p else 'FAIL'}: {d}" if len(parts) > 1 else d
                          for lab, p, d in parts)
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {info}")
