from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when not in ("setup", "call"):
        return
    number, text = marker.args
    failed = call.excinfo is not None
    if call.when == "setup" and not failed:
        return
    _CRITERIA[number] = ("FAIL" if failed else "PASS", text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {text}")
