import os

from hypothesis import HealthCheck, settings

import _acceptance_log

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("QKM_HYPOTHESIS_EXAMPLES", "40")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance_log.RESULTS):
        ok, detail = _acceptance_log.RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
