import os

import pytest

# keep runs single-process and deterministic unless a test opts in
os.environ.setdefault("FO_LAB_THREADS", "1")


def pytest_collection_modifyitems(items):
    for item in items:
        if item.module.__name__.endswith("test_acceptance"):
            item.add_marker(pytest.mark.acceptance)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call" and key != "error":
                continue
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" not in props:
                continue
            status = "PASS" if rep.passed else "FAIL"
            lines.append((props["criterion"], f"criterion {props['criterion']}: {status}  {props.get('title', '')}"
                          f"  [{props.get('detail', rep.nodeid)}]"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
