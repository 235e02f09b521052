"""Acceptance bookkeeping: one pass/fail line per criterion in the terminal summary."""

import os
import time

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion implemented by the test")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SNAPNET_FULL_SCALE") == "1":
        return
    skip = pytest.mark.skip(reason="full-scale run; set SNAPNET_FULL_SCALE=1")
    for item in items:
        if "full_scale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def record(request):
    """Attach measured values to the criterion line, e.g. ``record(loss=3, seconds=12.0)``."""
    details = {}
    request.node.user_properties.append(("details", details))
    request.node.user_properties.append(("start", time.perf_counter()))

    def _record(**kw):
        details.update(kw)
    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and (rep.failed or rep.skipped)):
        props = dict(item.user_properties)
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        line = f"criterion {key} [{status}] {title}"
        details = props.get("details") or {}
        if details:
            line += ": " + ", ".join(f"{k}={_fmt(v)}" for k, v in details.items())
        if rep.when == "call":
            line += f" ({rep.duration:.1f}s)"
        _RESULTS[key] = line
        print("\n" + line)


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _sort_key(key):
    head, _, tail = str(key).partition(" ")
    return (int(head) if head.isdigit() else 99, tail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=_sort_key):
        terminalreporter.write_line(_RESULTS[key])
