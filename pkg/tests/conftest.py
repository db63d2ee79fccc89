import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import policyrpc as pr  # noqa: E402

SUITE_BUDGET_S = 60.0

_criteria = {}  # number -> [title, passed]
_started = time.perf_counter()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title = marker.args
        entry = _criteria.setdefault(number, [title, True])
        entry[1] = entry[1] and report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    elapsed = time.perf_counter() - _started
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}")
    ok = elapsed < SUITE_BUDGET_S
    tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion 10: whole suite under "
                  f"{SUITE_BUDGET_S:.0f} s ({elapsed:.1f} s)")


def pytest_sessionfinish(session, exitstatus):
    if _criteria and time.perf_counter() - _started >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


class Pair:
    """Two connected spaces: ``caller`` drives calls into ``callee``."""

    def __init__(self, transport, caller_mode="autonomous", callee_mode="autonomous"):
        self.caller = pr.Space(caller_mode, name="caller")
        self.callee = pr.Space(callee_mode, name="callee")
        self.server = None
        if transport == "tcp":
            self.server = self.callee.serve_tcp("127.0.0.1:0")
            self.conn = self.caller.connect_tcp(self.server.address)
        else:
            a, b = pr.in_memory_pair()
            self.conn = self.caller.connect(a)
            self.back = self.callee.connect(b)
        self.wire = []
        self.conn.endpoint.taps.append(lambda direction, env: self.wire.append((direction, env)))

    def publish(self, obj, name="svc"):
        self.callee.bind(name, obj)
        return self.conn.lookup(name)

    def sent_calls(self, method=None):
        return [env for d, env in self.wire
                if d == "send" and env.kind is pr.transport.Kind.CALL
                and (method is None or env.payload["method"] == method)]

    def close(self):
        self.caller.close()
        self.callee.close()


@pytest.fixture(params=["in_memory", "tcp"])
def transport(request):
    return request.param


@pytest.fixture
def make_pair():
    pairs = []

    def make(transport="in_memory", caller_mode="autonomous", callee_mode="autonomous"):
        pair = Pair(transport, caller_mode, callee_mode)
        pairs.append(pair)
        return pair

    yield make
    for pair in pairs:
        pair.close()
