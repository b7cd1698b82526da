import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from swarmsplit.channel import RadioParams, rate_matrix
from swarmsplit.cnn_profile import CnnProfile, LayerSpec, builtin_lenet
from swarmsplit.ilp_core import make_scenario

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True)
settings.load_profile("default")


def tiny_profile(mem=(10, 20, 30), flops=(5, 5, 5), out=(100, 200, 1), input_bytes=1000):
    layers = [LayerSpec(j + 1, f"l{j + 1}", m, f, o) for j, (m, f, o) in enumerate(zip(mem, flops, out))]
    return CnnProfile("tiny", tuple(layers), input_bytes)


@pytest.fixture
def lenet():
    return builtin_lenet()


@pytest.fixture
def line_positions():
    return np.array([[0.0, 0.0, 50.0], [30.0, 0.0, 50.0], [60.0, 0.0, 50.0], [0.0, 40.0, 50.0]])


@pytest.fixture
def line_scenario(line_positions):
    """Four UAVs, the tiny 3-layer model, budgets that force one split."""
    rates = rate_matrix(line_positions, RadioParams())
    return make_scenario(tiny_profile(), rates, (0,), mem_budget=40, compute_rate=100.0)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call ``record(number, title, detail)`` before asserting."""
    entry = {}

    def record(number, title, detail=""):
        entry.update(number=number, title=title, detail=detail)

    yield record
    if entry:
        rep = getattr(request.node, "rep_call", None)
        entry["passed"] = bool(rep and rep.passed)
        ACCEPTANCE[entry["number"]] = entry


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        e = ACCEPTANCE[number]
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {e['title']}  {e['detail']}".rstrip())
