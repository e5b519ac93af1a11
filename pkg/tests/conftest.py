import numpy as np
import pytest

from cyclone import Affine, CyclicNetwork, Hill


def random_stage(rng, allow_affine=True, decreasing=None):
    """A random admissible regulation; ``decreasing`` forces the monotone sign."""
    if decreasing is None:
        decreasing = rng.random() < 0.5
    if decreasing:
        lam = 0.0 if rng.random() < 0.5 else rng.uniform(0.0, 0.8)
        return Hill(lam, rng.uniform(1.0, 5.0))
    if allow_affine and rng.random() < 0.25:
        return Affine(rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0))
    return Hill(rng.uniform(1.5, 10.0), rng.uniform(1.0, 5.0))


def random_network(rng, d, parity=None, alpha_range=(0.2, 5.0), allow_affine=True):
    """Random network with at least one bounded and one strictly convex stage."""
    while True:
        funcs = [random_stage(rng, allow_affine) for _ in range(d)]
        n = sum(1 for f in funcs if not f.increasing)
        if parity is not None and n % 2 != parity:
            k = int(rng.integers(d))
            funcs[k] = random_stage(rng, allow_affine, decreasing=funcs[k].increasing)
        if not any(isinstance(f, Hill) and f.r > 1.0 for f in funcs):
            continue
        alpha = rng.uniform(*alpha_range, size=d)
        return CyclicNetwork(funcs, alpha)


def toggle(alpha=(3.0, 3.0), r=2.0):
    return CyclicNetwork([Hill(0.0, r)] * 2, list(alpha))


def repressilator(alpha=(3.0, 3.0, 3.0), r=4.0):
    return CyclicNetwork([Hill(0.0, r)] * 3, list(alpha))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call the returned function with a summary string after computing the
    measurements; the line is marked PASS only if the test body completes.
    """
    state = {}

    def record(summary):
        state["summary"] = summary

    yield record
    failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
    line = f"{request.node.name}: {'FAIL' if failed else 'PASS'}  {state.get('summary', '')}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
