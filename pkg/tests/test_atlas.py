import re

import numpy as np
import pytest

from cyclone import Branch, CyclicNetwork, DomainError, FormatError, Hill, classify_network
from cyclone.atlas import ERROR, SweepSpec, boundary_trace, emit, run_sweep, to_csv, to_svg

from conftest import random_network, repressilator, toggle

GAS = Branch.EVEN_MONOSTABLE_GAS.value
BIS = Branch.EVEN_BISTABLE.value
PER = Branch.EVEN_BISTABLE_PERIODIC_CANDIDATE.value
BOUNDARY = Branch.BOUNDARY.value


def _labelled_changes(table):
    """(alpha before, alpha after, branch before, branch after) ignoring Boundary cells."""
    rows = [r for r in table.rows if r.branch != BOUNDARY]
    return [(a.alpha[0], b.alpha[0], a.branch, b.branch) for a, b in zip(rows, rows[1:]) if a.branch != b.branch]


def test_sweep_spec_validation():
    with pytest.raises(DomainError):
        SweepSpec(toggle(), [(0,)], [(0.0, 4.0)], 10)
    with pytest.raises(DomainError):
        SweepSpec(toggle(), [(0,)], [(1.0, 4.0)], 1)
    with pytest.raises(DomainError):
        SweepSpec(toggle(), [(0,), (0,)], [(1.0, 4.0)] * 2, 10)
    with pytest.raises(DomainError):
        SweepSpec(toggle(), [(2,)], [(1.0, 4.0)], 10)
    with pytest.raises(DomainError):
        SweepSpec(toggle(), [(0,), (1,), ()], [(1.0, 4.0)] * 3, 10)


def test_toggle_diagonal_sweep():
    spec = SweepSpec(toggle(), [(0, 1)], [(1.0, 4.0)], 61)
    table = run_sweep(spec)
    assert len(table.rows) == 61
    (change,) = _labelled_changes(table)
    lo, hi, b_lo, b_hi = change
    assert (b_lo, b_hi) == (GAS, BIS)
    assert lo < 2.0 < hi
    # grid cells are consecutive apart from at most one Boundary cell on the onset itself
    values = list(spec.axis_values(0))
    assert values.index(hi) - values.index(lo) <= 2


def test_repressilator_diagonal_sweep():
    table = run_sweep(SweepSpec(repressilator(), [(0, 1, 2)], [(1.0, 4.0)], 61))
    (change,) = _labelled_changes(table)
    assert change[2:] == (Branch.ODD_STABLE.value, Branch.ODD_UNSTABLE_OSCILLATORY.value)
    assert change[0] < 2.0 < change[1]


def test_small_sensitivity_template_is_monostable_everywhere():
    net = CyclicNetwork([Hill(0.0, 1.0), Hill(0.5, 1.0)], [1.0, 1.0])
    assert net.d_value() == pytest.approx(0.5 / (1 + np.sqrt(0.5)) ** 2, rel=1e-12)
    table = run_sweep(SweepSpec(net, [(0,), (1,)], [(0.1, 50.0)] * 2, 15))
    assert {r.branch for r in table.rows} == {GAS}


@pytest.mark.parametrize("template,axis", [(toggle(), (0, 1)), (repressilator(), (0, 1, 2))])
def test_boundary_trace_onset(template, axis):
    spec = SweepSpec(template, [axis], [(1.0, 4.0)], 61)
    (tr,) = boundary_trace(spec)
    assert tr.alpha_low < 2.0 < tr.alpha_high
    assert abs(tr.alpha_low - 2.0) <= 1e-5 and abs(tr.alpha_high - 2.0) <= 1e-5
    assert (tr.alpha_high - tr.alpha_low) / tr.alpha_low <= 2e-6


def test_boundary_trace_without_transition():
    assert boundary_trace(SweepSpec(toggle(), [(0, 1)], [(0.2, 1.5)], 21)) == []
    with pytest.raises(DomainError):
        boundary_trace(SweepSpec(toggle(), [(0,), (1,)], [(1.0, 4.0)] * 2, 4))


def test_csv_rows():
    table = run_sweep(SweepSpec(toggle(), [(0, 1)], [(1.0, 4.0)], 61))
    text = to_csv(table).decode()
    lines = text.split("\n")
    assert lines[0] == "alpha_1,alpha_2,branch,p_mid,n_equilibria"
    assert text.endswith("\n") and "\r" not in text
    assert len(lines) - 2 == 61
    first = lines[1].split(",")
    assert float(first[0]) == 1.0 and first[2] == GAS and first[4] == "1"


@pytest.fixture(scope="module")
def toggle_plane():
    return run_sweep(SweepSpec(toggle(), [(0,), (1,)], [(0.5, 8.0)] * 2, 41))


def test_svg_heatmap(toggle_plane):
    svg = to_svg(toggle_plane).decode()
    assert len(re.findall(r"<rect\b", svg)) == 1681
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    for name in (GAS, BIS, BOUNDARY):
        assert name in svg
    assert emit(toggle_plane, "svg") == to_svg(toggle_plane)


def test_symmetric_toggle_plane(toggle_plane):
    grid = toggle_plane.branch_grid()
    assert np.array_equal(grid, grid.T)
    assert (grid == BIS).any() and (grid == GAS).any()


def test_periodic_cells_are_bistable():
    funcs = [Hill(100.0, 4.0)] + [Hill(0.0, 4.0)] * 4
    net = CyclicNetwork(funcs, [1.0] * 5)
    template = net.with_alpha(net.gamma_map([3.0, 3.0, 3.0, 3.0, 0.562]))
    table = run_sweep(SweepSpec(template, [(0,), (4,)], [(0.3 * template.alpha[0], 3 * template.alpha[0]),
                                                         (0.3 * template.alpha[4], 3 * template.alpha[4])], 9))
    branches = {r.branch for r in table.rows}
    assert PER in branches
    for r in table.rows:
        if r.branch == PER:
            assert r.n_equilibria == 3 and r.p_mid > 1.0


def test_gamma_round_trip_through_classifier(rng):
    for _ in range(100):
        net = random_network(rng, int(rng.integers(2, 7)))
        x = rng.uniform(1e-3, 3.0, size=net.d)
        rep = classify_network(net.with_alpha(net.gamma_map(x)))
        gap = min(np.max(np.abs(eq.x_bar - x) / x) for eq, _ in rep.equilibria)
        assert gap <= 1e-8


def test_errors_are_recorded_in_row(monkeypatch):
    import cyclone.atlas as atlas
    from cyclone.errors import SuspectCount

    def broken(net, tol=None, eps=None):
        raise SuspectCount("forced")

    monkeypatch.setattr(atlas, "classify_network", broken)
    table = run_sweep(SweepSpec(toggle(), [(0, 1)], [(1.0, 4.0)], 5))
    assert [r.branch for r in table.rows] == [ERROR] * 5


def test_sweep_is_deterministic_across_threads():
    spec = SweepSpec(toggle(), [(0,), (1,)], [(0.5, 8.0)] * 2, 15)
    a = to_csv(run_sweep(spec, threads=1))
    b = to_csv(run_sweep(spec, threads=4))
    assert a == b == to_csv(run_sweep(spec, threads=1))


def test_emit_rejects_bad_requests():
    table = run_sweep(SweepSpec(toggle(), [(0, 1)], [(1.0, 4.0)], 5))
    with pytest.raises(FormatError):
        to_svg(table)
    with pytest.raises(FormatError):
        emit(table, "png")
