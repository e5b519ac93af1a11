import math

import numpy as np
import pytest

from cyclone import Affine, CyclicNetwork, DomainError, Hill, find_equilibria
from cyclone import _rk
from cyclone.dynamics import (
    CONVERGED,
    PERIODIC,
    DetectOptions,
    classify_initial_states,
    detect_attractor,
    integrate,
    integrate_many,
    quasi_random_points,
    sample_basins,
    simulate,
    vector_field,
)

from conftest import random_network, repressilator, toggle

REPRESSILATOR_X0 = (0.9, 1.3, 0.7)


def test_vector_field_examples(rng):
    assert np.array_equal(vector_field(toggle((1.0, 1.0), r=1.0), [0.0, 0.0]), [1.0, 1.0])
    assert np.allclose(vector_field(repressilator(), [1.0, 1.0, 1.0]), [0.5, 0.5, 0.5], rtol=1e-15)
    for _ in range(10):
        net = random_network(rng, int(rng.integers(2, 8)))
        for eq in find_equilibria(net):
            assert np.max(np.abs(vector_field(net, eq.x_bar))) <= 1e-10 * max(1.0, np.max(eq.x_bar))


def test_integrate_examples():
    tr = integrate(toggle((1.0, 1.0), r=1.0), [0.0, 0.0], 30.0)
    assert tr.final == pytest.approx([(math.sqrt(5) - 1) / 2] * 2, abs=1e-6)
    assert tr.t_end == 30.0

    tr = integrate(repressilator(), REPRESSILATOR_X0, 200.0)
    tail = tr.interpolate(np.linspace(150.0, 200.0, 2001))
    assert np.all(tail.max(axis=0) - tail.min(axis=0) > 0.5)


def test_mixed_sign_two_stage_loop_settles():
    net = CyclicNetwork([Hill(0.0, 1.0), Affine(1.0, 1.0)], [1.0, 1.0])
    tr = integrate(net, [5.0, 5.0], 60.0)
    (eq,) = find_equilibria(net)
    assert tr.final == pytest.approx(eq.x_bar, abs=1e-7)
    # distance decays monotonically until it reaches the integrator's accuracy floor
    dist = np.max(np.abs(tr.states - eq.x_bar), axis=1)
    late = dist[(tr.times > 10.0) & (dist > 1e-6)]
    assert late.size > 5
    assert np.all(np.diff(late) < 0.0)


def test_integrate_rejects_bad_input():
    with pytest.raises(DomainError):
        integrate(toggle(), [-1.0, 1.0], 10.0)
    with pytest.raises(DomainError):
        integrate(toggle(), [1.0, 1.0, 1.0], 10.0)
    with pytest.raises(DomainError):
        integrate(toggle(), [1.0, 1.0], 0.0)


def test_dormand_prince_order_on_linear_decay():
    # y' = -y + c with exact y(t) = c + (y0 - c) e^{-t}
    c, y0, t_end = 2.0, 5.0, 2.0
    fun = lambda y: -y + c  # noqa: E731
    errors = []
    for steps in (8, 16, 32, 64):
        h = t_end / steps
        y = np.array([[y0]])
        f = fun(y)
        for _ in range(steps):
            y, f, _ = _rk.dopri_step(fun, y, f, h)
        errors.append(abs(y[0, 0] - (c + (y0 - c) * math.exp(-t_end))))
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert min(orders) >= 4.0


def test_hermite_interpolant_is_cubic_exact():
    p = lambda t: 1 + 2 * t - t**2 + 0.5 * t**3  # noqa: E731
    dp = lambda t: 2 - 2 * t + 1.5 * t**2  # noqa: E731
    t = np.linspace(0.3, 1.1, 9)
    assert np.allclose(_rk.hermite(0.3, 1.1, p(0.3), p(1.1), dp(0.3), dp(1.1), t), p(t), rtol=1e-14)


def test_positivity_and_absorbing_box(rng):
    for _ in range(10):
        net = random_network(rng, int(rng.integers(2, 7)))
        bounds = net.stage_bounds()
        x0s = rng.uniform(0.0, 10.0, size=(4, net.d))
        for tr in integrate_many(net, x0s, 80.0):
            assert np.all(tr.states >= 0.0)
            bounded = np.array([f.bounded for f in net.functions])
            inside = np.all(tr.states[:, bounded] <= bounds[bounded] + 1e-6, axis=1)
            # from some recorded time onward every bounded-stage coordinate stays in the box
            assert inside[-1]
            first_out = np.nonzero(~inside)[0]
            t_star = tr.times[first_out[-1] + 1] if first_out.size else 0.0
            assert t_star < tr.t_end


def test_batch_rows_match_single_runs():
    net = repressilator()
    x0s = np.array([REPRESSILATOR_X0, (2.0, 0.1, 0.4), (0.0, 0.0, 3.0)])
    batch = integrate_many(net, x0s, 40.0)
    for x0, tr in zip(x0s, batch):
        alone = integrate(net, x0, 40.0)
        assert np.array_equal(alone.times, tr.times)
        assert np.array_equal(alone.states, tr.states)


def test_trajectory_csv():
    tr = integrate(toggle(), [0.5, 1.0], 5.0)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x1,x2"
    assert len(lines) == len(tr.times) + 1
    assert [float(v) for v in lines[-1].split(",")] == [tr.t_end, *tr.final]


def test_detect_examples():
    net = toggle((3.0, 3.0))
    eqs = find_equilibria(net)
    rep = simulate(net, [0.1, 3.0], equilibria=eqs)
    assert rep.kind == CONVERGED
    hit = eqs[rep.equilibrium_index]
    assert hit.p < 1.0 and hit.x_bar[1] > hit.x_bar[0]

    rep = simulate(repressilator(), REPRESSILATOR_X0)
    assert rep.kind == PERIODIC and rep.period > 0
    assert np.max(rep.amplitude) > 1e-6

    (eq,) = find_equilibria(repressilator())
    rep = simulate(repressilator(), eq.x_bar, t_end=100.0)
    assert rep.kind == CONVERGED and rep.transient_time == 0.0


def test_period_stable_across_tolerances():
    periods = [simulate(repressilator(), REPRESSILATOR_X0, rtol=rtol, atol=rtol * 1e-2).period for rtol in (1e-8, 1e-10)]
    assert periods[0] == pytest.approx(periods[1], rel=1e-3)


def test_period_independent_of_section():
    net = repressilator()
    tr = integrate(net, REPRESSILATOR_X0, 300.0)
    tail = tr.interpolate(np.linspace(150.0, 300.0, 3001))
    lo, hi = tail.min(axis=0), tail.max(axis=0)
    periods = []
    for coord in range(3):
        for frac in (0.3, 0.5, 0.7):
            opts = DetectOptions(section_coord=coord, section_level=float(lo[coord] + frac * (hi[coord] - lo[coord])))
            rep = detect_attractor(net, tr, opts=opts)
            assert rep.kind == PERIODIC
            periods.append(rep.period)
    assert (max(periods) - min(periods)) / min(periods) <= 1e-3


def test_even_loops_do_not_oscillate(rng):
    for _ in range(8):
        net = random_network(rng, int(rng.integers(2, 7)), parity=0)
        x = rng.uniform(0.3, 3.0, size=net.d)
        if net.g_value(x) > 1.0:
            net = net.with_alpha(net.gamma_map(x))
        x0s = rng.uniform(0.0, 5.0, size=(5, net.d))
        reports = classify_initial_states(net, x0s, workers=1)
        assert all(r.kind != PERIODIC for r in reports)


def test_quasi_random_points():
    pts = quasi_random_points((0.0, 4.0), 3, 100, seed=7)
    assert pts.shape == (100, 3)
    assert np.all((pts >= 0.0) & (pts <= 4.0))
    assert np.array_equal(pts, quasi_random_points((0.0, 4.0), 3, 100, seed=7))
    assert not np.array_equal(pts, quasi_random_points((0.0, 4.0), 3, 100, seed=8))
    with pytest.raises(DomainError):
        quasi_random_points((-1.0, 4.0), 3, 10, seed=0)


def test_basin_examples():
    stats = sample_basins(toggle((1.0, 1.0)), (0.0, 4.0), 100, seed=7)
    assert stats.equilibrium_counts == [100]

    stats = sample_basins(repressilator(), (0.0, 4.0), 100, seed=7)
    assert stats.periodic >= 99


@pytest.mark.slow
def test_toggle_basins_split_between_stable_states():
    stats = sample_basins(toggle((3.0, 3.0)), (0.0, 4.0), 400, seed=7)
    low, mid, high = stats.equilibrium_counts
    assert low > 0 and high > 0 and mid == 0
    assert stats.periodic == 0 and stats.undetermined == 0


def test_basins_do_not_depend_on_worker_count():
    net = toggle((3.0, 3.0))
    a = sample_basins(net, (0.0, 4.0), 150, seed=3, workers=1)
    b = sample_basins(net, (0.0, 4.0), 150, seed=3, workers=4)
    assert a.to_dict() == b.to_dict()
    assert [r.equilibrium_index for r in a.reports] == [r.equilibrium_index for r in b.reports]
