"""Simulation of cyclic networks and detection of the attractor reached."""
from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from . import _rk
from .errors import DomainError
from .network import CyclicNetwork, Equilibrium, find_equilibria

CONVERGED = "ConvergedToEquilibrium"
PERIODIC = "PeriodicOrbit"
UNDETERMINED = "Undetermined"

DEFAULT_T_END = 200.0
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
BASIN_CHUNK = 64


def vector_field(net: CyclicNetwork, x) -> np.ndarray:
    """``alpha_i f_i(x_{i-1}) - x_i`` for a state or a batch of states."""
    return net.vector_field(x)


@dataclass
class Trajectory:
    """Accepted integrator steps, with derivatives for cubic interpolation."""

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    stats: dict
    x0: np.ndarray
    rtol: float
    atol: float

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def interpolate(self, t) -> np.ndarray:
        """State at time(s) ``t`` from the cubic Hermite interpolant."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        out = _rk.hermite(
            self.times[k, None], self.times[k + 1, None],
            self.states[k], self.states[k + 1], self.derivs[k], self.derivs[k + 1], t[:, None],
        )
        return out

    def to_csv(self) -> str:
        d = self.states.shape[1]
        buf = io.StringIO()
        buf.write(",".join(["t"] + [f"x{i + 1}" for i in range(d)]) + "\n")
        for t, row in zip(self.times, self.states):
            buf.write(",".join(format(float(v), ".17g") for v in (t, *row)) + "\n")
        return buf.getvalue()


def _rhs(net: CyclicNetwork):
    # stage values of the RK scheme may dip below zero by roundoff
    return lambda y: net._rhs(np.maximum(y, 0.0))


def integrate_many(
    net: CyclicNetwork,
    x0s,
    t_end: float = DEFAULT_T_END,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> list[Trajectory]:
    """Integrate from every row of ``x0s``; rows are independent."""
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    if x0s.shape[1] != net.d:
        raise DomainError(f"initial states need {net.d} components")
    if np.any(x0s < 0) or not np.all(np.isfinite(x0s)):
        raise DomainError("initial states must be finite and componentwise >= 0")
    if not t_end > 0:
        raise DomainError("t_end must be > 0")
    raw = _rk.integrate_batch(_rhs(net), x0s, t_end, rtol, atol)
    return [Trajectory(t, y, f, st, x0.copy(), rtol, atol) for (t, y, f, st), x0 in zip(raw, x0s)]


def integrate(
    net: CyclicNetwork,
    x0: Sequence[float],
    t_end: float = DEFAULT_T_END,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) solution of the network ODE from ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.d,):
        raise DomainError(f"x0 must have {net.d} components")
    return integrate_many(net, x0[None, :], t_end, rtol, atol)[0]


@dataclass(frozen=True)
class DetectOptions:
    transient: float = 50.0
    eq_radius: float = 1e-6
    tail_fraction: float = 0.1
    period_rtol: float = 1e-3
    min_returns: int = 5
    section_rtol: float = 1e-2
    min_amplitude: float = 1e-6
    section_coord: int = 0
    section_level: float | None = None  # None: midrange of the tail
    extend: bool = True

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class AttractorReport:
    kind: str
    transient_time: float
    equilibrium: np.ndarray | None = None
    equilibrium_index: int | None = None
    period: float | None = None
    amplitude: np.ndarray | None = None
    poincare_residual: float | None = None
    t_end: float = 0.0
    extended: bool = False
    trajectory: Trajectory | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        def arr(v):
            return None if v is None else [float(x) for x in v]

        return {
            "kind": self.kind,
            "transient_time": self.transient_time,
            "equilibrium": arr(self.equilibrium),
            "equilibrium_index": self.equilibrium_index,
            "period": self.period,
            "amplitude": arr(self.amplitude),
            "poincare_residual": self.poincare_residual,
            "t_end": self.t_end,
            "extended": self.extended,
        }


def _match_equilibrium(traj: Trajectory, equilibria: Sequence[Equilibrium], opts: DetectOptions):
    if not equilibria:
        return None
    t = traj.times
    tail = t >= t[-1] * (1.0 - opts.tail_fraction)
    for idx, eq in enumerate(equilibria):
        radius = opts.eq_radius * max(1.0, float(np.max(np.abs(eq.x_bar))))
        dist = np.max(np.abs(traj.states - eq.x_bar), axis=1)
        if np.all(dist[tail] <= radius):
            outside = np.nonzero(dist > radius)[0]
            t_in = 0.0 if outside.size == 0 else float(t[min(outside[-1] + 1, len(t) - 1)])
            return AttractorReport(CONVERGED, t_in, equilibrium=eq.x_bar.copy(), equilibrium_index=idx)
    return None


def _upward_crossings(traj: Trajectory, coord: int, level: float, t_from: float) -> np.ndarray:
    t, y, f = traj.times, traj.states, traj.derivs
    c = y[:, coord]
    idx = np.nonzero((c[:-1] < level) & (c[1:] >= level) & (t[:-1] >= t_from))[0]
    out = []
    for k in idx:
        def g(s, k=k):
            return float(_rk.hermite(t[k], t[k + 1], y[k, coord], y[k + 1, coord], f[k, coord], f[k + 1, coord], s)) - level

        a, b = float(t[k]), float(t[k + 1])
        ga, gb = g(a), g(b)
        if ga == 0.0:
            out.append(a)
        elif ga * gb > 0.0:
            out.append(b)
        else:
            out.append(brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return np.array(out)


def _match_periodic(traj: Trajectory, opts: DetectOptions):
    t = traj.times
    window = t >= opts.transient
    if np.count_nonzero(window) < 8:
        return None
    coord = opts.section_coord
    tail = traj.states[window]
    amp = tail.max(axis=0) - tail.min(axis=0)
    if amp[coord] <= opts.min_amplitude:
        return None
    level = opts.section_level
    if level is None:
        level = 0.5 * (tail[:, coord].max() + tail[:, coord].min())
    cross = _upward_crossings(traj, coord, level, opts.transient)
    if cross.size < opts.min_returns + 1:
        return None
    returns = np.diff(cross)
    last = returns[-1]
    run = 1
    while run < returns.size and abs(returns[-run - 1] - last) <= opts.period_rtol * last:
        run += 1
    trailing = returns[-run:]
    if run < opts.min_returns or (trailing.max() - trailing.min()) > opts.period_rtol * trailing.mean():
        return None
    section = traj.interpolate(cross[-run - 1:])
    residual = float(np.max(np.abs(section[-1] - section[-2])))
    if residual > opts.section_rtol * float(amp.max()):
        return None
    last_cycle = (t >= cross[-2]) & (t <= cross[-1])
    cyc = traj.states[last_cycle]
    amplitude = cyc.max(axis=0) - cyc.min(axis=0) if cyc.shape[0] > 1 else amp
    return AttractorReport(
        PERIODIC, float(cross[-run - 1]), period=float(trailing.mean()),
        amplitude=amplitude, poincare_residual=residual,
    )


def detect_attractor(
    net: CyclicNetwork,
    traj: Trajectory,
    equilibria: Sequence[Equilibrium] | None = None,
    opts: DetectOptions | None = None,
) -> AttractorReport:
    """Classify the long-time behaviour of ``traj``.

    Checks, in order: the tail stays within ``eq_radius`` of a known
    equilibrium; upward crossings of the section ``x_coord = level`` give at
    least ``min_returns`` return times agreeing to ``period_rtol``. If neither
    holds and ``opts.extend`` is set, the run is repeated once with doubled
    ``t_end`` before reporting ``Undetermined``.
    """
    opts = opts or DetectOptions()
    if equilibria is None:
        equilibria = find_equilibria(net)
    report = _match_equilibrium(traj, equilibria, opts) or _match_periodic(traj, opts)
    if report is None and opts.extend:
        longer = integrate(net, traj.x0, 2.0 * traj.t_end, traj.rtol, traj.atol)
        report = detect_attractor(net, longer, equilibria, replace(opts, extend=False))
        report.extended = True
        return report
    if report is None:
        report = AttractorReport(UNDETERMINED, math.nan)
    report.t_end = traj.t_end
    report.trajectory = traj
    return report


def simulate(
    net: CyclicNetwork,
    x0: Sequence[float],
    t_end: float = DEFAULT_T_END,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    opts: DetectOptions | None = None,
    equilibria: Sequence[Equilibrium] | None = None,
) -> AttractorReport:
    """Integrate from ``x0`` and detect the attractor in one call."""
    traj = integrate(net, x0, t_end, rtol, atol)
    return detect_attractor(net, traj, equilibria, opts)


@dataclass
class BasinStats:
    points: np.ndarray
    equilibrium_counts: list[int]
    periodic: int
    undetermined: int
    reports: list[AttractorReport] = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.reports)

    @property
    def undetermined_fraction(self) -> float:
        return self.undetermined / max(self.count, 1)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "equilibrium_counts": list(self.equilibrium_counts),
            "periodic": self.periodic,
            "undetermined": self.undetermined,
        }


def quasi_random_points(box: tuple[float, float], d: int, count: int, seed: int) -> np.ndarray:
    """``count`` scrambled-Halton points in ``[low, high]^d``."""
    low, high = float(box[0]), float(box[1])
    if not (0.0 <= low < high):
        raise DomainError(f"sampling box must satisfy 0 <= low < high, got {box}")
    if count < 1:
        raise DomainError("count must be >= 1")
    sampler = qmc.Halton(d=d, scramble=True, seed=seed)
    return low + (high - low) * sampler.random(count)


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CYCLONE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _classify_chunk(net, x0s, equilibria, t_end, rtol, atol, opts):
    trajs = integrate_many(net, x0s, t_end, rtol, atol)
    first = [detect_attractor(net, tr, equilibria, replace(opts, extend=False)) for tr in trajs]
    redo = [k for k, r in enumerate(first) if r.kind == UNDETERMINED]
    if redo and opts.extend:
        longer = integrate_many(net, x0s[redo], 2.0 * t_end, rtol, atol)
        for k, tr in zip(redo, longer):
            rep = detect_attractor(net, tr, equilibria, replace(opts, extend=False))
            rep.extended = True
            first[k] = rep
    for r in first:
        r.trajectory = None
    return first


def classify_initial_states(
    net: CyclicNetwork,
    x0s,
    equilibria: Sequence[Equilibrium] | None = None,
    t_end: float = DEFAULT_T_END,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    opts: DetectOptions | None = None,
    workers: int | None = None,
) -> list[AttractorReport]:
    """Attractor reports for many initial states, in input order.

    States are processed in fixed chunks of ``BASIN_CHUNK`` so results do not
    depend on the number of workers.
    """
    opts = opts or DetectOptions()
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    if equilibria is None:
        equilibria = find_equilibria(net)
    chunks = [x0s[i:i + BASIN_CHUNK] for i in range(0, len(x0s), BASIN_CHUNK)]
    job = lambda c: _classify_chunk(net, c, equilibria, t_end, rtol, atol, opts)  # noqa: E731
    nworkers = min(_worker_count(workers), len(chunks))
    if nworkers <= 1:
        parts = [job(c) for c in chunks]
    else:
        with ThreadPoolExecutor(nworkers) as pool:
            parts = list(pool.map(job, chunks))
    return [r for part in parts for r in part]


def sample_basins(
    net: CyclicNetwork,
    box: tuple[float, float],
    count: int,
    seed: int,
    equilibria: Sequence[Equilibrium] | None = None,
    t_end: float = DEFAULT_T_END,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    opts: DetectOptions | None = None,
    workers: int | None = None,
) -> BasinStats:
    """Tally attractors reached from quasi-random initial states in ``box``."""
    if equilibria is None:
        equilibria = find_equilibria(net)
    pts = quasi_random_points(box, net.d, count, seed)
    reports = classify_initial_states(net, pts, equilibria, t_end, rtol, atol, opts, workers)
    counts = [0] * len(equilibria)
    periodic = undetermined = 0
    for r in reports:
        if r.kind == CONVERGED:
            counts[r.equilibrium_index] += 1
        elif r.kind == PERIODIC:
            periodic += 1
        else:
            undetermined += 1
    return BasinStats(pts, counts, periodic, undetermined, reports)
