"""Jacobian spectra at equilibria and the network-level regime classifier.

Because the Jacobian is ``-I`` plus a weighted cyclic shift, its
characteristic polynomial is ``(-1)^d ((lam + 1)^d - p)`` and the spectrum is
the set of ``d``-th roots of the loop gain ``p`` shifted by ``-1``. Everything
here works from ``p`` alone; the dense matrix is only used for cross-checks.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath
import numpy as np

from .errors import ConsistencyError, DomainError
from .network import DEFAULT_TOL, CyclicNetwork, Equilibrium, find_equilibria


class Branch(str, enum.Enum):
    EVEN_MONOSTABLE_GAS = "EvenMonostableGAS"
    EVEN_BISTABLE = "EvenBistable"
    EVEN_BISTABLE_PERIODIC_CANDIDATE = "EvenBistablePeriodicCandidate"
    ODD_STABLE = "OddStable"
    ODD_UNSTABLE_OSCILLATORY = "OddUnstableOscillatory"
    BOUNDARY = "Boundary"

    def __str__(self) -> str:
        return self.value


def spectrum(p: float, d: int) -> np.ndarray:
    """Eigenvalues ``|p|^(1/d) exp(i theta_k) - 1`` of the cyclic Jacobian.

    ``theta_k = 2 pi k / d`` when ``p > 0`` and ``(2k + 1) pi / d`` when
    ``p < 0``. For ``p == 0`` all ``d`` eigenvalues equal ``-1``.
    """
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}")
    k = np.arange(d)
    if p == 0.0:
        return np.full(d, -1.0 + 0.0j)
    theta = (2.0 * k if p > 0 else 2.0 * k + 1.0) * math.pi / d
    radius = abs(p) ** (1.0 / d)
    return radius * np.cos(theta) - 1.0 + 1j * (radius * np.sin(theta))


def jacobian(net: CyclicNetwork, x) -> np.ndarray:
    return net.jacobian(x)


def default_eps(p: float, d: int) -> float:
    return 1e-9 * (1.0 + abs(p) ** (1.0 / d))


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    n_negative: int
    n_positive: int
    n_zero: int

    @property
    def hyperbolic(self) -> bool:
        return self.n_zero == 0

    @property
    def stable_dim(self) -> int:
        return self.n_negative

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "n_negative": self.n_negative,
            "n_positive": self.n_positive,
            "n_zero": self.n_zero,
            "hyperbolic": self.hyperbolic,
            "stable_dim": self.stable_dim,
        }


def classify_point(eq: Equilibrium | float, d: int, eps: float | None = None) -> SpectrumReport:
    """Count eigenvalues by the sign of their real part.

    ``eq`` may be an :class:`Equilibrium` or a bare loop gain ``p``. Real
    parts within ``eps`` of zero (default ``1e-9 (1 + |p|^(1/d))``) count as
    zero and make the point non-hyperbolic.
    """
    p = eq.p if isinstance(eq, Equilibrium) else float(eq)
    if eps is None:
        eps = default_eps(p, d)
    lam = spectrum(p, d)
    re = lam.real
    n_zero = int(np.sum(np.abs(re) <= eps))
    n_neg = int(np.sum(re < -eps))
    return SpectrumReport(lam, n_neg, d - n_neg - n_zero, n_zero)


class Thresholds(NamedTuple):
    t_odd: float
    t_even: float | None
    s_d: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "t_odd": self.t_odd if math.isfinite(self.t_odd) else None,
            "t_even": self.t_even,
            "s_d": list(self.s_d),
        }


def _sec_power(num: int, den: int, d: int) -> float:
    """Correctly rounded ``cos(pi num / den) ** -d``."""
    with mpmath.workdps(50):
        return float(mpmath.cos(mpmath.pi * num / den) ** (-d))


def _s_d_by_bracket(d: int) -> tuple[float, ...]:
    if d <= 8:
        return ()
    j = (d - 1) // 4  # d in [4j + 1, 4j + 4]
    return tuple(sorted(_sec_power(2 * k, d, d) for k in range(2, j + 1)))


def _s_d_by_counting(d: int) -> tuple[float, ...]:
    # p > 0 values putting a root with angle 2 pi k / d on the imaginary axis,
    # other than the k = 0 (p = 1) and k = 1 (t_even) crossings
    values = set()
    for k in range(2, d // 2 + 1):
        if 4 * k < d:  # cos(2 pi k / d) > 0
            values.add(_sec_power(2 * k, d, d))
    return tuple(sorted(values))


def thresholds(d: int) -> Thresholds:
    """Stability thresholds for a ``d``-species loop.

    ``t_odd = sec(pi/d)^d`` (``inf`` for ``d = 2``), ``t_even =
    sec(2 pi/d)^d`` for ``d >= 5``, and ``s_d`` the exceptional loop gains
    where a further conjugate pair sits on the imaginary axis.
    """
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise DomainError(f"d must be an integer >= 2, got {d!r}")
    d = int(d)
    t_odd = math.inf if d == 2 else _sec_power(1, d, d)
    t_even = _sec_power(2, d, d) if d >= 5 else None
    s_bracket = _s_d_by_bracket(d) if d >= 5 else ()
    s_count = _s_d_by_counting(d) if d >= 5 else ()
    if s_bracket != s_count:
        raise ConsistencyError(f"exceptional set mismatch for d={d}: {s_bracket} vs {s_count}")
    return Thresholds(t_odd, t_even, s_bracket)


@dataclass
class RegimeReport:
    branch: Branch
    d: int
    n: int
    D: float
    equilibria: list = field(default_factory=list)
    thresholds: Thresholds | None = None
    reason: str = ""

    @property
    def middle(self) -> Equilibrium | None:
        if len(self.equilibria) == 3:
            return self.equilibria[1][0]
        if len(self.equilibria) == 1:
            return self.equilibria[0][0]
        return None

    def to_dict(self) -> dict:
        return {
            "branch": self.branch.value,
            "d": self.d,
            "n": self.n,
            "parity": "even" if self.n % 2 == 0 else "odd",
            "D": self.D,
            "thresholds": self.thresholds.to_dict() if self.thresholds else None,
            "reason": self.reason,
            "equilibria": [{**eq.to_dict(), "spectrum": sp.to_dict()} for eq, sp in self.equilibria],
        }


def classify_network(net: CyclicNetwork, tol: float = DEFAULT_TOL, eps: float | None = None) -> RegimeReport:
    """Classify ``net`` at its current ``alpha`` by loop parity and equilibrium gains."""
    d, n = net.d, net.n
    th = thresholds(d)
    eqs = find_equilibria(net, tol=tol)
    pairs = [(e, classify_point(e, d, eps)) for e in eqs]
    report = RegimeReport(Branch.BOUNDARY, d, n, net.d_value(), pairs, th)

    if any(e.degenerate for e in eqs) or any(not sp.hyperbolic for _, sp in pairs):
        report.reason = "non-hyperbolic or degenerate equilibrium"
        return report

    if n % 2 == 0:
        if len(eqs) == 1 and eqs[0].p < 1.0:
            report.branch = Branch.EVEN_MONOSTABLE_GAS
        elif len(eqs) == 3:
            p_mid = eqs[1].p
            if not (p_mid > 1.0 and eqs[0].p < 1.0 and eqs[2].p < 1.0):
                report.reason = "three equilibria without the expected gain ordering"
            elif th.t_even is None or p_mid < th.t_even:
                report.branch = Branch.EVEN_BISTABLE
            elif p_mid > th.t_even and p_mid not in th.s_d:
                report.branch = Branch.EVEN_BISTABLE_PERIODIC_CANDIDATE
        else:
            report.reason = f"{len(eqs)} equilibria"
        return report

    if len(eqs) != 1:
        report.reason = f"odd loop with {len(eqs)} equilibria"
        return report
    if abs(eqs[0].p) < th.t_odd:
        report.branch = Branch.ODD_STABLE
    elif abs(eqs[0].p) > th.t_odd:
        report.branch = Branch.ODD_UNSTABLE_OSCILLATORY
    return report
