"""Cyclic feedback networks and their equilibria.

The system is ``dx_i/dt = alpha_i f_i(x_{i-1}) - x_i`` with ``x_0 = x_d``.
Equilibria are in bijection with the fixed points of the composed map
``F(t) = alpha_d f_d(... alpha_1 f_1(t))``, and ``F'`` at a fixed point is the
loop gain ``p = prod_i alpha_i f_i'(x_{i-1})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import regulation as reg
from ._numerics import bisect_sign_change, golden_section_max
from .errors import ConvergenceFailure, DomainError, SuspectCount

DEFAULT_TOL = 1e-12
GRID_POINTS = 4096
BOUND_MARGIN = 1.01


def prev_index(i: int, d: int) -> int:
    """Index of the species regulating species ``i`` (0-based, cyclic)."""
    return (i - 1) % d


@dataclass(frozen=True, eq=False)
class CyclicNetwork:
    """A ``d``-species cyclic feedback loop.

    Parameters
    ----------
    functions : sequence of Regulation
        ``functions[i]`` is the regulation of species ``i`` by species
        ``i - 1`` (cyclically, so ``functions[0]`` reads the last species).
    alpha : sequence of float
        Positive production rates, one per species.
    """

    functions: tuple
    alpha: np.ndarray
    _prev: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        funcs = tuple(self.functions)
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        alpha.setflags(write=False)
        d = len(funcs)
        if d < 2:
            raise DomainError(f"a cyclic network needs d >= 2 species, got {d}")
        if alpha.shape != (d,):
            raise DomainError(f"alpha has {alpha.size} entries but there are {d} functions")
        if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0.0):
            raise DomainError(f"alpha entries must be finite and > 0, got {alpha.tolist()}")
        for k, f in enumerate(funcs):
            if not isinstance(f, reg.Regulation):
                raise DomainError(f"functions[{k}] is not a regulation function: {f!r}")
        if not any(f.bounded for f in funcs):
            raise DomainError("at least one regulation function must be bounded")
        prev = np.array([prev_index(i, d) for i in range(d)])
        prev.setflags(write=False)
        object.__setattr__(self, "functions", funcs)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "_prev", prev)

    @property
    def d(self) -> int:
        return len(self.functions)

    @property
    def n(self) -> int:
        """Number of decreasing regulations."""
        return sum(1 for f in self.functions if not f.increasing)

    @property
    def parity(self) -> str:
        return "even" if self.n % 2 == 0 else "odd"

    def with_alpha(self, alpha: Sequence[float]) -> "CyclicNetwork":
        return CyclicNetwork(self.functions, alpha)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "functions": [f.to_dict() for f in self.functions],
            "alpha": [float(a) for a in self.alpha],
        }

    # -- composed map -----------------------------------------------------

    def composed_map(self, t):
        """``F(t) = alpha_d f_d(... alpha_1 f_1(t))``; vectorised over ``t``."""
        y = np.asarray(t, dtype=float)
        if np.any(y < 0):
            raise DomainError("composed map is defined for t >= 0")
        for a, f in zip(self.alpha, self.functions):
            y = a * f._value(y)
        return y

    def composed_derivative(self, t):
        """Chain-rule derivative ``F'(t)``; vectorised over ``t``."""
        y = np.asarray(t, dtype=float)
        out = np.ones_like(y)
        for a, f in zip(self.alpha, self.functions):
            out = out * (a * f._prime(y))
            y = a * f._value(y)
        return out

    def lift(self, x_d: float) -> np.ndarray:
        """Cascade ``x_1 = alpha_1 f_1(x_d)``, ``x_i = alpha_i f_i(x_{i-1})``."""
        if x_d < 0:
            raise DomainError("lift requires x_d >= 0")
        x = np.empty(self.d)
        y = float(x_d)
        for i, (a, f) in enumerate(zip(self.alpha, self.functions)):
            y = float(a * f._value(y))
            x[i] = y
        return x

    def stage_bounds(self) -> np.ndarray:
        """Upper bounds ``U_i`` with ``x_i(t) <= U_i`` on the absorbing set.

        Bounds are propagated around the loop twice so every stage that is
        downstream of a bounded regulation receives a finite cap.
        """
        d = self.d
        upper = np.full(d, math.inf)
        for _ in range(2):
            for i, (a, f) in enumerate(zip(self.alpha, self.functions)):
                upper[i] = a * f.sup_on(upper[prev_index(i, d)])
        return upper

    def search_bound(self) -> tuple[float, bool]:
        """Bound ``B`` with every fixed point of ``F`` in ``[0, B]``.

        Returns ``(B, loose)``; ``loose`` flags that an affine stage sits after
        the last bounded stage, which can inflate ``B``.
        """
        hi = math.inf
        for a, f in zip(self.alpha, self.functions):
            hi = a * f.sup_on(hi)
        last_bounded = max(i for i, f in enumerate(self.functions) if f.bounded)
        loose = any(not f.bounded for f in self.functions[last_bounded + 1:])
        return BOUND_MARGIN * hi, loose

    # -- diagnostic quantities ---------------------------------------------

    def _check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise DomainError(f"state has {x.shape[-1]} components, network has d = {self.d}")
        if np.any(x < 0):
            raise DomainError("states must be componentwise >= 0")
        return x

    def stage_gains(self, x) -> np.ndarray:
        """``alpha_i f_i'(x_{i-1})`` for each stage (the Jacobian's cyclic entries)."""
        x = self._check_state(x)
        return np.array([a * f._prime(x[..., j]) for a, f, j in zip(self.alpha, self.functions, self._prev)])

    def p_value(self, x) -> float:
        """Loop gain ``p = prod_i alpha_i f_i'(x_{i-1})``."""
        return float(np.prod(self.stage_gains(x)))

    def gamma_map(self, x) -> np.ndarray:
        """The unique ``alpha`` making ``x`` an equilibrium: ``x_i / f_i(x_{i-1})``."""
        x = self._check_state(x)
        if np.any(x <= 0):
            raise DomainError("gamma map needs strictly positive coordinates")
        return np.array([x[i] / float(f._value(x[j])) for i, (f, j) in enumerate(zip(self.functions, self._prev))])

    def g_value(self, x) -> float:
        """``G(x) = prod_i x_{i-1} f_i'(x_{i-1}) / f_i(x_{i-1})``.

        Equals ``p_value(x)`` for the network with ``alpha = gamma_map(x)``.
        """
        x = self._check_state(x)
        if np.any(x <= 0):
            raise DomainError("G needs strictly positive coordinates")
        out = 1.0
        for f, j in zip(self.functions, self._prev):
            xj = x[j]
            out *= xj * float(f._prime(xj)) / float(f._value(xj))
        return out

    def d_value(self) -> float:
        """``D = prod_k sup_{x>0} |x f_k'(x) / f_k(x)|``."""
        return float(math.prod(f.log_sensitivity_sup() for f in self.functions))

    def jacobian(self, x) -> np.ndarray:
        """Dense Jacobian: ``-1`` on the diagonal, ``alpha_i f_i'(x_{i-1})`` at ``(i, i-1)``."""
        gains = self.stage_gains(x)
        m = -np.eye(self.d)
        for i, j in enumerate(self._prev):
            m[i, j] += gains[i]
        return m

    def vector_field(self, x) -> np.ndarray:
        """Right-hand side ``alpha_i f_i(x_{i-1}) - x_i``; ``x`` may be batched ``(..., d)``."""
        x = self._check_state(x)
        return self._rhs(x)

    def _rhs(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        for i, (a, f, j) in enumerate(zip(self.alpha, self.functions, self._prev)):
            out[..., i] = a * f._value(x[..., j]) - x[..., i]
        return out


@dataclass(frozen=True)
class Equilibrium:
    """An equilibrium with its loop gain ``p`` and ``G`` value."""

    x_bar: np.ndarray
    p: float
    g: float
    residual: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "x_bar": [float(v) for v in self.x_bar],
            "p": self.p,
            "g": self.g,
            "residual": self.residual,
            "degenerate": self.degenerate,
        }


def _scalar(fun):
    return lambda t: float(fun(t))


def _critical_points(net: CyclicNetwork, hi: float, g) -> list[float]:
    """Points where ``F' = 1`` (plus the peak of ``F'``) for an increasing ``F``.

    Between consecutive critical points ``F(t) - t`` is monotone, so adding
    them to the scan grid guarantees every crossing is bracketed. Relies on
    ``|F'|`` being unimodal, which gamma^(1/2)-convexity of ``F`` provides.
    """
    deriv = _scalar(net.composed_derivative)
    peak, peak_val = golden_section_max(deriv, 0.0, hi, width=1e-12 * max(hi, 1.0))
    points = [peak]
    if peak_val > 1.0:
        h = lambda t: deriv(t) - 1.0  # noqa: E731
        if peak > 0.0 and h(0.0) < 0.0:
            points.append(bisect_sign_change(h, 0.0, peak, h(0.0), h(peak))[0])
        if peak < hi and h(hi) < 0.0:
            points.append(bisect_sign_change(h, peak, hi, h(peak), h(hi))[0])
    return points


def find_equilibria(net: CyclicNetwork, tol: float = DEFAULT_TOL, grid_points: int = GRID_POINTS) -> list[Equilibrium]:
    """All equilibria of ``net``, sorted by the last coordinate.

    Fixed points of the composed map are bracketed on a uniform grid over
    ``[0, B]`` (augmented with the critical points of ``F(t) - t``), refined
    by bisection, and polished with one Newton step.

    Raises
    ------
    ConvergenceFailure
        If a bracketed root cannot be refined to ``|F(t) - t| <= tol * max(1, t)``.
    SuspectCount
        If more than three crossings are found.
    """
    hi, _ = net.search_bound()
    fmap = _scalar(net.composed_map)
    g = lambda t: fmap(t) - t  # noqa: E731

    grid = np.linspace(0.0, hi, grid_points)
    extra = _critical_points(net, hi, g) if net.n % 2 == 0 else []
    ts = np.unique(np.concatenate([grid, np.asarray(extra, dtype=float)]))
    gs = net.composed_map(ts) - ts

    roots: list[tuple[float, bool]] = []
    for k in np.nonzero(gs == 0.0)[0]:
        roots.append((float(ts[k]), False))
    pos = gs > 0.0
    neg = gs < 0.0
    crossings = np.nonzero((pos[:-1] & neg[1:]) | (neg[:-1] & pos[1:]))[0]
    if len(crossings) + len(roots) > 3:
        raise SuspectCount(f"{len(crossings) + len(roots)} fixed-point crossings found; at most 3 expected")

    deriv = _scalar(net.composed_derivative)
    for k in crossings:
        a, b = float(ts[k]), float(ts[k + 1])
        t, gt = bisect_sign_change(g, a, b, float(gs[k]), float(gs[k + 1]))
        slope = deriv(t) - 1.0
        if slope != 0.0:
            t_new = t - gt / slope
            if a <= t_new <= b and abs(g(t_new)) < abs(gt):
                t, gt = t_new, g(t_new)
        if abs(gt) > tol * max(1.0, t):
            raise ConvergenceFailure(f"fixed point near t = {t:.17g} has residual {abs(gt):.3g} > tol")
        roots.append((t, False))

    # tangential (double) roots never change sign; they sit at critical points
    for c in extra:
        k = int(np.searchsorted(ts, c))
        left, right = gs[max(k - 1, 0)], gs[min(k + 1, len(ts) - 1)]
        if left * right <= 0.0:
            continue  # a crossing through this neighbourhood is already bracketed
        gc = g(c)
        if abs(gc) <= tol * max(1.0, c) and abs(deriv(c) - 1.0) <= 1e-6:
            roots.append((c, True))

    roots.sort()
    merged: list[tuple[float, bool]] = []
    for t, degen in roots:
        if merged and t - merged[-1][0] <= 10.0 * tol * max(1.0, t):
            merged[-1] = (merged[-1][0], True)
        else:
            merged.append((t, degen))
    if len(merged) > 3:
        raise SuspectCount(f"{len(merged)} fixed points found; at most 3 expected")

    out = []
    for t, degen in merged:
        x = net.lift(t)
        p = net.p_value(x)
        residual = float(np.max(np.abs(net._rhs(x))))
        out.append(Equilibrium(x_bar=x, p=p, g=net.g_value(x), residual=residual, degenerate=degen))
    out.sort(key=lambda e: e.x_bar[-1])
    return out


def from_dict(data: dict) -> CyclicNetwork:
    """Build a network from its JSON description ``{d, functions, alpha}``."""
    if not isinstance(data, dict):
        raise DomainError("network spec must be a JSON object")
    for key in ("d", "functions", "alpha"):
        if key not in data:
            raise DomainError(f"network spec is missing field {key!r}")
    d = data["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise DomainError(f"field 'd' must be an integer >= 2, got {d!r}")
    funcs = data["functions"]
    alpha = data["alpha"]
    if not isinstance(funcs, list) or len(funcs) != d:
        raise DomainError(f"field 'functions' must be a list of length d = {d}")
    if not isinstance(alpha, list) or len(alpha) != d:
        raise DomainError(f"field 'alpha' must be a list of length d = {d}")
    try:
        alpha = [float(a) for a in alpha]
    except (TypeError, ValueError):
        raise DomainError("field 'alpha' must contain numbers") from None
    if any(not a > 0 for a in alpha):
        raise DomainError("field 'alpha' entries must all be > 0")
    parsed = []
    for k, spec in enumerate(funcs):
        try:
            parsed.append(reg.from_dict(spec))
        except DomainError as exc:
            raise DomainError(f"functions[{k}]: {exc}") from None
    return CyclicNetwork(parsed, alpha)
