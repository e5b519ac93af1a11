"""Monotone regulation functions and their gamma^(1/2)-convexity certificates.

A regulation ``f`` maps a non-negative concentration to a strictly positive
production rate. Three families are supported:

* :class:`Hill` -- ``(1 + lam * x**r) / (1 + x**r)``, increasing when
  ``lam > 1`` and decreasing when ``lam < 1``;
* :class:`Affine` -- ``a * x + b`` with ``a, b > 0`` (always increasing,
  unbounded);
* :class:`ShiftedHill` -- ``x -> hill(x + shift)``.

All evaluation methods accept floats or numpy arrays. Derivatives are closed
form up to order three, which is what the Schwarzian needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, SingularityError

ArrayLike = Union[float, np.ndarray]

#: |f'| below this is treated as zero when forming f''/f' and f'''/f'.
DERIVATIVE_FLOOR = 1e-290

STRICTLY_CONVEX = "strictly_convex"
CONVEX = "convex"
VIOLATED = "violated"


def _check_domain(x: ArrayLike) -> None:
    if np.any(np.asarray(x) < 0):
        raise DomainError(f"regulation functions are defined on x >= 0, got {x!r}")


def _power_term(coef: float, x: np.ndarray, expo: float) -> np.ndarray:
    # coef * x**expo with the convention 0 * x**(negative) == 0 at x == 0
    if coef == 0.0:
        return np.zeros_like(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return coef * np.power(x, expo)


class Regulation:
    """Common interface; concrete families are frozen dataclasses below."""

    kind: str = "abstract"

    @property
    def sign(self) -> int:
        """+1 for an increasing regulation, -1 for a decreasing one."""
        raise NotImplementedError

    @property
    def increasing(self) -> bool:
        return self.sign > 0

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup)

    @property
    def sup(self) -> float:
        """Supremum of f over [0, inf)."""
        raise NotImplementedError

    def __call__(self, x: ArrayLike) -> ArrayLike:
        _check_domain(x)
        return self._value(x)

    def derivatives(self, x: ArrayLike) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
        """Return ``(f', f'', f''')`` evaluated at ``x``."""
        _check_domain(x)
        return self._derivatives(x)

    def prime(self, x: ArrayLike) -> ArrayLike:
        _check_domain(x)
        return self._prime(x)

    def sup_on(self, hi: float) -> float:
        """Supremum of f over ``[0, hi]`` (``hi`` may be infinite)."""
        if self.increasing:
            return self.sup if math.isinf(hi) else float(self._value(hi))
        return float(self._value(0.0))

    def log_sensitivity_sup(self) -> float:
        """``sup_{x>0} |x f'(x) / f(x)|``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # unchecked fast paths used by the network and the integrator
    def _value(self, x):
        raise NotImplementedError

    def _prime(self, x):
        return self._derivatives(x)[0]

    def _derivatives(self, x):
        raise NotImplementedError


def _hill_parts(lam: float, r: float, x):
    """Value and first three derivatives of (1 + lam x^r)/(1 + x^r)."""
    x = np.asarray(x, dtype=float)
    u = np.power(x, r)
    u1 = _power_term(r, x, r - 1.0)
    u2 = _power_term(r * (r - 1.0), x, r - 2.0)
    u3 = _power_term(r * (r - 1.0) * (r - 2.0), x, r - 3.0)
    q = 1.0 / (1.0 + u)
    # h = 1/(1+u); derivatives of h w.r.t. u are -q^2, 2q^3, -6q^4
    g1, g2, g3 = -q * q, 2.0 * q**3, -6.0 * q**4
    with np.errstate(invalid="ignore"):
        h1 = g1 * u1
        h2 = g2 * u1 * u1 + g1 * u2
        h3 = g3 * u1**3 + 3.0 * g2 * u1 * u2 + g1 * u3
    c = 1.0 - lam
    val = lam + c * q
    return val, c * h1, c * h2, c * h3


def _hill_prime(lam: float, r: float, x):
    x = np.asarray(x, dtype=float)
    u = np.power(x, r)
    u1 = _power_term(r, x, r - 1.0)
    q = 1.0 / (1.0 + u)
    return -(1.0 - lam) * q * q * u1


@dataclass(frozen=True)
class Hill(Regulation):
    """Hill regulation ``(1 + lam * x**r) / (1 + x**r)``.

    Parameters
    ----------
    lam : float
        Saturation level relative to the basal rate, ``lam >= 0`` and
        ``lam != 1``. ``lam < 1`` gives a repressor, ``lam > 1`` an activator.
    r : float
        Hill coefficient, ``r >= 1``.
    """

    lam: float
    r: float
    kind: str = field(default="hill", init=False, repr=False)

    def __post_init__(self):
        lam, r = float(self.lam), float(self.r)
        if not (math.isfinite(lam) and lam >= 0.0):
            raise DomainError(f"hill: lambda must be a finite value >= 0, got {self.lam}")
        if lam == 1.0:
            raise DomainError("hill: lambda = 1 gives a constant function (f' == 0)")
        if not (math.isfinite(r) and r >= 1.0):
            raise DomainError(f"hill: r must be >= 1, got {self.r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "r", r)

    @property
    def sign(self) -> int:
        return 1 if self.lam > 1.0 else -1

    @property
    def sup(self) -> float:
        return max(1.0, self.lam)

    def _value(self, x):
        u = np.power(np.asarray(x, dtype=float), self.r)
        return (1.0 + self.lam * u) / (1.0 + u)

    def _prime(self, x):
        return _hill_prime(self.lam, self.r, x)

    def _derivatives(self, x):
        return _hill_parts(self.lam, self.r, x)[1:]

    def log_sensitivity_sup(self) -> float:
        # maximum of r|lam-1| u / ((1+u)(1+lam u)) at u = 1/sqrt(lam); limit r if lam = 0
        return self.r * abs(self.lam - 1.0) / (1.0 + math.sqrt(self.lam)) ** 2

    def to_dict(self) -> dict:
        return {"kind": "hill", "lambda": self.lam, "r": self.r}


@dataclass(frozen=True)
class ShiftedHill(Regulation):
    """Hill regulation evaluated at ``x + shift``."""

    lam: float
    r: float
    shift: float
    kind: str = field(default="shifted_hill", init=False, repr=False)

    def __post_init__(self):
        base = Hill(self.lam, self.r)
        s = float(self.shift)
        if not (math.isfinite(s) and s >= 0.0):
            raise DomainError(f"shifted_hill: shift must be >= 0, got {self.shift}")
        object.__setattr__(self, "lam", base.lam)
        object.__setattr__(self, "r", base.r)
        object.__setattr__(self, "shift", s)

    @property
    def sign(self) -> int:
        return 1 if self.lam > 1.0 else -1

    @property
    def sup(self) -> float:
        if self.lam > 1.0:
            return self.lam
        return float(Hill(self.lam, self.r)._value(self.shift))

    def _value(self, x):
        u = np.power(np.asarray(x, dtype=float) + self.shift, self.r)
        return (1.0 + self.lam * u) / (1.0 + u)

    def _prime(self, x):
        return _hill_prime(self.lam, self.r, np.asarray(x, dtype=float) + self.shift)

    def _derivatives(self, x):
        return _hill_parts(self.lam, self.r, np.asarray(x, dtype=float) + self.shift)[1:]

    def log_sensitivity_sup(self) -> float:
        from ._numerics import golden_section_max

        def sens(logx: float) -> float:
            x = math.exp(logx)
            return abs(x * float(self._prime(x)) / float(self._value(x)))

        grid = np.linspace(math.log(1e-8), math.log(1e8), 321)
        vals = [sens(v) for v in grid]
        k = int(np.argmax(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        _, best = golden_section_max(sens, lo, hi, width=1e-10)
        best = max(best, vals[k])
        if self.lam == 0.0:
            # x f'/f -> r as x -> inf when the regulation decays to zero
            best = max(best, self.r)
        return best

    def to_dict(self) -> dict:
        return {"kind": "shifted_hill", "lambda": self.lam, "r": self.r, "shift": self.shift}


@dataclass(frozen=True)
class Affine(Regulation):
    """Affine activation ``a * x + b`` with ``a > 0`` and ``b > 0``."""

    a: float
    b: float
    kind: str = field(default="affine", init=False, repr=False)

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not math.isfinite(a) or a == 0.0:
            raise DomainError(f"affine: slope a must be non-zero, got {self.a}")
        if a < 0.0:
            raise DomainError("affine: negative slope would leave R_+; use a hill repressor instead")
        if not (math.isfinite(b) and b > 0.0):
            raise DomainError(f"affine: intercept b must be > 0, got {self.b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def sign(self) -> int:
        return 1

    @property
    def sup(self) -> float:
        return math.inf

    def _value(self, x):
        return self.a * np.asarray(x, dtype=float) + self.b

    def _prime(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.a)

    def _derivatives(self, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.a), np.zeros_like(x), np.zeros_like(x)

    def log_sensitivity_sup(self) -> float:
        # a x / (a x + b) increases to 1 without reaching it
        return 1.0

    def to_dict(self) -> dict:
        return {"kind": "affine", "a": self.a, "b": self.b}


def from_dict(data: dict) -> Regulation:
    """Build a regulation from its JSON description."""
    if not isinstance(data, dict) or "kind" not in data:
        raise DomainError(f"regulation entry needs a 'kind' field: {data!r}")
    kind = data["kind"]
    try:
        if kind == "hill":
            return Hill(data["lambda"], data["r"])
        if kind == "affine":
            return Affine(data["a"], data["b"])
        if kind == "shifted_hill":
            return ShiftedHill(data["lambda"], data["r"], data["shift"])
    except KeyError as exc:
        raise DomainError(f"regulation of kind {kind!r} is missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise DomainError(f"regulation of kind {kind!r} has a non-numeric field: {exc}") from None
    raise DomainError(f"unknown regulation kind {kind!r}")


def schwarzian(f: Regulation, x: ArrayLike) -> ArrayLike:
    """Schwarzian derivative ``f'''/f' - 3/2 (f''/f')**2``.

    Raises
    ------
    SingularityError
        If ``|f'(x)|`` is numerically zero at some requested point.
    """
    d1, d2, d3 = f.derivatives(x)
    if np.any(np.abs(d1) <= DERIVATIVE_FLOOR):
        raise SingularityError(f"f' vanishes at x = {x!r}; Schwarzian undefined")
    ratio = d2 / d1
    return d3 / d1 - 1.5 * ratio * ratio


@dataclass(frozen=True)
class ConvexityCertificate:
    """Outcome of a gamma^(1/2)-convexity scan."""

    status: str
    max_schwarzian: float
    witness: float | None = None

    @property
    def ok(self) -> bool:
        return self.status != VIOLATED

    @property
    def strict(self) -> bool:
        return self.status == STRICTLY_CONVEX

    def to_dict(self) -> dict:
        return {"status": self.status, "max_schwarzian": self.max_schwarzian, "witness": self.witness}


def check_gamma_half_convex(
    f: Regulation,
    interval: tuple[float, float] = (1e-3, 1e3),
    grid_points: int = 512,
    tol: float = 1e-9,
) -> ConvexityCertificate:
    """Certify convexity of ``1/sqrt|f'|`` by scanning the sign of ``S(f)``.

    The scan uses ``grid_points`` log-spaced points in ``interval``. The
    result is strict if ``S(f) < -tol`` everywhere, plain convex if
    ``S(f) <= tol`` everywhere, and violated otherwise (the first offending
    grid point is reported as witness).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not (0.0 < lo < hi and math.isfinite(hi)):
        raise DomainError(f"convexity interval must satisfy 0 < lo < hi < inf, got {interval}")
    if grid_points < 16:
        raise DomainError("convexity scan needs at least 16 grid points")
    xs = np.geomspace(lo, hi, grid_points)
    s = schwarzian(f, xs)
    smax = float(np.max(s))
    bad = np.nonzero(s > tol)[0]
    if bad.size:
        return ConvexityCertificate(VIOLATED, smax, float(xs[bad[0]]))
    if np.all(s < -tol):
        return ConvexityCertificate(STRICTLY_CONVEX, smax)
    return ConvexityCertificate(CONVEX, smax)


def log_sensitivity_sup(f: Regulation) -> float:
    return f.log_sensitivity_sup()
