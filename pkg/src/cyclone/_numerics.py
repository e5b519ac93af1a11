"""Small scalar routines shared across modules."""
from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(
    fun: Callable[[float], float], lo: float, hi: float, width: float = 1e-10, max_iter: int = 500
) -> tuple[float, float]:
    """Maximise a unimodal ``fun`` on ``[lo, hi]``; returns ``(argmax, max)``.

    Endpoints are included in the comparison so a boundary maximum is
    reported correctly.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= width:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    candidates = [(fc, c), (fd, d), (fun(lo), lo), (fun(hi), hi)]
    best_val, best_x = max(candidates, key=lambda item: item[0])
    return best_x, best_val


def bisect_sign_change(
    fun: Callable[[float], float], a: float, b: float, fa: float, fb: float, max_iter: int = 400
) -> tuple[float, float]:
    """Shrink a sign-change bracket until it is a few ulps wide.

    Returns the endpoint with the smaller ``|fun|`` together with that value.
    """
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = fun(m)
        if fm == 0.0:
            return m, 0.0
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return (a, fa) if abs(fa) <= abs(fb) else (b, fb)
