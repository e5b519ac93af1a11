"""Dormand-Prince 5(4) integrator, batched over independent initial states.

Each row of the batch keeps its own time and step size, so a trajectory
integrated alone is bit-identical to the same trajectory inside a batch.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import StepSizeUnderflow

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array(A[6] + [0.0])
# difference between the 5th order weights and the embedded 4th order ones
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
BETA = 0.04  # PI controller memory
EXPO = 0.2 - 0.75 * BETA
ORDER = 5


def dopri_step(fun: Callable, y: np.ndarray, f0: np.ndarray, h):
    """One Dormand-Prince step of size ``h`` (scalar or ``(m, 1)`` array).

    Returns ``(y_new, f_new, err)`` where ``err`` is the local error vector.
    """
    k = [f0]
    for s in range(1, 7):
        acc = y + h * sum(a * ks for a, ks in zip(A[s], k) if a != 0.0)
        k.append(fun(acc))
    y_new = y + h * sum(b * ks for b, ks in zip(B, k) if b != 0.0)
    err = h * sum(e * ks for e, ks in zip(E, k) if e != 0.0)
    return y_new, k[6], err


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return np.sqrt(np.mean((err / scale) ** 2, axis=-1))


def _initial_step(fun, y0, f0, rtol, atol):
    # Hairer, Norsett & Wanner, starting step heuristic, row-wise
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2, axis=-1))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2, axis=-1))
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    y1 = y0 + h0[:, None] * f0
    f1 = fun(y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2, axis=-1)) / h0
    big = np.maximum(d1, d2)
    h1 = np.where(big <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.maximum(big, 1e-300)) ** (1.0 / ORDER))
    return np.minimum(100.0 * h0, h1)


def integrate_batch(
    fun: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 1_000_000,
    clamp_negative: bool = True,
):
    """Integrate ``y' = fun(y)`` from ``t = 0`` to ``t_end`` for every row of ``y0``.

    Returns a list of ``(t, y, f, stats)`` tuples, one per row, holding the
    accepted steps (including the initial point) and the derivative at each
    of them for Hermite interpolation.
    """
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim != 2:
        raise ValueError("y0 must have shape (m, d)")
    m = y.shape[0]
    t = np.zeros(m)
    f = fun(y)
    h = _initial_step(fun, y, f, rtol, atol)
    h = np.minimum(h, t_end)
    err_old = np.full(m, 1e-4)
    rejected_last = np.zeros(m, dtype=bool)
    n_acc = np.zeros(m, dtype=int)
    n_rej = np.zeros(m, dtype=int)

    rec_rows = [np.arange(m)]
    rec_t = [t.copy()]
    rec_y = [y.copy()]
    rec_f = [f.copy()]

    active = np.nonzero(t < t_end)[0]
    steps = 0
    while active.size:
        steps += 1
        if steps > max_steps:
            raise StepSizeUnderflow(f"exceeded {max_steps} integrator iterations")
        ta, ya, fa = t[active], y[active], f[active]
        ha = np.minimum(h[active], t_end - ta)
        if np.any(ha <= 10.0 * np.spacing(np.maximum(ta, 1.0))):
            raise StepSizeUnderflow(f"step size collapsed near t = {ta[np.argmin(ha)]:.6g}")
        y_new, f_new, err = dopri_step(fun, ya, fa, ha[:, None])
        if clamp_negative:
            y_new = np.where((y_new < 0.0) & (y_new >= -atol), 0.0, y_new)
        en = _error_norm(err, ya, y_new, rtol, atol)
        ok = en <= 1.0

        safe_en = np.maximum(en, 1e-10)
        grow = SAFETY * safe_en ** (-EXPO) * err_old[active] ** BETA
        grow = np.clip(grow, MIN_FACTOR, MAX_FACTOR)
        grow = np.where(rejected_last[active], np.minimum(grow, 1.0), grow)
        shrink = np.clip(SAFETY * safe_en ** (-1.0 / ORDER), MIN_FACTOR, 1.0)

        acc_idx = active[ok]
        rej_idx = active[~ok]
        if acc_idx.size:
            t_acc = np.where(ha[ok] >= t_end - ta[ok], t_end, ta[ok] + ha[ok])
            t[acc_idx] = t_acc
            y[acc_idx] = y_new[ok]
            f[acc_idx] = f_new[ok]
            h[acc_idx] = ha[ok] * grow[ok]
            err_old[acc_idx] = safe_en[ok]
            rejected_last[acc_idx] = False
            n_acc[acc_idx] += 1
            rec_rows.append(acc_idx)
            rec_t.append(t_acc)
            rec_y.append(y_new[ok])
            rec_f.append(f_new[ok])
        if rej_idx.size:
            h[rej_idx] = ha[~ok] * shrink[~ok]
            rejected_last[rej_idx] = True
            n_rej[rej_idx] += 1
        active = active[t[active] < t_end]

    rows = np.concatenate(rec_rows)
    order = np.argsort(rows, kind="stable")
    rows = rows[order]
    all_t = np.concatenate(rec_t)[order]
    all_y = np.concatenate(rec_y)[order]
    all_f = np.concatenate(rec_f)[order]
    cuts = np.searchsorted(rows, np.arange(1, m))
    out = []
    for r, (tt, yy, ff) in enumerate(zip(np.split(all_t, cuts), np.split(all_y, cuts), np.split(all_f, cuts))):
        stats = {"accepted": int(n_acc[r]), "rejected": int(n_rej[r])}
        out.append((tt, yy, ff, stats))
    return out


def hermite(t0, t1, y0, y1, f0, f1, t):
    """Cubic Hermite interpolant on ``[t0, t1]`` evaluated at ``t``."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
