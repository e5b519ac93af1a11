"""Parameter sweeps over alpha: regime tables, transition brackets, CSV/SVG output."""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CycloneError, DomainError, FormatError
from .network import DEFAULT_TOL, CyclicNetwork
from .stability import Branch, classify_network

ERROR = "Error"

BRANCH_COLORS = {
    Branch.EVEN_MONOSTABLE_GAS.value: "#4c78a8",
    Branch.EVEN_BISTABLE.value: "#f58518",
    Branch.EVEN_BISTABLE_PERIODIC_CANDIDATE.value: "#e45756",
    Branch.ODD_STABLE.value: "#54a24b",
    Branch.ODD_UNSTABLE_OSCILLATORY.value: "#b279a2",
    Branch.BOUNDARY.value: "#000000",
    ERROR: "#bab0ac",
}


@dataclass(frozen=True)
class SweepSpec:
    """A 1-D or 2-D log-spaced sweep over components of alpha.

    Each axis is a tuple of 0-based alpha indices that move together, so
    ``axes=[(0, 1)]`` is the diagonal ``alpha_1 = alpha_2`` of a toggle.
    Components on no axis keep the template's value.
    """

    template: CyclicNetwork
    axes: tuple
    ranges: tuple
    resolution: tuple

    def __post_init__(self):
        axes = tuple(tuple(int(i) for i in ax) for ax in self.axes)
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
        res = self.resolution
        res = tuple(int(r) for r in (res if isinstance(res, (tuple, list)) else [res] * len(axes)))
        if not 1 <= len(axes) <= 2:
            raise DomainError("a sweep has one or two axes")
        if len(ranges) != len(axes) or len(res) != len(axes):
            raise DomainError("need one range and one resolution per axis")
        seen = set()
        for ax in axes:
            if not ax:
                raise DomainError("empty sweep axis")
            for i in ax:
                if not 0 <= i < self.template.d:
                    raise DomainError(f"axis index {i + 1} outside 1..{self.template.d}")
                if i in seen:
                    raise DomainError(f"alpha_{i + 1} appears on two axes")
                seen.add(i)
        for lo, hi in ranges:
            if not (0.0 < lo < hi and math.isfinite(hi)):
                raise DomainError(f"sweep range must satisfy 0 < lo < hi, got {lo}:{hi}")
        if any(r < 2 for r in res):
            raise DomainError("resolution must be >= 2")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "resolution", res)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    def axis_values(self, k: int) -> np.ndarray:
        lo, hi = self.ranges[k]
        return np.geomspace(lo, hi, self.resolution[k])

    def alpha_at(self, values: Sequence[float]) -> np.ndarray:
        alpha = np.array(self.template.alpha, dtype=float)
        for ax, v in zip(self.axes, values):
            alpha[list(ax)] = v
        return alpha

    def grid(self) -> list[tuple[float, ...]]:
        """Axis values of every cell, row-major (last axis fastest)."""
        vals = [self.axis_values(k) for k in range(len(self.axes))]
        if len(vals) == 1:
            return [(float(v),) for v in vals[0]]
        return [(float(a), float(b)) for a in vals[0] for b in vals[1]]

    def to_dict(self) -> dict:
        return {
            "network": self.template.to_dict(),
            "axes": [[i + 1 for i in ax] for ax in self.axes],
            "ranges": [list(r) for r in self.ranges],
            "resolution": list(self.resolution),
        }


@dataclass(frozen=True)
class AtlasRow:
    alpha: tuple
    branch: str
    p_mid: float
    n_equilibria: int


@dataclass
class AtlasTable:
    spec: SweepSpec
    rows: list = field(default_factory=list)

    def branch_grid(self) -> np.ndarray:
        return np.array([r.branch for r in self.rows], dtype=object).reshape(self.spec.shape)


def classify_cell(template: CyclicNetwork, alpha, tol: float = DEFAULT_TOL, eps: float | None = None) -> AtlasRow:
    alpha = tuple(float(a) for a in alpha)
    try:
        rep = classify_network(template.with_alpha(alpha), tol=tol, eps=eps)
    except CycloneError:
        return AtlasRow(alpha, ERROR, math.nan, 0)
    mid = rep.middle
    if mid is None:
        p_mid = math.nan
    else:
        p_mid = mid.p if template.n % 2 == 0 else abs(mid.p)
    return AtlasRow(alpha, rep.branch.value, float(p_mid), len(rep.equilibria))


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("CYCLONE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"CYCLONE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, tol: float = DEFAULT_TOL, eps: float | None = None, threads: int | None = None) -> AtlasTable:
    """Classify the regime at every grid cell; rows are in row-major order."""
    alphas = [spec.alpha_at(v) for v in spec.grid()]
    job = lambda a: classify_cell(spec.template, a, tol, eps)  # noqa: E731
    n = thread_count(threads)
    if n <= 1:
        rows = [job(a) for a in alphas]
    else:
        with ThreadPoolExecutor(n) as pool:
            rows = list(pool.map(job, alphas))
    return AtlasTable(spec, rows)


@dataclass(frozen=True)
class Transition:
    alpha_low: float
    alpha_high: float
    branch_low: str
    branch_high: str

    def to_dict(self) -> dict:
        return {
            "alpha_low": self.alpha_low,
            "alpha_high": self.alpha_high,
            "branch_low": self.branch_low,
            "branch_high": self.branch_high,
        }


def boundary_trace(
    spec: SweepSpec,
    table: AtlasTable | None = None,
    rel_width: float = 1e-6,
    tol: float = DEFAULT_TOL,
    eps: float | None = None,
) -> list[Transition]:
    """Refine every branch change of a 1-D sweep to a narrow bracket.

    ``Boundary`` cells are treated as the inside of a transition: a change
    ``A -> Boundary ... -> B`` yields one bracket whose lower edge is the last
    point labelled ``A`` and upper edge the first point labelled ``B``. Each
    edge is bisected geometrically until its relative width is ``rel_width``.
    """
    if len(spec.axes) != 1:
        raise DomainError("boundary tracing needs a 1-D sweep")
    if table is None:
        table = run_sweep(spec, tol, eps)
    values = spec.axis_values(0)
    branch = lambda v: classify_cell(spec.template, spec.alpha_at([v]), tol, eps).branch  # noqa: E731

    def edge(a: float, b: float, label: str, keep_low: bool) -> float:
        # invariant: branch(a) == label if keep_low, branch(b) == label otherwise
        while b - a > rel_width * a:
            mid = math.sqrt(a * b)
            if mid <= a or mid >= b:
                break
            if (branch(mid) == label) == keep_low:
                a = mid
            else:
                b = mid
        return a if keep_low else b

    labelled = [k for k, r in enumerate(table.rows) if r.branch != Branch.BOUNDARY.value]
    out = []
    for k, m in zip(labelled, labelled[1:]):
        b_lo, b_hi = table.rows[k].branch, table.rows[m].branch
        if b_lo == b_hi:
            continue
        lo = edge(float(values[k]), float(values[k + 1]), b_lo, True)
        hi = edge(float(values[m - 1]), float(values[m]), b_hi, False)
        out.append(Transition(lo, hi, b_lo, b_hi))
    return out


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def to_csv(table: AtlasTable) -> bytes:
    d = table.spec.template.d
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"alpha_{i + 1}" for i in range(d)] + ["branch", "p_mid", "n_equilibria"])
    for r in table.rows:
        w.writerow([_fmt(a) for a in r.alpha] + [r.branch, _fmt(r.p_mid), r.n_equilibria])
    return buf.getvalue().encode("utf-8")


def _axis_label(ax: tuple) -> str:
    return " = ".join(f"alpha_{i + 1}" for i in ax)


def to_svg(table: AtlasTable) -> bytes:
    """Heatmap of branches over a 2-D sweep; one ``rect`` per cell.

    The first axis runs horizontally and the second vertically (upwards);
    both are log-scaled since grid values are geometric. Legend swatches are
    drawn as paths so the ``rect`` count equals the cell count.
    """
    spec = table.spec
    if len(spec.axes) != 2:
        raise FormatError("svg output needs a 2-D sweep")
    nx, ny = spec.shape
    cell, left, top = 10, 70, 20
    width, height = nx * cell, ny * cell
    legend_x = left + width + 20
    total_w, total_h = legend_x + 230, top + height + 60
    grid = table.branch_grid()
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" '
        f'viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="11">'
    ]
    for i in range(nx):
        for j in range(ny):
            x = left + i * cell
            y = top + (ny - 1 - j) * cell
            color = BRANCH_COLORS.get(grid[i, j], BRANCH_COLORS[ERROR])
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{color}"/>')
    (x_lo, x_hi), (y_lo, y_hi) = spec.ranges
    base = top + height
    out.append(f'<text x="{left}" y="{base + 15}">{x_lo:g}</text>')
    out.append(f'<text x="{left + width}" y="{base + 15}" text-anchor="end">{x_hi:g}</text>')
    out.append(f'<text x="{left + width / 2:g}" y="{base + 35}" text-anchor="middle">{_axis_label(spec.axes[0])} (log)</text>')
    out.append(f'<text x="{left - 5}" y="{base}" text-anchor="end">{y_lo:g}</text>')
    out.append(f'<text x="{left - 5}" y="{top + 10}" text-anchor="end">{y_hi:g}</text>')
    out.append(
        f'<text x="15" y="{top + height / 2:g}" text-anchor="middle" '
        f'transform="rotate(-90 15 {top + height / 2:g})">{_axis_label(spec.axes[1])} (log)</text>'
    )
    for k, (name, color) in enumerate(BRANCH_COLORS.items()):
        y = top + k * 18
        out.append(f'<path d="M{legend_x} {y}h12v12h-12z" fill="{color}"/>')
        out.append(f'<text x="{legend_x + 18}" y="{y + 10}">{name}</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def emit(table: AtlasTable, fmt: str) -> bytes:
    if fmt == "csv":
        return to_csv(table)
    if fmt == "svg":
        return to_svg(table)
    raise FormatError(f"unknown format {fmt!r}; expected 'csv' or 'svg'")
