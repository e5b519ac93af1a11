"""Command-line front end: ``cyclone {verify,analyze,simulate,sweep}``.

Exit codes: 0 success, 1 input error, 2 hypothesis violation, 3 numeric
failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import atlas, dynamics
from .errors import ConvergenceFailure, CycloneError, DomainError, StepSizeUnderflow, SuspectCount
from .network import DEFAULT_TOL, CyclicNetwork, find_equilibria
from .network import from_dict as network_from_dict
from .regulation import check_gamma_half_convex
from .stability import classify_network, thresholds

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 1, 2, 3

CONVEXITY_INTERVAL = (1e-3, 1e3)
CONVEXITY_GRID = 512
CONVEXITY_TOL = 1e-9


class InputError(Exception):
    pass


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def load_spec(path: str) -> tuple[CyclicNetwork, dict]:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read spec {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"spec {path} is not valid JSON: {exc}") from None
    try:
        return network_from_dict(raw), raw
    except DomainError as exc:
        raise InputError(f"invalid spec {path}: {exc}") from None


def hypotheses(net: CyclicNetwork) -> dict:
    """Check every stage condition that can be certified numerically."""
    certs = [check_gamma_half_convex(f, CONVEXITY_INTERVAL, CONVEXITY_GRID, CONVEXITY_TOL) for f in net.functions]
    d, n, big_d = net.d, net.n, net.d_value()
    th = thresholds(d)
    if n % 2 == 0:
        if big_d < 1:
            outlook = "monostable only: unique globally stable equilibrium for every alpha"
        elif big_d > 1:
            outlook = "bistability possible"
            if th.t_even is not None and big_d > th.t_even:
                outlook += "; periodic solutions possible"
        else:
            outlook = "boundary case D = 1"
    elif d == 2:
        outlook = "stable equilibrium for every alpha (d = 2)"
    elif big_d < th.t_odd:
        outlook = "stable equilibrium for every alpha"
    elif big_d > th.t_odd:
        outlook = "oscillation possible"
    else:
        outlook = "boundary case D = t_odd"
    all_convex = all(c.ok for c in certs)
    any_strict = any(c.strict for c in certs)
    return {
        "functions": [
            {**f.to_dict(), "monotone": "increasing" if f.increasing else "decreasing", "bounded": f.bounded,
             "log_sensitivity_sup": f.log_sensitivity_sup(), "convexity": c.to_dict()}
            for f, c in zip(net.functions, certs)
        ],
        "convexity_scan": {"interval": list(CONVEXITY_INTERVAL), "grid_points": CONVEXITY_GRID, "tol": CONVEXITY_TOL},
        "bounded_present": any(f.bounded for f in net.functions),
        "all_gamma_half_convex": all_convex,
        "strictly_convex_present": any_strict,
        "certified": all_convex and any_strict,
        "d": d,
        "n": n,
        "parity": net.parity,
        "D": big_d,
        "thresholds": th.to_dict(),
        "sensitivity_product_exceeds_one": big_d > 1,
        "outlook": outlook,
    }


def cmd_verify(args) -> int:
    net, _ = load_spec(args.spec)
    rep = hypotheses(net)
    print(dumps(rep))
    return EXIT_OK if rep["certified"] else EXIT_HYPOTHESIS


def _settings(args, **extra) -> dict:
    out = {"tol": args.tol}
    out.update(extra)
    return out


def cmd_analyze(args) -> int:
    net, raw = load_spec(args.spec)
    if raw.get("hypotheses_check"):
        hyp = hypotheses(net)
        if not hyp["certified"]:
            print(dumps({"error": "hypotheses not certified", "hypotheses": hyp}))
            return EXIT_HYPOTHESIS
    rep = classify_network(net, tol=args.tol)
    doc = {
        "network": net.to_dict(),
        "settings": _settings(args, rtol=dynamics.DEFAULT_RTOL, t_end=dynamics.DEFAULT_T_END,
                              transient=dynamics.DetectOptions().transient),
        "report": rep.to_dict(),
    }
    if args.table:
        print(_table(rep))
    else:
        print(dumps(doc))
    return EXIT_OK


def _table(rep) -> str:
    lines = [f"branch: {rep.branch.value}", f"d = {rep.d}  n = {rep.n}  D = {rep.D:.6g}"]
    th = rep.thresholds
    lines.append(f"t_odd = {th.t_odd:.6g}  t_even = {th.t_even if th.t_even is None else format(th.t_even, '.6g')}")
    lines.append(f"{'#':>2}  {'p':>14}  {'G':>14}  {'stable_dim':>10}  x_bar")
    for k, (eq, sp) in enumerate(rep.equilibria):
        xs = " ".join(f"{v:.8g}" for v in eq.x_bar)
        lines.append(f"{k:>2}  {eq.p:>14.8g}  {eq.g:>14.8g}  {sp.stable_dim:>10}  {xs}")
    return "\n".join(lines)


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{name} must be a comma-separated list of numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    net, _ = load_spec(args.spec)
    x0 = _floats(args.x0, "--x0")
    if len(x0) != net.d:
        raise InputError(f"--x0 needs {net.d} values, got {len(x0)}")
    if any(v < 0 or not math.isfinite(v) for v in x0):
        raise InputError("--x0 entries must be finite and >= 0")
    if not args.t_end > 0:
        raise InputError("--t-end must be > 0")
    opts = dynamics.DetectOptions(transient=args.transient)
    traj = dynamics.integrate(net, x0, args.t_end, args.rtol, args.atol)
    report = dynamics.detect_attractor(net, traj, find_equilibria(net, args.tol), opts)
    if args.out:
        Path(args.out).write_text(report.trajectory.to_csv())
    print(dumps({
        "settings": _settings(args, rtol=args.rtol, atol=args.atol, t_end=args.t_end, transient=args.transient,
                              x0=x0, detect=opts.to_dict()),
        "attractor": report.to_dict(),
    }))
    return EXIT_OK


def _parse_axes(text: str, d: int) -> list[tuple[int, ...]]:
    if text in ("diag", "all"):
        return [tuple(range(d))]
    axes = []
    for tok in text.split(","):
        try:
            idx = tuple(int(i) - 1 for i in tok.split("+"))
        except ValueError:
            raise InputError(f"invalid axis {tok!r}; use 1-based indices, 'i+j' to tie, or 'diag'") from None
        if any(not 0 <= i < d for i in idx):
            raise InputError(f"axis {tok!r} outside 1..{d}")
        axes.append(idx)
    if not 1 <= len(axes) <= 2:
        raise InputError("--axis takes one or two axes")
    return axes


def _parse_ranges(text: str, n_axes: int) -> list[tuple[float, float]]:
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * n_axes
    if len(parts) != n_axes:
        raise InputError("--range needs one lo:hi per axis (or a single shared one)")
    out = []
    for p in parts:
        try:
            lo, hi = (float(v) for v in p.split(":"))
        except ValueError:
            raise InputError(f"invalid range {p!r}; expected lo:hi") from None
        if not 0 < lo < hi:
            raise InputError(f"range {p!r} must satisfy 0 < lo < hi")
        out.append((lo, hi))
    return out


def cmd_sweep(args) -> int:
    net, _ = load_spec(args.spec)
    axes = _parse_axes(args.axis, net.d)
    ranges = _parse_ranges(args.range, len(axes))
    if args.res < 2:
        raise InputError("--res must be >= 2")
    try:
        spec = atlas.SweepSpec(net, axes, ranges, args.res)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    table = atlas.run_sweep(spec, tol=args.tol)
    prefix = Path(args.out)
    files = [str(prefix) + ".csv"]
    Path(files[0]).write_bytes(atlas.emit(table, "csv"))
    transitions = []
    if len(axes) == 2:
        files.append(str(prefix) + ".svg")
        Path(files[1]).write_bytes(atlas.emit(table, "svg"))
    else:
        transitions = atlas.boundary_trace(spec, table, tol=args.tol)
    if args.json:
        print(dumps({
            "settings": _settings(args),
            "sweep": spec.to_dict(),
            "files": files,
            "transitions": [t.to_dict() for t in transitions],
        }))
    else:
        for f in files:
            print(f"wrote {f}")
        for t in transitions:
            print(f"{t.branch_low} -> {t.branch_high}: alpha in [{t.alpha_low:.9g}, {t.alpha_high:.9g}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclone", description="Regime analysis of cyclic feedback loops.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="certify the stage conditions for a network spec")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true", help="accepted for symmetry; output is always JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="equilibria, spectra and regime classification")
    p.add_argument("spec")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", default=True)
    fmt.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate from x0 and detect the attractor")
    p.add_argument("spec")
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--t-end", type=float, default=dynamics.DEFAULT_T_END)
    p.add_argument("--rtol", type=float, default=dynamics.DEFAULT_RTOL)
    p.add_argument("--atol", type=float, default=dynamics.DEFAULT_ATOL)
    p.add_argument("--transient", type=float, default=dynamics.DetectOptions().transient)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--json", action="store_true", help="accepted for symmetry; output is always JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="regime atlas over one or two alpha axes")
    p.add_argument("spec")
    p.add_argument("--axis", required=True, help="'i', 'i,j', 'i+j' (tied) or 'diag'")
    p.add_argument("--range", required=True, help="lo:hi[,lo:hi]")
    p.add_argument("--res", type=int, default=61)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceFailure, StepSizeUnderflow) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SuspectCount as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except CycloneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
