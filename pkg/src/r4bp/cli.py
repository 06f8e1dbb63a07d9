"""
Command-line entry point: one subcommand per pipeline stage.

Every subcommand prints a JSON report on stdout and writes its files into
``--out-dir``. ``--config FILE`` reads ``key = value`` lines whose keys are
the long flag names (dashes or underscores); flags given on the command
line win over the file.

Exit status: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .equilibria import find_all, find_l2, hill_regions
from .export import SvgFigure, dumps_json, write_csv, write_json
from .integrator import IntegrationError, IntegrationSettings
from .linstab import analyze, find_mu_b, second_partials_at_l2
from .manifolds import (
    DEFAULT_EPS_IC,
    EXCLUSION_FACTOR,
    eigen_frame,
    find_orthogonal_crossings,
    globalize,
    stable_frame,
)
from .model import SystemConfig
from .normal_form import (
    TruncatedSystem,
    compute_normal_form,
    versal_charpoly,
    versal_eigenvalues,
    versal_params,
)

log = logging.getLogger("r4bp")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Validated parameters of one invocation."""

    command: str
    mu: float | None
    out_dir: Path
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.mu is not None and not (0.0 < self.mu <= 1.0 / 3.0):
            raise UsageError(f"mu must lie in (0, 1/3], got {self.mu}")
        for key in ("rel_tol", "abs_tol", "eps_ic", "exclusion_factor"):
            v = self.params.get(key)
            if v is not None and not v > 0:
                raise UsageError(f"{key} must be positive")
        for key in ("branches", "cuts", "resolution", "workers", "samples"):
            v = self.params.get(key)
            if v is not None and v < 1:
                raise UsageError(f"{key} must be >= 1")
        return self


def read_config(path) -> dict[str, str]:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _add_common(p: argparse.ArgumentParser, mu_default: float | None = 0.019):
    p.add_argument("--mu", type=float, default=mu_default, help="mass parameter in (0, 1/3]")
    p.add_argument("--out-dir", default=".", help="directory for emitted files")
    p.add_argument("--config", help="key = value file mirroring the long flags")
    p.add_argument("--verbose", action="store_true")


def _add_integration(p: argparse.ArgumentParser):
    p.add_argument("--rel-tol", type=float, default=1e-11)
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--max-time", type=float, default=1000.0)
    p.add_argument("--proximity-floor", type=float, default=1e-3)
    p.add_argument("--escape-radius", type=float, default=10.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="r4bp", description="Restricted four-body L2 pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("equilibria", help="all equilibrium points (JSON)")
    _add_common(p)

    p = sub.add_parser("hill", help="Hill regions at a Jacobi constant (CSV contour + SVG)")
    _add_common(p)
    p.add_argument("--jacobi", type=float, help="Jacobi constant; defaults to the value at L2")
    p.add_argument("--bounds", type=_floats, default=(-2.0, 2.0, -2.0, 2.0), help="xmin xmax ymin ymax")
    p.add_argument("--resolution", type=int, default=401)

    p = sub.add_parser("stability", help="linear analysis at L2 (JSON)")
    _add_common(p)
    p.add_argument("--find-mu-b", action="store_true", help="locate the critical mass instead")

    p = sub.add_parser("normal-form", help="second-order normal form at mu_b (JSON + polynomial files)")
    _add_common(p, mu_default=None)
    p.add_argument("--taylor", choices=("computed", "rounded"), default="computed")

    p = sub.add_parser("versal", help="versal parameters and truncated-system level sets (JSON + CSV)")
    _add_common(p)
    p.add_argument("--h1", type=float, help="quartic coefficient; defaults to the computed normal form")
    p.add_argument("--samples", type=int, default=200)

    for name, helptext in (("manifold", "manifold cuts (CSV + SVG)"), ("homoclinic", "orthogonal crossings (JSON)")):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        _add_integration(p)
        p.add_argument("--eps-ic", type=float, default=DEFAULT_EPS_IC)
        p.add_argument("--branches", type=int, default=512)
        p.add_argument("--cuts", type=int, default=5)
        p.add_argument("--exclusion-factor", type=float, default=EXCLUSION_FACTOR)
        p.add_argument("--workers", type=int, default=1)
        if name == "manifold":
            p.add_argument("--stable", action="store_true", help="integrate the stable manifold backward")
        else:
            p.add_argument("--x-near", type=float, help="report only the candidate closest to this x")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    cmd = next((a for a in argv if not a.startswith("-")), None)
    subs = parser._subparsers._group_actions[0].choices if parser._subparsers else {}
    if cmd not in subs:
        return
    sp = subs[cmd]
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in values.items():
        if key == "config" or key not in actions:
            raise UsageError(f"unknown config key {key!r} for {cmd}")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[key] = _bool(value)
        else:
            try:
                defaults[key] = act.type(value) if act.type else value
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {value!r}") from exc
            if act.choices and defaults[key] not in act.choices:
                raise UsageError(f"{key} must be one of {sorted(act.choices)}")
    sp.set_defaults(**defaults)


def _settings(args) -> IntegrationSettings:
    try:
        return IntegrationSettings(
            rel_tol=args.rel_tol,
            abs_tol=args.abs_tol,
            max_time=args.max_time,
            proximity_floor=args.proximity_floor,
            escape_radius=args.escape_radius,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_equilibria(args, out: Path) -> dict:
    cfg = SystemConfig(args.mu)
    pts = find_all(cfg)
    report = {
        "mu": args.mu,
        "count": len(pts),
        "collinear": sum(p.label == "collinear" for p in pts),
        "points": [{"x": p.x, "y": p.y, "jacobi": p.jacobi_value, "label": p.label} for p in pts],
    }
    write_json(out / "equilibria.json", report)
    return report


def cmd_hill(args, out: Path) -> dict:
    cfg = SystemConfig(args.mu)
    if len(args.bounds) != 4:
        raise UsageError("--bounds needs four numbers")
    C = args.jacobi if args.jacobi is not None else find_l2(cfg).jacobi_value
    hr = hill_regions(cfg, C, tuple(args.bounds), args.resolution)
    rows = [(k, x, y) for k, c in enumerate(hr.contours) for x, y in c]
    write_csv(out / "hill.csv", ["contour", "x", "y"], rows)
    fig = SvgFigure(title=f"zero-velocity curves, mu={args.mu:g}, C={C:.6g}")
    for c in hr.contours:
        fig.polyline(c, color="#1f77b4")
    fig.scatter(cfg.positions, color="#d62728")
    fig.save(out / "hill.svg")
    report = {
        "mu": args.mu,
        "jacobi": C,
        "allowed_components": hr.n_allowed_components,
        "forbidden_cells": hr.n_forbidden_cells,
        "contours": len(hr.contours),
    }
    write_json(out / "hill.json", report)
    return report


def cmd_stability(args, out: Path) -> dict:
    if args.find_mu_b:
        cm = find_mu_b()
        report = {"mu_b": cm.mu_b, "omega": cm.omega, "a": cm.a, "b": cm.b, "x_l2": cm.x_l2, "D": cm.discriminant}
    else:
        cfg = SystemConfig(args.mu)
        l2 = find_l2(cfg)
        report = {"mu": args.mu, "x_l2": l2.x, "jacobi": l2.jacobi_value, **analyze(cfg, l2).as_dict()}
    write_json(out / "stability.json", report)
    return report


def cmd_normal_form(args, out: Path) -> dict:
    if args.mu is not None:
        log.info("normal-form always runs at mu_b; --mu=%g ignored", args.mu)
    rep = compute_normal_form(args.taylor)
    res = rep.result
    out.mkdir(parents=True, exist_ok=True)
    for name, poly in (("H02", res.H02), ("W1", res.W1), ("W2", res.W2)):
        (out / f"{name}.txt").write_text(poly.to_text())
    report = rep.as_dict()
    write_json(out / "normal_form.json", report)
    return report


def cmd_versal(args, out: Path) -> dict:
    a, b, x = second_partials_at_l2(args.mu)
    nu = versal_params(a, b)
    s = (1 + nu.nu1) ** 2
    A = np.array([[0, 1, 1, 0], [-1, 0, 0, 1], [a, 0, 0, 1], [0, b, -1, 0]], dtype=float)
    direct = sorted(np.linalg.eigvals(A), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    formula = sorted(versal_eigenvalues(nu), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    h1 = args.h1 if args.h1 is not None else compute_normal_form().result.h[0]
    ts = TruncatedSystem(nu.nu2, h1)
    curve = ts.homoclinic_loop(args.samples) if nu.nu2 < 0 else ts.level_set(1e-3, args.samples)
    write_csv(out / "level_set.csv", ["r", "R"], curve)
    report = {
        "mu": args.mu,
        "a": a,
        "b": b,
        "x_l2": x,
        "nu1": nu.nu1,
        "nu2": nu.nu2,
        "charpoly": versal_charpoly(nu),
        "identity_residuals": {
            "trace": abs(2 * (s + nu.nu2) - (2 - a - b)),
            "determinant": abs((s - nu.nu2) ** 2 - (a + b + a * b + 1)),
        },
        "eigenvalues_direct": direct,
        "eigenvalues_formula": formula,
        "h1": h1,
        "truncated": {"equilibria_r": ts.equilibria(), "classification": ts.classify()},
    }
    write_json(out / "versal.json", report)
    return report


def cmd_manifold(args, out: Path) -> dict:
    cfg = SystemConfig(args.mu)
    frame = eigen_frame(cfg)
    if args.stable:
        frame = stable_frame(frame)
    cuts = globalize(cfg, frame, args.eps_ic, args.branches, args.cuts, _settings(args), args.exclusion_factor,
                     args.workers)
    rows = []
    for cut in cuts:
        for p in cut.points:
            rows.append((p.theta, cut.cut_index, p.x, p.xdot, p.direction, p.status))
    write_csv(out / "manifold.csv", ["theta", "cut_index", "x", "xdot", "direction", "status"], rows)
    fig = SvgFigure(title=f"{'stable' if args.stable else 'unstable'} manifold cuts, mu={args.mu:g}")
    fig.xlabel, fig.ylabel = "x", "xdot"
    for cut in cuts:
        fig.scatter(cut.xy())
    fig.save(out / "manifold.svg")
    report = {
        "mu": args.mu,
        "kind": cuts[0].kind,
        "eps_ic": args.eps_ic,
        "exclusion_radius": cuts[0].exclusion_radius,
        "cuts": [{"index": c.cut_index, "points": len(c.points), "missing": len(c.missing)} for c in cuts],
    }
    write_json(out / "manifold.json", report)
    return report


def cmd_homoclinic(args, out: Path) -> dict:
    cfg = SystemConfig(args.mu)
    frame = eigen_frame(cfg)
    settings = _settings(args)
    cuts = globalize(cfg, frame, args.eps_ic, args.branches, args.cuts, settings, args.exclusion_factor, args.workers)
    fragile: list = []
    found = find_orthogonal_crossings(cfg, frame, cuts[-1], settings, fragile)
    if args.x_near is not None and found:
        found = [min(found, key=lambda c: abs(c.x_cross - args.x_near))]
    report = {
        "mu": args.mu,
        "cut_index": args.cuts,
        "eps_ic": args.eps_ic,
        "branches": args.branches,
        "exclusion_radius": cuts[-1].exclusion_radius,
        "fragile_brackets": len(fragile),
        "candidates": [
            {
                "theta_star": c.theta_star,
                "x_cross": c.x_cross,
                "xdot": c.state.vx,
                "state": list(c.state),
                "time": c.time,
            }
            for c in found
        ],
    }
    write_json(out / "homoclinic.json", report)
    return report


COMMANDS = {
    "equilibria": cmd_equilibria,
    "hill": cmd_hill,
    "stability": cmd_stability,
    "normal-form": cmd_normal_form,
    "versal": cmd_versal,
    "manifold": cmd_manifold,
    "homoclinic": cmd_homoclinic,
}


def run(argv: list[str] | None = None, stdout=None) -> int:
    """Execute one command; returns the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        params = {k: v for k, v in vars(args).items() if k not in ("command", "mu", "out_dir")}
        rc = RunConfig(args.command, args.mu, Path(args.out_dir), params).validate()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"r4bp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        rc.out_dir.mkdir(parents=True, exist_ok=True)
        report = COMMANDS[rc.command](args, rc.out_dir)
    except UsageError as exc:
        print(f"r4bp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, IntegrationError, RuntimeError, ValueError) as exc:
        print(f"r4bp: numerical failure in {rc.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    stdout.write(dumps_json(report))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
