"""Command line interface: ``vstates <command> [options]``.

Exit codes: 0 success, 1 numerical failure (partial output is still written),
2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import DEFAULT_TOL, Branch, continue_branch
from .contour import MarkerFoldover, far_field_error, rigid_rotation_check, rotation_residual
from .diagnostics import VanishingDenominator, diagnose
from .io import StateFileError, emit_svg, read_branch_csv, read_config, write_branch_csv, write_json
from .linear import jacobian_fd, linearize_at_zero
from .residual import compute_F, compute_G, compute_I1, compute_S
from .spectral import ModeVector, check_conformal, default_grid_size, synthesize

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2
CONVERGED = "reached xi_max"


class UsageError(Exception):
    pass


def _lambda_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _parse_lambda(token: str, fold: int) -> float:
    if token == "1/m":
        return 1.0 / fold
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad lambda value {token!r}") from exc


def _out_path(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.parent.is_dir():
        raise UsageError(f"output directory {p.parent} does not exist")
    return p


# ---------------------------------------------------------------- state input


def _add_state_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--state", help="branch CSV written by 'vstates branch'")
    src.add_argument("--ellipse", type=float, metavar="XI", help="Kirchhoff ellipse with a_1 = XI")
    src.add_argument("--disc", action="store_true", help="unit disc")
    p.add_argument("--index", type=int, default=-1, help="row of --state (default: last)")
    p.add_argument("--lambda", dest="lam", type=float, help="override lambda")
    p.add_argument("--m", type=int, default=2, help="fold used with --disc")
    p.add_argument("--K", type=int, default=16, help="truncation used with --ellipse/--disc")
    p.add_argument("--N", type=int, help="grid size (default: power of two >= max(256, 4Km))")


def _load_state(args) -> tuple[ModeVector, float, str]:
    if args.state:
        _, branch = read_branch_csv(args.state)
        if not branch.states:
            raise UsageError(f"{args.state} holds no states")
        try:
            st = branch.states[args.index]
        except IndexError as exc:
            raise UsageError(f"index {args.index} out of range ({len(branch)} states)") from exc
        mv, lam, label = st.mv, st.lam, f"{args.state}[{args.index}]"
    elif args.ellipse is not None:
        xi = args.ellipse
        mv, lam, label = ModeVector.single(2, args.K, xi), 0.5 * (1 + xi * xi), f"ellipse xi={xi:g}"
    elif args.disc:
        mv, lam, label = ModeVector.zeros(args.m, args.K), 0.5, "disc"
    else:
        raise UsageError("give one of --state, --ellipse, --disc")
    if args.lam is not None:
        lam = args.lam
    if not 0.0 < lam < 1.0:
        raise UsageError("lambda must lie in (0, 1)")
    if not mv.valid:
        raise UsageError("state lies outside the certified conformal region")
    return mv, lam, label


def _grid_size(args, mv: ModeVector) -> int:
    N = args.N if args.N is not None else default_grid_size(mv.fold, mv.trunc)
    if N < 4 * mv.fold * mv.trunc:
        raise UsageError(f"N={N} is below the anti-aliasing minimum {4 * mv.fold * mv.trunc}")
    return N


# ---------------------------------------------------------------- commands


def cmd_branch(args) -> int:
    out = _out_path(args.out)
    summary_path = _out_path(args.summary) if args.summary else (out.with_suffix(".json") if out else None)
    svg = _out_path(args.svg)
    start = None
    if args.resume:
        meta, start = read_branch_csv(args.resume)
        fold, K, N, tol, dxi = meta["m"], meta["K"], meta["N"], meta["tol"], meta["dxi"]
        xi_max = args.xi_max if args.xi_max is not None else meta["xi_max"]
    else:
        fold, K, dxi, tol = args.m, args.K, args.dxi, args.tol
        xi_max = args.xi_max if args.xi_max is not None else 0.1
        N = args.N if args.N is not None else default_grid_size(fold, K)
    if fold < 2 or K < 1:
        raise UsageError("need m >= 2 and K >= 1")
    if not tol > 0:
        raise UsageError("tol must be positive")
    t0 = time.perf_counter()
    try:
        branch = continue_branch(fold, xi_max, dxi, K=K, N=N, tol=tol, max_iter=args.max_iter, start=start)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    elapsed = time.perf_counter() - t0

    if out:
        write_branch_csv(out, branch, K, N, tol, dxi, xi_max)
    summary = _branch_summary(branch, K, N, tol, dxi, xi_max)
    if args.timings:
        # off by default so that output files stay reproducible
        summary["elapsed_seconds"] = elapsed
    if summary_path:
        write_json(summary_path, summary)
    if svg and branch.states:
        emit_svg(synthesize(branch.states[-1].mv, N, derivs=1).phi, svg, overlay_circle=args.circle)
    print(f"m={fold}: {len(branch)} states, xi up to {summary['xi_last']}, {branch.reason}")
    for w in branch.warnings:
        logging.warning(w)
    if not branch.states or branch.reason != CONVERGED:
        return EXIT_NUMERICAL
    return EXIT_OK


def _branch_summary(branch: Branch, K: int, N: int, tol: float, dxi: float, xi_max: float) -> dict:
    last = branch.states[-1] if branch.states else None
    return {
        "version": __version__,
        "m": branch.fold,
        "K": K,
        "N": N,
        "tol": tol,
        "dxi": dxi,
        "xi_max": xi_max,
        "reason": branch.reason,
        "states": len(branch),
        "xi_last": last.xi if last else None,
        "lambda_last": last.lam if last else None,
        "omega_last": last.omega if last else None,
        "max_residual_inf": max((s.residual_inf for s in branch.states), default=None),
        "conformal_margin_last": 1.0 - last.mv.derivative_bound if last else None,
        "bilipschitz_margin_last": check_conformal(last.mv, N).bilipschitz_margin if last else None,
        "residual_inf_2N_last": last.residual_at(2 * N) if last else None,
        "warnings": branch.warnings,
        "steps": branch.steps,
    }


def cmd_diagnose(args) -> int:
    mv, lam, label = _load_state(args)
    N = _grid_size(args, mv)
    out, svg = _out_path(args.out), _out_path(args.svg)
    try:
        rep = diagnose(mv, lam, N, n_max=args.n_max)
    except VanishingDenominator as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    d = rep.to_dict()
    if not args.keep_curvature:
        d.pop("curvature")
    flags = {
        "q_consistent": rep.q_consistency <= args.q_tol,
        "In_ladder_ok": max(rep.In_recursion_err.values()) <= args.identity_tol,
        "sublemma_ok": max(rep.sublemma_err.values()) <= args.identity_tol,
        # None: too few coefficients above round-off to fit a rate
        "decay_ok": None if rep.decay_indeterminate else bool(rep.decay_rho < 1.0 and rep.decay_residual < 0.1),
    }
    d.update(source=label, N=N, m=mv.fold, K=mv.trunc, flags=flags)
    text = write_json(out, d)
    if out is None:
        sys.stdout.write(text)
    else:
        print(f"{label}: " + ", ".join(f"{k}={v}" for k, v in flags.items()))
    if svg:
        emit_svg(synthesize(mv, N, derivs=1).phi, svg, overlay_circle=args.circle)
    if args.strict and any(v is False for v in flags.values()):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_validate(args) -> int:
    mv, lam, label = _load_state(args)
    N = _grid_size(args, mv)
    out = _out_path(args.out)
    grid = synthesize(mv, N, derivs=2)
    I1 = compute_I1(grid)
    G = compute_G(lam, grid, I1)
    R = rotation_residual(grid, lam, I1)
    ff, _, _ = far_field_error(grid)
    payload = {
        "source": label,
        "m": mv.fold,
        "lambda": lam,
        "omega": 0.5 * (1 - lam),
        "N": N,
        "G_inf": float(np.abs(G).max()),
        "identity_R_plus_half_G": float(np.abs(R + 0.5 * G).max()),
        "far_field_error": ff,
    }
    status = EXIT_OK
    try:
        rep = rigid_rotation_check(mv, lam, t_final=args.t_final, steps=args.steps, N=N)
        payload.update(drift=rep.drift, t_final=rep.t_final, steps=rep.steps)
    except MarkerFoldover as exc:
        payload.update(drift=None, error=str(exc))
        status = EXIT_NUMERICAL
    payload["flags"] = {
        "identity_ok": payload["identity_R_plus_half_G"] <= args.identity_tol,
        "drift_ok": payload["drift"] is not None and payload["drift"] <= args.drift_tol,
    }
    if args.strict and not all(payload["flags"].values()):
        status = EXIT_NUMERICAL
    text = write_json(out, payload)
    if out is None:
        sys.stdout.write(text)
    else:
        print(f"{label}: drift={payload['drift']} |R+G/2|={payload['identity_R_plus_half_G']:.3g}")
    return status


def cmd_spectrum(args) -> int:
    fold, K = args.m, args.K
    tokens = _lambda_list(args.lambdas) if args.lambdas is not None else ["0.2", "0.3", "1/m", "0.6"]
    if not tokens:
        raise UsageError("empty lambda grid")
    lams = [_parse_lambda(t, fold) for t in tokens]
    if any(not 0.0 < lam < 1.0 for lam in lams):
        raise UsageError("lambda values must lie in (0, 1)")
    out = _out_path(args.out)
    zero = ModeVector.zeros(fold, K)
    N = args.N if args.N is not None else default_grid_size(fold, K)
    rows = []
    print(f"{'lambda':>10} {'n':>4} {'1 - n lambda':>14} {'fd':>14} {'zero':>5}")
    for lam in lams:
        spec = linearize_at_zero(lam, fold, K)
        J = jacobian_fd(lam, zero, unknowns="coeffs", step=args.step, N=N).matrix
        fd = np.diag(J)
        offdiag = float(np.abs(J - np.diag(fd)).max())
        for n, g, f in zip(spec.frequencies, spec.g_multipliers, fd):
            is_zero = abs(g) <= 1e-12
            rows.append({"lambda": lam, "n": int(n), "multiplier": float(g), "fd": float(f),
                         "f_multiplier": float(2 * (lam - 1 / n)), "zero": bool(is_zero)})
            print(f"{lam:10.6f} {int(n):4d} {g:14.6e} {f:14.6e} {'*' if is_zero else '':>5}")
        rows[-1]["offdiag_max"] = offdiag
    agreement = max(abs(r["multiplier"] - r["fd"]) for r in rows)
    print(f"max |fd - multiplier| = {agreement:.3e}")
    if out:
        write_json(out, {"m": fold, "K": K, "N": N, "rows": rows, "max_fd_error": agreement})
    return EXIT_OK


def cmd_ellipse_check(args) -> int:
    out = _out_path(args.out)
    N = args.N if args.N is not None else default_grid_size(2, args.K)
    branch = continue_branch(2, args.xi_max, args.dxi, K=args.K, N=N, tol=args.tol, max_iter=args.max_iter)
    dev = {"lambda": 0.0, "omega": 0.0, "higher_coeffs": 0.0, "S": 0.0, "F": 0.0}
    for s in branch.states:
        xi = s.xi
        dev["lambda"] = max(dev["lambda"], abs(s.lam - 0.5 * (1 + xi * xi)))
        dev["omega"] = max(dev["omega"], abs(s.omega - 0.25 * (1 - xi * xi)))
        dev["higher_coeffs"] = max(dev["higher_coeffs"], float(np.abs(s.mv.coeffs[1:]).max(initial=0.0)))
        grid = synthesize(s.mv, N, derivs=2)
        S = compute_S(grid)
        S_exact = _ellipse_S(xi, grid.w)
        dev["S"] = max(dev["S"], float(np.abs(S - S_exact).max()))
        dev["F"] = max(dev["F"], float(np.abs(compute_F(s.lam, grid, S)).max()))
    ok = branch.reason == CONVERGED and all(v <= args.tol_check for v in dev.values())
    payload = {"states": len(branch), "reason": branch.reason, "max_deviation": dev, "pass": ok}
    text = write_json(out, payload)
    if out is None:
        sys.stdout.write(text)
    else:
        print(", ".join(f"{k}={v:.3g}" for k, v in dev.items()))
    return EXIT_OK if ok else EXIT_NUMERICAL


def _ellipse_S(xi: float, w):
    # log-kernel integral for Phi = w + xi conj(w)
    return -0.5 * xi * (w + xi * np.conj(w)) ** 2


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vstates", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value file; keys are option names")
        p.add_argument("--out", help="output file (directory must exist)")

    p = sub.add_parser("branch", help="continue an m-fold branch from the disc")
    common(p)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--K", type=int, default=16)
    p.add_argument("--N", type=int)
    p.add_argument("--xi-max", dest="xi_max", type=float)
    p.add_argument("--dxi", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=30)
    p.add_argument("--resume", help="branch CSV to extend")
    p.add_argument("--summary", help="JSON run summary (default: --out with .json)")
    p.add_argument("--svg", help="SVG of the last boundary")
    p.add_argument("--circle", action="store_true", help="overlay the unit circle in the SVG")
    p.add_argument("--timings", action="store_true", help="add wall-clock time to the summary")
    p.set_defaults(func=cmd_branch)

    p = sub.add_parser("diagnose", help="regularity and shape diagnostics for one state")
    common(p)
    _add_state_source(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=4)
    p.add_argument("--q-tol", dest="q_tol", type=float, default=1e-8)
    p.add_argument("--identity-tol", dest="identity_tol", type=float, default=1e-9)
    p.add_argument("--keep-curvature", dest="keep_curvature", action="store_true")
    p.add_argument("--strict", action="store_true", help="exit 1 if any flag fails")
    p.add_argument("--svg")
    p.add_argument("--circle", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("validate", help="independent velocity checks and a rigid-rotation run")
    common(p)
    _add_state_source(p)
    p.add_argument("--t-final", dest="t_final", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--drift-tol", dest="drift_tol", type=float, default=1e-6)
    p.add_argument("--identity-tol", dest="identity_tol", type=float, default=1e-10)
    p.add_argument("--strict", action="store_true", help="exit 1 if any flag fails")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spectrum", help="linearization at the disc: multipliers vs finite differences")
    common(p)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--N", type=int)
    p.add_argument("--lambdas", help="comma list; '1/m' and fractions allowed")
    p.add_argument("--step", type=float, default=1e-6)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("ellipse-check", help="compare the m=2 branch with the Kirchhoff ellipses")
    common(p)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--N", type=int)
    p.add_argument("--xi-max", dest="xi_max", type=float, default=0.5)
    p.add_argument("--dxi", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=30)
    p.add_argument("--tol-check", dest="tol_check", type=float, default=1e-10)
    p.set_defaults(func=cmd_ellipse_check)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = read_config(args.config)
    except (OSError, ValueError) as exc:
        parser.error(f"config: {exc}")
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[args.command]
    known = {a.dest for a in sub._actions} - {"help", "config"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        parser.error(f"config: unknown keys {', '.join(unknown)}")
    flags = {a.dest for a in sub._actions if a.nargs == 0}
    defaults = {}
    for k, v in cfg.items():
        defaults[k] = v.lower() in ("1", "true", "yes", "on") if k in flags else v
    # command-line values win, so the config only replaces defaults
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, StateFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
