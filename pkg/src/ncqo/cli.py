"""Command-line front end.

Exit codes: 0 success, 1 other numerical failure, 2 configuration error,
3 physical-window violation, 4 verification failure.
"""
import argparse
import sys

import numpy as np

from . import report, tolerances
from .ermakov import ep_residual
from .errors import (ConstraintViolated, InvalidParameter, NcqoError,
                     OutsidePhysicalWindow, ParseError, SignConstraintViolated,
                     UnknownFigure)
from .observables import (StateParams, energy_expectation, matrix_element_xk,
                          matrix_element_yk, oracle_matrix_element, state_at,
                          uncertainty_commutative, uncertainty_noncommutative)
from .phases import berry_phase, lewis_phase_quadrature
from .scenario import load_scenario

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_WINDOW, EXIT_VERIFY = 0, 1, 2, 3, 4
CONFIG_ERRORS = (ParseError, ConstraintViolated, InvalidParameter,
                 SignConstraintViolated, UnknownFigure)


class VerificationFailed(Exception):
    pass


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _scenario(args):
    if not args.config:
        raise ParseError("--config is required for this command", key="--config")
    return load_scenario(args.config)


def _grid(args, sc=None):
    return report.scenario_grid(sc, sc.grid if sc else None, args.t0, args.t1, args.steps)


def _quantum(args, sc):
    n = sc.quantum.n if args.n is None else args.n
    m = sc.quantum.m if args.m is None else args.m
    return n, m


def _need_ep(sc):
    if sc.ep is None:
        raise ParseError("this command needs [framework] family = ...", key="framework.family")
    return sc.ep


def cmd_ep(args):
    tol = 1e-9
    if args.config:
        sc = _scenario(args)
        grid = _grid(args, sc)
        sols = {sc.name or sc.ep.family: _need_ep(sc)}
    else:
        grid = np.array([])
        sols = report.acceptance_families()
    rows, bad = [], False
    for name, sol in sols.items():
        res = report.scaled_ep_residual(sol, grid if len(grid) else None)
        ok = res < tol
        bad |= not ok
        rows.append((name, res, tol, "PASS" if ok else "FAIL"))
    meta = ["residual: max |EP residual| / (1 + a^2/rho^3)"]
    _emit(report.write_csv(("family", "residual", "tolerance", "status"), rows, meta), args.out)
    if bad:
        raise VerificationFailed("EP residual above tolerance")


def cmd_phase(args):
    sc = _scenario(args)
    ep = _need_ep(sc)
    n, m = _quantum(args, sc)
    co = sc.coefficients()
    rows = [(t, lewis_phase_quadrature(co, ep, n, m - n, float(t)).value) for t in _grid(args, sc)]
    _emit(report.write_csv(("t", "phase"), rows, [f"n={n}, m={m}"]), args.out)


def cmd_berry(args):
    if args.config:
        sc = _scenario(args)
        f = sc.const("f", 1.0)
        n, m = _quantum(args, sc)
        cases = {sc.name or sc.framework: sc.coefficients()}
    else:
        f, n, m = 1.0, (1 if args.n is None else args.n), (1 if args.m is None else args.m)
        cases = report.berry_cases()
    rows = []
    for name, co in cases.items():
        r = berry_phase(co, f, n, m - n)
        rows.append((name, r.value, r.alt_value, r.congruence_gap()))
    meta = [f"n={n}, m={m}, f={report.fmt(f)}"]
    _emit(report.write_csv(("case", "berry", "gauge_alternate", "gap_mod_2pi"), rows, meta), args.out)


def cmd_energy(args):
    sc = _scenario(args)
    ep = _need_ep(sc)
    n, m = _quantum(args, sc)
    co = sc.coefficients()
    G = ep.constants.get("Gamma", 1.0)
    rows = [(t, G * t, energy_expectation(sc.framework, co, ep, n, m, float(t)))
            for t in _grid(args, sc)]
    _emit(report.write_csv(("t", "gamma_t", "energy"), rows, [f"n={n}, m={m}"]), args.out)


def cmd_matelem(args):
    sp = StateParams(args.rho, args.rhodot, args.a, args.d)
    n = 0 if args.n is None else args.n
    m = 0 if args.m is None else args.m
    mp = m if args.mp is None else args.mp
    closed = (matrix_element_xk if args.axis == "x" else matrix_element_yk)(n, m, mp, args.k, sp)
    oracle = oracle_matrix_element(args.axis, args.k, n, m, mp, sp)
    rows = [(args.axis, args.k, n, m, mp, closed.real, closed.imag, oracle.real, oracle.imag)]
    header = ("axis", "k", "n", "m", "mp", "re", "im", "oracle_re", "oracle_im")
    _emit(report.write_csv(header, rows), args.out)


def cmd_uncert(args):
    sc = _scenario(args)
    ep = _need_ep(sc)
    n, m = _quantum(args, sc)
    co = sc.coefficients()
    nc = sc.framework == "generalized-II" and "theta" in sc.functions
    header = ["t", "dx_dy", "dp_dp", "dx_dp"]
    if nc:
        header += ["dX_dY", "dPX_dPY", "dX_dPX"]
    rows = []
    for t in _grid(args, sc):
        t = float(t)
        sp = state_at(co, ep, n, m, t)
        u = uncertainty_commutative(sp)
        row = [t, u.dx_dy, u.dp_dp, u.dx_dp]
        if nc:
            v = uncertainty_noncommutative(sp, sc.functions["theta"](t), sc.functions["Omega"](t))
            row += [v.dX_dY, v.dPX_dPY, v.dX_dPX]
        rows.append(row)
    _emit(report.write_csv(header, rows, [f"n={n}, m={m}"]), args.out)


def cmd_figure(args):
    _emit(report.run_figure(args.id, args.t1, args.steps), args.out)


def cmd_verify_all(args):
    rows = report.verify_all()
    _emit(report.format_report(rows), args.out)
    if any(r.status == "FAIL" for r in rows):
        raise VerificationFailed("one or more checks failed")


def cmd_run(args):
    sc = _scenario(args)
    n, m = _quantum(args, sc)
    _emit(report.run_scenario(sc, _grid(args, sc), n, m), args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="ncqo", description="Time-dependent noncommutative oscillators.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario TOML file")
    common.add_argument("--t0", type=float)
    common.add_argument("--t1", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--n", type=int)
    common.add_argument("--m", type=int)
    sub = p.add_subparsers(dest="command", required=True)

    ep = sub.add_parser("ep", parents=[common], help="Ermakov-Pinney family checks")
    ep.add_argument("action", choices=["verify"])
    ep.set_defaults(func=cmd_ep)
    for name, fn, text in (("phase", cmd_phase, "Lewis phase over a grid"),
                           ("energy", cmd_energy, "energy expectation over a grid"),
                           ("uncert", cmd_uncert, "uncertainty products over a grid"),
                           ("run", cmd_run, "phase, energy and uncertainty columns"),
                           ("berry", cmd_berry, "Berry phase over one cycle"),
                           ("verify-all", cmd_verify_all, "full verification suite")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.set_defaults(func=fn)

    me = sub.add_parser("matelem", parents=[common], help="<n,m-n| q^k |n,m'-n>")
    me.add_argument("--mp", type=int)
    me.add_argument("--k", type=int, default=1)
    me.add_argument("--axis", choices=["x", "y"], default="x")
    me.add_argument("--rho", type=float, default=1.0)
    me.add_argument("--rhodot", type=float, default=0.0)
    me.add_argument("--a", type=float, default=1.0)
    me.add_argument("--d", type=float, default=0.0)
    me.set_defaults(func=cmd_matelem)

    fig = sub.add_parser("figure", parents=[common], help="emit a figure dataset")
    fig.add_argument("id", help=", ".join(report.FIGURES))
    fig.set_defaults(func=cmd_figure)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        tolerances.get("quad")  # surfaces a malformed NCQO_TOL early
        args.func(args)
    except VerificationFailed as exc:
        print(f"ncqo: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OutsidePhysicalWindow as exc:
        print(f"ncqo: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except CONFIG_ERRORS as exc:
        print(f"ncqo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NcqoError as exc:
        print(f"ncqo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
