"""Figure datasets, scenario runs and the verification suite.

All CSV output uses 17 significant digits and '\\n' line endings so that
repeated runs are byte-identical.
"""
from dataclasses import dataclass
import io
import math

import numpy as np

from . import expr as E
from .ermakov import (chiellini_check, chiellini_lambda, ep_elementary,
                      ep_exponential, ep_rational, ep_residual, integrate_ep)
from .errors import NcqoError, OutsidePhysicalWindow, UnknownFigure
from .observables import (StateParams, energy_expectation, matrix_element_xk,
                          matrix_element_yk, oracle_matrix_element,
                          oracle_nc_second_moments, uncertainty_commutative,
                          uncertainty_noncommutative, state_at)
from .phases import (berry_partial, berry_phase, lewis_phase_closed,
                     lewis_phase_quadrature)
from .scenario import (QuantumNumbers, Scenario, coeffs_generalized_I,
                       coeffs_generalized_II, physical_window)
from .specfun import (LaguerreSpec, laguerre_weighted_integral,
                      verify_appendix_identity, verify_power_moment_identity)


def fmt(x):
    return format(float(x), ".17g")


def write_csv(header, rows, meta=()):
    buf = io.StringIO(newline="")
    for line in meta:
        buf.write(f"# {line}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                           for v in row) + "\n")
    return buf.getvalue()


# figures

@dataclass(frozen=True)
class FigureSpec:
    id: str
    constants: str
    t1: float
    steps: int
    axis: str = "gamma_t"


FIGURES = {
    "dho-fig1": FigureSpec("dho-fig1", "M=1, Gamma=1, mu=1; sigma=1e7, Delta=1e7; omega0=1e3; m=0, n=1", 20.0, 201),
    "dho-fig2": FigureSpec("dho-fig2", "M=1, Gamma=1, mu=1, chi=1; sigma=1e7, Delta=1e7; omega0=1e3; n=1, m=0", 20.0, 201),
    "dho-fig3": FigureSpec("dho-fig3", "M=1, Gamma=1, mu=1, chi=1; sigma=1e7, Delta=1e7; omega0=1e3; m=0, n=1", 2.5, 201),
    "mdho-fig1": FigureSpec("mdho-fig1", "M=1, q=1, mu=1, Gamma=1; B0=1e2; omega0=1e3; Delta=1e7, sigma=1e7; n=1, m=0", 20.0, 201),
    "mdho-fig2": FigureSpec("mdho-fig2", "M=1, q=1, mu=1, Gamma=1; B0=1e20; omega0=1e3; Delta=1e7, sigma=1e7; n=1, m=0", 20.0, 201),
    "berry-fig1": FigureSpec("berry-fig1", "l=0; n=1; M=1, omega0=1; theta0=2, Omega0=2", 4 * math.pi, 201, "f_t"),
    "nc-fig1": FigureSpec("nc-fig1", "A: m=1, n=1, mu=1, Gamma=1, Delta=5/4, C=2; B: m=1, mu=1, omega0=1, sigma=1, Gamma=1, Delta=5/4, C->inf", 20.0, 201),
    "nc-fig2": FigureSpec("nc-fig2", "A: m=1, n=1, k=1, mu=1, Gamma=1, omega0=1, delta=1, chi=1, sigma=1, Delta=2; B: m=1, k=1, mu=1, Gamma=1, sigma=1, chi=1, Delta=10/9", 20.0, 201),
}


def _x():
    return E.power(1.0, 1.0, 1)


def figure_scenarios(fig_id):
    """(label, Scenario, omega0) for each curve of an energy figure."""
    w0 = 1e3
    qn = QuantumNumbers(1, 0)
    if fig_id == "dho-fig1":
        ep = ep_exponential(1e7, 1e7, 1.0, 1.0)
        k = dict(M=1.0, omega0=w0)
        return [
            ("A", Scenario("standard", k, dict(f=1.0, omega=w0 * E.exp(-0.5)), qn, ep, "Set-IA"), w0),
            ("B", Scenario("standard", k, dict(f=E.exp(-1.0), omega=w0), qn, ep, "Set-IB"), w0),
            ("C", Scenario("standard", k, dict(f=E.exp(-1.0), omega=w0 * E.exp(-0.5)), qn, ep, "Set-IC"), w0),
        ]
    if fig_id == "dho-fig2":
        ep = ep_rational(2, 1e7, 1e7, 1.0, 1.0, 1.0)
        return [("A", Scenario("standard", dict(M=1.0), dict(f=1.0, omega=w0 / _x()), qn, ep), w0)]
    if fig_id == "dho-fig3":
        ep = ep_elementary(1e7, 1e7, 1.0, 1.0, 1.0)
        return [("A", Scenario("standard", dict(M=1.0), dict(f=1.0, omega=w0 / _x()), qn, ep), w0)]
    if fig_id == "mdho-fig1":
        ep = ep_exponential(1e7, 1e7, 1.0, 1.0)
        k = dict(M=1.0, q=1.0)
        B0 = 1e2
        f = E.exp(-1.0)
        cases = [
            ("I", B0 * E.ONE, E.const(w0)),
            ("II", B0 * E.exp(1.0), E.const(w0)),
            ("III", B0 * E.exp(-1.0), E.const(w0)),
            ("IV", B0 * E.exp(1.0), w0 * E.exp(-0.5)),
            ("I-nofield", E.ZERO, E.const(w0)),
            ("IV-nofield", E.ZERO, w0 * E.exp(-0.5)),
        ]
        return [(lab, Scenario("magnetic", k, dict(f=f, omega=w, B=B), qn, ep, lab), w0)
                for lab, B, w in cases]
    if fig_id == "mdho-fig2":
        k = dict(M=1.0, q=1.0)
        out = []
        for lab, ep in (("I", ep_rational(2, 1e7, 1e7, 1.0, 1.0, 1.0)),
                        ("II", ep_rational(-2, 1e7, 1e7, 1.0, 1.0, 1.0))):
            for suffix, B0 in (("", 1e20), ("-nofield", 0.0)):
                fn = dict(f=1.0, omega=w0 / _x(), B=B0 / _x())
                out.append((lab + suffix, Scenario("magnetic", k, fn, qn, ep, lab + suffix), w0))
        return out
    if fig_id == "nc-fig1":
        qn = QuantumNumbers(1, 1)
        return [("A", Scenario("generalized-II", {}, {}, qn, ep_exponential(1, 1.25, 1, 1, C=2.0)), 1.0),
                ("B", Scenario("generalized-II", {}, {}, qn, ep_exponential(1, 1.25, 1, 1)), 1.0)]
    if fig_id == "nc-fig2":
        qn = QuantumNumbers(1, 1)
        return [("A", Scenario("generalized-II", {}, {}, qn, ep_rational(1, 1, 2, 1, 1, 1, delta=1.0)), 1.0),
                ("B", Scenario("generalized-II", {}, {}, qn, ep_rational(1, 1, 10 / 9, 1, 1, 1)), 1.0)]
    raise UnknownFigure(f"unknown figure {fig_id!r}")


def berry_cases(M=1.0, w0=1.0, theta0=2.0, Omega0=2.0, f=1.0):
    """The five periodic coefficient sets (system I cases I-III, system II cases I-II)."""
    s2 = math.sqrt(2.0)
    sin, cos = E.sin(f), E.cos(f)
    return {
        "sysI-caseI": coeffs_generalized_I(1 / M, M * w0 ** 2 / 2, (w0 / s2) * cos, 0.0, 0.0),
        "sysI-caseII": coeffs_generalized_I(1 / M, 0.5 * M * w0 ** 2 * sin ** 6, (w0 / s2) * sin ** 3,
                                            0.0, Omega0 * cos),
        "sysI-caseIII": coeffs_generalized_I(1 / M, M * w0 ** 2 / 2, w0 / s2, theta0 * sin, Omega0 * sin),
        "sysII-caseI": coeffs_generalized_II(1 / M, 0.5 * M * w0 ** 2, theta0 * cos, -Omega0 * cos),
        "sysII-caseII": coeffs_generalized_II(sin ** 2 / M, 0.5 * M * w0 ** 2 * sin ** 2, theta0, -Omega0),
    }


def run_figure(fig_id, t1=None, steps=None):
    """CSV text for one figure; rows outside a curve's physical window are dropped."""
    if fig_id not in FIGURES:
        raise UnknownFigure(f"unknown figure {fig_id!r}; known: {', '.join(FIGURES)}")
    spec = FIGURES[fig_id]
    t1 = spec.t1 if t1 is None else t1
    steps = spec.steps if steps is None else steps
    grid = np.linspace(0.0, t1, steps) if steps > 0 else np.array([])
    meta = [f"figure: {fig_id}", f"constants: {spec.constants}"]
    rows = []
    if fig_id == "berry-fig1":
        meta.append("value: integral of the Berry integrand from 0 to t, times (n+l)")
        cases = berry_cases()
        for lab, key in (("I", "sysI-caseI"), ("II", "sysI-caseII"), ("III", "sysI-caseIII")):
            for t in grid:
                rows.append((t, t, berry_partial(cases[key], 1, 0, float(t)), lab))
        return write_csv(("t", "f_t", "value", "case"), rows, meta)
    meta.append("value: <E>/omega0")
    for lab, sc, w0 in figure_scenarios(fig_id):
        win = physical_window(sc, t1) if t1 > 0 else [(0.0, 0.0)]
        meta.append(f"window[{lab}]: " + "; ".join(f"{fmt(a)}..{fmt(b)}" for a, b in win))
        co = sc.coefficients()
        G = sc.ep.constants.get("Gamma", 1.0)
        for t in grid:
            if not any(a <= t <= b for a, b in win):
                continue
            e = energy_expectation(sc.framework, co, sc.ep, sc.quantum.n, sc.quantum.m, float(t))
            rows.append((t, G * t, e / w0, lab))
    return write_csv(("t", "gamma_t", "value", "case"), rows, meta)


# scenario runs

def scenario_grid(scenario, raw=None, t0=None, t1=None, steps=None):
    g = dict(raw or {})
    t0 = g.get("t0", 0.0) if t0 is None else t0
    t1 = g.get("t1", 1.0) if t1 is None else t1
    steps = int(g.get("steps", 11)) if steps is None else steps
    if steps <= 0:
        return np.array([])
    return np.linspace(float(t0), float(t1), steps)


def run_scenario(scenario, grid, n=None, m=None):
    """CSV with phase, energy and uncertainty columns over ``grid``.

    Any grid point outside the physical window raises OutsidePhysicalWindow.
    """
    n = scenario.quantum.n if n is None else n
    m = scenario.quantum.m if m is None else m
    header = ("t", "gamma_t", "phase", "energy", "dx_dy", "dp_dp", "dx_dp")
    meta = [f"scenario: {scenario.name or scenario.framework}",
            f"framework: {scenario.framework}", f"n={n}, m={m}"]
    if len(grid) == 0:
        return write_csv(header, [], meta)
    if scenario.ep is None:
        raise NcqoError("the scenario needs an EP family ([framework] family = ...)")
    t_hi = float(max(grid[-1], 1e-12))
    win = physical_window(scenario, t_hi)
    meta.append("window: " + "; ".join(f"{fmt(a)}..{fmt(b)}" for a, b in win))
    co = scenario.coefficients()
    G = scenario.ep.constants.get("Gamma", 1.0)
    rows = []
    for t in grid:
        t = float(t)
        if not any(a - 1e-12 <= t <= b + 1e-12 for a, b in win):
            raise OutsidePhysicalWindow(f"t={t} lies outside the physical window", t=t)
        phase = lewis_phase_quadrature(co, scenario.ep, n, m - n, t).value if co.c is not None else float("nan")
        e = energy_expectation(scenario.framework, co, scenario.ep, n, m, t)
        u = uncertainty_commutative(state_at(co, scenario.ep, n, m, t))
        rows.append((t, G * t, phase, e, u.dx_dy, u.dp_dp, u.dx_dp))
    return write_csv(header, rows, meta)


# verification suite

@dataclass(frozen=True)
class Check:
    name: str
    status: str
    residual: float
    tolerance: float


def _check(name, residual, tol, note_ok="PASS"):
    ok = residual < tol and math.isfinite(residual)
    return Check(name, note_ok if ok else "FAIL", float(residual), float(tol))


def acceptance_families():
    return {
        "exponential": ep_exponential(1, 1.25, 1, 1),
        "exponential-C2": ep_exponential(1, 1.25, 1, 1, C=2.0),
        "rational-k1": ep_rational(1, 1, 10 / 9, 1, 1, 1),
        "rational-k1-delta1": ep_rational(1, 1, 2, 1, 1, 1, delta=1.0),
        "rational-k2": ep_rational(2, 1, 17 / 16, 1, 1, 1),
        "rational-neg2": ep_rational(-2, 1, 1.25, 1, 1, 1),
        "elementary": ep_elementary(1, 1, 1, 1, 1),
    }


def scaled_ep_residual(sol, ts=None):
    """max |residual| / (1 + a^2/rho^3), by default over 200 points of [0, 5/Gamma]."""
    if ts is None:
        ts = np.linspace(0.0, 5.0 / sol.constants["Gamma"], 200)
    return max(abs(ep_residual(sol, float(t))) / (1 + sol.a(t) ** 2 / sol.rho(t) ** 3) for t in ts)


def check_ep_residuals():
    return [_check(f"1 ep-residual {name}", scaled_ep_residual(sol), 1e-9)
            for name, sol in acceptance_families().items()]


def check_rk4():
    out = []
    for name, sol in acceptance_families().items():
        G = sol.constants["Gamma"]
        grid = np.linspace(0.0, 5.0 / G, 101)
        num = integrate_ep(sol.a, sol.b, sol.d, *sol.initial_conditions(), grid)
        out.append(_check(f"2 rk4-oracle {name}", float(np.max(np.abs(np.array(num) - sol.rho(grid)))), 1e-6))
    return out


def check_chiellini():
    out = []
    for name, sol, q, lam in (("exponential", ep_exponential(1, 1.25, 1, 1), 0.25, -2.0),
                              ("rational-k2", ep_rational(2, 1, 17 / 16, 1, 1, 1), 0.1875, -4.0)):
        rep = chiellini_check(sol)
        out.append(_check(f"3 chiellini {name} q", abs(rep.q - q), 1e-10))
        out.append(_check(f"3 chiellini {name} lambda", abs(rep.lambda_q - lam), 1e-10))
        out.append(_check(f"3 chiellini {name} branch", abs(rep.lambda_q - chiellini_lambda(rep.q)), 1e-10))
    return out


def lewis_cases():
    """(name, closed-form case, constants, coefficients, ep) for the three elementary phases."""
    x = _x()
    ep1 = ep_exponential(1, 1.25, 1, 1)
    k1 = dict(M=1.0, sigma=1.0, mu=1.0, Delta=1.25, omega0=1.0, Gamma=1.0)
    s1 = Scenario("standard", k1, dict(f=E.exp(-1.0), omega=1.0), QuantumNumbers(1, 1), ep1)
    ep2 = ep_exponential(2, 2.125, 1, 1)
    k2 = dict(M=1.0, q=1.0, B0=0.5, omega0=1.0, sigma=2.0, Delta=2.125, mu=1.0, Gamma=1.0)
    s2 = Scenario("magnetic", k2, dict(f=E.exp(-1.0), omega=1.0, B=0.5 * E.exp(1.0)), QuantumNumbers(1, 1), ep2)
    ep3 = ep_rational(-2, 1, 1.25, 1, 1, 1)
    k3 = dict(M=1.0, q=1.0, B0=0.5, omega0=1.0, sigma=1.0, Delta=1.25, mu=1.0, Gamma=1.0, chi=1.0)
    s3 = Scenario("magnetic", k3, dict(f=1.0, omega=1.0 / x, B=0.5 / x), QuantumNumbers(1, 1), ep3)
    return [("set-Ib", "set-Ib", k1, s1.coefficients(), ep1),
            ("magnetic-case-II", "magnetic-set-I-case-II", k2, s2.coefficients(), ep2),
            ("rational-k-neg2", "rational-k-neg2", k3, s3.coefficients(), ep3)]


def check_lewis():
    out = []
    for name, case, k, co, ep in lewis_cases():
        worst = 0.0
        for t in (0.5, 1.0, 2.0, 5.0):
            q = lewis_phase_quadrature(co, ep, 1, 0, t).value
            c = lewis_phase_closed(case, k, 1, 0, t).value
            worst = max(worst, abs(q - c) / (1 + abs(c)))
        out.append(_check(f"4 lewis {name}", worst, 1e-9))
    q = lewis_phase_quadrature(lewis_cases()[0][3], lewis_cases()[0][4], 1, 0, 2.0).value
    out.append(_check("4 lewis set-Ib value at t=2", abs(q + 1.0), 1e-9))
    return out


BERRY_EXPECTED = {
    "sysI-caseI": -math.pi,
    "sysI-caseII": 3 * math.pi / (2 * math.sqrt(2)),
    "sysI-caseIII": 0.0,
    "sysII-caseI": 0.0,
    "sysII-caseII": 0.0,
}


def check_berry():
    out = []
    for name, co in berry_cases().items():
        res = berry_phase(co, 1.0, 1, 0)
        out.append(_check(f"5 berry {name}", abs(res.value - BERRY_EXPECTED[name]), 1e-8))
        out.append(_check(f"5 berry {name} gauge", res.congruence_gap(), 1e-6))
    return out


MATELEM_STATES = (StateParams(1.0, 0.0, 1.0, 0.0), StateParams(1.3, 0.4, 0.8, -0.2),
                  StateParams(0.7, -0.5, 2.0, 0.3))


def check_matrix_elements():
    worst = 0.0
    diag = 0.0
    for sp in MATELEM_STATES:
        for n in range(5):
            for m in range(5):
                for mp in range(5):
                    for k in range(5):
                        for axis, fn in (("x", matrix_element_xk), ("y", matrix_element_yk)):
                            worst = max(worst, abs(fn(n, m, mp, k, sp) - oracle_matrix_element(axis, k, n, m, mp, sp)))
                diag = max(diag, abs(matrix_element_xk(n, m, m, 2, sp) - sp.rho ** 2 * (n + m + 1) / 2))
    return [_check("6 matelem closed vs oracle", worst, 1e-6),
            _check("6 matelem diagonal x^2", diag, 1e-12)]


def _slope(grid, vals):
    return float(np.polyfit(np.log(grid), np.log(vals), 1)[0])


def check_energy():
    out = []
    nc1 = dict((lab, sc) for lab, sc, _ in figure_scenarios("nc-fig1"))
    A = nc1["A"]
    coA = A.coefficients()
    ts = np.linspace(0.0, 20.0, 401)
    eA = np.array([energy_expectation(A.framework, coA, A.ep, 1, 1, t) for t in ts])
    out.append(_check("7a nc-fig1 A at t=0", abs(eA[0] - 2.25), 1e-9))
    out.append(_check("7a nc-fig1 A at Gamma t=20", abs(eA[-1] - 3.75), 1e-6))
    out.append(_check("7a nc-fig1 A monotone (largest drop)", max(0.0, float(-np.min(np.diff(eA)))), 1e-15))
    B = nc1["B"]
    coB = B.coefficients()
    eB = np.array([energy_expectation(B.framework, coB, B.ep, 1, 1, t) for t in ts])
    out.append(_check("7b nc-fig1 B constant spread", float(np.ptp(eB)), 1e-9))
    out.append(_check("7b nc-fig1 B value", abs(eB[0] - 3.75), 1e-9))
    gt = np.linspace(10.0, 100.0, 91)
    for lab, sc, _ in figure_scenarios("nc-fig2"):
        co = sc.coefficients()
        e = [energy_expectation(sc.framework, co, sc.ep, 1, 1, t) for t in gt]
        out.append(_check(f"7c nc-fig2 {lab} log-log slope", abs(_slope(gt, e) + 1.0), 0.05))
    setA = figure_scenarios("dho-fig1")[0][1]
    win = physical_window(setA, 20.0)
    hi = math.log(1e7)
    err = abs(win[0][0] - 0.0) + abs(win[0][1] - hi) if len(win) == 1 else float("inf")
    out.append(_check("7d Set-Ia window endpoints", err, 1e-6))
    return out


def check_laguerre():
    out = []
    worst = 0.0
    for alpha in (0, 1, 2):
        for n in range(7):
            for m in range(7):
                v = laguerre_weighted_integral(alpha, LaguerreSpec(n, alpha), LaguerreSpec(m, alpha))
                ref = math.gamma(n + alpha + 1) / math.factorial(n) if n == m else 0.0
                worst = max(worst, abs(v - ref) / max(1.0, abs(ref)))
    out.append(_check("8 laguerre orthonormality", worst, 1e-9))
    for p in (0, 1):
        w = 0.0
        for n in range(7):
            for k in range(7):
                lhs, rhs = verify_power_moment_identity(n, k, p)
                w = max(w, abs(lhs - rhs) / max(1.0, abs(rhs)))
        out.append(_check(f"8 power-moment identity p={p}", w, 1e-9))
    w = 0.0
    for n in range(2, 7):
        for m in range(2, n + 1):
            w = max(w, verify_appendix_identity(n, m))
    out.append(_check("8 appendix identity", w, 1e-9))
    lhs, rhs = verify_power_moment_identity(1, 0, 2)
    reproduced = abs(lhs - 14) < 1e-9 and abs(rhs - 9) < 1e-12
    out.append(Check("8 power-moment p=2 counterexample (14 vs 9)",
                     "DISCREPANCY" if reproduced else "FAIL", abs(lhs - rhs), 0.0))
    return out


def check_uncertainty():
    out = []
    worst_d = 0.0
    worst_nc = 0.0
    for sp in MATELEM_STATES:
        for n, m in ((0, 0), (1, 0), (2, 3)):
            s = sp.state(n, m)
            s0 = StateParams(s.rho, s.rhodot, s.a, 1e-14, n, m)
            c0 = uncertainty_commutative(StateParams(s.rho, s.rhodot, s.a, 0.0, n, m))
            c1 = uncertainty_commutative(s0)
            worst_d = max(worst_d, abs(c1.dx_dy - c0.dx_dy), abs(c1.dp_dp - c0.dp_dp), abs(c1.dx_dp - c0.dx_dp))
            c = uncertainty_commutative(s)
            u = uncertainty_noncommutative(s, 1e-12, -1e-12)
            worst_nc = max(worst_nc, abs(u.dX_dY - c.dx_dy), abs(u.dPX_dPY - c.dp_dp), abs(u.dX_dPX - c.dx_dp))
    out.append(_check("9 commutative d->0 limit", worst_d, 1e-12))
    out.append(_check("9 noncommutative theta,Omega->0 limit", worst_nc, 1e-10))
    g = uncertainty_commutative(StateParams(1.0, 0.0, 1.0, 0.0))
    out.append(_check("9 ground state dx dp", abs(g.dx_dp - 0.5), 1e-15))
    sp = StateParams(1.0, 0.0, 1.0, -0.25)
    X2, P2 = oracle_nc_second_moments(sp, 1.0, -1.0)
    u = uncertainty_noncommutative(sp, 1.0, -1.0)
    out.append(_check("9 NC moments vs Bopp-map oracle", max(abs(X2 - u.X2), abs(P2 - u.P2)), 1e-9))
    return out


def check_determinism():
    a = run_figure("nc-fig1", steps=21)
    b = run_figure("nc-fig1", steps=21)
    return [_check("10 figure CSV byte-stable", 0.0 if a == b else 1.0, 0.5)]


CHECK_GROUPS = (check_ep_residuals, check_rk4, check_chiellini, check_lewis, check_berry,
                check_matrix_elements, check_energy, check_laguerre, check_uncertainty,
                check_determinism)


def verify_all():
    """Run every check; an exception inside a group becomes a FAIL row."""
    rows = []
    for group in CHECK_GROUPS:
        try:
            rows.extend(group())
        except NcqoError as exc:
            rows.append(Check(f"{group.__name__} raised {type(exc).__name__}: {exc}", "FAIL",
                              float("nan"), 0.0))
    return rows


def format_report(rows):
    lines = ["name,status,residual,tolerance"]
    for r in rows:
        lines.append(f"{r.name},{r.status},{r.residual:.6e},{r.tolerance:.1e}")
    failed = sum(r.status == "FAIL" for r in rows)
    lines.append(f"# {len(rows)} checks, {failed} failed")
    return "\n".join(lines) + "\n"
