"""Ermakov-Pinney solution families, the Chiellini check and an RK4 oracle.

The auxiliary equation used everywhere (xi = 1) is

    rho'' - (a'/a) rho' + rho (a b - 2 d' - 4 d^2 + 2 (a'/a) d) - a^2/rho^3 = 0.
"""
from dataclasses import dataclass, field
import math
from types import MappingProxyType

import numpy as np

from . import expr as E
from . import tolerances
from .errors import (ChielliniInapplicable, ConstraintViolated, InvalidC,
                     InvalidK, InvalidParameter, NoConvergence, SingularEP)

EXP_RELATION = "mu^4 = sigma^2/(sigma*Delta - Gamma^2/4)"
RAT_RELATION = ("4*delta*mu^4*k^2*(Gamma/k + delta) = "
                "(sigma*mu^4*Delta - sigma^2)*(k+2)^2 - Gamma^2*mu^4")
NEG2_RELATION = "4*sigma*Delta*mu^4 - Gamma^2*mu^4 + mu^4*(8*Gamma*delta - 16*delta^2) = 4*sigma^2"
ELM_RELATION = "Delta*mu^4 = sigma"


@dataclass(frozen=True)
class EpSolution:
    family: str
    a: E.TimeExpr
    b: E.TimeExpr
    rho: E.TimeExpr
    d: E.TimeExpr
    constants: dict = field(default_factory=dict)
    residual: float = 0.0
    xi: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "constants", MappingProxyType(dict(self.constants)))

    def initial_conditions(self, t0=0.0):
        return self.rho(t0), self.rho.derivative()(t0)

    @property
    def pole_time(self):
        """Time at which the exponential d(t) blows up (negative when C > 1)."""
        C = self.constants.get("C")
        if self.family != "exponential" or C is None:
            return None
        return -math.log(C) / self.constants["s"]


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise InvalidParameter(f"{k} must be positive, got {v}")


def _relative(lhs_terms, rhs_terms):
    lhs, rhs = sum(lhs_terms), sum(rhs_terms)
    scale = max([abs(x) for x in lhs_terms + rhs_terms] + [1e-30])
    return abs(lhs - rhs) / scale


def _validate(residual, relation, family):
    if residual > tolerances.get("constraint"):
        raise ConstraintViolated(
            f"{family} family violates {relation} (relative residual {residual:.3e})",
            relation=relation, residual=residual)


def ep_exponential(sigma, Delta, mu, Gamma, C=None, general=False):
    """a = sigma e^(-Gt), b = Delta e^(Gt), rho = mu e^(-Gt/2).

    Without ``C``, d = 0 and the constants must satisfy the exponential
    constraint.  With ``C`` (> 1) the d(t) of the scale-invariant extension
    is attached.  By default the constraint is still enforced, which makes
    kappa vanish and d = Gamma/(2 (C e^(Gt) - 1)).  ``general=True`` drops the
    constraint and uses the full kappa-dependent d(t) instead.
    """
    _check_positive(sigma=sigma, Delta=Delta, mu=mu, Gamma=Gamma)
    a = sigma * E.exp(-Gamma)
    b = Delta * E.exp(Gamma)
    rho = mu * E.exp(-Gamma / 2)
    consts = dict(sigma=sigma, Delta=Delta, mu=mu, Gamma=Gamma)
    kappa = (4 * mu ** 4 * sigma * Delta - 4 * sigma ** 2 - mu ** 4 * Gamma ** 2) / (8 * mu ** 4)
    if general and C is None:
        raise InvalidParameter("the general exponential family needs C")
    if general:
        res = 0.0
        if 8 * kappa + Gamma ** 2 <= 0:
            raise ConstraintViolated("8*kappa + Gamma^2 must be positive",
                                     relation="8*kappa + Gamma^2 > 0", residual=float("inf"))
    else:
        if sigma * Delta - Gamma ** 2 / 4 <= 0:
            raise ConstraintViolated(f"{EXP_RELATION} needs sigma*Delta > Gamma^2/4",
                                     relation=EXP_RELATION, residual=float("inf"))
        res = _relative([mu ** 4 * sigma * Delta, -mu ** 4 * Gamma ** 2 / 4], [sigma ** 2])
        _validate(res, EXP_RELATION, "exponential")
        kappa = 0.0
    d = E.ZERO
    if C is not None:
        if not C > 1:
            raise InvalidC(f"C must exceed 1, got {C}")
        s = Gamma if not general else math.sqrt(8 * kappa + Gamma ** 2)
        ce = C * E.exp(s)
        if general:
            d = 0.25 * (s * (ce + 1) / (ce - 1) - Gamma)
        else:
            d = (Gamma / 2) / (ce - 1)
        consts.update(C=C, kappa=kappa, s=s)
    return EpSolution("exponential", a, b, rho, d, consts, res)


def ep_rational(k, sigma, Delta, mu, chi, Gamma, delta=None):
    """Rational family in x = Gamma t + chi; k = -2 selects the modified set.

    For k != -2 the b coefficient carries ((k+2)/k)^((k-2)/k), which is the
    factor that makes the family solve the EP equation.
    """
    if int(k) != k:
        raise InvalidK(f"k must be an integer, got {k}")
    k = int(k)
    if k == 0:
        raise InvalidK("k must be nonzero")
    _check_positive(sigma=sigma, Delta=Delta, mu=mu, chi=chi, Gamma=Gamma)
    dl = 0.0 if delta is None else float(delta)
    if dl < 0:
        raise InvalidParameter(f"delta must be non-negative, got {delta}")
    consts = dict(k=k, sigma=sigma, Delta=Delta, mu=mu, chi=chi, Gamma=Gamma, delta=dl)
    d = E.ZERO if dl == 0 else dl * E.power(Gamma, chi, -1)
    m4 = mu ** 4
    if k == -2:
        a = E.const(sigma)
        b = Delta * E.power(Gamma, chi, -2)
        rho = mu * E.power(Gamma, chi, 0.5)
        res = _relative([4 * sigma * Delta * m4, -Gamma ** 2 * m4, 8 * Gamma * dl * m4, -16 * dl ** 2 * m4],
                        [4 * sigma ** 2])
        _validate(res, NEG2_RELATION, "rational k=-2")
        return EpSolution("rational-neg2", a, b, rho, d, consts, res)
    K = (k + 2) / k
    if K <= 0:
        raise InvalidK(f"k={k} makes (k+2)/k non-positive")
    a = sigma * K ** ((k + 2) / k) * E.power(Gamma, chi, -(k + 2) / k)
    b = Delta * K ** ((k - 2) / k) * E.power(Gamma, chi, -(k - 2) / k)
    rho = mu * K ** (1 / k) * E.power(Gamma, chi, -1 / k)
    kp2 = (k + 2) ** 2
    res = _relative([4 * dl * m4 * k * Gamma, 4 * dl ** 2 * m4 * k * k],
                    [sigma * m4 * Delta * kp2, -sigma ** 2 * kp2, -Gamma ** 2 * m4])
    _validate(res, RAT_RELATION, f"rational k={k}")
    return EpSolution("rational", a, b, rho, d, consts, res)


def ep_elementary(sigma, Delta, mu, chi, Gamma):
    """a = sigma, b = Delta/x^4, rho = mu x with x = Gamma t + chi."""
    _check_positive(sigma=sigma, Delta=Delta, mu=mu, chi=chi, Gamma=Gamma)
    res = _relative([Delta * mu ** 4], [sigma])
    _validate(res, ELM_RELATION, "elementary")
    consts = dict(sigma=sigma, Delta=Delta, mu=mu, chi=chi, Gamma=Gamma)
    return EpSolution("elementary", E.const(sigma), Delta * E.power(Gamma, chi, -4),
                      mu * E.power(Gamma, chi, 1), E.ZERO, consts, res)


def _h_expr(a, b, rho, d):
    ga = a.derivative() / a
    return rho * (a * b - 2 * d.derivative() - 4 * d ** 2 + 2 * ga * d) - a ** 2 / rho ** 3


def ep_residual(sol, t):
    """Left-hand side of the EP equation evaluated with exact derivatives."""
    a, rho = sol.a, sol.rho
    rd = rho.derivative()
    ad = a.derivative()
    av, rv, dv, ddv = a(t), rho(t), sol.d(t), sol.d.derivative()(t)
    g = ad(t) / av
    return (rd.derivative()(t) - g * rd(t)
            + rv * (av * sol.b(t) - 2 * ddv - 4 * dv * dv + 2 * g * dv) - av * av / rv ** 3)


@dataclass(frozen=True)
class ChielliniReport:
    q: float
    lambda_q: float
    condition_residual: float
    eta_residual: float
    samples: int = 0


def chiellini_check(sol, t_max=None, samples=41):
    """Chiellini constants of a family, written as rho'' + g rho' + h = 0.

    g = -a'/a.  At each sample q = (h/g)'/(rho' g) and lambda = rho' g/h;
    the report carries their means and the largest deviation from
    d(h/g)/drho = q g and rho' = lambda h/g.
    """
    if sol.a.derivative().is_const() and sol.a.derivative().value == 0:
        raise ChielliniInapplicable(f"{sol.family} family has constant a(t), so g = 0")
    g = -(sol.a.derivative() / sol.a)
    h = _h_expr(sol.a, sol.b, sol.rho, sol.d)
    hg = h / g
    if t_max is None:
        t_max = 5.0 / sol.constants.get("Gamma", 1.0)
    t = np.linspace(0.0, t_max, samples)
    rd = np.asarray(sol.rho.derivative()(t))
    gv, hv = np.asarray(g(t)), np.asarray(h(t))
    dhg = np.asarray(hg.derivative()(t))
    if np.any(np.abs(rd) < 1e-300) or np.any(np.abs(gv) < 1e-300):
        raise ChielliniInapplicable("rho' or g vanishes on the sample range")
    qs = dhg / (rd * gv)
    lams = rd * gv / hv
    q, lam = float(np.mean(qs)), float(np.mean(lams))
    cond = float(np.max(np.abs(dhg / rd - q * gv)))
    eta = float(np.max(np.abs(rd - lam * hv / gv)))
    return ChielliniReport(q, lam, cond, eta, samples)


def chiellini_lambda(q):
    """The branch lambda_q = (-1 - sqrt(1 - 4q))/(2q)."""
    return (-1 - math.sqrt(max(1 - 4 * q, 0.0))) / (2 * q)


def _rk4_pass(coef, rho0, v0, grid, nsub):
    # coef(t) -> arrays (a, a', b, d, d') on the requested times
    out = [rho0]
    y0, y1 = rho0, v0
    ts = []
    for i in range(len(grid) - 1):
        h = (grid[i + 1] - grid[i]) / nsub
        for j in range(nsub):
            t = grid[i] + j * h
            ts.extend((t, t + h / 2, t + h))
    if not ts:
        return out
    A, AD, B, D, DD = coef(np.array(ts))
    F = AD / A
    K = A * B - 2 * DD - 4 * D * D + 2 * F * D
    A2 = A * A
    idx = 0
    for i in range(len(grid) - 1):
        h = (grid[i + 1] - grid[i]) / nsub
        for _ in range(nsub):
            i0, i1, i2 = idx, idx + 1, idx + 2

            def acc(r, v, n):
                if r < 1e-12:
                    raise SingularEP(f"rho fell below 1e-12 near t={ts[n]}")
                return F[n] * v - r * K[n] + A2[n] / r ** 3

            k1r, k1v = y1, acc(y0, y1, i0)
            k2r, k2v = y1 + h / 2 * k1v, acc(y0 + h / 2 * k1r, y1 + h / 2 * k1v, i1)
            k3r, k3v = y1 + h / 2 * k2v, acc(y0 + h / 2 * k2r, y1 + h / 2 * k2v, i1)
            k4r, k4v = y1 + h * k3v, acc(y0 + h * k3r, y1 + h * k3v, i2)
            y0 += h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
            y1 += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
            idx += 3
        if y0 < 1e-12:
            raise SingularEP(f"rho fell below 1e-12 at t={grid[i + 1]}")
        out.append(y0)
    return out


MAX_RK4_STEPS = 4_000_000


def integrate_ep(a, b, d, rho0, rhodot0, grid, max_halvings=14):
    """Classic RK4 for the EP equation on ``grid``.

    The number of sub-steps per grid interval is doubled until the solution
    on the grid changes by less than the ``rk4`` tolerance.
    """
    grid = [float(t) for t in grid]
    if any(t1 <= t0 for t0, t1 in zip(grid, grid[1:])):
        raise InvalidParameter("grid must be strictly increasing")
    if not rho0 >= 1e-12:
        raise SingularEP(f"initial rho {rho0!r} is below 1e-12")
    a, b, d = E.as_expr(a), E.as_expr(b), E.as_expr(d)
    ad, dd = a.derivative(), d.derivative()

    def coef(t):
        one = np.ones_like(t)
        return tuple(np.asarray(e(t)) * one for e in (a, ad, b, d, dd))

    tol = tolerances.get("rk4")
    if len(grid) < 2:
        return [rho0]
    span = grid[-1] - grid[0]
    # start with h * omega <= 1/2, omega ~ 2 sqrt(a b) being the fastest local rate
    probe = np.linspace(grid[0], grid[-1], 257)
    A, _, B, D, _ = coef(probe)
    omega = 2 * math.sqrt(float(np.max(np.abs(A * B - 4 * D * D))))
    h0 = min(0.05, 0.5 / omega) if omega > 0 else 0.05
    nsub = max(1, int(math.ceil(span / (len(grid) - 1) / h0)))
    if nsub * (len(grid) - 1) > MAX_RK4_STEPS:
        raise NoConvergence(f"EP equation too stiff for RK4 here: about "
                            f"{nsub * (len(grid) - 1):.3g} steps needed (omega ~ {omega:.3g})")
    prev, change = None, float("inf")
    for _ in range(max_halvings + 1):
        try:
            cur = _rk4_pass(coef, rho0, rhodot0, grid, nsub)
        except SingularEP:
            # a coarse pass can overshoot through zero; refine before giving up
            if nsub * 2 * (len(grid) - 1) > MAX_RK4_STEPS:
                raise
            prev, nsub = None, nsub * 2
            continue
        if prev is not None:
            change = max(abs(x - y) for x, y in zip(cur, prev))
            if change < tol:
                return cur
        prev = cur
        if nsub * 2 * (len(grid) - 1) > MAX_RK4_STEPS:
            break
        nsub *= 2
    raise NoConvergence(f"RK4 still changing by {change:.3e} after {max_halvings} halvings")
