"""Invariant eigenfunctions, matrix elements, energies and uncertainties.

States are labelled by (n, m) with l = m - n.  The closed-form matrix
elements are cross-checked by ``oracle_matrix_element``, which integrates
the wavefunction directly using scipy's Laguerre routines rather than the
ones in ``specfun``.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import special as sps

from .errors import (DomainError, InvalidParameter, NonconvergentIntegral,
                     OutsidePhysicalWindow, SignConstraintViolated,
                     UnsupportedCase)
from .specfun import LaguerreSpec, laguerre, laguerre_weighted_integral


@dataclass(frozen=True)
class StateParams:
    rho: float
    rhodot: float = 0.0
    a: float = 1.0
    d: float = 0.0
    n: int = 0
    m: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidParameter(f"rho must be positive, got {self.rho}")
        if not self.a > 0:
            raise InvalidParameter(f"a must be positive, got {self.a}")
        for k in ("n", "m"):
            v = getattr(self, k)
            if int(v) != v or v < 0:
                raise InvalidParameter(f"{k} must be a non-negative integer")

    @property
    def kinetic(self):
        # rho' - 2 rho d, the combination that multiplies every momentum term
        return self.rhodot - 2 * self.rho * self.d

    @property
    def chirp(self):
        """beta in the Gaussian phase exp(i beta z), z = r^2/rho^2."""
        return self.rho * self.kinetic / (2 * self.a)

    def state(self, n, m):
        return StateParams(self.rho, self.rhodot, self.a, self.d, n, m)


@dataclass(frozen=True)
class EnergyProfile:
    grid: tuple
    values: tuple
    framework: str


def _radial_parts(n, m):
    """(coefficient, power of r, Laguerre spec) of r^(n-m) L_m^(n-m)(z).

    For n < m the polynomial has a z^(m-n) factor which is pulled out so
    that the power of r stays non-negative.
    """
    if n >= m:
        return 1.0, n - m, LaguerreSpec(m, n - m)
    j = m - n
    coef = (-1) ** j * math.exp(math.lgamma(m - j + 1) - math.lgamma(m + 1))
    return coef, j, LaguerreSpec(m - j, j)


def wavefunction(sp, r, theta):
    """phi_{n,m-n}(r, theta) of the invariant, normalized to one.

    phi = i^(-m) sqrt(m!/(n! pi)) rho^(m-n-1) r^(n-m)
          exp(-(a - i rho (rho' - 2 rho d)) r^2/(2 a rho^2))
          L_m^(n-m)(r^2/rho^2) e^(i (m-n) theta)
    """
    n, m, rho = sp.n, sp.m, sp.rho
    r = np.asarray(r, dtype=float)
    z = r * r / (rho * rho)
    coef, s, spec = _radial_parts(n, m)
    # r^(n-m) rho^(m-n) with the z^j factor absorbed becomes (r/rho)^s
    norm = math.exp(0.5 * (math.lgamma(m + 1) - math.lgamma(n + 1))) / (math.sqrt(math.pi) * rho)
    radial = coef * norm * (r / rho) ** s * laguerre(spec, z)
    gauss = np.exp(-z / 2 + 1j * sp.chirp * z)
    out = (1j) ** (-m) * radial * gauss * np.exp(1j * (m - n) * np.asarray(theta))
    return complex(out) if np.ndim(out) == 0 else out


def _closed_element(n, m, mp, k, sp, axis):
    if k < 0 or int(k) != k:
        raise InvalidParameter("k must be a non-negative integer")
    total = 0j
    for r in range(k + 1):
        if mp != m + 2 * r - k:
            continue
        if axis == "x":
            phase = (1j) ** k * (-1) ** r
        else:
            # fixed by the direct-integration oracle: every term enters with +1
            phase = 1.0
        pref = 2.0 ** (-k) * math.comb(k, r) * sp.rho ** k
        pref *= math.exp(0.5 * (math.lgamma(m + 1) + math.lgamma(mp + 1)) - math.lgamma(n + 1))
        integral = laguerre_weighted_integral(n - m - r + k, LaguerreSpec(m, n - m),
                                              LaguerreSpec(mp, n - mp))
        total += phase * pref * integral
    return total


def matrix_element_xk(n, m, mp, k, sp):
    """<n, m-n| x^k |n, m'-n> from the binomial sum over Laguerre moments."""
    return _closed_element(n, m, mp, k, sp, "x")


def matrix_element_yk(n, m, mp, k, sp):
    """<n, m-n| y^k |n, m'-n>; only the phase factor differs from x."""
    return _closed_element(n, m, mp, k, sp, "y")


# direct 2D integration

N_ANGLE = 512


@lru_cache(maxsize=64)
def _radial_rule(order, frac):
    z, w = sps.roots_genlaguerre(order, frac)
    return z, w


@lru_cache(maxsize=512)
def _oracle_state(sp, n, m, order, frac):
    """phi e^(z/2) on the radial nodes, with z^(-frac/2) split off, at theta = 0."""
    z, _ = _radial_rule(order, frac)
    rho = sp.rho
    if n >= m:
        poly = sps.eval_genlaguerre(m, n - m, z)
        s = n - m
        c = 1.0
    else:
        j = m - n
        poly = sps.eval_genlaguerre(n, j, z)
        s = j
        c = (-1) ** j * math.factorial(n) / math.factorial(m)
    norm = math.sqrt(math.factorial(m) / (math.factorial(n) * math.pi)) / rho
    vals = (1j) ** (-m) * c * norm * z ** (s / 2) * poly * np.exp(1j * sp.chirp * z)
    return vals


def oracle_matrix_element(axis, k, n, m, mp, sp, order=48):
    """Brute-force <n,m-n| q^k |n,m'-n> with q = r cos(theta) or r sin(theta).

    Radial part: Gauss-Laguerre in z = r^2/rho^2 (weight z^frac e^-z);
    angular part: 512-point trapezoid.
    """
    if axis not in ("x", "y"):
        raise InvalidParameter("axis must be 'x' or 'y'")
    ang = 2 * np.pi * np.arange(N_ANGLE) / N_ANGLE
    trig = np.cos(ang) if axis == "x" else np.sin(ang)
    angular = np.mean(np.exp(-1j * (m - n) * ang) * trig ** k * np.exp(1j * (mp - n) * ang)) * 2 * np.pi
    if abs(angular) < 1e-13:
        return 0j
    s1 = abs(n - m)
    s2 = abs(n - mp)
    total_pow = 0.5 * (s1 + s2 + k)
    frac = total_pow - math.floor(total_pow)

    def radial(order):
        z, w = _radial_rule(order, frac)
        p1 = _oracle_state(sp, n, m, order, frac)
        p2 = _oracle_state(sp, n, mp, order, frac)
        f = np.conj(p1) * p2 * (sp.rho * np.sqrt(z)) ** k * z ** (-frac)
        return np.sum(w * f) * sp.rho ** 2 / 2

    v1, v2 = radial(order), radial(2 * order)
    if abs(v2 - v1) > 1e-9 * (1 + abs(v2)):
        raise NonconvergentIntegral("oracle radial integral did not settle under order doubling")
    return complex(v2 * angular)


# expectation values

def expect_x2(sp):
    return (sp.n + sp.m + 1) * sp.rho ** 2 / 2


def expect_p2(sp):
    """<p_i^2> for either component."""
    return (sp.n + sp.m + 1) / 2 * (1 / sp.rho ** 2 + sp.kinetic ** 2 / sp.a ** 2)


@dataclass(frozen=True)
class Bilinears:
    xp_sym: float
    angular: float
    cross: float


def expect_bilinears(sp):
    """<x_i p_i + p_i x_i> (each i), <p1 x2 - x1 p2>, and <x1 x2> = <p1 p2>."""
    return Bilinears((sp.n + sp.m + 1) * sp.rho * sp.kinetic / sp.a, float(sp.n - sp.m), 0.0)


def _ev(expr, t):
    try:
        return expr(t)
    except DomainError as exc:
        raise OutsidePhysicalWindow(f"outside the physical window: {exc}", t=exc.t,
                                    radicand=exc.value) from None


def energy_from_state(sp, b, c=None):
    """1/2 (n+m+1)[b rho^2 + a/rho^2 + (rho'^2 - 4 rho^2 d^2)/a] + c (n-m)."""
    n, m = sp.n, sp.m
    rho, a, d = sp.rho, sp.a, sp.d
    e = 0.5 * (n + m + 1) * (b * rho ** 2 + a / rho ** 2 + (sp.rhodot ** 2 - 4 * rho ** 2 * d ** 2) / a)
    if n != m:
        if c is None:
            raise UnsupportedCase("c(t) is needed when n != m")
        e += c * (n - m)
    return e


def energy_assembled(sp, b, c=0.0):
    """The same energy built from the operator expectation values."""
    bil = expect_bilinears(sp)
    return (sp.a / 2 * 2 * expect_p2(sp) + b / 2 * 2 * expect_x2(sp)
            + (c * bil.angular if sp.n != sp.m else 0.0) + sp.d * 2 * bil.xp_sym)


def state_at(coeffs, ep, n, m, t):
    rho = _ev(ep.rho, t)
    rd = _ev(ep.rho.derivative(), t)
    return StateParams(rho, rd, _ev(coeffs.a, t), _ev(coeffs.d, t), n, m)


def energy_expectation(framework, coeffs, ep, n, m, t, c=None):
    """<E_{n,m-n}(t)> for any framework.

    ``c`` overrides coeffs.c; it is only needed when n != m.  The d terms
    vanish automatically for the standard and magnetic frameworks.
    """
    sp = state_at(coeffs, ep, n, m, t)
    b = _ev(coeffs.b, t)
    if n != m and c is None:
        if coeffs.c is None:
            raise UnsupportedCase(f"{framework}: c(t) unavailable for n != m")
        c = _ev(coeffs.c, t)
    return float(energy_from_state(sp, b, c))


def energy_profile(framework, coeffs, ep, n, m, grid, c=None):
    vals = tuple(energy_expectation(framework, coeffs, ep, n, m, t, c) for t in grid)
    return EnergyProfile(tuple(float(t) for t in grid), vals, framework)


@dataclass(frozen=True)
class CommutativeUncertainty:
    dx_dy: float
    dp_dp: float
    dx_dp: float


@dataclass(frozen=True)
class NCUncertainty:
    dX_dY: float
    dPX_dPY: float
    dX_dPX: float
    X2: float
    P2: float


def uncertainty_commutative(sp):
    k = sp.m + sp.n + 1
    return CommutativeUncertainty(
        k * sp.rho ** 2 / 2,
        expect_p2(sp),
        k / (2 * sp.a) * math.sqrt(sp.a ** 2 + sp.rho ** 2 * sp.kinetic ** 2))


def nc_second_moments(sp, theta, Omega):
    """(<X_i^2>, <P_i^2>) under the modified Bopp shift."""
    if theta * Omega > 0:
        raise SignConstraintViolated("theta*Omega must not be positive")
    n, m = sp.n, sp.m
    k = (n + m + 1) / 2
    r = math.sqrt(-theta * Omega)
    g = 1 - theta * Omega / 4
    inv = 1 / sp.rho ** 2 + sp.kinetic ** 2 / sp.a ** 2
    cross = sp.rho * sp.kinetic / (2 * sp.a)
    X2 = k * (sp.rho ** 2 * g + theta ** 2 / 4 * inv - theta * r * cross) - (m - n) * theta / 2
    P2 = k * (g * inv + Omega ** 2 * sp.rho ** 2 / 4 + Omega * r * cross) - (m - n) * Omega / 2
    return X2, P2


def uncertainty_noncommutative(sp, theta, Omega):
    X2, P2 = nc_second_moments(sp, theta, Omega)
    return NCUncertainty(X2, P2, math.sqrt(X2 * P2), X2, P2)


def oracle_nc_second_moments(sp, theta, Omega, order=48):
    """<X1^2> and <P1^2> as squared norms of X1 phi and P1 phi.

    X1 = x1 - (theta/2) p2 + (sqrt(-theta Omega)/2) x2 and
    P1 = p1 + (Omega/2) x2 + (sqrt(-theta Omega)/2) p2 with p = -i grad.
    Gradients are taken analytically from the scipy-evaluated state.
    """
    if theta * Omega > 0:
        raise SignConstraintViolated("theta*Omega must not be positive")
    n, m, rho = sp.n, sp.m, sp.rho
    ell = m - n
    z, w = sps.roots_laguerre(order)
    if n >= m:
        s, deg, alpha, c = n - m, m, n - m, 1.0
    else:
        s, deg, alpha, c = m - n, n, m - n, (-1) ** (m - n) * math.factorial(n) / math.factorial(m)
    norm = math.sqrt(math.factorial(m) / (math.factorial(n) * math.pi)) / rho
    L = sps.eval_genlaguerre(deg, alpha, z)
    dL = -sps.eval_genlaguerre(deg - 1, alpha + 1, z) if deg > 0 else np.zeros_like(z)
    beta = sp.chirp
    # R e^(z/2) with R(r) = C (r/rho)^s e^(-z/2 + i beta z) L(z)
    u = np.sqrt(z)
    R = c * norm * u ** s * L * np.exp(1j * beta * z)
    # dR/dr e^(z/2): d/dr = (2 u/rho) d/dz and d/dz of u^s = s u^(s-2)/2
    dR = c * norm * np.exp(1j * beta * z) * (2 * u / rho) * (
        0.5 * s * u ** (s - 2) * L if s > 0 else 0.0) \
        + c * norm * np.exp(1j * beta * z) * (2 * u / rho) * u ** s * ((-0.5 + 1j * beta) * L + dL)
    r = rho * u
    ang = 2 * np.pi * np.arange(N_ANGLE) / N_ANGLE
    ct, st = np.cos(ang)[None, :], np.sin(ang)[None, :]
    eip = np.exp(1j * ell * ang)[None, :]
    psi = R[:, None] * eip
    # (1/r) d/dtheta psi = i ell R/r e^(i ell theta); R/r has u^(s-1), fine when s >= 1 or ell = 0
    R_over_r = np.where(r > 0, R / np.where(r > 0, r, 1.0), 0.0) if ell != 0 else np.zeros_like(R)
    dpsi_x = (ct * dR[:, None] - st * 1j * ell * R_over_r[:, None]) * eip
    dpsi_y = (st * dR[:, None] + ct * 1j * ell * R_over_r[:, None]) * eip
    x1, x2 = r[:, None] * ct, r[:, None] * st
    p1, p2 = -1j * dpsi_x, -1j * dpsi_y
    q = math.sqrt(-theta * Omega)
    X1 = x1 * psi - theta / 2 * p2 + q / 2 * x2 * psi
    P1 = p1 + Omega / 2 * x2 * psi + q / 2 * p2
    meas = w[:, None] * (rho ** 2 / 2) * (2 * np.pi / N_ANGLE)
    return float(np.sum(meas * np.abs(X1) ** 2)), float(np.sum(meas * np.abs(P1) ** 2))
