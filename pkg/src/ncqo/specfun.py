"""Associated Laguerre polynomials and Gauss quadrature rules.

Everything here is a pure function of its arguments.  Gauss rules are built
with the Golub-Welsch eigenvalue method and cached per (order, alpha).
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from . import tolerances
from .errors import InvalidParameter, NonconvergentIntegral

MAX_DEGREE = 64
MAX_ORDER = 512


@dataclass(frozen=True)
class LaguerreSpec:
    """Degree ``m`` and superscript ``alpha`` of L_m^(alpha)."""
    degree: int
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise InvalidParameter(f"Laguerre degree must be a non-negative integer, got {self.degree}")
        if self.degree > MAX_DEGREE:
            raise InvalidParameter(f"Laguerre degree {self.degree} exceeds cap {MAX_DEGREE}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: tuple
    weights: tuple
    kind: str
    order: int
    alpha: float = 0.0

    def integrate(self, func):
        x = np.asarray(self.nodes)
        return float(np.dot(np.asarray(self.weights), func(x)))


def log_gamma(x):
    return math.lgamma(x)


def _recurrence(m, alpha, z):
    # returns (L_m, L_{m-1}); L_{-1} taken as 0
    z = np.asarray(z, dtype=float)
    prev = np.zeros_like(z)
    cur = np.ones_like(z)
    for k in range(m):
        nxt = ((2 * k + 1 + alpha - z) * cur - (k + alpha) * prev) / (k + 1)
        prev, cur = cur, nxt
    return cur, prev


def _scaled_recurrence(m, alpha, z):
    # like _recurrence but rescaled as it goes; returns (L_m, L_{m-1}, log scale)
    prev = np.zeros_like(z)
    cur = np.ones_like(z)
    logscale = np.zeros_like(z)
    for k in range(m):
        nxt = ((2 * k + 1 + alpha - z) * cur - (k + alpha) * prev) / (k + 1)
        prev, cur = cur, nxt
        big = np.maximum(np.abs(cur), np.abs(prev))
        f = np.where(big > 1e100, big, 1.0)
        cur, prev = cur / f, prev / f
        logscale += np.log(f)
    return cur, prev, logscale


def laguerre(spec, z):
    """L_m^(alpha)(z) by the ascending three-term recurrence.

    Works for any real alpha, including negative integers, and for scalar or
    array ``z``.
    """
    val, _ = _recurrence(spec.degree, spec.alpha, z)
    if np.ndim(val) == 0:
        return float(val)
    return val


def laguerre_derivative(spec, z):
    """d/dz L_m^(alpha)(z) = -L_{m-1}^(alpha+1)(z)."""
    if spec.degree == 0:
        return 0.0 * np.asarray(z, dtype=float) if np.ndim(z) else 0.0
    return -laguerre(LaguerreSpec(spec.degree - 1, spec.alpha + 1), z)


def _golub_welsch(diag, off, mu0):
    jac = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = mu0 * vecs[0, :] ** 2
    return nodes, weights


def _check_order(order):
    if int(order) != order or order < 1:
        raise InvalidParameter(f"quadrature order must be a positive integer, got {order}")
    if order > MAX_ORDER:
        raise InvalidParameter(f"quadrature order {order} exceeds cap {MAX_ORDER}")


@lru_cache(maxsize=256)
def gauss_laguerre(order, alpha=0.0):
    """Gauss rule for the weight z^alpha e^(-z) on [0, inf)."""
    _check_order(order)
    if alpha <= -1:
        raise InvalidParameter("Gauss-Laguerre weight exponent must exceed -1")
    k = np.arange(order)
    diag = 2 * k + 1 + alpha
    kk = np.arange(1, order)
    off = np.sqrt(kk * (kk + alpha))
    nodes, weights = _golub_welsch(diag, off, math.gamma(alpha + 1))
    # a few Newton steps on L_N to polish the eigenvalues
    for _ in range(3):
        ln, lm1, _ = _scaled_recurrence(order, alpha, nodes)
        dl = (order * ln - (order + alpha) * lm1) / nodes
        step = ln / dl
        nodes = nodes - step
        if np.max(np.abs(step) / np.maximum(nodes, 1.0)) < 1e-15:
            break
    # eigenvector weights lose relative accuracy at large nodes; use
    # w = Gamma(N+a+1) z / (N! (N+a)^2 L_{N-1}(z)^2) in log form instead
    if order > 1:
        _, lm1, logscale = _scaled_recurrence(order, alpha, nodes)
        logw = (math.lgamma(order + alpha + 1) - math.lgamma(order + 1) + np.log(nodes)
                - 2 * math.log(order + alpha) - 2 * (np.log(np.abs(lm1)) + logscale))
        weights = np.exp(logw)
    return QuadratureRule(tuple(nodes), tuple(weights), "gauss-laguerre", order, float(alpha))


def _legendre_pair(n, x):
    prev = np.ones_like(x)
    if n == 0:
        return prev, np.zeros_like(x)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
    return cur, prev


@lru_cache(maxsize=64)
def gauss_legendre(order):
    """Gauss rule for unit weight on [-1, 1]."""
    _check_order(order)
    k = np.arange(1, order)
    off = k / np.sqrt(4.0 * k * k - 1.0)
    nodes, weights = _golub_welsch(np.zeros(order), off, 2.0)
    if order > 1:
        for _ in range(3):
            pn, pm1 = _legendre_pair(order, nodes)
            dp = order * (nodes * pn - pm1) / (nodes * nodes - 1.0)
            nodes = nodes - pn / dp
        pn, pm1 = _legendre_pair(order, nodes)
        dp = order * (nodes * pn - pm1) / (nodes * nodes - 1.0)
        weights = 2.0 / ((1.0 - nodes * nodes) * dp * dp)
    return QuadratureRule(tuple(nodes), tuple(weights), "gauss-legendre", order)


def _absorb_negative(spec):
    """Rewrite L_m^(-j) = (-z)^j (m-j)!/m! L_{m-j}^(j) when j <= m.

    Returns (coefficient, extra power of z, new spec).
    """
    a = spec.alpha
    m = spec.degree
    if a < 0 and a == round(a) and m >= -a:
        j = int(-a)
        coef = (-1) ** j * math.exp(math.lgamma(m - j + 1) - math.lgamma(m + 1))
        return coef, j, LaguerreSpec(m - j, j)
    return 1.0, 0, spec


def laguerre_weighted_integral(p, s1, s2, order=None):
    """Integral of z^p e^(-z) L_{m1}^(a1)(z) L_{m2}^(a2)(z) over [0, inf).

    Negative integer superscripts are first rewritten so that their z^j
    factor joins the power; the effective power must exceed -1.  The
    fractional part of the power goes into the Gauss-Laguerre weight, so
    polynomial integrands are integrated exactly.  The result is accepted
    only if doubling the order changes it by less than the ``quad``
    tolerance (relative to the magnitude of the summed terms).
    """
    c1, j1, s1 = _absorb_negative(s1)
    c2, j2, s2 = _absorb_negative(s2)
    power = float(p) + j1 + j2
    if power <= -1:
        raise InvalidParameter(f"effective power {power} must exceed -1")
    if power >= 0:
        ipart = math.floor(power + 1e-12)
        frac = power - ipart
        if frac < 1e-12:
            frac = 0.0
    else:
        ipart, frac = 0, power
    deg = ipart + s1.degree + s2.degree
    if order is None:
        order = max(s1.degree + s2.degree + math.ceil(max(p, 0)) + 4, deg // 2 + 2)
    coef = c1 * c2

    def run(n):
        rule = gauss_laguerre(n, frac)
        z = np.asarray(rule.nodes)
        terms = np.asarray(rule.weights) * z ** ipart * laguerre(s1, z) * laguerre(s2, z)
        return float(np.sum(terms)), float(np.sum(np.abs(terms)))

    v1, _ = run(order)
    v2, scale = run(min(2 * order, MAX_ORDER))
    tol = tolerances.get("quad")
    if abs(v2 - v1) > tol * max(scale, abs(v2), 1e-300):
        raise NonconvergentIntegral(
            f"order doubling changed the integral from {v1!r} to {v2!r}")
    return coef * v2


def verify_appendix_identity(n, m):
    """Residual of the Laguerre identity with (n-m+1) I1 = I2.

    I1 uses z^(n-m) L_m^(n-m) L_{m-1}^(n-m+1), I2 uses
    z^(n-m+1) L_m^(n-m) L_{m-2}^(n-m+2).
    """
    if m < 2 or n < m:
        raise InvalidParameter("identity needs m >= 2 and n >= m")
    a = n - m
    i1 = laguerre_weighted_integral(a, LaguerreSpec(m, a), LaguerreSpec(m - 1, a + 1))
    i2 = laguerre_weighted_integral(a + 1, LaguerreSpec(m, a), LaguerreSpec(m - 2, a + 2))
    return abs((a + 1) * i1 - i2)


def verify_power_moment_identity(n, k, p):
    """(lhs, rhs) for the moment z^(k+p) (L_n^k)^2 versus (n+k)!/n! (2n+k+1)^p.

    The closed form is only valid for p in {0, 1}; callers compare.
    """
    if int(p) != p or p < 0:
        raise InvalidParameter("p must be a non-negative integer")
    if k <= -1:
        raise InvalidParameter("k must exceed -1")
    spec = LaguerreSpec(n, k)
    lhs = laguerre_weighted_integral(k + p, spec, spec)
    rhs = math.exp(math.lgamma(n + k + 1) - math.lgamma(n + 1)) * (2 * n + k + 1) ** p
    return lhs, rhs
