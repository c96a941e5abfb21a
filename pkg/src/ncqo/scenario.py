"""Scenarios: coefficient maps, NC parameter inversions, physical windows.

Units are natural (hbar = 1) and the antisymmetric symbol has
epsilon_12 = +1.  Inversions always take the positive square-root branch.
"""
from dataclasses import dataclass, field
import math
from types import MappingProxyType

import numpy as np

from . import expr as E
from . import tolerances
from .errors import (DomainError, InconsistentTriple, InvalidParameter,
                     NoConvergence, OutsidePhysicalWindow, ParseError,
                     SignConstraintViolated)
from .expr import TimeExpr

FRAMEWORKS = ("standard", "magnetic", "generalized-I", "generalized-II")


@dataclass(frozen=True)
class QuantumNumbers:
    n: int
    m: int

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidParameter(f"quantum number {name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def l(self):
        return self.m - self.n


@dataclass(frozen=True)
class HamiltonianCoefficients:
    """a, b, c, d of H = a p^2/2 + b x^2/2 + c L + d (xp + px).

    ``c`` may be None when it is only known pointwise.
    """
    a: TimeExpr
    b: TimeExpr
    c: TimeExpr = None
    d: TimeExpr = E.ZERO

    def at(self, t):
        c = None if self.c is None else self.c(t)
        return self.a(t), self.b(t), c, self.d(t)


def _positive(M, name="M"):
    if not M > 0:
        raise InvalidParameter(f"{name} must be positive, got {M}")


def _nonzero_check(f, where="f"):
    # only constants can be checked without a grid
    if f.is_const() and f.value == 0:
        raise DomainError(f"{where}(t) vanishes identically")


def coeffs_standard(f, omega, theta, Omega, M):
    _positive(M)
    f, omega, theta, Omega = map(E.as_expr, (f, omega, theta, Omega))
    _nonzero_check(f)
    w2 = omega ** 2
    a = f / M + M * w2 * theta ** 2 / (4 * f)
    b = f * Omega ** 2 / (4 * M) + M * w2 / f
    c = 0.5 * (f * Omega / M + M * w2 * theta / f)
    return HamiltonianCoefficients(a, b, c, E.ZERO)


def _magnetic_c(f, omega, B, theta, Omega, M, q):
    k = q ** 2 * B ** 2 * f / (4 * M) + M * omega ** 2 / f
    return 0.5 * ((q * B * f / M) * (1 + theta * Omega / 4) + Omega * f / M + k * theta)


def coeffs_magnetic(f, omega, B, theta, Omega, M, q):
    """Coefficients with a magnetic field B(t) in the Coulomb gauge."""
    _positive(M)
    f, omega, B, theta, Omega = map(E.as_expr, (f, omega, B, theta, Omega))
    _nonzero_check(f)
    k = q ** 2 * B ** 2 * f / (4 * M) + M * omega ** 2 / f
    a = f / M + q * B * f * theta / (2 * M) + 0.25 * k * theta ** 2
    b = k + q * B * f * Omega / (2 * M) + f * Omega ** 2 / (4 * M)
    c = _magnetic_c(f, omega, B, theta, Omega, M, q)
    return HamiltonianCoefficients(a, b, c, E.ZERO)


def coeffs_generalized_I(P, Q, R, theta, Omega):
    P, Q, R, theta, Omega = map(E.as_expr, (P, Q, R, theta, Omega))
    a = 2 * P + theta ** 2 * Q / 2
    b = 2 * Q + P * Omega ** 2 / 2
    c = P * Omega + Q * theta
    d = (1 - Omega * theta / 4) * R
    return HamiltonianCoefficients(a, b, c, d)


def _check_sign(theta, Omega, sample):
    prod = np.asarray(theta(sample) * Omega(sample))
    bad = prod > tolerances.get("radicand")
    if np.any(bad):
        tb = float(np.atleast_1d(sample)[np.argmax(np.atleast_1d(bad))])
        raise SignConstraintViolated(f"theta*Omega > 0 at t={tb}; the modified Bopp shift needs theta*Omega < 0")


def coeffs_generalized_II(P, Q, theta, Omega, sample=None):
    """Modified Bopp-shift coefficients; needs theta*Omega <= 0.

    The sign is checked on ``sample`` (default: 401 points on [0, 4 pi]).
    Points where the product touches zero are accepted, d vanishes there.
    """
    P, Q, theta, Omega = map(E.as_expr, (P, Q, theta, Omega))
    if sample is None:
        sample = np.linspace(0.0, 4 * math.pi, 401)
    _check_sign(theta, Omega, np.asarray(sample, dtype=float))
    g = 1 - theta * Omega / 4
    a = 2 * P * g + Q * theta ** 2 / 2
    b = 2 * Q * g + P * Omega ** 2 / 2
    c = P * Omega + Q * theta
    d = E.sqrt(-(theta * Omega)) / 4 * (Omega * P - theta * Q)
    return HamiltonianCoefficients(a, b, c, d)


# NC parameters as expressions of (a, b) and the scenario functions

def nc_parameters_standard(a, b, f, omega, M):
    a, b, f, omega = map(E.as_expr, (a, b, f, omega))
    theta = (2.0 / M) / omega * E.sqrt(f * (M * a - f))
    Omega = 2 * E.sqrt(M * b / f - M ** 2 * omega ** 2 / f ** 2)
    return theta, Omega


def nc_parameters_magnetic(a, b, f, omega, B, M, q):
    a, b, f, omega, B = map(E.as_expr, (a, b, f, omega, B))
    D = 0.25 * (q ** 2 * B ** 2 * f / (4 * M) + M * omega ** 2 / f)
    h = q * B * f / (2 * M)
    theta = (-h + E.sqrt(h ** 2 - 4 * D * (f / M - a))) / (2 * D)
    Omega = -q * B + 2 * E.sqrt(M * b / f - M ** 2 * omega ** 2 / f ** 2)
    return theta, Omega


def _eval_window(exprs, t):
    try:
        return tuple(e(t) for e in exprs)
    except DomainError as exc:
        raise OutsidePhysicalWindow(f"outside the physical window: {exc}", t=t,
                                    radicand=exc.value) from None


def invert_nc_standard(a, b, f, omega, M, t):
    """(theta, Omega) at t, positive roots."""
    return _eval_window(nc_parameters_standard(a, b, f, omega, M), t)


def invert_nc_magnetic(a, b, f, omega, B, M, q, t):
    return _eval_window(nc_parameters_magnetic(a, b, f, omega, B, M, q), t)


def modified_forward(theta, Omega, M, omega):
    """(a, b, c, d) of the modified Bopp shift with P = 1/2M, Q = M w^2/2."""
    P, Q = 1.0 / (2 * M), M * omega ** 2 / 2
    if theta * Omega > 0:
        raise SignConstraintViolated("theta*Omega must not be positive")
    g = 1 - theta * Omega / 4
    r = math.sqrt(-theta * Omega)
    return (2 * P * g + Q * theta ** 2 / 2, 2 * Q * g + P * Omega ** 2 / 2,
            P * Omega + Q * theta, r / 4 * (Omega * P - theta * Q))


def invert_nc_modified(a, b, d, M, omega, return_residual=False):
    """Recover (theta, Omega) from (a, b) of the modified map, then check d.

    Works in s = |theta|, u = |Omega| where the (a, b) equations read
    a = (1 + s u/4)/M + M w^2 s^2/4 and b = M w^2 (1 + s u/4) + u^2/(4M).
    The sign pattern (theta > 0 > Omega or the reverse) is fixed by d.
    """
    _positive(M)
    w2 = omega ** 2
    tol = tolerances.get("newton")

    def F(s, u):
        g = 1 + s * u / 4
        return np.array([g / M + M * w2 * s * s / 4 - a, M * w2 * g + u * u / (4 * M) - b])

    s = math.sqrt(max(4 * (a - 1 / M) / (M * w2), 0.0))
    u = math.sqrt(max(4 * M * (b - M * w2), 0.0))
    scale = 1 + abs(a) + abs(b)
    r = F(s, u)
    for _ in range(100):
        if np.max(np.abs(r)) <= tol * scale:
            break
        J = np.array([[u / (4 * M) + M * w2 * s / 2, s / (4 * M)],
                      [M * w2 * u / 4, M * w2 * s / 4 + u / (2 * M)]])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = -r
        lam = 1.0
        norm0 = np.linalg.norm(r)
        while lam > 1e-10:
            s1, u1 = max(s + lam * step[0], 0.0), max(u + lam * step[1], 0.0)
            r1 = F(s1, u1)
            if np.linalg.norm(r1) < norm0:
                break
            lam *= 0.5
        s, u, r = s1, u1, r1
    else:
        raise NoConvergence(f"Newton did not converge in 100 iterations (a={a}, b={b})")
    best = None
    for theta, Omega in ((s, -u), (-s, u)):
        dp = modified_forward(theta, Omega, M, omega)[3]
        res = abs(dp - d)
        if best is None or res < best[2]:
            best = (theta, Omega, res)
    theta, Omega, res = (float(x) for x in best)
    if res > tolerances.get("d_residual") * (1 + abs(d)):
        raise InconsistentTriple(
            f"(a, b) give theta={theta:.17g}, Omega={Omega:.17g} but the d equation is off by {res:.3e}",
            theta=theta, omega=Omega, residual=res)
    if return_residual:
        return theta, Omega, res
    return theta, Omega


@dataclass(frozen=True)
class Scenario:
    """A framework tag plus constants, time functions and quantum numbers.

    ``functions`` uses the keys f, omega, B, theta, Omega, P, Q, R.  When
    ``ep`` is set, a and b (and d) come from the Ermakov-Pinney family and
    the NC parameters are obtained by inversion.
    """
    framework: str
    constants: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    quantum: QuantumNumbers = QuantumNumbers(0, 0)
    ep: object = None
    name: str = ""
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise InvalidParameter(f"unknown framework {self.framework!r}")
        object.__setattr__(self, "constants", MappingProxyType(dict(self.constants)))
        object.__setattr__(self, "functions",
                           MappingProxyType({k: E.as_expr(v) for k, v in self.functions.items()}))

    def const(self, name, default=None):
        if name in self.constants:
            return self.constants[name]
        if default is None:
            raise InvalidParameter(f"scenario {self.name!r} has no constant {name!r}")
        return default

    def fn(self, name, default=None):
        if name in self.functions:
            return self.functions[name]
        if default is None:
            raise InvalidParameter(f"scenario {self.name!r} has no function {name!r}")
        return E.as_expr(default)

    def nc_parameters(self):
        """(theta, Omega) as expressions, or (None, None) if only known pointwise."""
        fw = self.framework
        if "theta" in self.functions or self.ep is None:
            return self.fn("theta", 0.0), self.fn("Omega", 0.0)
        M = self.const("M", 1.0)
        if fw == "standard":
            return nc_parameters_standard(self.ep.a, self.ep.b, self.fn("f", 1.0),
                                          self.fn("omega"), M)
        if fw == "magnetic":
            return nc_parameters_magnetic(self.ep.a, self.ep.b, self.fn("f", 1.0),
                                          self.fn("omega"), self.fn("B", 0.0), M,
                                          self.const("q", 1.0))
        return None, None

    def coefficients(self):
        fw = self.framework
        M = self.const("M", 1.0)
        if fw in ("standard", "magnetic"):
            f, omega = self.fn("f", 1.0), self.fn("omega")
            theta, Omega = self.nc_parameters()
            if fw == "standard":
                co = coeffs_standard(f, omega, theta, Omega, M)
            else:
                co = coeffs_magnetic(f, omega, self.fn("B", 0.0), theta, Omega, M,
                                     self.const("q", 1.0))
            if self.ep is not None and "theta" not in self.functions:
                return HamiltonianCoefficients(self.ep.a, self.ep.b, co.c, E.ZERO)
            return co
        if fw == "generalized-I":
            return coeffs_generalized_I(self.fn("P"), self.fn("Q"), self.fn("R", 0.0),
                                        self.fn("theta", 0.0), self.fn("Omega", 0.0))
        # generalized-II
        if self.ep is not None and "theta" not in self.functions:
            return HamiltonianCoefficients(self.ep.a, self.ep.b, None, self.ep.d)
        omega = self.functions.get("omega")
        P = self.fn("P", 1.0 / (2 * M))
        Q = self.functions.get("Q")
        if Q is None:
            Q = M * omega ** 2 / 2
        return coeffs_generalized_II(P, Q, self.fn("theta"), self.fn("Omega"))

    def radicands(self):
        out = []
        theta, Omega = self.nc_parameters()
        exprs = [e for e in (theta, Omega) if e is not None]
        co = self.coefficients()
        exprs += [e for e in (co.c, co.d) if e is not None]
        seen = set()
        for e in exprs:
            for r in e.radicands():
                if id(r) not in seen:
                    seen.add(id(r))
                    out.append(r)
        return out


def _safe_values(expr, t):
    t = np.asarray(t, dtype=float)
    try:
        return np.asarray(expr(t), dtype=float) * np.ones_like(t)
    except DomainError:
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            try:
                out[i] = expr(ti)
            except DomainError:
                out[i] = -np.inf
        return out


def physical_window(scenario, t_max, points=2048):
    """Maximal sub-intervals of [0, t_max] where every radicand is >= 0.

    Sign changes are located on a uniform grid and refined by bisection to
    the ``window`` tolerance; each returned endpoint is the feasible side of
    its final bracket.
    """
    if not t_max > 0:
        raise InvalidParameter("t_max must be positive")
    rads = scenario.radicands()
    slack = tolerances.get("radicand")
    if not rads:
        return [(0.0, float(t_max))]

    def ok(t):
        return np.all([_safe_values(r, t) >= -slack for r in rads], axis=0)

    grid = np.linspace(0.0, float(t_max), points)
    good = ok(grid)
    width = tolerances.get("window")

    def refine(inside, outside):
        while abs(outside - inside) > width:
            mid = 0.5 * (inside + outside)
            if ok(np.array([mid]))[0]:
                inside = mid
            else:
                outside = mid
        return inside

    intervals = []
    i = 0
    while i < points:
        if not good[i]:
            i += 1
            continue
        j = i
        while j + 1 < points and good[j + 1]:
            j += 1
        lo = grid[i] if i == 0 else refine(grid[i], grid[i - 1])
        hi = grid[j] if j == points - 1 else refine(grid[j], grid[j + 1])
        intervals.append((float(lo), float(hi)))
        i = j + 1
    return intervals


# configuration files

_PRIMS = {
    "const": ("value",),
    "exp": ("alpha",),
    "power": ("gamma", "chi", "p"),
    "sin": ("f",),
    "cos": ("f",),
}


def _num(spec, key, path):
    if key not in spec:
        raise ParseError(f"missing key {path}.{key}", key=f"{path}.{key}")
    v = spec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{path}.{key} must be a number, got {v!r}", key=f"{path}.{key}")
    return float(v)


def parse_function(spec, path="functions"):
    """Build a TimeExpr from a nested table.

    A bare number is a constant.  Tables have ``kind`` (const, exp, power,
    sin, cos, sum, product, sqrt, ipow) and an optional ``scale``.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return E.const(spec)
    if not isinstance(spec, dict):
        raise ParseError(f"{path} must be a number or a table", key=path)
    kind = spec.get("kind")
    if kind in _PRIMS:
        args = [_num(spec, k, path) for k in _PRIMS[kind]]
        node = {"const": E.const, "exp": E.exp, "power": E.power,
                "sin": E.sin, "cos": E.cos}[kind](*args)
    elif kind == "sum":
        node = E.ZERO
        for i, term in enumerate(_list(spec, "terms", path)):
            node = node + parse_function(term, f"{path}.terms[{i}]")
    elif kind == "product":
        node = E.ONE
        for i, fac in enumerate(_list(spec, "factors", path)):
            node = node * parse_function(fac, f"{path}.factors[{i}]")
    elif kind == "sqrt":
        node = E.sqrt(parse_function(spec.get("arg"), f"{path}.arg"))
    elif kind == "ipow":
        n = _num(spec, "n", path)
        if n != int(n):
            raise ParseError(f"{path}.n must be an integer", key=f"{path}.n")
        node = E.ipow(parse_function(spec.get("arg"), f"{path}.arg"), int(n))
    else:
        raise ParseError(f"{path}.kind: unknown function kind {kind!r}", key=f"{path}.kind")
    if "scale" in spec:
        node = _num(spec, "scale", path) * node
    return node


def _list(spec, key, path):
    v = spec.get(key)
    if not isinstance(v, list) or not v:
        raise ParseError(f"{path}.{key} must be a non-empty list", key=f"{path}.{key}")
    return v


_EP_KEYS = {
    "exponential": ("sigma", "Delta", "mu", "Gamma"),
    "rational": ("k", "sigma", "Delta", "mu", "chi", "Gamma"),
    "rational-neg2": ("sigma", "Delta", "mu", "chi", "Gamma"),
    "elementary": ("sigma", "Delta", "mu", "chi", "Gamma"),
}


def build_ep(family, consts, path="framework.family"):
    from . import ermakov
    if family not in _EP_KEYS:
        raise ParseError(f"{path}: unknown EP family {family!r}", key=path)
    args = []
    for k in _EP_KEYS[family]:
        if k not in consts:
            raise ParseError(f"missing key constants.{k} (needed by the {family} family)",
                             key=f"constants.{k}")
        args.append(consts[k])
    if family == "exponential":
        return ermakov.ep_exponential(*args, C=consts.get("C"))
    if family == "rational":
        return ermakov.ep_rational(int(args[0]), *args[1:], delta=consts.get("delta"))
    if family == "rational-neg2":
        return ermakov.ep_rational(-2, *args, delta=consts.get("delta"))
    return ermakov.ep_elementary(*args)


def scenario_from_dict(data, name=""):
    if not isinstance(data, dict):
        raise ParseError("configuration must be a table", key="")
    fw_tab = data.get("framework")
    if not isinstance(fw_tab, dict) or "kind" not in fw_tab:
        raise ParseError("missing key framework.kind", key="framework.kind")
    kind = fw_tab["kind"]
    if kind not in FRAMEWORKS:
        raise ParseError(f"framework.kind: unknown framework {kind!r}", key="framework.kind")
    consts = {}
    for k, v in (data.get("constants") or {}).items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"constants.{k} must be a number, got {v!r}", key=f"constants.{k}")
        consts[k] = float(v)
    funcs = {k: parse_function(v, f"functions.{k}") for k, v in (data.get("functions") or {}).items()}
    qtab = data.get("quantum") or {}
    try:
        qn = QuantumNumbers(qtab.get("n", 0), qtab.get("m", 0))
    except (InvalidParameter, TypeError) as exc:
        raise ParseError(f"quantum: {exc}", key="quantum") from None
    ep = None
    if "family" in fw_tab:
        ep = build_ep(fw_tab["family"], consts)
    grid = data.get("grid") or {}
    for k, v in grid.items():
        if k not in ("t0", "t1", "steps"):
            raise ParseError(f"grid.{k} is not a grid key (t0, t1, steps)", key=f"grid.{k}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"grid.{k} must be a number, got {v!r}", key=f"grid.{k}")
    return Scenario(kind, consts, funcs, qn, ep, name or fw_tab.get("name", ""), grid)


def load_scenario(path):
    """Read a TOML scenario file."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", key="--config") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}", key="--config") from None
    return scenario_from_dict(data, name=str(path))
