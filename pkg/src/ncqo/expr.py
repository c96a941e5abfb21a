"""Closed-form time functions with exact derivatives.

A ``TimeExpr`` is an immutable tree over five primitives (constant,
exp(alpha t), (gamma t + chi)^p, sin(f t), cos(f t)) combined with
+, -, *, /, sqrt and integer powers.  Trees evaluate on floats or numpy
arrays; ``derivative()`` returns another tree.
"""
import math

import numpy as np

from . import tolerances
from .errors import DomainError


def _first_bad(t, mask):
    if np.ndim(t) == 0:
        return float(t)
    return float(np.asarray(t)[np.argmax(mask)])


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


class TimeExpr:
    __slots__ = ("_deriv",)

    def __init__(self):
        self._deriv = None

    def __call__(self, t):
        return _out(self._ev(np.asarray(t, dtype=float)))

    def derivative(self):
        if self._deriv is None:
            self._deriv = self._d()
        return self._deriv

    def children(self):
        return ()

    def walk(self):
        yield self
        for ch in self.children():
            yield from ch.walk()

    def radicands(self):
        """Every expression that appears under a square root."""
        return [node.arg for node in self.walk() if isinstance(node, Sqrt)]

    def is_const(self):
        return False

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return ipow(self, n)


class Const(TimeExpr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = float(value)

    def _ev(self, t):
        return np.full(np.shape(t), self.value) if np.ndim(t) else np.float64(self.value)

    def _d(self):
        return ZERO

    def is_const(self):
        return True

    def __repr__(self):
        return repr(self.value)


ZERO = Const(0.0)
ONE = Const(1.0)


class Exp(TimeExpr):
    """exp(alpha t)"""
    __slots__ = ("alpha",)

    def __init__(self, alpha):
        super().__init__()
        self.alpha = float(alpha)

    def _ev(self, t):
        return np.exp(self.alpha * t)

    def _d(self):
        return mul(self.alpha, self)

    def __repr__(self):
        return f"exp({self.alpha!r}*t)"


class Power(TimeExpr):
    """(gamma t + chi)^p for real p."""
    __slots__ = ("gamma", "chi", "p")

    def __init__(self, gamma, chi, p):
        super().__init__()
        self.gamma = float(gamma)
        self.chi = float(chi)
        self.p = float(p)

    def _ev(self, t):
        x = self.gamma * t + self.chi
        integer = self.p == round(self.p)
        bad = (x == 0) if self.p < 0 else np.zeros(np.shape(x), dtype=bool)
        if not integer:
            bad = bad | (x < 0)
        if np.any(bad):
            tb = _first_bad(t, bad)
            raise DomainError(f"({self.gamma}t+{self.chi})^{self.p} undefined at t={tb}", t=tb)
        if integer:
            return x ** int(round(self.p)) if self.p >= 0 else 1.0 / x ** int(round(-self.p))
        return x ** self.p

    def _d(self):
        if self.p == 0:
            return ZERO
        if self.p == 1:
            return Const(self.gamma)
        return mul(self.p * self.gamma, power(self.gamma, self.chi, self.p - 1))

    def __repr__(self):
        return f"({self.gamma!r}*t+{self.chi!r})^{self.p!r}"


class Sin(TimeExpr):
    __slots__ = ("f",)

    def __init__(self, f):
        super().__init__()
        self.f = float(f)

    def _ev(self, t):
        return np.sin(self.f * t)

    def _d(self):
        return mul(self.f, Cos(self.f))

    def __repr__(self):
        return f"sin({self.f!r}*t)"


class Cos(TimeExpr):
    __slots__ = ("f",)

    def __init__(self, f):
        super().__init__()
        self.f = float(f)

    def _ev(self, t):
        return np.cos(self.f * t)

    def _d(self):
        return mul(-self.f, Sin(self.f))

    def __repr__(self):
        return f"cos({self.f!r}*t)"


class Add(TimeExpr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        super().__init__()
        self.lhs, self.rhs = lhs, rhs

    def children(self):
        return (self.lhs, self.rhs)

    def _ev(self, t):
        return self.lhs._ev(t) + self.rhs._ev(t)

    def _d(self):
        return add(self.lhs.derivative(), self.rhs.derivative())

    def __repr__(self):
        return f"({self.lhs!r} + {self.rhs!r})"


class Mul(TimeExpr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs, rhs):
        super().__init__()
        self.lhs, self.rhs = lhs, rhs

    def children(self):
        return (self.lhs, self.rhs)

    def _ev(self, t):
        return self.lhs._ev(t) * self.rhs._ev(t)

    def _d(self):
        return add(mul(self.lhs.derivative(), self.rhs), mul(self.lhs, self.rhs.derivative()))

    def __repr__(self):
        return f"{self.lhs!r}*{self.rhs!r}"


class Div(TimeExpr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        super().__init__()
        self.num, self.den = num, den

    def children(self):
        return (self.num, self.den)

    def _ev(self, t):
        den = self.den._ev(t)
        bad = den == 0
        if np.any(bad):
            tb = _first_bad(t, bad)
            raise DomainError(f"division by zero at t={tb}", t=tb, value=0.0)
        return self.num._ev(t) / den

    def _d(self):
        top = add(mul(self.num.derivative(), self.den), neg(mul(self.num, self.den.derivative())))
        return div(top, ipow(self.den, 2))

    def __repr__(self):
        return f"({self.num!r})/({self.den!r})"


class Sqrt(TimeExpr):
    """Square root; radicands within the ``radicand`` tolerance of zero clamp to 0."""
    __slots__ = ("arg",)

    def __init__(self, arg):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _ev(self, t):
        v = self.arg._ev(t)
        bad = v < -tolerances.get("radicand")
        if np.any(bad):
            tb = _first_bad(t, bad)
            vb = float(np.asarray(v)[np.argmax(bad)]) if np.ndim(v) else float(v)
            raise DomainError(f"sqrt of negative value {vb!r} at t={tb}", t=tb, value=vb)
        return np.sqrt(np.maximum(v, 0.0))

    def _d(self):
        return div(self.arg.derivative(), mul(2.0, self))

    def __repr__(self):
        return f"sqrt({self.arg!r})"


class IPow(TimeExpr):
    __slots__ = ("base", "n")

    def __init__(self, base, n):
        super().__init__()
        self.base, self.n = base, n

    def children(self):
        return (self.base,)

    def _ev(self, t):
        v = self.base._ev(t)
        if self.n < 0:
            bad = v == 0
            if np.any(bad):
                tb = _first_bad(t, bad)
                raise DomainError(f"zero to a negative power at t={tb}", t=tb, value=0.0)
            return 1.0 / v ** (-self.n)
        return v ** self.n

    def _d(self):
        return mul(mul(float(self.n), ipow(self.base, self.n - 1)), self.base.derivative())

    def __repr__(self):
        return f"({self.base!r})^{self.n}"


def as_expr(x):
    if isinstance(x, TimeExpr):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a time expression")


def const(c):
    return Const(c)


def exp(alpha):
    return ONE if alpha == 0 else Exp(alpha)


def power(gamma, chi, p):
    if p == 0:
        return ONE
    return Power(gamma, chi, p)


def sin(f):
    return ZERO if f == 0 else Sin(f)


def cos(f):
    return ONE if f == 0 else Cos(f)


def add(a, b):
    a, b = as_expr(a), as_expr(b)
    if a.is_const() and b.is_const():
        return Const(a.value + b.value)
    if a.is_const() and a.value == 0:
        return b
    if b.is_const() and b.value == 0:
        return a
    return Add(a, b)


def neg(a):
    a = as_expr(a)
    if a.is_const():
        return Const(-a.value)
    return mul(-1.0, a)


def mul(a, b):
    a, b = as_expr(a), as_expr(b)
    if a.is_const() and b.is_const():
        return Const(a.value * b.value)
    if b.is_const():
        a, b = b, a
    if a.is_const():
        if a.value == 0:
            return ZERO
        if a.value == 1:
            return b
        # fold c1*(c2*x)
        if isinstance(b, Mul) and b.lhs.is_const():
            return mul(a.value * b.lhs.value, b.rhs)
    return Mul(a, b)


def div(a, b):
    a, b = as_expr(a), as_expr(b)
    if b.is_const():
        if b.value == 0:
            raise DomainError("division by the constant zero")
        return mul(1.0 / b.value, a)
    if a.is_const() and a.value == 0:
        return ZERO
    return Div(a, b)


def sqrt(a):
    a = as_expr(a)
    if a.is_const():
        if a.value < -tolerances.get("radicand"):
            raise DomainError(f"sqrt of negative constant {a.value!r}", value=a.value)
        return Const(math.sqrt(max(a.value, 0.0)))
    return Sqrt(a)


def ipow(a, n):
    if int(n) != n:
        raise TypeError("only integer powers are supported; use power() or sqrt()")
    n = int(n)
    a = as_expr(a)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if a.is_const():
        return Const(a.value ** n)
    return IPow(a, n)
