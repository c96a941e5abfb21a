import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncqo import expr as E
from ncqo.ermakov import (EXP_RELATION, ELM_RELATION, EpSolution, chiellini_check,
                          chiellini_lambda, ep_elementary, ep_exponential, ep_rational,
                          ep_residual, integrate_ep)
from ncqo.errors import (ChielliniInapplicable, ConstraintViolated, InvalidC, InvalidK,
                         InvalidParameter, NoConvergence, SingularEP)


def scaled(sol, t):
    return abs(ep_residual(sol, t)) / (1 + sol.a(t) ** 2 / sol.rho(t) ** 3)


def test_exponential_with_C():
    sol = ep_exponential(1, 1.25, 1, 1, C=2.0)
    assert sol.d(0.0) == pytest.approx(0.5, rel=1e-15)
    assert sol.pole_time == pytest.approx(-math.log(2.0))
    assert sol.pole_time < 0


def test_exponential_d_vanishes_for_large_C():
    for C in (1e6, 1e12):
        sol = ep_exponential(1, 1.25, 1, 1, C=C)
        assert max(abs(sol.d(t)) for t in (0.0, 1.0, 5.0)) < 1 / C


def test_exponential_d_decreasing():
    sol = ep_exponential(1, 1.25, 1, 1, C=1.5)
    v = sol.d(np.linspace(0, 20, 400))
    assert np.all(np.isfinite(v)) and np.all(np.diff(v) < 0)


def test_exponential_constraint():
    with pytest.raises(ConstraintViolated) as info:
        ep_exponential(1, 2, 1, 1)
    assert info.value.relation == EXP_RELATION
    assert "mu^4 = sigma^2/(sigma*Delta - Gamma^2/4)" in str(info.value)


def test_exponential_bad_inputs():
    with pytest.raises(InvalidC):
        ep_exponential(1, 1.25, 1, 1, C=1.0)
    with pytest.raises(InvalidParameter):
        ep_exponential(-1, 1.25, 1, 1)


def test_exponential_general_d():
    # kappa != 0 is allowed once the constraint is dropped
    sol = ep_exponential(1, 2, 1, 1, C=3.0, general=True)
    for t in (0.0, 1.0, 3.0):
        assert scaled(sol, t) < 1e-9
    assert sol.pole_time < 0


def test_rational_k2_closed_form():
    sig, Dl, mu, chi, G = 1.0, 17 / 16, 1.0, 1.0, 1.0
    sol = ep_rational(2, sig, Dl, mu, chi, G)
    for t in (0.0, 0.7, 3.0):
        x = G * t + chi
        assert sol.a(t) == pytest.approx(4 * sig / x ** 2)
        assert sol.b(t) == pytest.approx(Dl)
        assert sol.rho(t) == pytest.approx(math.sqrt(2 * mu ** 2 / x))


def test_rational_delta_zero_is_plain():
    a = ep_rational(1, 1, 10 / 9, 1, 1, 1)
    b = ep_rational(1, 1, 10 / 9, 1, 1, 1, delta=0.0)
    for t in (0.0, 2.0):
        assert a.rho(t) == pytest.approx(b.rho(t))
        assert a.b(t) == pytest.approx(b.b(t))
        assert b.d(t) == 0.0


def test_rational_with_delta_relation():
    # 4*1*1*(1+1) = (1*2 - 1)*9 - 1 = 8
    sol = ep_rational(1, 1, 2, 1, 1, 1, delta=1.0)
    assert sol.residual < 1e-12


def test_rational_neg2():
    sol = ep_rational(-2, 1, 1.25, 1, 1, 1)
    for t in (0.0, 1.0, 3.0):
        assert scaled(sol, t) < 1e-9
    sol = ep_rational(-2, 1, 1.0, 1, 1, 1, delta=0.25)
    for t in (0.0, 1.0, 3.0):
        assert scaled(sol, t) < 1e-9


def test_rational_bad_k():
    with pytest.raises(InvalidK):
        ep_rational(0, 1, 1, 1, 1, 1)
    with pytest.raises(InvalidK):
        ep_rational(-1, 1, 1, 1, 1, 1)
    with pytest.raises(InvalidK):
        ep_rational(1.5, 1, 1, 1, 1, 1)


def test_rational_constraint():
    with pytest.raises(ConstraintViolated):
        ep_rational(1, 1, 3, 1, 1, 1)


@pytest.mark.parametrize("sig,Dl,mu", [(1, 1, 1), (16, 1, 2)])
def test_elementary_valid(sig, Dl, mu):
    sol = ep_elementary(sig, Dl, mu, 1, 1)
    assert sol.residual < 1e-12


def test_elementary_invalid():
    with pytest.raises(ConstraintViolated) as info:
        ep_elementary(2, 1, 1, 1, 1)
    assert info.value.relation == ELM_RELATION


def test_residual_trivial_constant_solution():
    sol = EpSolution("custom", E.ONE, E.ONE, E.ONE, E.ZERO)
    assert ep_residual(sol, 0.3) == 0.0


def test_residual_detects_bad_delta():
    good = ep_exponential(1, 1.25, 1, 1)
    bad = EpSolution("exponential", good.a, 1.3 * E.exp(1.0), good.rho, good.d, good.constants)
    for t in (0.0, 1.0, 2.0):
        # rho * a * (b_bad - b) = mu e^(-t/2) * sigma * 0.05
        assert ep_residual(bad, t) == pytest.approx(0.05 * math.exp(-t / 2), rel=1e-12)


FAMILIES = [
    lambda: ep_exponential(1, 1.25, 1, 1),
    lambda: ep_exponential(1, 1.25, 1, 1, C=2.0),
    lambda: ep_exponential(1e7, 1e7, 1.0, 1.0),
    lambda: ep_rational(1, 1, 10 / 9, 1, 1, 1),
    lambda: ep_rational(2, 1, 17 / 16, 1, 1, 1),
    lambda: ep_rational(1, 1, 2, 1, 1, 1, delta=1.0),
    lambda: ep_rational(-2, 1, 1.25, 1, 1, 1),
    lambda: ep_elementary(1, 1, 1, 1, 1),
]


@pytest.mark.parametrize("make", FAMILIES)
def test_family_residuals_small(make):
    sol = make()
    for t in (0.0, 1.0, 3.0):
        assert scaled(sol, t) < 1e-9


@pytest.mark.parametrize("make", [f for i, f in enumerate(FAMILIES) if i != 2])
def test_rk4_oracle(make):
    sol = make()
    G = sol.constants["Gamma"]
    grid = np.linspace(0, 5 / G, 51)
    num = integrate_ep(sol.a, sol.b, sol.d, *sol.initial_conditions(), grid)
    assert np.max(np.abs(np.asarray(num) - sol.rho(grid))) < 1e-6


def test_rk4_refuses_stiff_figure_constants():
    # sqrt(a b) = 1e7: resolving it over [0, 5] would need ~1e8 steps
    sol = ep_exponential(1e7, 1e7, 1.0, 1.0)
    with pytest.raises(NoConvergence):
        integrate_ep(sol.a, sol.b, sol.d, *sol.initial_conditions(), np.linspace(0, 5, 11))


def test_rk4_single_point_and_guard():
    assert integrate_ep(E.ONE, E.ONE, E.ZERO, 1.0, 0.0, [0.0]) == [1.0]
    with pytest.raises(SingularEP):
        integrate_ep(E.ONE, E.ONE, E.ZERO, 1e-13, 0.0, [0.0, 1.0])


def test_chiellini_exponential():
    rep = chiellini_check(ep_exponential(1, 1.25, 1, 1))
    assert rep.q == pytest.approx(0.25, abs=1e-10)
    assert rep.lambda_q == pytest.approx(-2.0, abs=1e-10)


def test_chiellini_rational_k2():
    rep = chiellini_check(ep_rational(2, 1, 17 / 16, 1, 1, 1))
    assert rep.q == pytest.approx(3 / 16, abs=1e-10)
    assert rep.lambda_q == pytest.approx(-4.0, abs=1e-10)


def test_chiellini_elementary_inapplicable():
    with pytest.raises(ChielliniInapplicable):
        chiellini_check(ep_elementary(1, 1, 1, 1, 1))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_chiellini_branch(k):
    delta_ = {1: 10 / 9, 2: 17 / 16}.get(k)
    if delta_ is None:
        # (k+2)^2 Delta - 1 = (k+2)^2 for sigma = mu = Gamma = 1
        delta_ = 1 + 1 / (k + 2) ** 2
    rep = chiellini_check(ep_rational(k, 1, delta_, 1, 1, 1))
    q = rep.q
    assert q == pytest.approx((k + 1) / (k + 2) ** 2, abs=1e-10)
    assert rep.lambda_q == pytest.approx((-1 - math.sqrt(1 - 4 * q)) / (2 * q), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(q=st.floats(0.01, 0.25))
def test_lambda_branch_property(q):
    lam = chiellini_lambda(q)
    # root of q lam^2 + lam + 1 = 0
    assert abs(q * lam * lam + lam + 1) < 1e-10 * max(1.0, lam * lam)


@settings(max_examples=40, deadline=None)
@given(sig=st.floats(0.5, 5), G=st.floats(0.2, 2), extra=st.floats(0.1, 5))
def test_exponential_constructed_residual_property(sig, G, extra):
    # choose Delta from the constraint at mu = 1
    Dl = (sig ** 2 + G ** 2 / 4) / sig
    sol = ep_exponential(sig, Dl, 1.0, G)
    for t in np.linspace(0, 5 / G, 9):
        assert scaled(sol, t) < 1e-9
    solc = ep_exponential(sig, Dl, 1.0, G, C=1 + extra)
    for t in np.linspace(0, 5 / G, 9):
        assert scaled(solc, t) < 1e-9
