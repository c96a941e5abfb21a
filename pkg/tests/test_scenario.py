import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ncqo import expr as E
from ncqo.ermakov import ep_exponential
from ncqo.errors import (DomainError, InconsistentTriple, InvalidParameter,
                         OutsidePhysicalWindow, ParseError, SignConstraintViolated)
from ncqo.scenario import (HamiltonianCoefficients, QuantumNumbers, Scenario,
                           coeffs_generalized_I, coeffs_generalized_II, coeffs_magnetic,
                           coeffs_standard, invert_nc_magnetic, invert_nc_modified,
                           invert_nc_standard, load_scenario, modified_forward,
                           parse_function, physical_window, scenario_from_dict)

ONE = E.ONE
T = np.linspace(0.0, 3.0, 7)


def values(co, t):
    return tuple(None if e is None else e(t) for e in (co.a, co.b, co.c, co.d))


def test_quantum_numbers():
    q = QuantumNumbers(2, 0)
    assert q.l == -2
    with pytest.raises(InvalidParameter):
        QuantumNumbers(-1, 0)
    with pytest.raises(InvalidParameter):
        QuantumNumbers(0, 1.5)


def test_coefficients_at():
    co = HamiltonianCoefficients(E.const(1.0), E.exp(1.0), E.ZERO)
    assert co.at(0.0)[:2] == (1.0, 1.0)


def test_standard_commutative_limit():
    M, w0 = 2.0, 1.5
    co = coeffs_standard(ONE, E.const(w0), E.ZERO, E.ZERO, M)
    assert values(co, 0.7) == pytest.approx((1 / M, M * w0 ** 2, 0.0, 0.0))


def test_standard_substitution():
    co = coeffs_standard(ONE, ONE, E.const(2.0), E.const(2.0), 1.0)
    assert values(co, 0.3) == pytest.approx((2.0, 2.0, 2.0, 0.0))


def test_standard_at_origin_with_damping():
    M, w0 = 1.0, 1e3
    theta = E.exp(0.5) * 3e-4
    co = coeffs_standard(E.exp(-1.0), E.const(w0), theta, E.ZERO, M)
    assert co.a(0.0) == pytest.approx(1 / M + M * w0 ** 2 * theta(0.0) ** 2 / 4)


def test_standard_rejects_zero_f():
    with pytest.raises(DomainError):
        coeffs_standard(E.ZERO, ONE, ONE, ONE, 1.0)
    with pytest.raises(InvalidParameter):
        coeffs_standard(ONE, ONE, ONE, ONE, 0.0)


def test_magnetic_constant_c_without_nc():
    M, q, B0 = 1.5, 2.0, 0.7
    co = coeffs_magnetic(ONE, ONE, E.const(B0), E.ZERO, E.ZERO, M, q)
    assert co.c(1.2) == pytest.approx(q * B0 / (2 * M))


def test_magnetic_substitution():
    co = coeffs_magnetic(ONE, ONE, E.const(2.0), E.ZERO, E.ZERO, 1.0, 1.0)
    assert values(co, 5.0) == pytest.approx((1.0, 2.0, 1.0, 0.0))


def test_magnetic_reduces_to_standard_at_zero_field():
    f, w = E.exp(-0.3), E.cos(1.0) + 2
    th, Om = E.exp(0.2) * 0.4, E.sin(2.0) + 0.5
    a = coeffs_magnetic(f, w, E.ZERO, th, Om, 1.3, 0.8)
    b = coeffs_standard(f, w, th, Om, 1.3)
    for t in T:
        assert values(a, t) == pytest.approx(values(b, t), rel=1e-15, abs=1e-15)


def test_generalized_I_berry_case_I():
    M, w0, f = 1.0, 1.0, 1.0
    R = (w0 / math.sqrt(2)) * E.cos(f)
    co = coeffs_generalized_I(E.const(1 / M), E.const(M * w0 ** 2 / 2), R, E.ZERO, E.ZERO)
    for t in T:
        assert values(co, t) == pytest.approx((2 / M, M * w0 ** 2, 0.0, w0 / math.sqrt(2) * math.cos(f * t)))


def test_generalized_I_no_R():
    co = coeffs_generalized_I(ONE, ONE, E.ZERO, E.sin(1.0), E.cos(1.0))
    assert all(co.d(t) == 0 for t in T)


def test_generalized_I_case_III_d():
    w0, th0, Om0 = 1.0, 2.0, 2.0
    co = coeffs_generalized_I(ONE, E.const(0.5), E.const(w0 / math.sqrt(2)),
                              th0 * E.sin(1.0), Om0 * E.sin(1.0))
    for t in T:
        want = w0 / math.sqrt(2) * (1 - th0 * Om0 * math.sin(t) ** 2 / 4)
        assert co.d(t) == pytest.approx(want, abs=1e-15)


def test_generalized_II_substitution():
    co = coeffs_generalized_II(E.const(0.5), E.const(0.5), E.const(1.0), E.const(-1.0))
    assert values(co, 0.0) == pytest.approx((1.5, 1.5, 0.0, -0.25))


def test_generalized_II_theta_to_zero():
    for th in (1e-2, 1e-4, 1e-8):
        co = coeffs_generalized_II(E.const(0.5), E.const(0.5), E.const(th), E.const(-1.0))
        assert abs(co.d(0.0)) < math.sqrt(th)
    co = coeffs_generalized_II(E.const(0.5), E.const(0.5), E.ZERO, E.const(-1.0))
    assert co.d(0.0) == 0.0


def test_generalized_II_case_II_ratio():
    M, w0, th0, Om0 = 1.0, 1.0, 2.0, 2.0
    s2 = E.ipow(E.sin(1.0), 2)
    co = coeffs_generalized_II(s2 / M, 0.5 * M * w0 ** 2 * s2, E.const(th0), E.const(-Om0))
    ratios = [co.d(t) / co.a(t) for t in (0.3, 1.0, 2.5)]
    assert max(ratios) - min(ratios) < 1e-14
    for t in (0.3, 1.0, 2.5):
        assert co.d(t) / math.sin(t) ** 2 == pytest.approx(co.d(0.3) / math.sin(0.3) ** 2)


def test_generalized_II_sign_constraint():
    with pytest.raises(SignConstraintViolated):
        coeffs_generalized_II(ONE, ONE, E.const(1.0), E.const(1.0))
    with pytest.raises(SignConstraintViolated):
        coeffs_generalized_II(ONE, ONE, E.cos(1.0), E.cos(1.0))


def test_invert_standard_zero_radicands():
    f, w, M = E.exp(-0.4), E.const(1.7), 1.3
    th, Om = invert_nc_standard(f / M, M * w ** 2 / f, f, w, M, 0.8)
    assert th == 0.0 and Om == 0.0


def test_invert_standard_set_Ia_origin():
    a = 2.0 * E.exp(-1.0)
    th, _ = invert_nc_standard(a, E.const(5.0), ONE, E.exp(-0.5), 1.0, 0.0)
    assert th == pytest.approx(2.0, rel=1e-15)


def test_invert_standard_outside_window():
    a = 2.0 * E.exp(-1.0)
    with pytest.raises(OutsidePhysicalWindow) as info:
        invert_nc_standard(a, E.const(5.0), ONE, E.exp(-0.5), 1.0, 1.0)
    assert info.value.t == 1.0


def test_invert_magnetic_zero_field_equals_standard():
    a, b = 2.0 * E.exp(-1.0), 2.125 * E.exp(1.0)
    f, w = E.exp(-1.0), ONE
    for t in (0.0, 0.5, 1.5):
        assert invert_nc_magnetic(a, b, f, w, E.ZERO, 1.0, 1.0, t) == pytest.approx(
            invert_nc_standard(a, b, f, w, 1.0, t), rel=1e-14)


# magnetic Set-I with M = q = omega0 = Gamma = mu = 1, sigma = 2, Delta = 2.125, B0 = 0.5
MAG = dict(M=1.0, q=1.0, w0=1.0, B0=0.5, sigma=2.0, Delta=2.125)


def _mag_ep():
    return ep_exponential(MAG["sigma"], MAG["Delta"], 1.0, 1.0)


def test_invert_magnetic_case_I_origin():
    ep = _mag_ep()
    M, q, B0, w0 = MAG["M"], MAG["q"], MAG["B0"], MAG["w0"]
    th, Om = invert_nc_magnetic(ep.a, ep.b, E.exp(-1.0), E.const(w0), E.const(B0), M, q, 0.0)
    assert Om == pytest.approx(-q * B0 + 2 * math.sqrt(M * MAG["Delta"] - M * M * w0 * w0), rel=1e-14)
    want = 8 * M / (q * q * B0 * B0 + 4 * M * M * w0 * w0) * (
        math.sqrt(q * q * B0 * B0 * MAG["sigma"] / (4 * M) + w0 * w0 * (M * MAG["sigma"] - 1)) - q * B0 / (2 * M))
    assert th == pytest.approx(want, rel=1e-13)


def test_invert_magnetic_case_II_product_constant():
    ep = _mag_ep()
    B = MAG["B0"] * E.exp(1.0)
    prods = [np.prod(invert_nc_magnetic(ep.a, ep.b, E.exp(-1.0), ONE, B, 1.0, 1.0, t))
             for t in np.linspace(0, 4, 41)]
    assert np.ptp(prods) < 1e-12 * abs(prods[0])


def test_invert_modified_examples():
    assert invert_nc_modified(1.5, 1.5, -0.25, 1.0, 1.0) == pytest.approx((1.0, -1.0), abs=1e-12)
    th, Om = invert_nc_modified(1.0, 1.0, 0.0, 1.0, 1.0)
    assert abs(th) < 1e-12 and abs(Om) < 1e-12
    with pytest.raises(InconsistentTriple) as info:
        invert_nc_modified(1.5, 1.5, -0.15, 1.0, 1.0)
    assert info.value.residual == pytest.approx(0.1, rel=1e-9)


def test_invert_modified_other_sign():
    a, b, c, d = modified_forward(-0.7, 1.3, 1.2, 0.9)
    assert invert_nc_modified(a, b, d, 1.2, 0.9) == pytest.approx((-0.7, 1.3), rel=1e-10)


# round trips

@settings(max_examples=60, deadline=None)
@given(th=st.floats(0.0, 3.0), om=st.floats(0.0, 3.0), w=st.floats(0.2, 3.0),
       M=st.floats(0.3, 3.0), g=st.floats(-0.5, 0.5))
def test_standard_round_trip(th, om, w, M, g):
    f = E.exp(g)
    co = coeffs_standard(f, E.const(w), E.const(th), E.const(om), M)
    for t in np.linspace(0, 2, 5):
        th2, om2 = invert_nc_standard(co.a, co.b, f, E.const(w), M, t)
        assert th2 == pytest.approx(th, rel=1e-8, abs=1e-6)
        assert om2 == pytest.approx(om, rel=1e-8, abs=1e-6)
        back = coeffs_standard(f, E.const(w), E.const(th2), E.const(om2), M)
        assert back.a(t) == pytest.approx(co.a(t), rel=1e-9)
        assert back.b(t) == pytest.approx(co.b(t), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(th=st.floats(0.0, 3.0), om=st.floats(0.0, 3.0), B=st.floats(0.0, 2.0),
       q=st.floats(0.5, 2.0), M=st.floats(0.3, 3.0))
def test_magnetic_round_trip(th, om, B, q, M):
    f, w = E.exp(-0.2), E.const(1.1)
    Bx = B * E.exp(0.1)
    co = coeffs_magnetic(f, w, Bx, E.const(th), E.const(om), M, q)
    for t in np.linspace(0, 2, 5):
        th2, om2 = invert_nc_magnetic(co.a, co.b, f, w, Bx, M, q, t)
        assert th2 == pytest.approx(th, rel=1e-8, abs=1e-6)
        assert om2 == pytest.approx(om, rel=1e-8, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(th=st.floats(0.05, 3.0), om=st.floats(0.05, 3.0), M=st.floats(0.3, 3.0),
       w=st.floats(0.3, 3.0), flip=st.booleans())
def test_modified_round_trip(th, om, M, w, flip):
    theta, Omega = (th, -om) if not flip else (-th, om)
    a, b, c, d = modified_forward(theta, Omega, M, w)
    th2, om2 = invert_nc_modified(a, b, d, M, w)
    assert th2 == pytest.approx(theta, rel=1e-8)
    assert om2 == pytest.approx(Omega, rel=1e-8)
    a2, b2, _, _ = modified_forward(th2, om2, M, w)
    assert a2 == pytest.approx(a, rel=1e-9) and b2 == pytest.approx(b, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(B=st.floats(1e-12, 1e-6))
def test_magnetic_small_field_limit(B):
    f, w = E.exp(-0.3), E.const(1.2)
    th, Om = E.const(0.3), E.const(0.4)
    a = coeffs_magnetic(f, w, E.const(B), th, Om, 1.0, 1.0)
    b = coeffs_standard(f, w, th, Om, 1.0)
    for t in (0.0, 1.0):
        for x, y in zip(values(a, t), values(b, t)):
            assert abs(x - y) < 10 * B


# physical window

def test_window_commutative():
    sc = Scenario("generalized-I", {}, dict(P=1.0, Q=1.0, R=0.0))
    assert physical_window(sc, 7.0) == [(0.0, 7.0)]


def test_window_set_Ia_figure_constants():
    ep = ep_exponential(1e7, 1e7, 1.0, 1.0)
    sc = Scenario("standard", dict(M=1.0), dict(f=1.0, omega=1e3 * E.exp(-0.5)), ep=ep)
    win = physical_window(sc, 20.0)
    assert len(win) == 1
    assert win[0][0] == 0.0
    assert win[0][1] == pytest.approx(math.log(1e7), abs=1e-6)


def test_window_set_Ia_degenerate():
    ep = ep_exponential(1.0, 1.25, 1.0, 1.0)
    sc = Scenario("standard", dict(M=1.0), dict(f=1.0, omega=E.exp(-0.5)), ep=ep)
    win = physical_window(sc, 5.0)
    assert win == [] or (len(win) == 1 and win[0][1] < 1e-8)


# configuration files

CFG = {
    "framework": {"kind": "standard", "family": "exponential"},
    "constants": {"M": 1.0, "sigma": 1.0, "Delta": 1.25, "mu": 1.0, "Gamma": 1.0},
    "functions": {"f": {"kind": "exp", "alpha": -1.0}, "omega": 1.0},
    "quantum": {"n": 1, "m": 0},
}


def test_scenario_from_dict():
    sc = scenario_from_dict(CFG)
    assert sc.framework == "standard"
    assert sc.quantum == QuantumNumbers(1, 0)
    assert sc.fn("f")(1.0) == pytest.approx(math.exp(-1))
    assert sc.ep.family == "exponential"


@pytest.mark.parametrize("spec,t,want", [
    ({"kind": "const", "value": 2.0}, 1.0, 2.0),
    ({"kind": "power", "gamma": 1.0, "chi": 1.0, "p": -1, "scale": 3.0}, 2.0, 1.0),
    ({"kind": "sum", "terms": [1.0, {"kind": "sin", "f": 1.0}]}, 0.0, 1.0),
    ({"kind": "product", "factors": [2.0, {"kind": "cos", "f": 1.0}]}, 0.0, 2.0),
    ({"kind": "sqrt", "arg": 4.0}, 0.0, 2.0),
    ({"kind": "ipow", "n": 3, "arg": {"kind": "exp", "alpha": 1.0}}, 1.0, math.exp(3)),
])
def test_parse_function(spec, t, want):
    assert parse_function(spec)(t) == pytest.approx(want)


@pytest.mark.parametrize("bad,key", [
    ({"framework": {}}, "framework.kind"),
    ({"framework": {"kind": "weird"}}, "framework.kind"),
    ({"framework": {"kind": "standard"}, "constants": {"M": "one"}}, "constants.M"),
    ({"framework": {"kind": "standard"}, "functions": {"f": {"kind": "tan"}}}, "functions.f.kind"),
    ({"framework": {"kind": "standard"}, "functions": {"f": {"kind": "exp"}}}, "functions.f.alpha"),
    ({"framework": {"kind": "standard", "family": "exponential"}, "constants": {"sigma": 1.0}},
     "constants.Delta"),
    ({"framework": {"kind": "standard", "family": "bogus"}}, "framework.family"),
    ({"framework": {"kind": "standard"}, "grid": {"dt": 0.1}}, "grid.dt"),
])
def test_parse_errors_name_key(bad, key):
    with pytest.raises(ParseError) as info:
        scenario_from_dict(bad)
    assert info.value.key == key


def test_load_scenario_file(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text('[framework]\nkind = "standard"\n[functions]\nomega = 2.0\n[grid]\nsteps = 3\n')
    sc = load_scenario(p)
    assert sc.fn("omega")(0.0) == 2.0
    assert sc.grid == {"steps": 3}
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "missing.toml")
    (tmp_path / "bad.toml").write_text("[framework\n")
    with pytest.raises(ParseError):
        load_scenario(tmp_path / "bad.toml")
