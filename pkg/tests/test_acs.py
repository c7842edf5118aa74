import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acsforms import symexpr as sx
from acsforms.acs import (AlmostComplexStructure, EndomorphismField, NotAntiInvariantError,
                          NotClosedError, StructureError, act_on_two_form,
                          anti_invariant_projection, fractional_power,
                          integrability_from_theta, is_anti_invariant, is_integrable,
                          nijenhuis, nijenhuis_vectors, theta_r)
from acsforms.forms import KT, R4, evaluate_form, forms_equal
from acsforms.nilmanifold import build_j_lambda_mu
from acsforms.randomized import random_form, random_polynomial, random_vector
from acsforms.r4family import build_jf

from oracles import fd_nijenhuis

dx1, dx2, dy1, dy2 = (R4.basis(i) for i in range(4))
J0 = build_jf(sx.ZERO).acs
JX2 = build_jf(sx.parse("x2")).acs


def test_rejects_non_complex():
    z, o = sx.ZERO, sx.ONE
    with pytest.raises(StructureError):
        AlmostComplexStructure(R4, [[o, z, z, z], [z, o, z, z], [z, z, o, z], [z, z, z, o]])


def test_action_examples():
    assert forms_equal(act_on_two_form(J0, dx1 ^ dy1), dx1 ^ dy1)
    g = build_jf(sx.parse("x2")).gamma
    assert forms_equal(act_on_two_form(JX2, g), -g)


def test_projection_examples():
    g = build_jf(sx.parse("x2")).gamma
    plus, minus = anti_invariant_projection(JX2, g)
    assert plus.is_zero() and forms_equal(minus, g)
    plus, minus = anti_invariant_projection(J0, dx1 ^ dy1)
    assert forms_equal(plus, dx1 ^ dy1) and minus.is_zero()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_action_is_involution_and_projection_splits(seed):
    rng = np.random.default_rng(seed)
    J = build_jf(random_polynomial(rng, sx.CHART_R4, 2)).acs
    a = random_form(rng, R4, 2, 1)
    assert forms_equal(act_on_two_form(J, act_on_two_form(J, a)), a)
    plus, minus = anti_invariant_projection(J, a)
    assert forms_equal(plus + minus, a)
    p2, m2 = anti_invariant_projection(J, minus)
    assert p2.is_zero() and forms_equal(m2, minus)


def test_nijenhuis_jx2():
    N = nijenhuis(JX2, 0, 1)
    assert N == (sx.ZERO, sx.ZERO, sx.ZERO, sx.ONE)


def test_nijenhuis_lemma_formula():
    rng = np.random.default_rng(3)
    for _ in range(10):
        f = random_polynomial(rng, sx.CHART_R4, 3)
        N = nijenhuis(build_jf(f).acs, 0, 1)
        want = (sx.ZERO, sx.neg(sx.differentiate(f, "y2")), sx.ZERO, sx.differentiate(f, "x2"))
        assert all(sx.is_zero(a - b) for a, b in zip(N, want))


def test_standard_structure_integrable():
    assert all(c == sx.ZERO for j in range(4) for k in range(j + 1, 4) for c in nijenhuis(J0, j, k))
    with pytest.raises(ValueError):
        nijenhuis(J0, 1, 1)


@pytest.mark.parametrize("f,expected", [("x1*y1", True), ("x2", False), ("y2", False),
                                        ("sin(2*pi*x1)", True)])
def test_is_integrable_jf(f, expected):
    assert is_integrable(build_jf(sx.parse(f)).acs) is expected


def test_kt_nonconstant_lambda_not_integrable():
    s = build_j_lambda_mu(sx.parse("sin(2*pi*x4)"), sx.ZERO)
    assert not is_integrable(s.acs)


@pytest.mark.parametrize("f", ["x2", "x1*y2 + sin(y1)", "exp(x2)*y1"])
def test_nijenhuis_matches_fd_oracle_r4(f):
    J = build_jf(sx.parse(f)).acs
    rng = np.random.default_rng(1)
    for j, k in [(0, 1), (0, 3), (1, 2), (2, 3)]:
        p = rng.uniform(-1, 1, 4)
        sym = np.array([sx.evaluate(c, dict(zip(R4.coords, p))) for c in nijenhuis(J, j, k)])
        assert np.allclose(sym, fd_nijenhuis(J, j, k, p), atol=1e-6)


def test_nijenhuis_matches_fd_oracle_kt():
    s = build_j_lambda_mu(sx.parse("sin(2*pi*x4)"), sx.parse("cos(2*pi*x4)"))
    rng = np.random.default_rng(2)
    for j, k in [(0, 2), (0, 1), (1, 3), (0, 3)]:
        p = rng.uniform(-1, 1, 4)
        sym = np.array([sx.evaluate(c, dict(zip(KT.coords, p))) for c in nijenhuis(s.acs, j, k)])
        assert np.allclose(sym, fd_nijenhuis(s.acs, j, k, p), atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nijenhuis_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    J = build_jf(random_polynomial(rng, sx.CHART_R4, 2)).acs
    X, Y = random_vector(rng, R4, 1), random_vector(rng, R4, 1)
    assert all(sx.is_zero(a + b) for a, b in
               zip(nijenhuis_vectors(J, X, Y), nijenhuis_vectors(J, Y, X)))


def test_fractional_power_examples():
    I = EndomorphismField.identity(R4)
    assert fractional_power(JX2, 0).equals(I)
    assert fractional_power(JX2, 1).equals(JX2)
    m2 = fractional_power(JX2, 2)
    pts = np.random.default_rng(0).uniform(-1, 1, (20, 4))
    assert np.allclose(m2.matrix_at(pts), -np.eye(4))
    J2 = JX2.matrix_at(pts) @ JX2.matrix_at(pts)
    assert np.allclose(J2, -np.eye(4))


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_fractional_power_additive(r, s):
    lhs = fractional_power(JX2, r).compose(fractional_power(JX2, s))
    assert lhs.equals(fractional_power(JX2, r + s))


def test_theta_examples():
    jf = build_jf(sx.parse("x2"))
    g = jf.gamma
    assert theta_r(g, JX2, 0).terms == g.terms
    assert forms_equal(theta_r(g, JX2, 2), -g)
    t1 = theta_r(g, JX2, 1)
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = dict(zip(R4.coords, rng.uniform(-1, 1, 4)))
        v, w = rng.standard_normal((2, 4))
        Jw = JX2.matrix_at(np.array([[p[x] for x in R4.coords]]))[0] @ w
        assert abs(evaluate_form(t1, p, [v, w]) - evaluate_form(g, p, [v, Jw])) < 1e-12
    assert forms_equal(t1, jf.beta)


def test_theta_requires_anti_invariant():
    with pytest.raises(NotAntiInvariantError):
        theta_r(dx1 ^ dy1, J0, 1)


@pytest.mark.parametrize("r", ["0.5", "1.5", "sin(2*pi*x1)", "x2*y1"])
def test_theta_anti_invariant(r):
    g = build_jf(sx.parse("x2")).gamma
    t = theta_r(g, JX2, sx.parse(r))
    assert is_anti_invariant(JX2, t)


def test_integrability_from_theta():
    rep = integrability_from_theta((dx1 ^ dx2) - (dy1 ^ dy2), J0)
    assert rep.theta_closed and rep.nijenhuis_vanishes and rep.psi_type_20
    rep = integrability_from_theta(build_jf(sx.parse("x2")).gamma, JX2)
    assert not rep.theta_closed and not rep.nijenhuis_vanishes
    with pytest.raises(NotClosedError):
        integrability_from_theta(build_jf(sx.parse("x2")).beta, JX2)


@pytest.mark.parametrize("f", ["0", "x1*y1", "x2", "sin(2*pi*x1)", "y2*x1"])
def test_closed_theta_implies_integrable(f):
    jf = build_jf(sx.parse(f))
    rep = integrability_from_theta(jf.gamma, jf.acs)
    assert not rep.theta_closed or rep.nijenhuis_vanishes


def test_endomorphism_json_roundtrip():
    back = EndomorphismField.from_json(JX2.to_json())
    assert back.equals(JX2)
