import math

import mpmath
import numpy as np
import pytest
import sympy

from acsforms import symexpr as sx
from acsforms.acs import anti_invariant_projection, is_integrable, nijenhuis
from acsforms.forms import R4, forms_equal
from acsforms.randomized import random_form, random_polynomial
from acsforms.r4family import (COROLLARY_MAP, RESIDUAL_COMPONENTS, AntiInvariantCandidate,
                               Ball, CollarMismatchError, ConstraintError, ForeignVariableError,
                               NumericJf, OverlapConflictError, alpha_family, alpha_n,
                               alpha_n_parameters, build_jf, bump, check_compatibility,
                               compatibility_form, complex_residual, corollary_glued_structure,
                               first_order_residual, piecewise_structure, pullback,
                               sampled_gram, second_order_residual)

X1, X2, Y1, Y2 = (sx.var(v) for v in sx.CHART_R4)
dx1, dx2, dy1, dy2 = (R4.basis(i) for i in range(4))


def exp_pair(s, t):
    e = sx.exp(sx.add(sx.mul(sx.Const(s), X1), sx.mul(sx.Const(t), Y1)))
    return sx.mul(sx.Const(t), e), sx.mul(sx.Const(-s), e)


def test_build_jf_examples():
    jf = build_jf(sx.ZERO)
    assert forms_equal(jf.beta, (dx1 ^ dx2) - (dy1 ^ dy2))
    jf = build_jf(sx.parse("x2"))
    assert forms_equal(jf.beta, (dx1 ^ dx2) - (dx1 ^ dy1).scale(X2) - (dy1 ^ dy2))
    with pytest.raises(ForeignVariableError):
        build_jf(sx.parse("x3"))


@pytest.mark.parametrize("f", ["x2", "sin(x1*y2) + x2^2", "exp(y1)*x2"])
def test_beta_gamma_anti_invariant(f):
    jf = build_jf(sx.parse(f))
    for w in (jf.beta, jf.gamma):
        plus, minus = anti_invariant_projection(jf.acs, w)
        assert plus.is_zero() and forms_equal(minus, w)


def test_jf_standard_and_square():
    J = build_jf(sx.ZERO).acs
    pts = np.random.default_rng(0).uniform(-1, 1, (5, 4))
    M = J.matrix_at(pts)[0]
    # J0 d/dx1 = d/dy1, J0 d/dx2 = d/dy2
    assert np.array_equal(M[:, 0], [0, 0, 1, 0]) and np.array_equal(M[:, 1], [0, 0, 0, 1])
    Jf = build_jf(sx.parse("x1*y2 - sin(x2)")).acs
    A = Jf.matrix_at(pts)
    assert np.allclose(A @ A, -np.eye(4), atol=1e-14)


def test_first_order_examples():
    assert all(r == sx.ZERO for r in first_order_residual(AntiInvariantCandidate(sx.ZERO, sx.ONE), X2))
    res = first_order_residual(AntiInvariantCandidate(sx.ONE, sx.ZERO), X2)
    assert [sx.evaluate(r, {}) for r in res] == [1.0, 0.0, 0.0, 0.0]
    a, b = exp_pair(*alpha_n_parameters(4))
    assert all(sx.is_zero(r) for r in first_order_residual(AntiInvariantCandidate(a, b), X2))


def test_first_order_against_exterior_derivative():
    rng = np.random.default_rng(9)
    for _ in range(20):
        a, b, f = (random_polynomial(rng, sx.CHART_R4, 3) for _ in range(3))
        c = AntiInvariantCandidate(a, b)
        d = c.form(build_jf(f)).d()
        for r, (idx, sign) in zip(first_order_residual(c, f), RESIDUAL_COMPONENTS):
            assert sx.is_zero(d.coefficient(*idx) - sx.mul(sx.Const(sign), r))


def _sympy_first_order(a, b, f):
    x1, x2, y1, y2 = sympy.symbols("x1 x2 y1 y2")
    return [sympy.diff(a, y1) - sympy.diff(b, x1) + sympy.diff(f * a, x2),
            sympy.diff(a, x1) + sympy.diff(b, y1) + sympy.diff(f * a, y2),
            sympy.diff(a, y2) - sympy.diff(b, x2),
            sympy.diff(a, x2) + sympy.diff(b, y2)]


def test_first_order_matches_sympy():
    syms = sympy.symbols("x1 x2 y1 y2")
    a_s, b_s, f_s = "x1*y2^2 + 3*x2", "sin(y1)*x2", "x2*y2 - x1"
    A, B, F = (sympy.sympify(s.replace("^", "**")) for s in (a_s, b_s, f_s))
    want = _sympy_first_order(A, B, F)
    got = first_order_residual(AntiInvariantCandidate(sx.parse(a_s), sx.parse(b_s)), sx.parse(f_s))
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = rng.uniform(-1, 1, 4)
        env = dict(zip(sx.CHART_R4, p))
        for g, w in zip(got, want):
            ref = float(w.subs(dict(zip(syms, p))))
            assert abs(sx.evaluate(g, env) - ref) < 1e-12


def test_second_order_examples():
    assert all(r == sx.ZERO for r in second_order_residual(sx.ZERO, X2))
    for n in range(1, 6):
        a, _ = exp_pair(*alpha_n_parameters(n))
        assert all(sx.is_zero(r) for r in second_order_residual(a, X2))


def test_second_order_implied_by_first_order():
    rng = np.random.default_rng(4)
    for _ in range(10):
        theta = rng.uniform(0, 2 * math.pi)
        # points on the constraint circle s^2 + (t + 1/2)^2 = 1/4
        s, t = 0.5 * math.cos(theta), -0.5 + 0.5 * math.sin(theta)
        a, b = exp_pair(s, t)
        assert all(sx.is_zero(r) for r in first_order_residual(AntiInvariantCandidate(a, b), X2))
        assert all(sx.is_zero(r) for r in second_order_residual(a, X2))


def test_complex_residual_theorem_solution():
    s, t = alpha_n_parameters(3)
    a, b = exp_pair(s, t)
    assert all(sx.is_zero(r) for r in complex_residual(a, sx.neg(b), X2))


def test_complex_residual_constant():
    # w = c real: only (i/2) d/dz2 (2 c f) survives in the first equation
    c = 1.5
    f = sx.parse("x2^2 + y2*x1")
    res = complex_residual(sx.Const(c), sx.ZERO, f)
    fx2, fy2 = sx.differentiate(f, "x2"), sx.differentiate(f, "y2")
    # (i/2) * (1/2)(d_x2 - i d_y2)(2 c f) = (c/2)(f_y2 + i f_x2)
    assert sx.is_zero(res[0] - sx.mul(sx.Const(c / 2), fy2))
    assert sx.is_zero(res[1] - sx.mul(sx.Const(c / 2), fx2))
    assert sx.is_zero(res[2]) and sx.is_zero(res[3])
    assert all(sx.is_zero(r) for r in complex_residual(sx.Const(c), sx.ZERO, sx.parse("x1*y1")))


def test_complex_and_real_systems_equivalent():
    rng = np.random.default_rng(12)
    for k in range(20):
        f = random_polynomial(rng, sx.CHART_R4, 2)
        if k % 2:
            a, b = exp_pair(0.5, -0.5)
            f = X2
        else:
            a, b = random_polynomial(rng, sx.CHART_R4, 2), random_polynomial(rng, sx.CHART_R4, 2)
        real = first_order_residual(AntiInvariantCandidate(a, b), f)
        cplx = complex_residual(a, sx.neg(b), f)
        assert all(sx.is_zero(r) for r in real) == all(sx.is_zero(r) for r in cplx)
        # componentwise: (Re E1, Im E1, Re E2, Im E2) = (R2, R1, R4, R3) / 2
        for ci, ri in zip(cplx, (1, 0, 3, 2)):
            assert sx.is_zero(ci - sx.mul(sx.Const(0.5), real[ri]))


def test_alpha_family_examples():
    assert alpha_family(0.0, 0.0).is_zero()
    a = alpha_family(0.0, -1.0)
    jf = build_jf(X2)
    assert forms_equal(a, jf.beta.scale(sx.neg(sx.exp(sx.neg(Y1)))))
    assert alpha_family(0.5, -0.5).d().is_zero()
    with pytest.raises(ConstraintError) as exc:
        alpha_family(0.5, 0.5)
    assert abs(exc.value.residual - 1.0) < 1e-15
    with pytest.raises(ValueError):
        alpha_family(0.0, -1.0, f=Y1)


def test_alpha_n_parameters():
    assert alpha_n_parameters(1) == (0.0, -1.0)
    assert alpha_n_parameters(2) == (0.5, -0.5)
    with pytest.raises(ValueError):
        alpha_n(0)


def test_off_circle_not_closed():
    for s, t in [(0.5 + 1e-3, -0.5), (0.3, -0.2), (0.0, -1.001)]:
        a, b = exp_pair(s, t)
        assert not all(sx.is_zero(r) for r in first_order_residual(AntiInvariantCandidate(a, b), X2))


def test_alpha_n_independent_first_five():
    G = sampled_gram([alpha_n(n) for n in range(1, 6)], sx.SampleDomain(n_samples=200))
    assert np.linalg.matrix_rank(G, hermitian=True) == 5


def test_alpha_n_gram_positive_definite_high_precision():
    # float64 eigenvalues bottom out near 1e-16 * max; 60-digit arithmetic settles the sign
    mpmath.mp.dps = 60
    env = sx.SampleDomain(n_samples=200).points(sx.CHART_R4)
    rows = []
    for n in range(1, 9):
        s, t = mpmath.sqrt(n - 1) / n, mpmath.mpf(-1) / n
        r = []
        for x1, x2, y1 in zip(env["x1"], env["x2"], env["y1"]):
            E = mpmath.exp(s * mpmath.mpf(x1) + t * mpmath.mpf(y1))
            a, b = t * E, -s * E
            r += [a, -mpmath.mpf(x2) * a, b, -b, -a]
        rows.append(r)
    V = mpmath.matrix(rows)
    ev = mpmath.eigsy(V * V.T)[0]
    assert min(ev[i] for i in range(8)) > mpmath.mpf(10) ** -20


def test_integrability_criterion():
    for f, want in [("x2", False), ("y2", False), ("x1*y1", True), ("sin(2*pi*x1)", True)]:
        assert is_integrable(build_jf(sx.parse(f)).acs) is want


def test_nijenhuis_x1_x2_formula():
    f = sx.parse("x2*y2^2 + sin(x1)")
    N = nijenhuis(build_jf(f).acs, 0, 1)
    assert sx.is_zero(N[1] + sx.differentiate(f, "y2"))
    assert sx.is_zero(N[3] - sx.differentiate(f, "x2"))


def test_compatibility():
    assert forms_equal(compatibility_form(sx.ZERO), (dx1 ^ dy1) + (dx2 ^ dy2))
    rep = check_compatibility(sx.parse("x1*x2"))
    assert rep.invariant and rep.positive and rep.closed and rep.verified
    rep = check_compatibility(sx.parse("y1"))
    assert not rep.verified and "unverified" in rep.note


def test_pullback_identity_and_corollary_map():
    jf = build_jf(X2)
    assert forms_equal(pullback(np.eye(4), jf.beta), jf.beta)
    assert pullback(np.eye(4), jf.acs).equals(jf.acs)
    assert forms_equal(pullback(COROLLARY_MAP, jf.gamma), (dx1 ^ dx2) - (dy1 ^ dy2))
    with pytest.raises(np.linalg.LinAlgError):
        pullback(np.zeros((4, 4)), jf.gamma)


def test_pullback_preserves_anti_invariance():
    jf = build_jf(sx.parse("x2 + x1*y2"))
    T = COROLLARY_MAP
    TJ = pullback(T, jf.acs)
    for w in (jf.beta, jf.gamma):
        plus, _ = anti_invariant_projection(TJ, pullback(T, w))
        assert plus.is_zero()


def test_pullback_commutes_with_d():
    rng = np.random.default_rng(6)
    T = rng.normal(size=(4, 4))
    for deg in (0, 1, 2):
        w = random_form(rng, R4, deg)
        assert forms_equal(pullback(T, w.d()), pullback(T, w).d())


def test_piecewise_single_piece_background():
    bg = NumericJf(lambda p: np.zeros(len(p)))
    P = piecewise_structure([(Ball((0.5,) * 4, 0.3, 1.0), bg)], bg)
    pts = np.random.default_rng(0).uniform(0, 1, (50, 4))
    assert np.array_equal(P.matrix_at(pts), bg.matrix_at(pts))


def test_piecewise_bump_piece_consistent():
    c = (0.5,) * 4
    bg = NumericJf(lambda p: np.zeros(len(p)))
    piece = NumericJf(lambda p: bump(p, c, 0.25, 0.8, 1.0))
    P = piecewise_structure([(Ball(c, 0.3, 1.0), piece)], bg)
    M = P.matrix_at(np.array([c]))[0]
    assert abs(M[1, 0] - 0.8) < 1e-12


def test_piecewise_errors():
    c = (0.5,) * 4
    bg = NumericJf(lambda p: np.zeros(len(p)))
    big = NumericJf(lambda p: np.ones(len(p)))
    with pytest.raises(CollarMismatchError):
        piecewise_structure([(Ball(c, 0.3, 1.0), big)], bg)
    a = NumericJf(lambda p: bump(p, c, 0.2, 1.0, 1.0))
    b = NumericJf(lambda p: bump(p, c, 0.2, -1.0, 1.0))
    with pytest.raises(OverlapConflictError):
        piecewise_structure([(Ball(c, 0.3, 1.0), a), (Ball(c, 0.3, 1.0), b)], bg)


def test_glued_structure_squares_to_minus_one():
    G = corollary_glued_structure()
    pts = np.random.default_rng(1).uniform(0, 1, (500, 4))
    M = G.matrix_at(pts)
    assert np.allclose(M @ M, -np.eye(4), atol=1e-12)
    # both patches actually deform the background
    assert abs(G.matrix_at(np.zeros((1, 4)))[0, 1, 0]) > 0.5
    assert not np.allclose(G.matrix_at(np.full((1, 4), 0.5))[0], G.background.matrix_at(np.zeros((1, 4)))[0])
