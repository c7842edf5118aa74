import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acsforms import symexpr as sx
from acsforms.forms import (KT, R4, DifferentialForm, FormError, evaluate_form,
                            exterior_derivative, forms_equal, get_coframe, lie_bracket, wedge)
from acsforms.randomized import random_form
from acsforms.r4family import build_jf

from oracles import coordinate_components, fd_exterior_derivative

dx1, dx2, dy1, dy2 = (R4.basis(i) for i in range(4))


def test_wedge_basics():
    w = dx1 ^ dx2
    assert w.terms == {(0, 1): sx.ONE}
    assert (dx1 ^ dx1).terms == {}
    lhs = (dx1 + dy1) ^ (dx2 ^ dy2)
    assert lhs.terms == {(0, 1, 3): sx.ONE, (1, 2, 3): sx.Const(-1.0)}


def test_wedge_errors():
    with pytest.raises(FormError):
        wedge(dx1 ^ dx2 ^ dy1, dx2 ^ dy2)
    with pytest.raises(FormError):
        wedge(dx1, KT.basis(0))


def test_d_gamma_and_beta():
    jf = build_jf(sx.parse("x2"))
    assert exterior_derivative(jf.gamma).is_zero()
    db = exterior_derivative(jf.beta)
    assert forms_equal(db, dx1 ^ dx2 ^ dy1)


def test_d_beta_against_fd():
    jf = build_jf(sx.parse("x2"))
    rng = np.random.default_rng(0)
    db = jf.beta.d()
    for _ in range(50):
        p = rng.uniform(-1, 1, 4)
        ref = fd_exterior_derivative(jf.beta, p)
        got = coordinate_components(db, p)
        assert all(abs(ref[k] - got[k]) < 1e-7 for k in ref)


def test_kt_structure_equation():
    E = [KT.basis(i) for i in range(4)]
    assert forms_equal(E[2].d(), -(E[0] ^ E[1]))
    for i in (0, 1, 3):
        assert E[i].d().is_zero()


def test_kt_frame_checks():
    assert KT.check_duality()
    assert KT.check_brackets()
    e1, e2 = (tuple(sx.ONE if i == k else sx.ZERO for i in range(4)) for k in (0, 1))
    br = lie_bracket(KT, e1, e2)
    assert br == (sx.ZERO, sx.ZERO, sx.ONE, sx.ZERO)


def test_bad_structure_constants():
    from acsforms.forms import Coframe
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    with pytest.raises(FormError):
        Coframe("bad", ("x1", "x2", "x3"), ["a", "b", "c"], c)


def test_evaluate_form_examples():
    jf = build_jf(sx.parse("x2"))
    g = jf.gamma
    p = {x: 0.1 for x in sx.CHART_R4}
    ex1, ey2, ey1 = (np.eye(4)[i] for i in (0, 3, 2))
    assert evaluate_form(g, p, [ex1, ey2]) == 1.0
    assert evaluate_form(g, p, [ey2, ex1]) == -1.0
    p["x2"] = 0.7
    assert abs(evaluate_form(jf.beta, p, [ex1, ey1]) + 0.7) < 1e-15
    with pytest.raises(FormError):
        evaluate_form(g, p, [ex1])


def test_invalid_index_rejected():
    with pytest.raises(FormError):
        DifferentialForm(R4, 2, {(1, 0): sx.ONE})
    with pytest.raises(FormError):
        DifferentialForm(R4, 2, {(0, 0): sx.ONE})


def test_top_degree_derivative_rejected():
    with pytest.raises(FormError):
        (dx1 ^ dx2 ^ dy1 ^ dy2).d()


def test_json_roundtrip():
    jf = build_jf(sx.parse("x2*y1"))
    w = jf.beta.scale(sx.parse("exp(x1)"))
    back = DifferentialForm.from_json(w.to_json())
    assert back.coframe is R4 and forms_equal(back, w)
    assert get_coframe("kodaira_thurston") is KT


@pytest.mark.parametrize("cf", [R4, KT], ids=["r4", "kt"])
def test_d_matches_fd_oracle(cf):
    rng = np.random.default_rng(11)
    for _ in range(15):
        w = random_form(rng, cf, int(rng.integers(0, 3)))
        dw = w.d()
        p = rng.uniform(-1, 1, 4)
        ref = fd_exterior_derivative(w, p)
        got = coordinate_components(dw, p)
        for k in ref:
            assert abs(ref[k] - got[k]) <= 1e-6 * (1 + abs(ref[k]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["r4", "kt"]), st.integers(0, 2))
def test_dd_zero(seed, name, deg):
    cf = get_coframe("r4" if name == "r4" else "kodaira_thurston")
    w = random_form(np.random.default_rng(seed), cf, deg)
    assert w.d().d().is_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.integers(0, 2))
def test_graded_commutativity(seed, p, q):
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, R4, p, 1), random_form(rng, R4, q, 1)
    assert forms_equal(a ^ b, (b ^ a).scale((-1.0) ** (p * q)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1), st.integers(0, 2))
def test_leibniz(seed, p, q):
    rng = np.random.default_rng(seed)
    cf = KT if seed % 2 else R4
    a, b = random_form(rng, cf, p), random_form(rng, cf, q)
    assert forms_equal((a ^ b).d(), (a.d() ^ b) + (a ^ b.d()).scale((-1.0) ** p))
