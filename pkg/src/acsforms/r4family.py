"""The ``J_f`` family on R^4 = C^2 and its closed anti-invariant forms.

Coordinates are ordered ``(x1, x2, y1, y2)`` with ``z_k = x_k + i y_k``.
``J_f`` is given on the coordinate frame by::

    J d/dx1 = f d/dx2 + d/dy1      J d/dx2 = d/dy2
    J d/dy1 = -d/dx1 - f d/dy2     J d/dy2 = -d/dx2

and ``Lambda^-`` is spanned by ``beta = dx1^dx2 - f dx1^dy1 - dy1^dy2`` and
``gamma = dx1^dy2 - dx2^dy1``.  A form ``a beta + b gamma`` is closed iff the
four residuals of :func:`first_order_residual` vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import symexpr as sx
from .acs import (AlmostComplexStructure, EndomorphismField, act_on_two_form,
                  anti_invariant_projection)
from .forms import R4, DifferentialForm, FormError, sample_coefficients
from .symexpr import Expr, SampleDomain

__all__ = [
    "JfStructure", "AntiInvariantCandidate", "ForeignVariableError", "ConstraintError",
    "build_jf", "first_order_residual", "second_order_residual", "complex_residual",
    "alpha_family", "alpha_n", "alpha_n_parameters", "sampled_gram",
    "compatibility_form", "CompatibilityReport", "check_compatibility",
    "COROLLARY_MAP", "pullback",
    "NumericStructure", "NumericJf", "ExprStructure", "as_numeric", "jf_matrices", "PulledBackStructure", "Ball", "PiecewiseStructure",
    "piecewise_structure", "corollary_glued_structure", "bump", "CollarMismatchError", "OverlapConflictError",
]

X1, X2, Y1, Y2 = (sx.var(v) for v in sx.CHART_R4)


class ForeignVariableError(ValueError):
    pass


class ConstraintError(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _check_vars(f: Expr, allowed=sx.CHART_R4, what="f"):
    extra = sx.variables(f) - set(allowed)
    if extra:
        raise ForeignVariableError(f"{what} depends on {sorted(extra)}; allowed {list(allowed)}")


def _jf_matrix(f: Expr) -> list:
    z, o = sx.ZERO, sx.ONE
    # columns: images of d/dx1, d/dx2, d/dy1, d/dy2
    return [[z, z, -o, z],
            [f, z, z, -o],
            [o, z, z, z],
            [z, o, sx.neg(f), z]]


@dataclass(frozen=True)
class JfStructure:
    f: Expr
    acs: AlmostComplexStructure
    beta: DifferentialForm
    gamma: DifferentialForm


def build_jf(f) -> JfStructure:
    f = sx.as_expr(f)
    _check_vars(f)
    J = AlmostComplexStructure(R4, _jf_matrix(f))
    dx1, dx2, dy1, dy2 = (R4.basis(i) for i in range(4))
    beta = (dx1 ^ dx2) - (dx1 ^ dy1).scale(f) - (dy1 ^ dy2)
    gamma = (dx1 ^ dy2) - (dx2 ^ dy1)
    return JfStructure(f, J, beta, gamma)


def phi_frame(f) -> tuple:
    """Real and imaginary parts of the (1,0)-coframe ``phi^1, phi^2``."""
    f = sx.as_expr(f)
    dx1, dx2, dy1, dy2 = (R4.basis(i) for i in range(4))
    return (dx1, dy1), (dx2, dy2 - dx1.scale(f))


@dataclass(frozen=True)
class AntiInvariantCandidate:
    """Coefficients of ``alpha = a beta + b gamma``."""

    a: Expr
    b: Expr

    def form(self, jf: JfStructure) -> DifferentialForm:
        return jf.beta.scale(self.a) + jf.gamma.scale(self.b)


def _d(e: Expr, *vs: str) -> Expr:
    for v in vs:
        e = sx.differentiate(e, v)
    return e


def first_order_residual(c: AntiInvariantCandidate, f) -> tuple:
    """Left-hand sides of the first-order closedness system for ``a beta + b gamma``."""
    f = sx.as_expr(f)
    a, b = sx.as_expr(c.a), sx.as_expr(c.b)
    fa = sx.mul(f, a)
    return (
        _d(a, "y1") - _d(b, "x1") + _d(fa, "x2"),
        _d(a, "x1") + _d(b, "y1") + _d(fa, "y2"),
        _d(a, "y2") - _d(b, "x2"),
        _d(a, "x2") + _d(b, "y2"),
    )


# (3-form multi-index, sign) of d(a beta + b gamma) matching each residual
RESIDUAL_COMPONENTS = (((0, 1, 2), 1.0), ((0, 2, 3), -1.0), ((0, 1, 3), 1.0), ((1, 2, 3), -1.0))


def second_order_residual(a, f) -> tuple:
    """Five integrability conditions on ``a`` for a matching ``b`` to exist."""
    a, f = sx.as_expr(a), sx.as_expr(f)
    fa = sx.mul(a, f)
    return (
        _d(a, "x1", "y2") - _d(a, "x2", "y1") - _d(fa, "x2", "x2"),
        _d(a, "x1", "y2") - _d(a, "x2", "y1") + _d(fa, "y2", "y2"),
        _d(a, "x1", "x1") + _d(a, "y1", "y1") + _d(fa, "x2", "y1") + _d(fa, "x1", "y2"),
        _d(a, "x1", "x2") + _d(a, "y1", "y2") + _d(fa, "x2", "y2"),
        _d(a, "x2", "x2") + _d(a, "y2", "y2"),
    )


class _Complex:
    """Complex-valued expression as a (real, imaginary) pair."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=sx.ZERO):
        self.re, self.im = sx.as_expr(re), sx.as_expr(im)

    def __add__(self, o):
        return _Complex(self.re + o.re, self.im + o.im)

    def times_i(self):
        return _Complex(sx.neg(self.im), self.re)

    def scale(self, r):
        return _Complex(sx.mul(sx.as_expr(r), self.re), sx.mul(sx.as_expr(r), self.im))

    def conj(self):
        return _Complex(self.re, sx.neg(self.im))

    def real_mul(self, g):
        return _Complex(sx.mul(g, self.re), sx.mul(g, self.im))

    def dx(self, v):
        return _Complex(sx.differentiate(self.re, v), sx.differentiate(self.im, v))


def _wirtinger(w: _Complex, x: str, y: str, bar: bool) -> _Complex:
    # d/dz = (d/dx - i d/dy)/2, d/dzbar = (d/dx + i d/dy)/2
    iy = w.dx(y).times_i()
    if not bar:
        iy = iy.scale(-1.0)
    return (w.dx(x) + iy).scale(0.5)


def complex_residual(w_re, w_im, f) -> tuple:
    """Real/imaginary parts of the perturbed Cauchy-Riemann system for ``w``.

    Returns ``(Re E1, Im E1, Re E2, Im E2)`` with
    ``E1 = dw/dzbar1 + (i/2) d/dz2 (f (w + conj w))`` and ``E2 = dw/dzbar2``.
    ``(a, b) = (w_re, -w_im)`` is the corresponding solution of the real system.
    """
    f = sx.as_expr(f)
    w = _Complex(w_re, w_im)
    g = (w + w.conj()).real_mul(f)
    e1 = _wirtinger(w, "x1", "y1", bar=True) + _wirtinger(g, "x2", "y2", bar=False).times_i().scale(0.5)
    e2 = _wirtinger(w, "x2", "y2", bar=True)
    return (e1.re, e1.im, e2.re, e2.im)


def alpha_family(s: float, t: float, f=None, tol: float = 1e-12) -> DifferentialForm:
    """``t e^{s x1 + t y1} beta - s e^{s x1 + t y1} gamma`` for ``f = x2``.

    Requires ``s^2 + t^2 + t = 0`` within ``tol``.
    """
    f = X2 if f is None else sx.as_expr(f)
    if f != X2:
        raise ValueError("the closed family is only established for f = x2")
    resid = s * s + t * t + t
    if abs(resid) > tol:
        raise ConstraintError(f"s^2 + t^2 + t = {resid:.3e} violates the constraint", resid)
    jf = build_jf(f)
    e = sx.exp(sx.add(sx.mul(sx.Const(s), X1), sx.mul(sx.Const(t), Y1)))
    return AntiInvariantCandidate(sx.mul(sx.Const(t), e), sx.mul(sx.Const(-s), e)).form(jf)


def alpha_n_parameters(n: int) -> tuple:
    if n < 1:
        raise ValueError("n must be a positive integer")
    return float(np.sqrt(n - 1) / n), -1.0 / n


def alpha_n(n: int) -> DifferentialForm:
    s, t = alpha_n_parameters(n)
    return alpha_family(s, t)


def sampled_gram(forms: Sequence[DifferentialForm], dom: SampleDomain) -> np.ndarray:
    """Gram matrix of forms viewed as vectors of sampled coefficients."""
    coords = forms[0].coframe.coords
    env = dom.points(coords)
    V = np.stack([sample_coefficients(w, env).ravel() for w in forms])
    return V @ V.T


def compatibility_form(f) -> DifferentialForm:
    """``dx1^dy1 + dx2^dy2 + f dx1^dx2``."""
    f = sx.as_expr(f)
    _check_vars(f)
    dx1, dx2, dy1, dy2 = (R4.basis(i) for i in range(4))
    return (dx1 ^ dy1) + (dx2 ^ dy2) + (dx1 ^ dx2).scale(f)


@dataclass(frozen=True)
class CompatibilityReport:
    invariant: bool
    positive: bool
    closed: bool
    verified: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {"invariant": self.invariant, "positive": self.positive,
                "closed": self.closed, "verified": self.verified, "note": self.note}


def check_compatibility(f, dom: SampleDomain = SampleDomain(n_samples=200)) -> CompatibilityReport:
    """J_f-invariance, positivity of ``w(v, Jv)`` and closedness of ``w_f``."""
    f = sx.as_expr(f)
    jf = build_jf(f)
    w = compatibility_form(f)
    invariant = (act_on_two_form(jf.acs, w) - w).is_zero(dom)
    env = dom.points(sx.CHART_R4)
    pts = np.stack([env[x] for x in sx.CHART_R4], axis=1)
    Jm = jf.acs.matrix_at(pts)
    W = np.stack([[sx.evaluate_array(c, env) for c in row] for row in w.matrix()])
    rng = np.random.default_rng(dom.seed + 7)
    v = rng.standard_normal((pts.shape[0], 4))
    Jv = np.einsum("pij,pj->pi", Jm, v)
    vals = np.einsum("pi,ijp,pj->p", v, W, Jv)
    positive = bool(np.all(vals > 0))
    closed = w.d().is_zero(dom)
    verified = not (sx.variables(f) & {"y1", "y2"})
    note = "" if verified else "f depends on y1/y2: taming/compatibility unverified"
    return CompatibilityReport(invariant, positive, closed, verified, note)


# ---------------------------------------------------------------------------
# pullback by linear maps

# (z1, z2) -> (z2, -i z1) in (x1, x2, y1, y2) coordinates
COROLLARY_MAP = np.array([[0, 1, 0, 0],
                          [0, 0, 1, 0],
                          [0, 0, 0, 1],
                          [-1, 0, 0, 0]], dtype=float)


def _as_map(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        raise ValueError("T must be a 4x4 matrix")
    if abs(np.linalg.det(T)) < 1e-12:
        raise np.linalg.LinAlgError("T is singular")
    return T


def _substitution(T: np.ndarray) -> dict:
    xs = [sx.var(v) for v in sx.CHART_R4]
    out = {}
    for i, name in enumerate(sx.CHART_R4):
        out[name] = sx.add(*(sx.mul(sx.Const(T[i, j]), xs[j]) for j in range(4) if T[i, j] != 0))
    return out


def pullback(T, x):
    """Pull back a form or structure along the linear map ``T`` of R^4.

    Forms: ``(T^* w)_x = w_{Tx} o (T, ..., T)``.  Structures:
    ``(T^* J)_x = T^{-1} J_{Tx} T``.  Numeric structures are wrapped lazily.
    """
    T = _as_map(T)
    if isinstance(x, DifferentialForm):
        if x.coframe is not R4:
            raise FormError("pullback is defined on the R^4 coordinate coframe")
        sub = _substitution(T)
        import itertools
        acc: dict = {}
        for I, c in x.terms.items():
            cT = sx.substitute(c, sub)
            for J in itertools.combinations(range(4), x.degree):
                m = np.linalg.det(T[np.ix_(I, J)]) if I else 1.0
                if abs(m) < 1e-14:
                    continue
                acc.setdefault(J, []).append(sx.mul(sx.Const(round(m, 12)), cT))
        return DifferentialForm(R4, x.degree, {k: sx.add(*v) for k, v in acc.items()})
    if isinstance(x, EndomorphismField):
        sub = _substitution(T)
        Tinv = np.linalg.inv(T)
        M = [[sx.substitute(e, sub) for e in row] for row in x.matrix]
        out = []
        for i in range(4):
            row = []
            for j in range(4):
                terms = [sx.mul(sx.Const(Tinv[i, k] * T[l, j]), M[k][l])
                         for k in range(4) for l in range(4)
                         if Tinv[i, k] != 0 and T[l, j] != 0 and not sx.is_const_zero(M[k][l])]
                row.append(sx.add(*terms))
            out.append(row)
        if isinstance(x, AlmostComplexStructure):
            return AlmostComplexStructure(R4, out)
        return EndomorphismField(R4, out)
    if isinstance(x, NumericStructure):
        return PulledBackStructure(T, x)
    raise TypeError(f"cannot pull back {type(x).__name__}")


# ---------------------------------------------------------------------------
# numeric structures for the periodic kernel estimator


class NumericStructure:
    """Pointwise-evaluable almost complex structure on R^4 (or T^4)."""

    dim = 4

    def matrix_at(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def anti_invariant_frame(self, points: np.ndarray) -> tuple:
        """Two pointwise spanning sections of ``Lambda^-`` as ``(P, 4, 4)`` matrices.

        Default: project the standard pair ``(beta_0, gamma_0)`` onto
        ``Lambda^-`` of this structure.
        """
        M = self.matrix_at(points)
        out = []
        for seed in (_BETA0, _GAMMA0):
            Ja = np.einsum("pik,ij,pjl->pkl", M, seed, M)
            out.append(0.5 * (seed - Ja))
        return tuple(out)


class _SymbolicNumeric(NumericStructure):
    def __init__(self, J: EndomorphismField):
        self.J = J

    def matrix_at(self, points):
        return self.J.matrix_at(points)


def as_numeric(J) -> NumericStructure:
    if isinstance(J, NumericStructure):
        return J
    if isinstance(J, EndomorphismField):
        return _SymbolicNumeric(J)
    if isinstance(J, JfStructure):
        return ExprStructure(J.f)
    raise TypeError(f"{type(J).__name__} is not a structure")


def _two_form_matrix(pairs) -> np.ndarray:
    m = np.zeros((4, 4))
    for (i, j), c in pairs.items():
        m[i, j], m[j, i] = c, -c
    return m


_BETA0 = _two_form_matrix({(0, 1): 1.0, (2, 3): -1.0})
_GAMMA0 = _two_form_matrix({(0, 3): 1.0, (1, 2): -1.0})


def jf_matrices(fvals: np.ndarray) -> np.ndarray:
    fvals = np.asarray(fvals, dtype=float)
    out = np.zeros(fvals.shape + (4, 4))
    out[..., 0, 2] = -1.0
    out[..., 1, 0] = fvals
    out[..., 1, 3] = -1.0
    out[..., 2, 0] = 1.0
    out[..., 3, 1] = 1.0
    out[..., 3, 2] = -fvals
    return out


class NumericJf(NumericStructure):
    """``J_f`` for a numeric ``f`` mapping points ``(P, 4)`` to values ``(P,)``."""

    def __init__(self, f: Callable[[np.ndarray], np.ndarray]):
        self.f = f

    def matrix_at(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return jf_matrices(self.f(points))

    def anti_invariant_frame(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        fv = np.asarray(self.f(points), dtype=float)
        beta = np.broadcast_to(_BETA0, fv.shape + (4, 4)).copy()
        beta[:, 0, 2], beta[:, 2, 0] = -fv, fv
        gamma = np.broadcast_to(_GAMMA0, fv.shape + (4, 4)).copy()
        return beta, gamma


class PulledBackStructure(NumericStructure):
    def __init__(self, T: np.ndarray, base: NumericStructure):
        self.T = np.asarray(T, dtype=float)
        self.Tinv = np.linalg.inv(self.T)
        self.base = base

    def matrix_at(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        M = self.base.matrix_at(points @ self.T.T)
        return self.Tinv @ M @ self.T


def _periodic_delta(d: np.ndarray, period):
    if period is None:
        return d
    return d - period * np.round(d / period)


def bump(points: np.ndarray, center, radius: float, amplitude: float = 1.0,
         period: float | None = None) -> np.ndarray:
    """Smooth compactly supported bump ``A exp(1 - 1/(1 - rho^2))``, ``rho = |x-c|/r``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = _periodic_delta(points - np.asarray(center, dtype=float), period)
    rho2 = np.sum(d * d, axis=1) / radius ** 2
    out = np.zeros(points.shape[0])
    inside = rho2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return out


@dataclass(frozen=True)
class Ball:
    """Open ball, optionally in the flat torus of side ``period``."""

    center: tuple
    radius: float
    period: float | None = None

    def contains(self, points: np.ndarray) -> np.ndarray:
        d = _periodic_delta(np.atleast_2d(points) - np.asarray(self.center), self.period)
        return np.sum(d * d, axis=1) < self.radius ** 2

    def _wrap(self, p):
        return p if self.period is None else np.mod(p, self.period)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        dim = len(self.center)
        u = rng.standard_normal((n, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = self.radius * rng.uniform(0, 1, n) ** (1.0 / dim)
        return self._wrap(np.asarray(self.center) + u * r[:, None])

    def collar(self, rng: np.random.Generator, n: int, width: float = 0.1) -> np.ndarray:
        dim = len(self.center)
        u = rng.standard_normal((n, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = self.radius * rng.uniform(1.0 - width, 1.0, n)
        return self._wrap(np.asarray(self.center) + u * r[:, None])


class CollarMismatchError(ValueError):
    pass


class OverlapConflictError(ValueError):
    pass


class PiecewiseStructure(NumericStructure):
    def __init__(self, pieces, background):
        self.pieces = [(region, as_numeric(J)) for region, J in pieces]
        self.background = as_numeric(background)

    def matrix_at(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.background.matrix_at(points).copy()
        for region, J in self.pieces:
            mask = region.contains(points)
            if np.any(mask):
                out[mask] = J.matrix_at(points[mask])
        return out


class ExprStructure(NumericStructure):
    """Numeric view of ``J_f`` for an expression ``f`` in the R^4 chart."""

    def __init__(self, f):
        self.expr = sx.as_expr(f)
        _check_vars(self.expr)
        self._jf = NumericJf(self._eval)

    def _eval(self, points):
        env = {x: points[:, i] for i, x in enumerate(sx.CHART_R4)}
        return np.broadcast_to(sx.evaluate_array(self.expr, env), (points.shape[0],)).astype(float)

    def matrix_at(self, points):
        return self._jf.matrix_at(points)

    def anti_invariant_frame(self, points):
        return self._jf.anti_invariant_frame(points)


def piecewise_structure(pieces, background, tol: float = 1e-8, n_samples: int = 400,
                        seed: int = 0, collar_width: float = 0.1) -> PiecewiseStructure:
    """Glue structures defined on regions over a background structure.

    Each piece must agree with the background on a collar inside its region
    boundary, and pieces must agree wherever their regions overlap.
    """
    rng = np.random.default_rng(seed)
    pieces = [(region, as_numeric(J)) for region, J in pieces]
    bg = as_numeric(background)
    for k, (region, J) in enumerate(pieces):
        pts = region.collar(rng, n_samples, collar_width)
        err = np.max(np.abs(J.matrix_at(pts) - bg.matrix_at(pts)))
        if err > tol:
            raise CollarMismatchError(f"piece {k} differs from the background by {err:.3e} "
                                      "near its region boundary")
    for k, (rk, Jk) in enumerate(pieces):
        for m in range(k + 1, len(pieces)):
            rm, Jm = pieces[m]
            pts = rk.sample(rng, n_samples)
            pts = pts[rm.contains(pts)]
            if len(pts) == 0:
                continue
            err = np.max(np.abs(Jk.matrix_at(pts) - Jm.matrix_at(pts)))
            if err > tol:
                raise OverlapConflictError(f"pieces {k} and {m} disagree by {err:.3e} on their overlap")
    glued = PiecewiseStructure(pieces, bg)
    probe = rng.uniform(0, 1, (n_samples, 4))
    M = glued.matrix_at(probe)
    if np.max(np.abs(M @ M + np.eye(4))) > 1e-8:
        raise ValueError("glued field fails J^2 = -Id")
    return glued


def corollary_glued_structure(support: float = 0.4, region: float = 0.45,
                              amplitude: float = 1.0) -> PiecewiseStructure:
    """Two transverse non-integrable patches on T^4 over the standard structure.

    Near the origin: ``J_f`` with ``f`` a bump.  Near ``(1/2, 1/2, 1/2, 1/2)``:
    the pullback of such a ``J_f`` by :data:`COROLLARY_MAP`, whose closed
    anti-invariant direction is ``T^* gamma = dx1^dx2 - dy1^dy2`` instead of
    ``gamma``.
    """
    if not support < region < 0.5:
        raise ValueError("need support < region < 1/2 so the two balls stay disjoint")
    ca = np.zeros(4)
    cb = np.full(4, 0.5)
    fa = NumericJf(lambda p: bump(p, ca, support, amplitude, period=1.0))
    fb = NumericJf(lambda p: bump(p, COROLLARY_MAP @ cb, support, amplitude, period=1.0))
    pieces = [(Ball(tuple(ca), region, 1.0), fa),
              (Ball(tuple(cb), region, 1.0), PulledBackStructure(COROLLARY_MAP, fb))]
    return piecewise_structure(pieces, NumericJf(lambda p: np.zeros(len(p))))
