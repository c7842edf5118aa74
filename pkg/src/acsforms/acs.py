"""Almost complex structures as endomorphism fields over a frame."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import symexpr as sx
from .forms import Coframe, DifferentialForm, FormError, get_coframe, lie_bracket
from .symexpr import Expr, SampleDomain

__all__ = [
    "EndomorphismField", "AlmostComplexStructure", "StructureError",
    "NotAntiInvariantError", "NotClosedError",
    "act_on_two_form", "anti_invariant_projection", "is_anti_invariant",
    "nijenhuis", "nijenhuis_vectors", "is_integrable",
    "fractional_power", "theta_bilinear", "theta_r", "integrability_from_theta",
    "IntegrabilityReport",
]


class StructureError(ValueError):
    pass


class NotAntiInvariantError(ValueError):
    pass


class NotClosedError(ValueError):
    pass


class EndomorphismField:
    """Matrix field with ``A E_j = sum_i A[i][j] E_i``."""

    def __init__(self, coframe: Coframe, matrix: Sequence[Sequence]):
        n = coframe.dim
        m = tuple(tuple(sx.as_expr(x) for x in row) for row in matrix)
        if len(m) != n or any(len(row) != n for row in m):
            raise StructureError(f"matrix must be {n}x{n}")
        self.coframe = coframe
        self.matrix = m
        self.dim = n

    def __repr__(self):
        rows = ["[" + ", ".join(sx.to_string(x) for x in row) + "]" for row in self.matrix]
        return f"{type(self).__name__}({self.coframe.name}, [" + ", ".join(rows) + "])"

    def entry(self, i: int, j: int) -> Expr:
        return self.matrix[i][j]

    def apply(self, vec: Sequence) -> tuple:
        """Frame-coefficient vector ``A v``."""
        vec = [sx.as_expr(v) for v in vec]
        out = []
        for i in range(self.dim):
            terms = [sx.mul(self.matrix[i][j], vec[j]) for j in range(self.dim)
                     if not sx.is_const_zero(self.matrix[i][j]) and not sx.is_const_zero(vec[j])]
            out.append(sx.add(*terms))
        return tuple(out)

    def compose(self, other: "EndomorphismField") -> "EndomorphismField":
        """Matrix product ``self . other``."""
        n = self.dim
        m = [[sx.add(*(sx.mul(self.matrix[i][k], other.matrix[k][j]) for k in range(n)
                       if not sx.is_const_zero(self.matrix[i][k])
                       and not sx.is_const_zero(other.matrix[k][j])))
              for j in range(n)] for i in range(n)]
        return EndomorphismField(self.coframe, m)

    def plus(self, other: "EndomorphismField") -> "EndomorphismField":
        n = self.dim
        return EndomorphismField(self.coframe, [[sx.add(self.matrix[i][j], other.matrix[i][j])
                                                 for j in range(n)] for i in range(n)])

    def equals(self, other: "EndomorphismField", dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
        n = self.dim
        return all(sx.is_zero(self.matrix[i][j] - other.matrix[i][j], dom)
                   for i in range(n) for j in range(n))

    def matrix_at(self, points: np.ndarray) -> np.ndarray:
        """Numeric matrices, shape ``(P, n, n)``, at points ``(P, n_coords)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        env = {x: points[:, a] for a, x in enumerate(self.coframe.coords)}
        out = np.empty((points.shape[0], self.dim, self.dim))
        for i in range(self.dim):
            for j in range(self.dim):
                out[:, i, j] = sx.evaluate_array(self.matrix[i][j], env)
        return out

    def to_json(self) -> dict:
        return {"coframe": self.coframe.name,
                "matrix": [[sx.to_string(x) for x in row] for row in self.matrix]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj, variables=None, **kwargs):
        if isinstance(obj, str):
            obj = json.loads(obj)
        cf = get_coframe(obj["coframe"])
        m = [[sx.parse(x, variables) for x in row] for row in obj["matrix"]]
        return cls(cf, m, **kwargs)

    @classmethod
    def identity(cls, coframe: Coframe) -> "EndomorphismField":
        n = coframe.dim
        return EndomorphismField(coframe, [[sx.ONE if i == j else sx.ZERO for j in range(n)]
                                           for i in range(n)])


class AlmostComplexStructure(EndomorphismField):
    """Endomorphism field with ``J^2 = -Id``, verified by sampling on construction."""

    def __init__(self, coframe: Coframe, matrix: Sequence[Sequence], check: bool = True,
                 dom: SampleDomain = sx.DEFAULT_DOMAIN):
        super().__init__(coframe, matrix)
        if self.dim % 2:
            raise StructureError("an almost complex structure needs even dimension")
        if check:
            sq = self.compose(self).plus(EndomorphismField.identity(coframe))
            bad = [(i, j) for i in range(self.dim) for j in range(self.dim)
                   if not sx.is_zero(sq.matrix[i][j], dom)]
            if bad:
                raise StructureError(f"J^2 + Id does not vanish at entries {bad}")


def _require_two_form(alpha: DifferentialForm):
    if alpha.degree != 2:
        raise FormError(f"expected a 2-form, got degree {alpha.degree}")


def act_on_two_form(J: EndomorphismField, alpha: DifferentialForm) -> DifferentialForm:
    """``(J alpha)(X, Y) = alpha(JX, JY)``."""
    _require_two_form(alpha)
    if alpha.coframe is not J.coframe:
        raise FormError("form and structure live on different coframes")
    n = J.dim
    M = J.matrix
    acc: dict = {}
    for (i, j), a in alpha.terms.items():
        for k in range(n):
            for l in range(k + 1, n):
                # alpha(JE_k, JE_l) picks up J^i_k J^j_l - J^j_k J^i_l
                t1 = sx.mul(M[i][k], M[j][l])
                t2 = sx.mul(M[j][k], M[i][l])
                if sx.is_const_zero(t1) and sx.is_const_zero(t2):
                    continue
                acc.setdefault((k, l), []).append(sx.mul(a, sx.add(t1, sx.neg(t2))))
    return DifferentialForm(alpha.coframe, 2, {k: sx.add(*v) for k, v in acc.items()})


def anti_invariant_projection(J: EndomorphismField, alpha: DifferentialForm):
    """``(alpha+, alpha-)`` with ``alpha+- = (alpha +- J alpha)/2``."""
    _require_two_form(alpha)
    Ja = act_on_two_form(J, alpha)
    plus = (alpha + Ja).scale(0.5)
    minus = (alpha - Ja).scale(0.5)
    return plus, minus


def is_anti_invariant(J: EndomorphismField, alpha: DifferentialForm,
                      dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
    return anti_invariant_projection(J, alpha)[0].is_zero(dom)


def _basis_vector(n: int, j: int) -> tuple:
    return tuple(sx.ONE if i == j else sx.ZERO for i in range(n))


def nijenhuis_vectors(J: EndomorphismField, X: Sequence, Y: Sequence) -> tuple:
    """``N(X,Y) = [JX,JY] - [X,Y] - J[JX,Y] - J[X,JY]`` in frame coefficients."""
    cf = J.coframe
    JX, JY = J.apply(X), J.apply(Y)
    t1 = lie_bracket(cf, JX, JY)
    t2 = lie_bracket(cf, X, Y)
    t3 = J.apply(lie_bracket(cf, JX, Y))
    t4 = J.apply(lie_bracket(cf, X, JY))
    return tuple(sx.add(a, sx.neg(b), sx.neg(c), sx.neg(d)) for a, b, c, d in zip(t1, t2, t3, t4))


def nijenhuis(J: EndomorphismField, j: int, k: int) -> tuple:
    """Frame components of ``N_J(E_j, E_k)``."""
    if j == k:
        raise ValueError("N_J(E_j, E_j) is identically zero; pass distinct indices")
    n = J.dim
    return nijenhuis_vectors(J, _basis_vector(n, j), _basis_vector(n, k))


def is_integrable(J: EndomorphismField, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
    n = J.dim
    return all(sx.is_zero(c, dom)
               for j in range(n) for k in range(j + 1, n)
               for c in nijenhuis(J, j, k))


def _half_turn(r: Expr):
    """``(cos(pi r/2), sin(pi r/2))``, exact at integer constants."""
    if isinstance(r, sx.Const) and float(r.value).is_integer():
        m = int(r.value) % 4
        return sx.Const((1.0, 0.0, -1.0, 0.0)[m]), sx.Const((0.0, 1.0, 0.0, -1.0)[m])
    angle = sx.mul(sx.Const(0.5), sx.PI, r)
    return sx.cos(angle), sx.sin(angle)


def fractional_power(J: EndomorphismField, r) -> EndomorphismField:
    """``J^r = cos(pi r/2) Id + sin(pi r/2) J``, pointwise in ``r``."""
    r = sx.as_expr(r)
    c, s = _half_turn(r)
    n = J.dim
    m = [[sx.add(c if i == j else sx.ZERO, sx.mul(s, J.matrix[i][j])) for j in range(n)]
         for i in range(n)]
    return EndomorphismField(J.coframe, m)


def theta_bilinear(omega: DifferentialForm, J: EndomorphismField, r) -> list:
    """Matrix of the bilinear form ``(v, w) -> omega(v, J^r w)``."""
    _require_two_form(omega)
    W = omega.matrix()
    R = fractional_power(J, r).matrix
    n = J.dim
    return [[sx.add(*(sx.mul(W[k][m], R[m][l]) for m in range(n)
                      if not sx.is_const_zero(W[k][m]) and not sx.is_const_zero(R[m][l])))
             for l in range(n)] for k in range(n)]


def theta_r(omega: DifferentialForm, J: EndomorphismField, r,
            dom: SampleDomain = sx.DEFAULT_DOMAIN) -> DifferentialForm:
    """Anti-invariant 2-form ``theta^r(v, w) = omega(v, J^r w)``.

    ``omega`` must itself be anti-invariant; skewness of the result is then
    automatic, so only the upper triangle of the bilinear form is kept.
    """
    _require_two_form(omega)
    if not is_anti_invariant(J, omega, dom):
        raise NotAntiInvariantError("omega is not J-anti-invariant")
    T = theta_bilinear(omega, J, r)
    n = J.dim
    return DifferentialForm(omega.coframe, 2, {(k, l): T[k][l] for k in range(n)
                                               for l in range(k + 1, n)})


@dataclass(frozen=True)
class IntegrabilityReport:
    theta_closed: bool
    nijenhuis_vanishes: bool
    psi_type_20: bool

    def as_dict(self) -> dict:
        return {"theta_closed": self.theta_closed,
                "nijenhuis_vanishes": self.nijenhuis_vanishes,
                "psi_type_20": self.psi_type_20}


def _psi_vanishes_on_mixed_types(omega: DifferentialForm, theta: DifferentialForm,
                                 J: EndomorphismField, dom: SampleDomain) -> bool:
    """``Psi = omega - i theta`` kills (1,0)x(0,1) and (0,1)x(0,1) pairs at samples."""
    cf = J.coframe
    env = dom.points(cf.coords)
    pts = np.stack([env[x] for x in cf.coords], axis=1)
    Jm = J.matrix_at(pts)
    W = np.stack([[sx.evaluate_array(c, env) for c in row] for row in omega.matrix()])
    T = np.stack([[sx.evaluate_array(c, env) for c in row] for row in theta.matrix()])
    rng = np.random.default_rng(dom.seed + 1)
    for p in range(pts.shape[0]):
        psi = W[:, :, p] - 1j * T[:, :, p]
        v, w = rng.standard_normal((2, cf.dim))
        Jv, Jw = Jm[p] @ v, Jm[p] @ w
        scale = 1.0 + np.abs(psi).max() * (1 + np.abs(v).max() + np.abs(Jv).max()) \
            * (1 + np.abs(w).max() + np.abs(Jw).max())
        mixed = (v - 1j * Jv) @ psi @ (w + 1j * Jw)
        antiholo = (v + 1j * Jv) @ psi @ (w + 1j * Jw)
        if abs(mixed) > dom.tol * scale or abs(antiholo) > dom.tol * scale:
            return False
    return True


def integrability_from_theta(omega: DifferentialForm, J: EndomorphismField,
                             dom: SampleDomain = sx.DEFAULT_DOMAIN) -> IntegrabilityReport:
    """Test whether ``theta = omega(., J .)`` is closed and whether ``N_J = 0``.

    Both flags are reported; for closed non-zero anti-invariant ``omega`` in
    dimension four a closed ``theta`` forces integrability.
    """
    _require_two_form(omega)
    if omega.is_zero(dom):
        raise ValueError("omega vanishes identically")
    if not omega.d().is_zero(dom):
        raise NotClosedError("omega is not closed")
    theta = theta_r(omega, J, 1, dom)
    return IntegrabilityReport(
        theta_closed=theta.d().is_zero(dom),
        nijenhuis_vanishes=is_integrable(J, dom),
        psi_type_20=_psi_vanishes_on_mixed_types(omega, theta, J, dom),
    )
