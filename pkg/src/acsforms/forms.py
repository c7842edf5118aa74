"""Exterior algebra over a coframe with symbolic coefficients.

A :class:`Coframe` carries constant structure constants, so that
``de^i = -sum_{j<k} c^i_{jk} e^j ^ e^k`` and ``[E_j, E_k] = sum_i c^i_{jk} E_i``,
together with coordinate realisations of the dual frame fields.  The
realisations let ``E_i`` act on coefficient functions, which is what the
exterior derivative of a non-invariant form needs.

Multi-indices are 0-based tuples, strictly increasing.
"""

from __future__ import annotations

import itertools
import json
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import symexpr as sx
from .symexpr import Expr, SampleDomain

__all__ = [
    "Coframe", "DifferentialForm", "FormError",
    "coordinate_coframe", "kodaira_thurston_coframe", "R4", "KT", "R6",
    "wedge", "exterior_derivative", "evaluate_form", "forms_equal",
    "lie_bracket", "register_coframe", "get_coframe",
]


class FormError(ValueError):
    pass


def _sort_sign(indices: Sequence[int]):
    """Sorted tuple and the sign of the sorting permutation (0 on repeats)."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return None, 0
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return tuple(sorted(idx)), sign


class Coframe:
    """Coframe ``e^1..e^n`` with constant structure constants.

    Parameters
    ----------
    name:
        Registry id used in JSON serialisation.
    coords:
        Chart coordinate names.
    labels:
        Display names of the coframe 1-forms.
    structure:
        ``structure[i, j, k] = c^i_{jk}``, antisymmetric in ``(j, k)``.
    frame:
        ``frame[i][a]`` is the ``d/d coords[a]`` component of ``E_i``.
    coframe:
        ``coframe[i][a]`` is the ``d coords[a]`` component of ``e^i``.
    """

    def __init__(self, name: str, coords: Sequence[str], labels: Sequence[str],
                 structure=None, frame=None, coframe=None):
        n = len(coords)
        self.name = name
        self.coords = tuple(coords)
        self.labels = tuple(labels)
        self.dim = n
        c = np.zeros((n, n, n)) if structure is None else np.array(structure, dtype=float)
        if c.shape != (n, n, n):
            raise FormError("structure constants must have shape (n, n, n)")
        if not np.allclose(c, -c.transpose(0, 2, 1)):
            raise FormError("structure constants must be antisymmetric in the lower indices")
        self.structure = c
        self.structure.setflags(write=False)
        eye = [[sx.ONE if a == i else sx.ZERO for a in range(n)] for i in range(n)]
        self.frame = tuple(tuple(sx.as_expr(x) for x in row) for row in (frame or eye))
        self.coframe = tuple(tuple(sx.as_expr(x) for x in row) for row in (coframe or eye))
        self._check_jacobi()

    def __repr__(self):
        return f"Coframe({self.name!r}, dim={self.dim})"

    def _check_jacobi(self):
        c = self.structure
        # sum over cyclic (a, b, d) of c^m_{i d} c^i_{a b}
        t = np.einsum("iab,mid->mabd", c, c)
        jac = t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)
        if not np.allclose(jac, 0.0):
            raise FormError("structure constants violate the Jacobi identity")

    def apply_field(self, i: int, f: Expr) -> Expr:
        """``E_i(f)`` through the coordinate realisation of ``E_i``."""
        terms = []
        for a, comp in enumerate(self.frame[i]):
            if sx.is_const_zero(comp):
                continue
            df = sx.differentiate(f, self.coords[a])
            if not sx.is_const_zero(df):
                terms.append(sx.mul(comp, df))
        return sx.add(*terms)

    def d_basis(self, indices: tuple) -> dict:
        """Exterior derivative of ``e^I`` as ``{J: float}``."""
        out: dict = {}
        for pos, i in enumerate(indices):
            sign = -1.0 if pos % 2 else 1.0
            for j in range(self.dim):
                for k in range(j + 1, self.dim):
                    cijk = self.structure[i, j, k]
                    if cijk == 0.0:
                        continue
                    new = indices[:pos] + (j, k) + indices[pos + 1:]
                    key, s = _sort_sign(new)
                    if s:
                        out[key] = out.get(key, 0.0) - sign * s * cijk
        return {k: v for k, v in out.items() if v != 0.0}

    def basis(self, *indices: int) -> "DifferentialForm":
        key, s = _sort_sign(indices)
        if not s:
            return DifferentialForm(self, len(indices), {})
        return DifferentialForm(self, len(indices), {key: sx.Const(float(s))})

    def zero(self, degree: int) -> "DifferentialForm":
        return DifferentialForm(self, degree, {})

    def function(self, f) -> "DifferentialForm":
        return DifferentialForm(self, 0, {(): sx.as_expr(f)})

    def check_duality(self, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
        """``e^i(E_j) = delta^i_j`` at sampled points."""
        n = self.dim
        for i in range(n):
            for j in range(n):
                pairing = sx.add(*(sx.mul(self.coframe[i][a], self.frame[j][a]) for a in range(n)))
                if not sx.is_zero(sx.add(pairing, sx.Const(-1.0 if i == j else 0.0)), dom):
                    return False
        return True

    def check_brackets(self, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
        """Coordinate brackets of the realised fields match the structure constants."""
        n = self.dim
        for j in range(n):
            for k in range(j + 1, n):
                for a in range(n):
                    coord = sx.add(
                        self._field_on(self.frame[j], self.frame[k][a]),
                        sx.neg(self._field_on(self.frame[k], self.frame[j][a])),
                    )
                    expected = sx.add(*(sx.mul(sx.Const(self.structure[i, j, k]), self.frame[i][a])
                                        for i in range(n)))
                    if not sx.is_zero(coord - expected, dom):
                        return False
        return True

    def _field_on(self, comps, f: Expr) -> Expr:
        return sx.add(*(sx.mul(c, sx.differentiate(f, x)) for c, x in zip(comps, self.coords)
                        if not sx.is_const_zero(c)))


def coordinate_coframe(name: str, coords: Sequence[str]) -> Coframe:
    return Coframe(name, coords, [f"d{x}" for x in coords])


def kodaira_thurston_coframe() -> Coframe:
    """Invariant coframe of the Kodaira-Thurston nilmanifold.

    ``E^3 = dx3 - x1 dx2`` so that ``dE^3 = -E^1 ^ E^2``; the dual frame is
    realised as ``E_2 = d/dx2 + x1 d/dx3``.
    """
    c = np.zeros((4, 4, 4))
    c[2, 0, 1], c[2, 1, 0] = 1.0, -1.0
    x1 = sx.var("x1")
    z, o = sx.ZERO, sx.ONE
    frame = [[o, z, z, z], [z, o, x1, z], [z, z, o, z], [z, z, z, o]]
    coframe = [[o, z, z, z], [z, o, z, z], [z, -x1, o, z], [z, z, z, o]]
    return Coframe("kodaira_thurston", sx.CHART_KT, ["E1", "E2", "E3", "E4"], c, frame, coframe)


_REGISTRY: dict = {}


def register_coframe(cf: Coframe) -> Coframe:
    _REGISTRY[cf.name] = cf
    return cf


def get_coframe(name: str) -> Coframe:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise FormError(f"unknown coframe {name!r}") from None


R4 = register_coframe(coordinate_coframe("r4", sx.CHART_R4))
KT = register_coframe(kodaira_thurston_coframe())
R6 = register_coframe(coordinate_coframe("r6", sx.CHART_6D))


class DifferentialForm:
    """Homogeneous form of a fixed degree; absent multi-indices are zero."""

    __slots__ = ("coframe", "degree", "terms")

    def __init__(self, coframe: Coframe, degree: int, terms: Mapping[tuple, Expr]):
        if not 0 <= degree <= coframe.dim:
            raise FormError(f"degree {degree} out of range for dimension {coframe.dim}")
        clean = {}
        for idx, c in terms.items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree or any(b <= a for a, b in zip(idx, idx[1:])):
                raise FormError(f"multi-index {idx} is not strictly increasing of length {degree}")
            if any(not 0 <= i < coframe.dim for i in idx):
                raise FormError(f"multi-index {idx} out of range")
            c = sx.as_expr(c)
            if not sx.is_const_zero(c):
                clean[idx] = c
        self.coframe = coframe
        self.degree = degree
        self.terms = dict(sorted(clean.items()))

    def __repr__(self):
        if not self.terms:
            return f"<{self.degree}-form 0>"
        labels = self.coframe.labels
        parts = []
        for idx, c in self.terms.items():
            basis = "^".join(labels[i] for i in idx) or "1"
            parts.append(f"({c})*{basis}")
        return f"<{self.degree}-form " + " + ".join(parts) + ">"

    def coefficient(self, *indices: int) -> Expr:
        key, s = _sort_sign(indices)
        if not s:
            return sx.ZERO
        c = self.terms.get(key, sx.ZERO)
        return c if s > 0 else sx.neg(c)

    def _check_same(self, other: "DifferentialForm"):
        if other.coframe is not self.coframe:
            raise FormError("forms live on different coframes")

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        self._check_same(other)
        if other.degree != self.degree:
            raise FormError("cannot add forms of different degree")
        keys = set(self.terms) | set(other.terms)
        return DifferentialForm(self.coframe, self.degree, {
            k: sx.add(self.terms.get(k, sx.ZERO), other.terms.get(k, sx.ZERO)) for k in keys})

    def __neg__(self) -> "DifferentialForm":
        return DifferentialForm(self.coframe, self.degree,
                                {k: sx.neg(c) for k, c in self.terms.items()})

    def __sub__(self, other: "DifferentialForm") -> "DifferentialForm":
        return self + (-other)

    def scale(self, f) -> "DifferentialForm":
        f = sx.as_expr(f)
        return DifferentialForm(self.coframe, self.degree,
                                {k: sx.mul(f, c) for k, c in self.terms.items()})

    def __mul__(self, f):
        if isinstance(f, DifferentialForm):
            return NotImplemented
        return self.scale(f)

    __rmul__ = __mul__

    def __xor__(self, other: "DifferentialForm") -> "DifferentialForm":
        return wedge(self, other)

    def d(self) -> "DifferentialForm":
        return exterior_derivative(self)

    def is_zero(self, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
        return all(sx.is_zero(c, dom) for c in self.terms.values())

    def map_coefficients(self, fn) -> "DifferentialForm":
        return DifferentialForm(self.coframe, self.degree, {k: fn(c) for k, c in self.terms.items()})

    def matrix(self) -> list:
        """Antisymmetric coefficient matrix of a 2-form, ``M[i][j] = w(E_i, E_j)``."""
        if self.degree != 2:
            raise FormError("matrix() needs a 2-form")
        n = self.coframe.dim
        m = [[sx.ZERO] * n for _ in range(n)]
        for (i, j), c in self.terms.items():
            m[i][j] = c
            m[j][i] = sx.neg(c)
        return m

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "coframe": self.coframe.name,
            "terms": [{"indices": list(k), "coeff": sx.to_string(c)} for k, c in self.terms.items()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj, variables: Iterable[str] | None = None) -> "DifferentialForm":
        if isinstance(obj, str):
            obj = json.loads(obj)
        cf = get_coframe(obj["coframe"])
        terms = {}
        for t in obj["terms"]:
            key, s = _sort_sign(t["indices"])
            if not s:
                continue
            c = sx.parse(t["coeff"], variables)
            c = c if s > 0 else sx.neg(c)
            terms[key] = sx.add(terms.get(key, sx.ZERO), c)
        return cls(cf, int(obj["degree"]), terms)


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    a._check_same(b)
    if a.degree + b.degree > a.coframe.dim:
        raise FormError(f"degree {a.degree + b.degree} exceeds dimension {a.coframe.dim}")
    acc: dict = {}
    for i1, c1 in a.terms.items():
        for i2, c2 in b.terms.items():
            key, s = _sort_sign(i1 + i2)
            if not s:
                continue
            term = sx.mul(c1, c2) if s > 0 else sx.neg(sx.mul(c1, c2))
            acc.setdefault(key, []).append(term)
    return DifferentialForm(a.coframe, a.degree + b.degree,
                            {k: sx.add(*v) for k, v in acc.items()})


def exterior_derivative(w: DifferentialForm) -> DifferentialForm:
    """``d(f e^I) = sum_i E_i(f) e^i ^ e^I + f d(e^I)``."""
    cf = w.coframe
    if w.degree >= cf.dim:
        raise FormError("exterior derivative of a top-degree form leaves the algebra")
    acc: dict = {}
    for idx, f in w.terms.items():
        for i in range(cf.dim):
            key, s = _sort_sign((i,) + idx)
            if not s:
                continue
            ef = cf.apply_field(i, f)
            if sx.is_const_zero(ef):
                continue
            acc.setdefault(key, []).append(ef if s > 0 else sx.neg(ef))
        for key, c in cf.d_basis(idx).items():
            acc.setdefault(key, []).append(sx.mul(sx.Const(c), f))
    return DifferentialForm(cf, w.degree + 1, {k: sx.add(*v) for k, v in acc.items()})


def lie_bracket(cf: Coframe, X: Sequence[Expr], Y: Sequence[Expr]) -> tuple:
    """Bracket of frame-coefficient vector fields ``X = X^i E_i``, ``Y = Y^i E_i``."""
    n = cf.dim
    X = [sx.as_expr(x) for x in X]
    Y = [sx.as_expr(y) for y in Y]

    def act(V, g):
        return sx.add(*(sx.mul(V[a], cf.apply_field(a, g)) for a in range(n)
                        if not sx.is_const_zero(V[a])))

    out = []
    for i in range(n):
        terms = [act(X, Y[i]), sx.neg(act(Y, X[i]))]
        for a in range(n):
            if sx.is_const_zero(X[a]):
                continue
            for b in range(n):
                c = cf.structure[i, a, b]
                if c != 0.0 and not sx.is_const_zero(Y[b]):
                    terms.append(sx.mul(sx.Const(c), X[a], Y[b]))
        out.append(sx.add(*terms))
    return tuple(out)


def evaluate_form(w: DifferentialForm, point: Mapping[str, float],
                  vectors: Sequence[Sequence[float]]) -> float:
    """Value of ``w`` at ``point`` on frame-coefficient ``vectors``."""
    if len(vectors) != w.degree:
        raise FormError(f"{w.degree}-form needs {w.degree} vectors, got {len(vectors)}")
    V = np.array(vectors, dtype=float).reshape(w.degree, w.coframe.dim).T
    total = 0.0
    for idx, c in w.terms.items():
        minor = np.linalg.det(V[list(idx), :]) if idx else 1.0
        total += sx.evaluate(c, point) * minor
    return float(total)


def forms_equal(a: DifferentialForm, b: DifferentialForm,
                dom: SampleDomain = sx.DEFAULT_DOMAIN) -> bool:
    if a.degree != b.degree:
        return False
    return (a - b).is_zero(dom)


def sample_coefficients(w: DifferentialForm, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Coefficient table ``(n_terms_basis, n_points)`` over all increasing multi-indices."""
    keys = list(itertools.combinations(range(w.coframe.dim), w.degree))
    n = len(next(iter(env.values()))) if env else 1
    out = np.zeros((len(keys), n))
    for row, k in enumerate(keys):
        c = w.terms.get(k)
        if c is not None:
            out[row] = sx.evaluate_array(c, env)
    return out
