"""Seeded random expressions and forms for property checks."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from . import symexpr as sx
from .forms import Coframe, DifferentialForm
from .symexpr import Expr


def random_polynomial(rng: np.random.Generator, names: Sequence[str], degree: int = 3,
                      n_terms: int = 4, scale: float = 1.0) -> Expr:
    """Sum of ``n_terms`` random monomials of total degree at most ``degree``."""
    xs = [sx.var(n) for n in names]
    terms = []
    for _ in range(n_terms):
        deg = int(rng.integers(0, degree + 1))
        picks = rng.integers(0, len(xs), deg)
        c = round(float(rng.uniform(-scale, scale)), 3)
        terms.append(sx.mul(sx.Const(c), *(xs[i] for i in picks)))
    return sx.add(*terms)


def random_expr(rng: np.random.Generator, names: Sequence[str], depth: int = 3) -> Expr:
    """Random smooth expression, well-defined on all of R^n.

    Divisions and square roots are guarded (``1/(2 + cos u)``,
    ``sqrt(2 + sin u)``) so evaluation never leaves the domain.
    """
    if depth <= 0 or rng.random() < 0.2:
        if rng.random() < 0.3:
            return sx.Const(round(float(rng.uniform(-2, 2)), 2))
        return sx.var(names[int(rng.integers(len(names)))])
    kind = int(rng.integers(0, 8))
    a = random_expr(rng, names, depth - 1)
    if kind == 0:
        return sx.add(a, random_expr(rng, names, depth - 1))
    if kind == 1:
        return sx.mul(a, random_expr(rng, names, depth - 1))
    if kind == 2:
        return sx.sin(a)
    if kind == 3:
        return sx.cos(a)
    if kind == 4:
        return sx.exp(sx.mul(sx.Const(0.5), sx.sin(a)))
    if kind == 5:
        return sx.div(random_expr(rng, names, depth - 1), sx.add(sx.Const(2.0), sx.cos(a)))
    if kind == 6:
        return sx.sqrt(sx.add(sx.Const(2.0), sx.sin(a)))
    return sx.power(a, int(rng.integers(2, 4)))


def random_form(rng: np.random.Generator, coframe: Coframe, degree: int,
                coeff_degree: int = 2, density: float = 0.7) -> DifferentialForm:
    terms = {}
    for idx in itertools.combinations(range(coframe.dim), degree):
        if rng.random() < density:
            terms[idx] = random_polynomial(rng, coframe.coords, coeff_degree, n_terms=3)
    return DifferentialForm(coframe, degree, terms)


def random_vector(rng: np.random.Generator, coframe: Coframe, degree: int = 2) -> tuple:
    return tuple(random_polynomial(rng, coframe.coords, degree, n_terms=2)
                 for _ in range(coframe.dim))
