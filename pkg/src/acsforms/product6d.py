"""Local chart of the six-dimensional product structure on ``X x T^2``.

Coordinates ``(x1, y1, x2, y2, t1, t2)``.  On the ``X`` block the structure
is the standard one; on the torus directions
``J(a d/dt1 + b d/dt2) = -(b/f) d/dt1 + f a d/dt2`` with ``f > 0`` a
function on ``X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symexpr as sx
from .acs import AlmostComplexStructure, is_anti_invariant, nijenhuis
from .forms import R6, DifferentialForm
from .r4family import ForeignVariableError
from .symexpr import Expr, SampleDomain

__all__ = [
    "ProductChart", "PositivityError", "build_product_acs",
    "product_nijenhuis_check", "local_anti_invariant_check", "GENUS_BOUND",
]

# lower bound 2 g^2 for genus-g factors; recorded in reports, never computed
GENUS_BOUND = "2*g^2"

X_COORDS = ("x1", "y1", "x2", "y2")


class PositivityError(ValueError):
    pass


@dataclass(frozen=True)
class ProductChart:
    f: Expr
    acs: AlmostComplexStructure


def build_product_acs(f, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> ProductChart:
    f = sx.as_expr(f)
    extra = sx.variables(f) - set(X_COORDS)
    if extra:
        raise ForeignVariableError(f"f may depend on {list(X_COORDS)} only, got {sorted(extra)}")
    vals = np.broadcast_to(sx.evaluate_array(f, dom.points(X_COORDS)), (dom.n_samples,))
    if np.any(vals <= 0):
        raise PositivityError(f"f <= 0 at a sample point (min {vals.min():.3g})")
    z, o = sx.ZERO, sx.ONE
    m = [[z, sx.neg(o), z, z, z, z],
         [o, z, z, z, z, z],
         [z, z, z, sx.neg(o), z, z],
         [z, z, o, z, z, z],
         [z, z, z, z, z, sx.neg(sx.div(o, f))],
         [z, z, z, z, f, z]]
    return ProductChart(f, AlmostComplexStructure(R6, m, dom=dom))


def product_nijenhuis_check(chart: ProductChart, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> dict:
    """Compare ``N(d/dx1, d/dt1)`` with two closed-form candidates.

    ``printed``: ``f_x1 d/dt1 + f_y1 d/dt2``.  ``bracket``: the value obtained
    by expanding the four brackets by hand, ``(f_x1/f) d/dt1 + f_y1 d/dt2``.
    """
    f = chart.f
    N = nijenhuis(chart.acs, 0, 4)
    fx, fy = sx.differentiate(f, "x1"), sx.differentiate(f, "y1")

    def matches(t1, t2):
        want = [sx.ZERO] * 4 + [t1, t2]
        return all(sx.is_zero(sx.add(a, sx.neg(b)), dom) for a, b in zip(N, want))

    env = dom.points(R6.coords)
    mags = sum(np.abs(np.broadcast_to(sx.evaluate_array(c, env), (dom.n_samples,))) for c in N)
    return {
        "f": sx.to_string(f),
        "N": [sx.to_string(c) for c in N],
        "matches_printed_formula": matches(fx, fy),
        "matches_bracket_formula": matches(sx.div(fx, f), fy),
        "nonvanishing": bool(np.any(mags > dom.tol)),
        "max_abs_N": float(np.max(mags)),
    }


def _dz_forms() -> tuple:
    dx1, dy1, dx2, dy2 = (R6.basis(i) for i in range(4))
    re = (dx1 ^ dx2) - (dy1 ^ dy2)
    im = (dx1 ^ dy2) + (dy1 ^ dx2)
    return re, im


def local_anti_invariant_check(chart: ProductChart, dom: SampleDomain = sx.DEFAULT_DOMAIN) -> dict:
    """Anti-invariance and closedness of ``Re/Im (h dz1^dz2)`` for ``h = 1, z1``."""
    re, im = _dz_forms()
    x1, y1 = sx.var("x1"), sx.var("y1")
    candidates = {
        "re_dz1dz2": re,
        "im_dz1dz2": im,
        "re_z1_dz1dz2": re.scale(x1) - im.scale(y1),
        "im_z1_dz1dz2": im.scale(x1) + re.scale(y1),
    }
    out = {}
    for name, w in candidates.items():
        out[name] = {"anti_invariant": is_anti_invariant(chart.acs, w, dom),
                     "closed": w.d().is_zero(dom)}
    out["lower_bound"] = GENUS_BOUND
    return out
