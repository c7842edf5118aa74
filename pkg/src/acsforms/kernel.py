"""Numerical dimension of closed anti-invariant forms on the flat torus T^4.

Unknowns are the coefficients ``(a, b)`` of ``alpha = a sigma1 + b sigma2``
at the nodes of a periodic ``N^4`` grid, where ``(sigma1, sigma2)`` spans
``Lambda^-`` of the structure (``(beta, gamma)`` for ``J_f``).  Rows are the
four components of ``d alpha``::

    (d alpha)_{ijk} = D_i alpha_{jk} - D_j alpha_{ik} + D_k alpha_{ij}

with ``D_m (a s1 + b s2) = D+_m (a s1) + D-_m (b s2)``.  Pairing forward
differences on ``a`` with backward differences on ``b`` keeps the discrete
Cauchy-Riemann pairs free of checkerboard null modes, which a centred
stencil on an even grid would add.

Unknown layout: ``[a, b]`` with each block C-ordered over axes
``(x1, x2, y1, y2)``.  Row layout: components ``(012), (013), (023), (123)``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import symexpr as sx
from .r4family import JfStructure, NumericJf, NumericStructure, as_numeric, ExprStructure

__all__ = [
    "GridSpec", "SparseOperator", "KernelReport", "SweepResult", "GridForm",
    "PeriodicityError", "KernelConvergenceError",
    "assemble", "estimate_kernel_dim", "resolution_sweep", "kernel_basis_forms",
    "dense_singular_values", "dense_kernel_dim", "constant_field",
]

log = logging.getLogger(__name__)

TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


class PeriodicityError(ValueError):
    pass


class KernelConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 4 or self.N % 2:
            raise ValueError(f"grid resolution must be an even integer >= 4, got {self.N!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def n_points(self) -> int:
        return self.N ** 4

    @property
    def n_unknowns(self) -> int:
        return 2 * self.N ** 4

    @property
    def n_equations(self) -> int:
        return 4 * self.N ** 4

    @property
    def shape(self) -> tuple:
        return (self.N,) * 4

    def points(self) -> np.ndarray:
        g = np.arange(self.N) * self.h
        mesh = np.meshgrid(g, g, g, g, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class _Term:
    row: int        # component index into TRIPLES
    block: int      # 0 -> a (forward), 1 -> b (backward)
    axis: int
    coeff: np.ndarray   # sign * sigma component, shape grid


class SparseOperator:
    """Matrix-free discretised exterior derivative on ``a sigma1 + b sigma2``."""

    def __init__(self, grid: GridSpec, sigma1: np.ndarray, sigma2: np.ndarray, label: str = ""):
        self.grid = grid
        self.sigma = (sigma1, sigma2)
        self.label = label
        self.terms = self._build_terms()

    def _build_terms(self) -> list:
        shape = self.grid.shape
        terms = []
        for r, (i, j, k) in enumerate(TRIPLES):
            for axis, (p, q), sign in ((i, (j, k), 1.0), (j, (i, k), -1.0), (k, (i, j), 1.0)):
                for block in (0, 1):
                    c = self.sigma[block][:, p, q]
                    if np.any(c != 0.0):
                        terms.append(_Term(r, block, axis, (sign * c).reshape(shape)))
        return terms

    @property
    def shape(self) -> tuple:
        return (self.grid.n_equations, self.grid.n_unknowns)

    def _split(self, v):
        shape = self.grid.shape
        n = self.grid.n_points
        return v[:n].reshape(shape), v[n:].reshape(shape)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        a, b = self._split(v)
        u = (a, b)
        inv_h = 1.0 / self.grid.h
        out = np.zeros((4,) + self.grid.shape)
        for t in self.terms:
            g = t.coeff * u[t.block]
            if t.block == 0:
                out[t.row] += (np.roll(g, -1, axis=t.axis) - g) * inv_h
            else:
                out[t.row] += (g - np.roll(g, 1, axis=t.axis)) * inv_h
        return out.ravel()

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float).reshape((4,) + self.grid.shape)
        inv_h = 1.0 / self.grid.h
        out = np.zeros((2,) + self.grid.shape)
        for t in self.terms:
            wr = w[t.row]
            if t.block == 0:
                adj = (np.roll(wr, 1, axis=t.axis) - wr) * inv_h
            else:
                adj = (wr - np.roll(wr, -1, axis=t.axis)) * inv_h
            out[t.block] += t.coeff * adj
        return out.ravel()

    def normal(self, v: np.ndarray) -> np.ndarray:
        return self.rmatvec(self.apply(v))

    def to_sparse(self) -> sp.csr_matrix:
        """Explicit triplet export of the same operator."""
        n = self.grid.n_points
        shape = self.grid.shape
        idx = np.arange(n).reshape(shape)
        inv_h = 1.0 / self.grid.h
        rows, cols, vals = [], [], []
        for t in self.terms:
            r = t.row * n + idx.ravel()
            base = t.block * n
            c = t.coeff
            if t.block == 0:
                nb = np.roll(idx, -1, axis=t.axis)
                cn = np.roll(c, -1, axis=t.axis)
                rows += [r, r]
                cols += [base + nb.ravel(), base + idx.ravel()]
                vals += [cn.ravel() * inv_h, -c.ravel() * inv_h]
            else:
                nb = np.roll(idx, 1, axis=t.axis)
                cn = np.roll(c, 1, axis=t.axis)
                rows += [r, r]
                cols += [base + idx.ravel(), base + nb.ravel()]
                vals += [c.ravel() * inv_h, -cn.ravel() * inv_h]
        A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=self.shape).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        return A


def _check_seam(J: NumericStructure, rng: np.random.Generator, n: int = 64, tol: float = 1e-8):
    p = rng.uniform(0.0, 1.0, (n, 4))
    base = J.matrix_at(p)
    for axis in range(4):
        q = p.copy()
        q[:, axis] += 1.0
        err = np.max(np.abs(J.matrix_at(q) - base))
        if err > tol:
            raise PeriodicityError(f"structure is not 1-periodic along axis {axis} "
                                   f"(seam mismatch {err:.3e})")


def _as_structure(f) -> NumericStructure:
    if isinstance(f, NumericStructure):
        return f
    if isinstance(f, (str, sx.Expr, int, float)):
        return ExprStructure(f)
    if isinstance(f, JfStructure):
        return ExprStructure(f.f)
    if callable(f):
        return NumericJf(f)
    return as_numeric(f)


def _describe(f) -> str:
    if isinstance(f, str):
        return sx.to_string(sx.parse(f))
    if isinstance(f, (sx.Expr, int, float)):
        return sx.to_string(sx.as_expr(f))
    if isinstance(f, ExprStructure):
        return sx.to_string(f.expr)
    return type(f).__name__


def assemble(f, grid: GridSpec | int, seed: int = 0) -> SparseOperator:
    """Discretise closedness of ``Lambda^-``-valued 2-forms for the structure of ``f``.

    ``f`` may be an expression (giving ``J_f``), a numeric callable ``f(points)``
    or any :class:`NumericStructure`.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(int(grid))
    J = _as_structure(f)
    _check_seam(J, np.random.default_rng(seed))
    pts = grid.points()
    s1, s2 = J.anti_invariant_frame(pts)
    iu = np.triu_indices(4, 1)
    v1, v2 = s1[:, iu[0], iu[1]], s2[:, iu[0], iu[1]]
    # largest 2x2 minor of the pair, per node
    minors = np.abs(v1[:, :, None] * v2[:, None, :] - v1[:, None, :] * v2[:, :, None])
    if np.min(minors.reshape(len(pts), -1).max(axis=1)) < 1e-8:
        raise ValueError("anti-invariant frame degenerates at a grid node")
    return SparseOperator(grid, s1, s2, label=_describe(f))


def constant_field(grid: GridSpec, a: float, b: float) -> np.ndarray:
    n = grid.n_points
    return np.concatenate([np.full(n, float(a)), np.full(n, float(b))])


@dataclass
class KernelReport:
    N: int
    singular_values: list
    sigma_max: float
    threshold: float
    dim: int | None
    gap_ratio: float | None
    ambiguous: bool
    reason: str
    basis: np.ndarray = field(repr=False)
    basis_residuals: list = field(default_factory=list)
    matvecs: int = 0

    def as_dict(self) -> dict:
        return {
            "N": self.N, "singular_values": list(self.singular_values),
            "sigma_max": self.sigma_max, "threshold": self.threshold,
            "dim": self.dim, "gap_ratio": self.gap_ratio, "ambiguous": self.ambiguous,
            "reason": self.reason, "basis_residuals": list(self.basis_residuals),
            "matvecs": self.matvecs,
        }


class _Counter:
    def __init__(self, fn, budget: int):
        self.fn, self.budget, self.count = fn, budget, 0

    def __call__(self, v):
        self.count += 1
        if self.count > self.budget:
            raise KernelConvergenceError(f"iteration budget of {self.budget} products exhausted")
        return self.fn(np.asarray(v).ravel())


def estimate_kernel_dim(op: SparseOperator, tol_ratio: float = 1e3, k: int = 8,
                        seed: int = 0, budget: int | None = None) -> KernelReport:
    """Count numerically-zero singular values of ``op`` from the normal operator.

    ``sigma_i`` is taken as ``max(|A v_i|, sqrt(eps) sigma_max)``: eigenvalues
    of ``A^T A`` resolve singular values only down to that floor.
    """
    n = op.grid.n_unknowns
    N = op.grid.N
    if budget is None:
        budget = int(10 * k * np.sqrt(n))
    counter = _Counter(op.normal, budget)
    L = LinearOperator((n, n), matvec=counter, dtype=float)
    rng = np.random.default_rng(seed)
    try:
        lam_max = eigsh(L, k=1, which="LA", v0=rng.standard_normal(n), tol=1e-6,
                        return_eigenvectors=False)[0]
        vals, vecs = eigsh(L, k=k, which="SA", v0=rng.standard_normal(n), tol=0,
                           ncv=min(n, max(4 * k, 40)))
    except ArpackNoConvergence as exc:
        raise KernelConvergenceError(f"Lanczos iteration did not converge: {exc}") from exc
    sigma_max = float(np.sqrt(max(lam_max, 0.0)))
    floor = sigma_max * np.sqrt(np.finfo(float).eps)
    res = np.array([np.linalg.norm(op.apply(vecs[:, i])) for i in range(k)])
    sig = np.maximum(res, floor)
    order = np.argsort(sig)
    sig, vecs, res = sig[order], vecs[:, order], res[order]
    threshold = sigma_max * N ** -2 * 1e-2
    d = int(np.sum(sig <= threshold))
    ambiguous, reason, gap = False, "", None
    if d >= k:
        ambiguous, reason = True, f"all {k} computed singular values are below threshold"
    elif d >= 1:
        gap = float(sig[d] / sig[d - 1])
        if gap < tol_ratio:
            ambiguous, reason = True, f"gap {gap:.3e} below required ratio {tol_ratio:.1e}"
    else:
        gap = float(sig[0] / threshold)
    basis = vecs[:, :d].T.copy() if d and not ambiguous else np.zeros((0, n))
    if len(basis):
        q, _ = np.linalg.qr(basis.T)
        basis = q.T
    log.debug("N=%d sigma=%s d=%s ambiguous=%s", N, sig, d, ambiguous)
    return KernelReport(
        N=N, singular_values=[float(s) for s in sig], sigma_max=sigma_max,
        threshold=float(threshold), dim=None if ambiguous else d, gap_ratio=gap,
        ambiguous=ambiguous, reason=reason, basis=basis,
        basis_residuals=[float(np.linalg.norm(op.apply(v))) for v in basis],
        matvecs=counter.count,
    )


@dataclass
class SweepResult:
    reports: list
    stable: bool
    dim: int | None

    @property
    def ambiguous(self) -> bool:
        return any(r.ambiguous for r in self.reports)


def resolution_sweep(f, Ns: Sequence[int], tol_ratio: float = 1e3, k: int = 8,
                     seed: int = 0) -> SweepResult:
    """One report per resolution; stable iff none is ambiguous and all agree on ``d``."""
    Ns = list(Ns)
    if Ns != sorted(Ns):
        raise ValueError("resolutions must be ascending")
    reports = [estimate_kernel_dim(assemble(f, GridSpec(N), seed), tol_ratio, k, seed)
               for N in Ns]
    dims = {r.dim for r in reports}
    stable = bool(reports) and not any(r.ambiguous for r in reports) and len(dims) == 1
    return SweepResult(reports, stable, dims.pop() if stable else None)


@dataclass
class GridForm:
    """``a sigma1 + b sigma2`` sampled at grid nodes."""

    a: np.ndarray
    b: np.ndarray
    components: np.ndarray   # (P, 6), upper-triangular pairs in lexicographic order
    residual: float
    norm: float

    PAIRS = tuple(itertools.combinations(range(4), 2))


def kernel_basis_forms(report: KernelReport, op) -> list:
    """Reconstruct each kernel vector as a grid 2-form with its discrete ``d`` residual."""
    if not report.dim:
        raise ValueError("report has no kernel basis (d = 0 or ambiguous)")
    if not isinstance(op, SparseOperator):
        op = assemble(op, GridSpec(report.N))
    n = op.grid.n_points
    s1, s2 = op.sigma
    iu = np.triu_indices(4, 1)
    out = []
    for v in report.basis:
        a, b = v[:n], v[n:]
        comps = a[:, None] * s1[:, iu[0], iu[1]] + b[:, None] * s2[:, iu[0], iu[1]]
        out.append(GridForm(a, b, comps, float(np.linalg.norm(op.apply(v))),
                            float(np.linalg.norm(v))))
    return out


def dense_singular_values(op: SparseOperator) -> np.ndarray:
    """All singular values of the exported matrix via LAPACK, ascending."""
    return np.sort(np.linalg.svd(op.to_sparse().toarray(), compute_uv=False))


def dense_kernel_dim(op: SparseOperator) -> tuple:
    """``(d, singular values)`` with ``d`` counted under the same threshold."""
    s = dense_singular_values(op)
    thr = s[-1] * op.grid.N ** -2 * 1e-2
    return int(np.sum(s <= thr)), s
