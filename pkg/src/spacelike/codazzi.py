"""Abstract Codazzi pairs (A, B) on a surface chart.

A is a Riemannian metric field and B a quadratic-form field.  Both are
closures ``(u, v) -> 2x2 nested list of jets`` over chart points, so pairs
built from surface data stay exact to the order their jets carry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .surface import GeometryError, Grid, intrinsic_curvature, SPACELIKE_EPS
from .tensors import christoffel, det2, inv2, values

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
FieldFn = Callable[[np.ndarray, np.ndarray], list]


@dataclass(frozen=True)
class CodazziPairField:
    A: FieldFn
    B: FieldFn
    domain: tuple[float, float, float, float] | None = None

    def at(self, p):
        u, v = (np.asarray(x, dtype=float) for x in p)
        a = self.A(u, v)
        b = self.B(u, v)
        _check_metric(a)
        _check_symmetric(b)
        return a, b


def constant_field(matrix) -> FieldFn:
    """Field with constant components (zero derivatives)."""
    m = np.asarray(matrix, dtype=float)

    def fn(u, v):
        shape = np.broadcast_shapes(np.shape(u), np.shape(v))
        return [[jets.jet_const(np.full(shape, m[i, j])) for j in range(2)] for i in range(2)]

    return fn


def field_from_jets(fn) -> FieldFn:
    """Wrap ``fn(U, V) -> 2x2`` over seeded coordinate jets as a field."""

    def field(u, v):
        U, V = jets.jet_var("u", u), jets.jet_var("v", v)
        m = fn(U, V)
        return [[x if isinstance(x, jets.Jet3) else jets.jet_const(np.broadcast_to(x, U.shape)) for x in row] for row in m]

    return field


def _check_metric(a) -> None:
    d = values(det2(a))
    tr = values(a[0][0]) + values(a[1][1])
    if np.any((tr <= 0) | (d <= SPACELIKE_EPS * tr * tr)):
        raise GeometryError("metric field A is degenerate or not positive definite")


def _check_symmetric(b) -> None:
    off = np.abs(values(b[0][1]) - values(b[1][0]))
    ref = 1.0 + np.abs(values(b[0][0])) + np.abs(values(b[1][1]))
    if np.any(off > SYMMETRY_TOL * ref):
        raise ValueError("quadratic form B is not symmetric")


def pair_extrinsic_curvature(pair: CodazziPairField, p) -> np.ndarray:
    """K(A, B) = det B / det A."""
    a, b = pair.at(p)
    return values(det2(b)) / values(det2(a))


def degenerate_b(pair: CodazziPairField, p, tol: float = 1e-12) -> np.ndarray:
    """True where det B vanishes (the pair's curvature is reported as 0 there)."""
    a, b = pair.at(p)
    return np.abs(values(det2(b))) <= tol * np.abs(values(det2(a)))


def _shape_jets(a, b):
    ainv = inv2(a)
    # S^c_a = A^{cd} B_da
    return [[ainv[c][0] * b[0][k] + ainv[c][1] * b[1][k] for k in range(2)] for c in range(2)]


def shape_endomorphism(pair: CodazziPairField, p) -> np.ndarray:
    """S with B(X, Y) = A(SX, Y); column a of S is S e_a."""
    a, b = pair.at(p)
    S = values(_shape_jets(a, b))
    AS = np.einsum("cb...,ca...->ab...", values(a), S)  # A(S e_a, e_b)
    if np.any(np.abs(AS - np.swapaxes(AS, 0, 1)) > SYMMETRY_TOL * (1 + np.abs(AS).max())):
        raise ValueError("S is not A-self-adjoint")
    return S


def pair_codazzi_defect(a, b) -> np.ndarray:
    """(nabla^A_u S) e_v - (nabla^A_v S) e_u from jets of A (order >= 1) and B."""
    S = _shape_jets(a, b)
    G = christoffel(a)
    axes = ("u", "v")

    def cov(ax, c, k):
        val = jets.diff(S[c][k], axes[ax]).value
        for d in range(2):
            val = val + G[c][ax][d].value * S[d][k].value - S[c][d].value * G[d][ax][k].value
        return val

    return np.array([cov(0, c, 1) - cov(1, c, 0) for c in range(2)])


def metric_norm(a, w) -> np.ndarray:
    A = values(a)
    return np.sqrt(np.maximum(np.einsum("i...,ij...,j...->...", w, A, w), 0.0))


def pair_codazzi_residual(pair: CodazziPairField, p) -> np.ndarray:
    """A-norm of the space-form Codazzi defect for the coordinate fields (e_u, e_v)."""
    a, b = pair.at(p)
    return metric_norm(a, pair_codazzi_defect(a, b))


def metric_gauss_curvature(A_field: FieldFn, p) -> np.ndarray:
    """Gaussian curvature K_A of the metric field."""
    return intrinsic_curvature(A_field, p)


@dataclass(frozen=True)
class ScanResult:
    value: float
    point: tuple[float, float]
    index: int
    n_points: int


def inf_abs_curvature_scan(A_field: FieldFn, grid: Grid) -> ScanResult:
    """Minimum of |K_A| over the grid; ties go to the first point in row-major order."""
    u, v = grid.points()
    k = np.abs(metric_gauss_curvature(A_field, (u, v)))
    i = int(np.argmin(k))
    return ScanResult(float(k[i]), (float(u[i]), float(v[i])), i, int(k.size))
