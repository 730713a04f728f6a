"""Small-matrix helpers and the Christoffel/curvature kernel.

Matrices are nested lists whose entries may be floats, arrays or jets, so
the same routines serve numeric oracles and jet evaluation.  The two chart
variables are always the jet axes ``u`` and ``v``.
"""

from __future__ import annotations

import numpy as np

from .jets import Jet3, diff, partial, value_of

AXES = ("u", "v")


def det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def inv2(m, det=None):
    d = det2(m) if det is None else det
    return [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]


def matmul2(a, b):
    return [[a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2)] for i in range(2)]


def transpose2(m):
    return [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]


def matvec2(m, x):
    return [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]


def values(m) -> np.ndarray:
    """Stack the constant terms of a nested list of jets into an array."""
    if isinstance(m, (list, tuple)):
        return np.array([values(x) for x in m])
    return np.asarray(value_of(m), dtype=float)


def christoffel(g, ginv=None):
    """Christoffel symbols ``gamma[k][i][j]`` of a jet-valued 2x2 metric.

    Accurate to one order less than ``g``.
    """
    if ginv is None:
        ginv = inv2(g)
    dg = [[[diff(g[i][j], AXES[l]) for l in range(2)] for j in range(2)] for i in range(2)]
    # first kind: [ij, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = [[[0.5 * (dg[j][l][i] + dg[i][l][j] - dg[i][j][l]) for l in range(2)] for j in range(2)] for i in range(2)]
    return [
        [[ginv[k][0] * first[i][j][0] + ginv[k][1] * first[i][j][1] for j in range(2)] for i in range(2)]
        for k in range(2)
    ]


def riemann_vector(gamma, i: int, j: int, k: int):
    """Components of R(e_i, e_j) e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k."""
    out = []
    for l in range(2):
        r = diff(gamma[l][j][k], AXES[i]) - diff(gamma[l][i][k], AXES[j])
        for m in range(2):
            r = r + gamma[m][j][k] * gamma[l][i][m] - gamma[m][i][k] * gamma[l][j][m]
        out.append(r)
    return out


def gauss_curvature(g) -> np.ndarray:
    """Gaussian curvature at the base point from a jet-valued metric.

    Uses the curvature-tensor contraction ``g(R(e1,e2)e2, e1) / det g``; the
    sign agrees with the quotient ``A(R_A(X,Y)X, Y)/Q_A`` taken with
    ``R_A(X,Y) = nabla_[X,Y] - [nabla_X, nabla_Y]``.  Needs ``g`` to order 2.
    """
    gamma = christoffel(g)
    r = riemann_vector(gamma, 0, 1, 1)
    num = value_of(g[0][0]) * value_of(r[0]) + value_of(g[1][0]) * value_of(r[1])
    return num / value_of(det2(g))


def brioschi_curvature(E: Jet3, F: Jet3, G: Jet3) -> np.ndarray:
    """Brioschi's formula for the Gaussian curvature of E du^2 + 2F du dv + G dv^2."""
    e, f, g_ = (partial(x, 0, 0) for x in (E, F, G))
    Eu, Ev = partial(E, 1, 0), partial(E, 0, 1)
    Fu, Fv = partial(F, 1, 0), partial(F, 0, 1)
    Gu, Gv = partial(G, 1, 0), partial(G, 0, 1)
    Evv, Fuv, Guu = partial(E, 0, 2), partial(F, 1, 1), partial(G, 2, 0)
    m1 = np.array([
        [-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
        [Fv - 0.5 * Gu, e, f],
        [0.5 * Gv, f, g_],
    ], dtype=float)
    zero = np.zeros_like(e)
    m2 = np.array([
        [zero, 0.5 * Ev, 0.5 * Gu],
        [0.5 * Ev, e, f],
        [0.5 * Gu, f, g_],
    ], dtype=float)
    d1 = np.linalg.det(np.moveaxis(m1, (0, 1), (-2, -1)))
    d2 = np.linalg.det(np.moveaxis(m2, (0, 1), (-2, -1)))
    return (d1 - d2) / (e * g_ - f * f) ** 2


def sym_eigvals(m: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending) of symmetric 2x2 arrays with leading tensor axes."""
    a, b, d = m[0, 0], 0.5 * (m[0, 1] + m[1, 0]), m[1, 1]
    mean = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    return np.array([mean - rad, mean + rad])


def generalized_eigvals(m: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending) of ``metric^-1 m`` for symmetric m, SPD metric."""
    # det(m - lam*metric) = 0 is a quadratic in lam
    a = metric[0, 0] * metric[1, 1] - metric[0, 1] ** 2
    b = -(m[0, 0] * metric[1, 1] + m[1, 1] * metric[0, 0] - 2 * m[0, 1] * metric[0, 1])
    c = m[0, 0] * m[1, 1] - m[0, 1] ** 2
    disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
    # numerically stable roots
    q = -0.5 * (b + np.copysign(disc, b))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = q / a
        r2 = np.where(q != 0, c / np.where(q != 0, q, 1.0), 0.0)
    return np.sort(np.array([r1, r2]), axis=0)
