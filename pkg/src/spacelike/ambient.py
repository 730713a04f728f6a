"""Geometry of H^2 and of the Lorentzian product H^2 x R with metric g_H - dt^2.

Two charts of the hyperbolic plane are supported: the Poincare disk
``(x, y)`` with ``g_H = lam^2 (dx^2 + dy^2)``, ``lam = 2 / (1 - x^2 - y^2)``,
and geodesic polar coordinates ``(r, theta)`` with
``g_H = dr^2 + sinh(r)^2 dtheta^2``.  Ambient vectors have components
``(horizontal_1, horizontal_2, t)``.

Curvature follows the convention ``R(X,Y)Z = nabla_[X,Y] Z - [nabla_X, nabla_Y] Z``,
the opposite of the more common one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet3
from .tensors import christoffel


class ChartDomainError(ValueError):
    """A point lies outside the chart's coordinate domain."""


_ALIASES = {
    "disk": "poincare_disk",
    "poincare_disk": "poincare_disk",
    "polar": "geodesic_polar",
    "geodesic_polar": "geodesic_polar",
}


@dataclass(frozen=True)
class HyperbolicChart:
    kind: str

    def __post_init__(self):
        if self.kind not in _ALIASES:
            raise ValueError(f"unknown chart {self.kind!r}; use 'disk' or 'polar'")
        object.__setattr__(self, "kind", _ALIASES[self.kind])

    @property
    def short_name(self) -> str:
        return "disk" if self.kind == "poincare_disk" else "polar"

    @property
    def coordinate_names(self) -> tuple[str, str]:
        return ("x", "y") if self.kind == "poincare_disk" else ("r", "theta")

    def check_domain(self, p1, p2) -> None:
        a, b = np.asarray(jets.value_of(p1)), np.asarray(jets.value_of(p2))
        if self.kind == "poincare_disk":
            bad = a * a + b * b >= 1.0
            what = "outside the unit disk"
        else:
            bad = a <= 0.0
            what = "on or beyond the polar axis r <= 0"
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            pa, pb = np.atleast_1d(a)[tuple(idx)], np.atleast_1d(b)[tuple(idx)]
            raise ChartDomainError(f"point ({pa:.17g}, {pb:.17g}) is {what}")

    def metric(self, p1, p2):
        """Closed-form components of g_H; works on numbers, arrays and jets."""
        if self.kind == "poincare_disk":
            lam = 2.0 / (1.0 - p1 * p1 - p2 * p2)
            l2 = lam * lam
            return [[l2, 0.0 * l2], [0.0 * l2, l2]]
        s = jets.sinh(p2 * 0.0 + p1)
        one = 0.0 * s + 1.0
        return [[one, 0.0 * s], [0.0 * s, s * s]]


DISK = HyperbolicChart("disk")
POLAR = HyperbolicChart("polar")


def hyperbolic_metric(chart: HyperbolicChart, p, jet: bool = False):
    """g_H at the chart point ``p``.

    Returns a 2x2 array, or with ``jet=True`` a 2x2 nested list of jets in the
    chart's own coordinates based at ``p`` (exact through order 3).
    """
    p1, p2 = p
    chart.check_domain(p1, p2)
    if jet:
        return chart.metric(jets.jet_var("u", p1), jets.jet_var("v", p2))
    m = chart.metric(np.asarray(p1, dtype=float), np.asarray(p2, dtype=float))
    return np.array([[np.broadcast_to(x, np.shape(p1)) for x in row] for row in m], dtype=float)


def hyperbolic_christoffel(chart: HyperbolicChart, p1, p2):
    """Christoffel symbols of g_H as jets in the chart coordinates at (p1, p2).

    Computed generically from the metric jets; exact through order 2.
    """
    chart.check_domain(p1, p2)
    return christoffel(chart.metric(jets.jet_var("u", p1), jets.jet_var("v", p2)))


def ambient_metric(chart: HyperbolicChart, p, X, Y) -> np.ndarray:
    """g(X, Y) = g_H(X_H, Y_H) - X_t Y_t at the ambient point ``p = (p1, p2, t)``."""
    gh = hyperbolic_metric(chart, (p[0], p[1]))
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    out = -X[2] * Y[2]
    for i in range(2):
        for j in range(2):
            out = out + gh[i, j] * X[i] * Y[j]
    return out


def ambient_metric_matrix(chart: HyperbolicChart, p) -> np.ndarray:
    gh = hyperbolic_metric(chart, (p[0], p[1]))
    out = np.zeros((3, 3) + gh.shape[2:])
    out[:2, :2] = gh
    out[2, 2] = -1.0
    return out


def _gamma_apply(gamma, X, Y):
    """Horizontal components of Gamma(X, Y); the t block is flat."""
    return [
        sum(gamma[k][i][j] * X[i] * Y[j] for i in range(2) for j in range(2))
        for k in range(2)
    ]


def ambient_connection(chart: HyperbolicChart, p, X, Y) -> list:
    """nabla_X Y at ``p`` for a constant vector X and a field Y.

    ``Y`` is a list of three jets in the horizontal chart coordinates based at
    ``(p[0], p[1])``; fields are taken t-independent.  The result is a list of
    three jets, exact to one order less than ``Y``.
    """
    gamma = hyperbolic_christoffel(chart, p[0], p[1])
    X = [np.asarray(x, dtype=float) for x in X]
    out = []
    for k in range(3):
        out.append(X[0] * jets.diff(Y[k], "u") + X[1] * jets.diff(Y[k], "v"))
    corr = _gamma_apply(gamma, X, Y)
    out[0] = out[0] + corr[0]
    out[1] = out[1] + corr[1]
    return out


def christoffel_along(chart: HyperbolicChart, base1: Jet3, base2: Jet3):
    """Ambient Christoffel symbols pulled back along a map (base1, base2)(u, v)."""
    poly = hyperbolic_christoffel(chart, base1.value, base2.value)
    d1 = base1 - base1.value
    d2 = base2 - base2.value
    return [[[jets.compose(poly[k][i][j], d1, d2) for j in range(2)] for i in range(2)] for k in range(2)]


def covariant_derivative_along(gamma_along, tangent, Y, axis: str) -> list:
    """nabla-bar along the map: d_axis Y + Gamma(f_axis, Y).

    ``tangent`` is the ambient derivative of the map along ``axis`` and ``Y`` a
    field along the map, both as lists of three jets in (u, v).
    """
    out = [jets.diff(Y[k], axis) for k in range(3)]
    corr = _gamma_apply(gamma_along, tangent, Y)
    out[0] = out[0] + corr[0]
    out[1] = out[1] + corr[1]
    return out


def ambient_curvature(chart: HyperbolicChart, p, X, Y, Z) -> np.ndarray:
    """R(X,Y)Z at ``p`` with R(X,Y) = nabla_[X,Y] - [nabla_X, nabla_Y]."""
    gamma = hyperbolic_christoffel(chart, p[0], p[1])
    axes = ("u", "v")
    X, Y, Z = (np.asarray(w, dtype=float) for w in (X, Y, Z))
    g = [[[gamma[k][i][j].value for j in range(2)] for i in range(2)] for k in range(2)]
    dg = [[[[jets.diff(gamma[k][i][j], axes[m]).value for m in range(2)] for j in range(2)] for i in range(2)] for k in range(2)]
    out = np.zeros((3,) + np.broadcast_shapes(X.shape[1:], Y.shape[1:], Z.shape[1:], np.shape(g[0][0][0])))
    for l in range(2):
        acc = 0.0
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    r = dg[l][j][k][i] - dg[l][i][k][j]
                    for m in range(2):
                        r = r + g[m][j][k] * g[l][i][m] - g[m][i][k] * g[l][j][m]
                    acc = acc + r * X[i] * Y[j] * Z[k]
        out[l] = -acc
    return out


def sectional_curvature(chart: HyperbolicChart, p, X, Y) -> np.ndarray:
    """g(R(X,Y)X, Y) / (g(X,X) g(Y,Y) - g(X,Y)^2)."""
    R = ambient_curvature(chart, p, X, Y, X)
    q = ambient_metric(chart, p, X, X) * ambient_metric(chart, p, Y, Y) - ambient_metric(chart, p, X, Y) ** 2
    return ambient_metric(chart, p, R, Y) / q


def unit_time_field() -> np.ndarray:
    return np.array([0.0, 0.0, 1.0])


__all__ = [
    "ChartDomainError",
    "HyperbolicChart",
    "DISK",
    "POLAR",
    "hyperbolic_metric",
    "hyperbolic_christoffel",
    "ambient_metric",
    "ambient_metric_matrix",
    "ambient_connection",
    "christoffel_along",
    "covariant_derivative_along",
    "ambient_curvature",
    "sectional_curvature",
    "unit_time_field",
]
