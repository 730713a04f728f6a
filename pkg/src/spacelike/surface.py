"""Extrinsic and intrinsic geometry of spacelike surface patches in H^2 x R_1.

A patch is an immersion ``(u, v) -> (p1, p2, t)`` into one hyperbolic chart
times the time line.  Everything pointwise is computed from order-3 jets of
the coordinate functions, so a single evaluation gives the induced metric to
order 2, the normal and angle function to order 2, and the shape operator,
Christoffel symbols and Hessian of the height to order 1.

All functions accept a scalar chart point or arrays of points; array shapes
carry tensor indices first and the batch shape last.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import expr as _expr
from . import jets
from .ambient import HyperbolicChart, christoffel_along, covariant_derivative_along
from .jets import Jet3
from .tensors import (
    christoffel,
    det2,
    gauss_curvature,
    generalized_eigvals,
    inv2,
    values,
)

log = logging.getLogger(__name__)

ASYMMETRY_TOL = 1e-9
SPACELIKE_EPS = 1e-12

CoordFn = Callable[[Jet3, Jet3], object]


class GeometryError(ValueError):
    """Base class for pointwise geometry failures; ``point`` is the chart point."""

    def __init__(self, message: str, point=None):
        if point is not None:
            message = f"{message} at (u, v) = ({point[0]:.17g}, {point[1]:.17g})"
        super().__init__(message)
        self.point = point


class NotSpacelike(GeometryError):
    pass


class NotImmersed(GeometryError):
    pass


class PatchDomainError(GeometryError):
    pass


def _first_bad(mask, u, v):
    mask = np.atleast_1d(mask)
    idx = tuple(np.argwhere(mask)[0])
    uu = np.broadcast_to(np.atleast_1d(u), mask.shape)[idx]
    vv = np.broadcast_to(np.atleast_1d(v), mask.shape)[idx]
    return float(uu), float(vv)


@dataclass(frozen=True)
class SurfacePatch:
    """Chart rectangle plus three coordinate functions into a hyperbolic chart x R.

    ``coords`` are callables taking the u and v jets and returning a jet (or a
    constant); expression-defined patches keep their source text for
    fingerprinting.
    """

    chart: HyperbolicChart
    domain: tuple[float, float, float, float]
    coords: tuple[CoordFn, CoordFn, CoordFn]
    source: str = ""
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_exprs(cls, chart: HyperbolicChart, domain, sources: Sequence[str], label: str = ""):
        trees = [_expr.parse(s, ("u", "v")) for s in sources]
        coords = tuple(_expr_coord(t) for t in trees)
        names = chart.coordinate_names + ("t",)
        text = "; ".join(f"{n} = {s}" for n, s in zip(names, sources))
        return cls(chart, tuple(float(d) for d in domain), coords, text, label)

    @classmethod
    def graph(cls, chart: HyperbolicChart, domain, height: str, label: str = ""):
        """Graph t = height(u, v) over the chart rectangle itself."""
        return cls.from_exprs(chart, domain, ("u", "v", height), label)

    @classmethod
    def slice(cls, chart: HyperbolicChart, domain, t0: float = 0.0):
        return cls.graph(chart, domain, repr(float(t0)), label=f"slice t={t0!r}")

    def translated(self, dt: float) -> "SurfacePatch":
        """The same patch shifted by ``dt`` along the time axis."""
        ht = self.coords[2]
        return replace(
            self,
            coords=(self.coords[0], self.coords[1], lambda u, v: ht(u, v) + dt),
            source=f"{self.source}; shift {dt!r}",
            meta=dict(self.meta),
        )

    @property
    def fingerprint(self) -> str:
        text = f"{self.chart.short_name}|{self.domain!r}|{self.source}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def grid(self, nu: int, nv: int) -> tuple[np.ndarray, np.ndarray]:
        """Row-major grid over the domain (u varies slowest)."""
        return Grid(nu, nv, self.domain).points()

    def check_contains(self, u, v) -> None:
        u0, u1, v0, v1 = self.domain
        su = 1e-12 * max(1.0, abs(u0), abs(u1))
        sv = 1e-12 * max(1.0, abs(v0), abs(v1))
        bad = (np.asarray(u) < u0 - su) | (np.asarray(u) > u1 + su) | (np.asarray(v) < v0 - sv) | (np.asarray(v) > v1 + sv)
        if np.any(bad):
            raise PatchDomainError("chart point outside the patch domain", _first_bad(bad, u, v))

    def evaluate(self, U: Jet3, V: Jet3) -> list[Jet3]:
        out = []
        for fn in self.coords:
            c = fn(U, V)
            if not isinstance(c, Jet3):
                c = jets.jet_const(np.broadcast_to(np.asarray(c, dtype=float), U.shape))
            out.append(c)
        return out


@dataclass(frozen=True)
class Grid:
    """Row-major sampling grid over a chart rectangle (u varies slowest)."""

    nu: int
    nv: int
    domain: tuple[float, float, float, float]

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        u0, u1, v0, v1 = self.domain
        uu, vv = np.meshgrid(np.linspace(u0, u1, self.nu), np.linspace(v0, v1, self.nv), indexing="ij")
        return uu.ravel(), vv.ravel()

    def refined(self) -> "Grid":
        """Grid with halved spacing; contains every point of this one."""
        return Grid(2 * self.nu - 1, 2 * self.nv - 1, self.domain)


def _expr_coord(tree) -> CoordFn:
    def fn(u, v):
        return _expr.evaluate(tree, {"u": u, "v": v})

    return fn


def _cross(a, b):
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def _inner(gH, X, Y):
    return (
        gH[0][0] * X[0] * Y[0]
        + gH[0][1] * (X[0] * Y[1] + X[1] * Y[0])
        + gH[1][1] * X[1] * Y[1]
        - X[2] * Y[2]
    )


def _induced(gH, fu, fv):
    off = _inner(gH, fu, fv)
    return [[_inner(gH, fu, fu), off], [off, _inner(gH, fv, fv)]]


def induced_metric_jets(chart: HyperbolicChart, f: Sequence[Jet3]):
    """Induced metric of the map with ambient component jets ``f`` (exact to order 2)."""
    gH = chart.metric(f[0], f[1])
    return _induced(gH, [jets.diff(c, "u") for c in f], [jets.diff(c, "v") for c in f])


@dataclass
class FrameJets:
    """Jet-valued pointwise geometry of a patch at a batch of chart points."""

    patch: SurfacePatch
    u: np.ndarray
    v: np.ndarray
    f: list
    tangents: list  # [f_u, f_v], ambient components
    gH: list  # hyperbolic metric along the surface
    g: list
    ginv: list
    gamma: list  # gamma[k][i][j] of the induced metric
    gamma_bar: list  # ambient Christoffels along the surface
    N: list
    Theta: Jet3
    weingarten: list  # [-nabla-bar_u N, -nabla-bar_v N]
    alpha: list  # symmetrised second fundamental form
    alpha_raw: list
    A: list  # A[c][a]: component c of A e_a
    dh: list
    grad_h: list
    hess_h: list
    shape_scale: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def ambient_inner(self, X, Y):
        return _inner(self.gH, X, Y)

    # numeric views ------------------------------------------------------------
    @property
    def Theta_value(self) -> np.ndarray:
        return self.Theta.value

    @property
    def K_int(self) -> np.ndarray:
        if "K_int" not in self._cache:
            self._cache["K_int"] = gauss_curvature(self.g)
        return self._cache["K_int"]

    @property
    def K_ext(self) -> np.ndarray:
        return -self.Theta.value**2 - values(det2(self.A))

    @property
    def norm_grad_h2(self) -> np.ndarray:
        return values(self.dh[0] * self.grad_h[0] + self.dh[1] * self.grad_h[1])

    def second_derivatives(self):
        """d_a f_b as ambient component jets, indexed [a][b]."""
        if "ddf" not in self._cache:
            axes = ("u", "v")
            self._cache["ddf"] = [
                [[jets.diff(self.tangents[b][k], axes[a]) for k in range(3)] for b in range(2)]
                for a in range(2)
            ]
        return self._cache["ddf"]


def frame_jets(patch: SurfacePatch, u, v, shape_scale: float = 1.0) -> FrameJets:
    """Evaluate all jet-valued pointwise geometry at chart points ``(u, v)``.

    ``shape_scale`` multiplies the shape operator only (the second fundamental
    form is left alone); it exists to test that the identity checks detect
    wrong geometry.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    patch.check_contains(u, v)
    U, V = jets.jet_var("u", u), jets.jet_var("v", v)
    f = patch.evaluate(U, V)
    patch.chart.check_domain(f[0].value, f[1].value)
    fu = [jets.diff(c, "u") for c in f]
    fv = [jets.diff(c, "v") for c in f]
    tangents = [fu, fv]

    gH = patch.chart.metric(f[0], f[1])

    def inner(X, Y):
        return _inner(gH, X, Y)

    # immersion: Euclidean rank test on the component vectors
    a = np.array([c.value for c in fu])
    b = np.array([c.value for c in fv])
    cross = np.linalg.norm(np.cross(a, b, axis=0), axis=0)
    scale = np.linalg.norm(a, axis=0) * np.linalg.norm(b, axis=0)
    bad = ~(cross > 1e-12 * scale) | (scale == 0)
    if np.any(bad):
        raise NotImmersed("differential has rank < 2", _first_bad(bad, u, v))

    g = _induced(gH, fu, fv)
    detg = det2(g)
    tr = g[0][0].value + g[1][1].value
    bad = (tr <= 0) | (detg.value <= SPACELIKE_EPS * tr * tr)
    if np.any(bad):
        raise NotSpacelike("induced metric is not positive definite", _first_bad(bad, u, v))
    ginv = inv2(g, detg)
    gamma = christoffel(g, ginv)

    # unit normal: the covector fu x fv raised with the ambient metric
    w = _cross(fu, fv)
    gHinv = inv2(gH)
    n = [gHinv[0][0] * w[0] + gHinv[0][1] * w[1], gHinv[1][0] * w[0] + gHinv[1][1] * w[1], -w[2]]
    nn = inner(n, n)
    if np.any(nn.value >= 0):
        raise NotSpacelike("normal is not timelike", _first_bad(nn.value >= 0, u, v))
    norm = jets.sqrt(-nn)
    orient = np.where(n[2].value > 0, 1.0, -1.0)
    N = [c / norm * orient for c in n]
    Theta = -N[2]

    gamma_bar = christoffel_along(patch.chart, f[0], f[1])
    weingarten = [
        [-c for c in covariant_derivative_along(gamma_bar, tangents[a], N, ("u", "v")[a])]
        for a in range(2)
    ]
    alpha_raw = [[inner(weingarten[a], tangents[b_]) for b_ in range(2)] for a in range(2)]
    asym = np.abs(alpha_raw[0][1].value - alpha_raw[1][0].value)
    ref = 1.0 + np.abs(alpha_raw[0][0].value) + np.abs(alpha_raw[1][1].value)
    if np.any(asym > ASYMMETRY_TOL * ref):
        log.warning("second fundamental form asymmetric by %.3g", float(np.max(asym / ref)))
    off = 0.5 * (alpha_raw[0][1] + alpha_raw[1][0])
    alpha = [[alpha_raw[0][0], off], [off, alpha_raw[1][1]]]
    A = [
        [(ginv[c][0] * alpha_raw[a][0] + ginv[c][1] * alpha_raw[a][1]) * shape_scale for a in range(2)]
        for c in range(2)
    ]

    h = f[2]
    dh = [jets.diff(h, "u"), jets.diff(h, "v")]
    grad_h = [ginv[c][0] * dh[0] + ginv[c][1] * dh[1] for c in range(2)]
    axes = ("u", "v")
    hess_h = [
        [jets.diff(dh[b_], axes[a]) - gamma[0][a][b_] * dh[0] - gamma[1][a][b_] * dh[1] for b_ in range(2)]
        for a in range(2)
    ]
    return FrameJets(
        patch=patch, u=u, v=v, f=f, tangents=tangents, gH=gH, g=g, ginv=ginv, gamma=gamma,
        gamma_bar=gamma_bar, N=N, Theta=Theta, weingarten=weingarten, alpha=alpha,
        alpha_raw=alpha_raw, A=A, dh=dh, grad_h=grad_h, hess_h=hess_h, shape_scale=shape_scale,
    )


@dataclass(frozen=True)
class PointFrame:
    """Numeric pointwise geometry; tensor indices lead, batch axes trail.

    ``A[c, a]`` is component c of the shape operator applied to e_a, so
    ``alpha`` equals ``g @ A`` as matrices.
    """

    g: np.ndarray
    ginv: np.ndarray
    christoffel: np.ndarray
    N: np.ndarray
    Theta: np.ndarray
    A: np.ndarray
    alpha: np.ndarray
    grad_h: np.ndarray
    hess_h: np.ndarray
    K_ext: np.ndarray
    K_int: np.ndarray

    @property
    def hyperbolic_angle(self) -> np.ndarray:
        return np.arccosh(np.maximum(-self.Theta, 1.0))


def point_frame(fj: FrameJets) -> PointFrame:
    return PointFrame(
        g=values(fj.g),
        ginv=values(fj.ginv),
        christoffel=values(fj.gamma),
        N=values(fj.N),
        Theta=fj.Theta.value.copy(),
        A=values(fj.A),
        alpha=values(fj.alpha),
        grad_h=values(fj.grad_h),
        hess_h=values(fj.hess_h),
        K_ext=fj.K_ext,
        K_int=fj.K_int,
    )


def frame_at(patch: SurfacePatch, p) -> PointFrame:
    """All pointwise geometry of ``patch`` at the chart point ``p = (u, v)``."""
    return point_frame(frame_jets(patch, p[0], p[1]))


def _fj(patch_or_fj, p):
    if isinstance(patch_or_fj, FrameJets):
        return patch_or_fj
    return frame_jets(patch_or_fj, p[0], p[1])


def gauss_formula_defect(fj: FrameJets) -> np.ndarray:
    """nabla-bar_a f_b - nabla_a f_b + alpha_ab N, shape (2, 2, 3, *batch)."""
    ddf = fj.second_derivatives()
    out = []
    for a in range(2):
        row = []
        for b in range(2):
            X, Y = fj.tangents[a], fj.tangents[b]
            amb = [ddf[a][b][k].value for k in range(3)]
            for k in range(2):
                amb[k] = amb[k] + sum(
                    fj.gamma_bar[k][i][j].value * X[i].value * Y[j].value for i in range(2) for j in range(2)
                )
            vec = []
            for k in range(3):
                intr = fj.gamma[0][a][b].value * fj.tangents[0][k].value + fj.gamma[1][a][b].value * fj.tangents[1][k].value
                vec.append(amb[k] - intr + fj.alpha[a][b].value * fj.N[k].value)
            row.append(vec)
        out.append(row)
    return np.array(out)


def gauss_formula_residual(patch, p, X, Y) -> np.ndarray:
    """Defect of nabla-bar_X Y = nabla_X Y - g(AX, Y) N for constant-coefficient fields."""
    fj = _fj(patch, p)
    d = gauss_formula_defect(fj)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return sum(X[a] * Y[b] * d[a, b] for a in range(2) for b in range(2))


def weingarten_defect(fj: FrameJets) -> np.ndarray:
    """-nabla-bar_a N - A e_a in ambient components, shape (2, 3, *batch)."""
    out = []
    for a in range(2):
        vec = []
        for k in range(3):
            ae = fj.A[0][a].value * fj.tangents[0][k].value + fj.A[1][a].value * fj.tangents[1][k].value
            vec.append(fj.weingarten[a][k].value - ae)
        out.append(vec)
    return np.array(out)


def codazzi_defect(fj: FrameJets) -> np.ndarray:
    """(nabla_u A) e_v - (nabla_v A) e_u - Theta (dh(e_u) e_v - dh(e_v) e_u)."""
    A, G = fj.A, fj.gamma
    axes = ("u", "v")

    def cov_A(a, c, b):
        # (nabla_a A)^c_b
        val = jets.diff(A[c][b], axes[a]).value
        for d in range(2):
            val = val + G[c][a][d].value * A[d][b].value - A[c][d].value * G[d][a][b].value
        return val

    theta = fj.Theta.value
    hu, hv = fj.dh[0].value, fj.dh[1].value
    out = []
    for c in range(2):
        lhs = cov_A(0, c, 1) - cov_A(1, c, 0)
        ev = 1.0 if c == 1 else 0.0
        eu = 1.0 if c == 0 else 0.0
        out.append(lhs - theta * (hu * ev - hv * eu))
    return np.array(out)


def codazzi_residual(patch, p) -> np.ndarray:
    """Max-norm defect of the Codazzi equation for the pair (e_u, e_v)."""
    return np.max(np.abs(codazzi_defect(_fj(patch, p))), axis=0)


def height_defects(fj: FrameJets) -> tuple[np.ndarray, np.ndarray]:
    """(||grad h||^2 - Theta^2 + 1, Hess h - Theta * (g A)) at the base points."""
    theta = fj.Theta.value
    eq7 = fj.norm_grad_h2 - theta**2 + 1.0
    g = values(fj.g)
    A = values(fj.A)
    gA = np.einsum("ab...,bc...->ac...", g, A)
    eq9 = values(fj.hess_h) - theta * np.swapaxes(gA, 0, 1)
    return eq7, eq9


def height_identities(patch, p) -> tuple[np.ndarray, np.ndarray]:
    eq7, eq9 = height_defects(_fj(patch, p))
    return np.abs(eq7), np.max(np.abs(eq9.reshape((4,) + eq9.shape[2:])), axis=0)


def projected_metric(fj: FrameJets) -> np.ndarray:
    """Pullback of g_H under the projection to H^2."""
    gH = values(fj.gH)
    t = np.array([[c.value for c in fj.tangents[a][:2]] for a in range(2)])
    return np.einsum("ai...,ij...,bj...->ab...", t, gH, t)


def projection_eigenvalues(fj: FrameJets) -> np.ndarray:
    """Eigenvalues of Pi*g_H - g relative to g (ascending)."""
    return generalized_eigvals(projected_metric(fj) - values(fj.g), values(fj.g))


def projection_comparison(patch, p) -> np.ndarray:
    """Smallest eigenvalue of Pi*g_H - g (relative to g); never negative."""
    return projection_eigenvalues(_fj(patch, p))[0]


def metric_field_jets(metric_field, p):
    """Evaluate a metric field at ``p`` as jets.

    ``metric_field`` is either a callable ``(u, v) -> 2x2 jets`` over chart
    points, or a callable on jets ``(U, V) -> 2x2`` flagged with
    ``on_jets = True``.
    """
    u, v = p
    if getattr(metric_field, "on_jets", False):
        return metric_field(jets.jet_var("u", u), jets.jet_var("v", v))
    return metric_field(u, v)


def intrinsic_curvature(metric_field, p) -> np.ndarray:
    """Gaussian curvature of a jet-valued metric field at ``p``."""
    g = metric_field_jets(metric_field, p)
    d = values(det2(g))
    tr = values(g[0][0]) + values(g[1][1])
    if np.any((d <= SPACELIKE_EPS * tr * tr) | (tr <= 0)):
        raise GeometryError("degenerate metric")
    return gauss_curvature(g)


def jet_metric(fn):
    """Mark a callable on (U, V) jets as a metric field."""
    fn.on_jets = True
    return fn
