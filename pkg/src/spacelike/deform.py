"""The deformed metric g~ = g + c dh^2 and everything derived from it.

Each deformed quantity is produced twice: once from closed formulas in terms
of the geometry of g (gradient, Hessian, shape operator, K), and once
directly from g~ (its own Christoffel symbols and curvature).  The residual
helpers compare the two routes.

Pointwise formulas are evaluated with the frame's pointwise K, which is
valid for any c; statements that need K constant and c = 1/(K+1) are only
evaluated in ``constant_K`` mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .codazzi import CodazziPairField, metric_norm, pair_codazzi_defect
from .surface import FrameJets, Grid, SurfacePatch, frame_jets
from .tensors import christoffel, det2, gauss_curvature, values

CONSTANT_K_TOL = 1e-5
MAX_CONDITIONING = 1e12


class InconsistentContext(ValueError):
    """The patch does not have the asserted constant curvature."""


class ConditioningError(ValueError):
    pass


@dataclass(frozen=True)
class DeformationContext:
    patch: SurfacePatch
    c: float
    mode: str = "free_c"
    K: float | None = None
    consistent: bool = True
    K_deviation: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"deformation constant must be positive, got {self.c}")
        if self.mode not in ("free_c", "constant_K"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def free_c(cls, patch: SurfacePatch, c: float) -> "DeformationContext":
        return cls(patch, float(c), "free_c")

    @classmethod
    def constant_k(cls, patch: SurfacePatch, K: float, grid: Grid | None = None,
                   tol: float = CONSTANT_K_TOL) -> "DeformationContext":
        """c = 1/(K+1) from the asserted K, checked against the patch on ``grid``."""
        if not -1.0 < K <= 0.0:
            raise ValueError(f"constant_K mode needs -1 < K <= 0, got {K}")
        grid = grid or Grid(10, 10, patch.domain)
        k = frame_jets(patch, *grid.points()).K_int
        dev = float(np.max(np.abs(k - K)))
        return cls(patch, 1.0 / (K + 1.0), "constant_K", float(K), dev <= tol, dev)

    def require_constant_k(self) -> None:
        if self.mode != "constant_K":
            raise InconsistentContext("this quantity needs constant_K mode")
        if not self.consistent:
            raise InconsistentContext(
                f"patch curvature deviates from K = {self.K} by {self.K_deviation:.3g}"
            )


def deformed_metric_jets(fj: FrameJets, c: float):
    dh = fj.dh
    return [[fj.g[i][j] + c * dh[i] * dh[j] for j in range(2)] for i in range(2)]


@dataclass
class DeformedFrame:
    """Deformed geometry at a batch of chart points, both routes."""

    ctx: DeformationContext
    fj: FrameJets
    gt: list  # g~ as jets (order 2)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def c(self) -> float:
        return self.ctx.c

    @property
    def s(self) -> np.ndarray:
        """||grad h||^2 with respect to g."""
        return self.fj.norm_grad_h2

    @property
    def factor(self) -> np.ndarray:
        """c / (1 + c ||grad h||^2)."""
        return self.c / (1.0 + self.c * self.s)

    @property
    def K(self) -> np.ndarray:
        return self.fj.K_int

    # closed-formula route ------------------------------------------------------
    def gradient(self) -> np.ndarray:
        return values(self.fj.grad_h) / (1.0 + self.c * self.s)

    def shape_operator(self) -> np.ndarray:
        """A~ e_a = A e_a - k g(A e_a, grad h) grad h, column a is A~ e_a."""
        A = values(self.fj.A)
        dh = values(self.fj.dh)
        grad = values(self.fj.grad_h)
        proj = np.einsum("ca...,c...->a...", A, dh)  # g(A e_a, grad h)
        return A - self.factor * np.einsum("a...,c...->ca...", proj, grad)

    def shape_operator_jets(self):
        fj = self.fj
        k = self.c / (1.0 + self.c * (fj.dh[0] * fj.grad_h[0] + fj.dh[1] * fj.grad_h[1]))
        out = []
        for c in range(2):
            row = []
            for a in range(2):
                proj = fj.A[0][a] * fj.dh[0] + fj.A[1][a] * fj.dh[1]
                row.append(fj.A[c][a] - k * proj * fj.grad_h[c])
            out.append(row)
        return out

    def connection_formula(self) -> np.ndarray:
        """Gamma~^k_ab = Gamma^k_ab + k Hess h_ab (grad h)^k."""
        G = values(self.fj.gamma)
        H = values(self.fj.hess_h)
        grad = values(self.fj.grad_h)
        return G + self.factor * np.einsum("ab...,k...->kab...", H, grad)

    def hessian_det(self) -> np.ndarray:
        """det of the Hessian operator g^-1 Hess h."""
        return np.linalg.det(_mats(values(self.fj.hess_h))) / np.linalg.det(_mats(values(self.fj.g)))

    def ktilde_lemma(self) -> np.ndarray:
        q = 1.0 + self.c * self.s
        return (self.K * q + self.c * self.hessian_det()) / q**2

    def ktilde_closed_form(self) -> np.ndarray:
        return ktilde_of_s(self.K, self.c, self.s)

    # direct route on g~ ---------------------------------------------------------
    def connection_direct(self) -> np.ndarray:
        if "gamma_t" not in self._cache:
            self._cache["gamma_t"] = christoffel(self.gt)
        return values(self._cache["gamma_t"])

    def ktilde_direct(self) -> np.ndarray:
        if "K_t" not in self._cache:
            self._cache["K_t"] = gauss_curvature(self.gt)
        return self._cache["K_t"]

    # checks ---------------------------------------------------------------------
    def det_ratio_defect(self) -> np.ndarray:
        return values(det2(self.gt)) / values(det2(self.fj.g)) - (1.0 + self.c * self.s)

    def gradient_defect(self) -> np.ndarray:
        """g~(grad~ h, e_a) - dh(e_a)."""
        gt = values(self.gt)
        return np.einsum("ab...,b...->a...", gt, self.gradient()) - values(self.fj.dh)

    def shape_operator_defect(self) -> np.ndarray:
        """alpha(e_a, e_b) - g~(A~ e_a, e_b)."""
        gt = values(self.gt)
        At = self.shape_operator()
        return values(self.fj.alpha) - np.einsum("bc...,ca...->ab...", gt, At)

    def det_product_defect(self) -> np.ndarray:
        """det A~ det g~ - det alpha."""
        return (
            np.linalg.det(_mats(self.shape_operator())) * values(det2(self.gt))
            - values(det2(self.fj.alpha))
        )

    def connection_defect(self) -> np.ndarray:
        return self.connection_formula() - self.connection_direct()

    def connection_compatibility_defect(self) -> np.ndarray:
        """d_a g~_bc - g~(nabla~_a e_b, e_c) - g~(e_b, nabla~_a e_c) with the formula connection."""
        G = self.connection_formula()
        gt = values(self.gt)
        axes = ("u", "v")
        dg = np.array([[[jets.diff(self.gt[b][c], axes[a]).value for c in range(2)] for b in range(2)] for a in range(2)])
        t1 = np.einsum("dab...,dc...->abc...", G, gt)
        t2 = np.einsum("dac...,bd...->abc...", G, gt)
        return dg - t1 - t2

    def hessian_det_defects(self) -> tuple[np.ndarray, np.ndarray]:
        """det Hess h - Theta^2 det A and Theta^2 det A + (1+s)(K+1+s)."""
        theta2 = self.fj.Theta.value ** 2
        detA = np.linalg.det(_mats(values(self.fj.A)))
        s = self.s
        return self.hessian_det() - theta2 * detA, theta2 * detA + (1 + s) * (self.K + 1 + s)

    def pair(self) -> CodazziPairField:
        """The pair (g~, alpha) as fields over chart points."""
        return deformed_pair(self.ctx)

    def pair_codazzi_defect(self) -> np.ndarray:
        return metric_norm(self.gt, pair_codazzi_defect(self.gt, self.fj.alpha))

    def pair_curvature(self) -> np.ndarray:
        return values(det2(self.fj.alpha)) / values(det2(self.gt))

    def lambda_product(self) -> np.ndarray:
        """Product of the principal curvatures (eigenvalues of A)."""
        ev = np.linalg.eigvals(_mats(values(self.fj.A)))
        return np.real(ev[..., 0] * ev[..., 1])


def _mats(m: np.ndarray) -> np.ndarray:
    return np.moveaxis(m, (0, 1), (-2, -1))


def ktilde_of_s(K, c, s):
    """((1-c) K - c (1+s)^2) / (1 + c s)^2 as a function of s = ||grad h||^2."""
    return ((1.0 - c) * K - c * (1.0 + s) ** 2) / (1.0 + c * s) ** 2


def deformed_frame(ctx: DeformationContext, p, shape_scale: float = 1.0, fj: FrameJets | None = None) -> DeformedFrame:
    if fj is None:
        fj = frame_jets(ctx.patch, p[0], p[1], shape_scale=shape_scale)
    cond = ctx.c * fj.norm_grad_h2
    if np.any(cond > MAX_CONDITIONING):
        raise ConditioningError(f"c ||grad h||^2 = {float(np.max(cond)):.3g} exceeds {MAX_CONDITIONING:g}")
    return DeformedFrame(ctx, fj, deformed_metric_jets(fj, ctx.c))


def deformed_pair(ctx: DeformationContext) -> CodazziPairField:
    def gt(u, v):
        return deformed_metric_jets(frame_jets(ctx.patch, u, v), ctx.c)

    def alpha(u, v):
        return frame_jets(ctx.patch, u, v).alpha

    return CodazziPairField(gt, alpha, ctx.patch.domain)


def deformed_metric_field(ctx: DeformationContext):
    return deformed_pair(ctx).A


# pointwise operations ---------------------------------------------------------

def deformed_metric(ctx: DeformationContext, p) -> np.ndarray:
    return values(deformed_frame(ctx, p).gt)


def deformed_gradient(ctx: DeformationContext, p) -> np.ndarray:
    return deformed_frame(ctx, p).gradient()


def deformed_shape_operator(ctx: DeformationContext, p) -> np.ndarray:
    return deformed_frame(ctx, p).shape_operator()


def deformed_connection(ctx: DeformationContext, p, X, Y) -> np.ndarray:
    """nabla~_X Y for constant-coefficient fields, in chart components."""
    G = deformed_frame(ctx, p).connection_formula()
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return np.einsum("kab...,a,b->k...", G, X, Y)


def hessian_det_identity(ctx: DeformationContext, p) -> np.ndarray:
    df = deformed_frame(ctx, p)
    r1, r2 = df.hessian_det_defects()
    return np.maximum(np.abs(r1), np.abs(r2)) / (1.0 + df.s**2)


def ktilde_lemma(ctx: DeformationContext, p) -> np.ndarray:
    return deformed_frame(ctx, p).ktilde_lemma()


def ktilde_closed_form(ctx: DeformationContext, p) -> np.ndarray:
    return deformed_frame(ctx, p).ktilde_closed_form()


@dataclass(frozen=True)
class PairRecord:
    K_pair: np.ndarray
    lambda_identity_residual: np.ndarray
    ktilde_bound_residual: np.ndarray


def pair_curvature_and_bound(ctx: DeformationContext, p) -> PairRecord:
    """Extrinsic curvature of (g~, alpha), the lambda identity and the sup K~ bound."""
    ctx.require_constant_k()
    df = deformed_frame(ctx, p)
    lam = df.lambda_product() * df.factor + 1.0
    bound = np.maximum(0.0, df.ktilde_closed_form() - (ctx.K - 1.0))
    return PairRecord(df.pair_curvature(), np.abs(lam), bound)


def curve_lengths(ctx: DeformationContext, u, v) -> tuple[float, float]:
    """g- and g~-lengths of the polyline through chart points (u_i, v_i).

    Speeds are evaluated at segment midpoints.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    mu, mv = 0.5 * (u[1:] + u[:-1]), 0.5 * (v[1:] + v[:-1])
    d = np.array([np.diff(u), np.diff(v)])
    df = deformed_frame(ctx, (mu, mv))
    g = values(df.fj.g)
    gt = values(df.gt)
    lg = np.sum(np.sqrt(np.einsum("a...,ab...,b...->...", d, g, d)))
    lt = np.sum(np.sqrt(np.einsum("a...,ab...,b...->...", d, gt, d)))
    return float(lg), float(lt)


__all__ = [
    "DeformationContext",
    "DeformedFrame",
    "InconsistentContext",
    "ConditioningError",
    "deformed_frame",
    "deformed_pair",
    "deformed_metric",
    "deformed_gradient",
    "deformed_shape_operator",
    "deformed_connection",
    "hessian_det_identity",
    "ktilde_lemma",
    "ktilde_closed_form",
    "ktilde_of_s",
    "pair_curvature_and_bound",
    "curve_lengths",
]
