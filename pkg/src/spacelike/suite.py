"""Identity suites over sample grids and the residual reports they produce.

Each identity id maps to a per-point residual, normalized so that values are
relative to the size of the quantities involved.  A suite evaluates every
residual on a grid (optionally split over worker threads), then keeps the
max, mean and argmax per identity.  Report assembly is by grid index, so
output never depends on the thread count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._version import __version__
from .codazzi import metric_norm, pair_codazzi_defect
from .deform import DeformationContext, DeformedFrame, deformed_frame
from .surface import (
    FrameJets,
    Grid,
    SurfacePatch,
    codazzi_defect,
    frame_jets,
    gauss_formula_defect,
    height_defects,
    projection_eigenvalues,
    weingarten_defect,
)
from .tensors import values

ANALYTIC_TOL = 1e-8
ODE_TOL = 1e-5
CHUNK = 256

SURFACE_IDS = ("eq1", "eq2", "eq4", "eq6", "eq7", "eq9", "proj")
DEFORM_IDS = ("eq13", "grad", "eq14", "eq14det", "eq15", "eq15compat", "lemma3", "eq17", "eq18")
CLAIM_IDS = ("claim_codazzi", "claim_kpair", "lambda", "eq19", "ktilde_range")

DESCRIPTIONS = {
    "eq1": "Gauss formula for coordinate fields",
    "eq2": "Weingarten relation A X = -nabla-bar_X N",
    "eq4": "Gauss equation K_ext = -Theta^2 - det A against intrinsic K",
    "eq6": "Codazzi equation with the height term",
    "eq7": "||grad h||^2 = Theta^2 - 1",
    "eq9": "Hess h = Theta alpha",
    "proj": "projection pullback dominates g (negative part of the smallest eigenvalue)",
    "eq13": "det g~ / det g = 1 + c ||grad h||^2",
    "grad": "g~(grad~ h, X) = dh(X)",
    "eq14": "alpha = g~(A~ ., .)",
    "eq14det": "det A~ det g~ = det alpha",
    "eq15": "deformed connection formula against Christoffels of g~",
    "eq15compat": "metric compatibility of the formula connection",
    "lemma3": "K~ lemma formula against direct curvature of g~",
    "eq17": "det Hess h = Theta^2 det A = -(1+s)(K+1+s)",
    "eq18": "closed-form K~ against the lemma formula",
    "claim_codazzi": "(g~, alpha) satisfies the space-form Codazzi equation",
    "claim_kpair": "K(g~, alpha) = -(K+1)",
    "lambda": "lambda1 lambda2 c/(1+c s) = -1",
    "eq19": "K~ <= K - 1",
    "ktilde_range": "K - 1 <= K~ <= -(K+1)",
}


def _mx(a: np.ndarray, lead: int) -> np.ndarray:
    """Max of |a| over the first ``lead`` axes."""
    a = np.abs(np.asarray(a))
    return a.reshape((-1,) + a.shape[lead:]).max(axis=0)


def surface_residuals(fj: FrameJets) -> dict[str, np.ndarray]:
    ddf = fj.second_derivatives()
    scale2 = 1.0 + np.max(
        np.abs(np.array([[[ddf[a][b][k].value for k in range(3)] for b in range(2)] for a in range(2)])).reshape(12, -1),
        axis=0,
    ).reshape(fj.u.shape)
    W = np.array([[c.value for c in row] for row in fj.weingarten])
    A = values(fj.A)
    theta = fj.Theta.value
    s = fj.norm_grad_h2
    K = fj.K_int
    eq7, eq9 = height_defects(fj)
    lam = projection_eigenvalues(fj)[0]
    return {
        "eq1": _mx(gauss_formula_defect(fj), 3) / scale2,
        "eq2": _mx(weingarten_defect(fj), 2) / (1.0 + _mx(W, 2)),
        "eq4": np.abs(fj.K_ext - K) / (1.0 + np.abs(K)),
        "eq6": _mx(codazzi_defect(fj), 1) / (1.0 + _mx(A, 2) + theta**2),
        "eq7": np.abs(eq7) / theta**2,
        "eq9": _mx(eq9, 2) / (1.0 + _mx(values(fj.hess_h), 2) + theta**2),
        "proj": np.maximum(0.0, -lam) / (1.0 + s),
    }


def deform_residuals(df: DeformedFrame) -> dict[str, np.ndarray]:
    q = 1.0 + df.c * df.s
    kt = df.ktilde_lemma()
    gt = values(df.gt)
    G = df.connection_direct()
    r17a, r17b = df.hessian_det_defects()
    norm17 = 1.0 + df.s**2
    alpha = values(df.fj.alpha)
    return {
        "eq13": np.abs(df.det_ratio_defect()) / q,
        "grad": _mx(df.gradient_defect(), 1) / (1.0 + np.sqrt(df.s)),
        "eq14": _mx(df.shape_operator_defect(), 2) / (1.0 + _mx(alpha, 2)),
        "eq14det": np.abs(df.det_product_defect()) / (1.0 + _mx(alpha, 2) ** 2),
        "eq15": _mx(df.connection_defect(), 3) / (1.0 + _mx(G, 3)),
        "eq15compat": _mx(df.connection_compatibility_defect(), 3) / (1.0 + _mx(gt, 2) * (1.0 + _mx(G, 3))),
        "lemma3": np.abs(kt - df.ktilde_direct()) / (1.0 + np.abs(kt)),
        "eq17": np.maximum(np.abs(r17a), np.abs(r17b)) / norm17,
        "eq18": np.abs(df.ktilde_closed_form() - kt) / (1.0 + np.abs(kt)),
    }


def claim_residuals(df: DeformedFrame, K: float) -> dict[str, np.ndarray]:
    lam = df.lambda_product() * df.factor + 1.0
    kt = df.ktilde_closed_form()
    gt = df.gt
    defect = pair_codazzi_defect(gt, df.fj.alpha)
    return {
        "claim_codazzi": metric_norm(gt, defect),
        "claim_kpair": np.abs(df.pair_curvature() + (K + 1.0)),
        "lambda": np.abs(lam),
        "eq19": np.maximum(0.0, kt - (K - 1.0)),
        "ktilde_range": np.maximum.reduce([np.zeros_like(kt), (K - 1.0) - kt, kt + (K + 1.0)]),
    }


def identity_ids(ctx: DeformationContext) -> tuple[str, ...]:
    ids = SURFACE_IDS + DEFORM_IDS
    if ctx.mode == "constant_K" and ctx.consistent:
        ids = ids + CLAIM_IDS
    return ids


def _residual_chunk(ctx: DeformationContext, u, v, shape_scale: float) -> dict[str, np.ndarray]:
    fj = frame_jets(ctx.patch, u, v, shape_scale=shape_scale)
    df = deformed_frame(ctx, (u, v), fj=fj)
    out = surface_residuals(fj)
    out.update(deform_residuals(df))
    if ctx.mode == "constant_K" and ctx.consistent:
        out.update(claim_residuals(df, ctx.K))
    return out


def map_chunks(fn: Callable, u: np.ndarray, v: np.ndarray, threads: int = 1, chunk: int = CHUNK):
    """Apply ``fn(u_chunk, v_chunk) -> dict of arrays`` and concatenate in index order."""
    bounds = [(i, min(i + chunk, u.size)) for i in range(0, u.size, chunk)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: fn(u[b[0]:b[1]], v[b[0]:b[1]]), bounds))
    else:
        parts = [fn(u[a:b], v[a:b]) for a, b in bounds]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def default_threads() -> int:
    env = os.environ.get("THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class IdentityResult:
    id: str
    max: float
    mean: float
    argmax: tuple[float, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "max": self.max,
            "mean": self.mean,
            "argmax": list(self.argmax),
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class ResidualReport:
    identities: tuple[IdentityResult, ...]
    grid: dict
    fingerprint: str
    version: str = __version__
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.identities)

    def __getitem__(self, key: str) -> IdentityResult:
        for r in self.identities:
            if r.id == key:
                return r
        raise KeyError(key)

    def ids(self) -> list[str]:
        return [r.id for r in self.identities]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "fingerprint": self.fingerprint,
            "grid": self.grid,
            "context": self.context,
            "pass": self.passed,
            "identities": [r.to_dict() for r in self.identities],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ResidualReport":
        rows = tuple(
            IdentityResult(r["id"], _num(r["max"]), _num(r["mean"]), tuple(_num(x) for x in r["argmax"]), _num(r["tolerance"]))
            for r in d["identities"]
        )
        return cls(rows, d["grid"], d["fingerprint"], d["version"], d.get("context", {}))

    @classmethod
    def from_json(cls, text: str) -> "ResidualReport":
        return cls.from_dict(json.loads(text))


def _num(x) -> float:
    return float("nan") if x is None else float(x)


def run_suite(ctx: DeformationContext, grid: Grid, *, tolerances: dict[str, float] | None = None,
              default_tol: float | None = None, threads: int = 1, shape_scale: float = 1.0,
              fingerprint: str | None = None) -> ResidualReport:
    """Evaluate every applicable identity on ``grid`` and summarize."""
    patch: SurfacePatch = ctx.patch
    if default_tol is None:
        default_tol = ODE_TOL if patch.meta.get("ode") else ANALYTIC_TOL
    tolerances = dict(tolerances or {})
    unknown = set(tolerances) - set(DESCRIPTIONS)
    if unknown:
        raise KeyError(f"unknown identity ids: {sorted(unknown)}")
    u, v = grid.points()
    patch.check_contains(u, v)
    res = map_chunks(lambda a, b: _residual_chunk(ctx, a, b, shape_scale), u, v, threads)
    rows = []
    for key in identity_ids(ctx):
        r = res[key]
        i = int(np.argmax(r)) if np.all(np.isfinite(r)) else int(np.argmax(~np.isfinite(r)))
        rows.append(IdentityResult(
            key, float(r[i]), float(np.mean(r)), (float(u[i]), float(v[i])),
            float(tolerances.get(key, default_tol)),
        ))
    context = {
        "chart": patch.chart.short_name,
        "domain": list(patch.domain),
        "mode": ctx.mode,
        "c": ctx.c,
        "K": ctx.K,
        "consistent": ctx.consistent,
        "K_deviation": ctx.K_deviation,
    }
    if ctx.mode == "constant_K" and not ctx.consistent:
        context["skipped"] = list(CLAIM_IDS)
    return ResidualReport(
        tuple(rows),
        {"nu": grid.nu, "nv": grid.nv},
        fingerprint or patch.fingerprint,
        __version__,
        context,
    )


# -- field tables ------------------------------------------------------------------

REPORT_COLUMNS = ("u", "v", "Theta", "K", "normgradh2", "detA", "Ktilde16", "Ktilde18")


def field_table(ctx: DeformationContext, grid: Grid, threads: int = 1) -> dict[str, np.ndarray]:
    """Per-point fields in row-major grid order."""
    u, v = grid.points()
    ctx.patch.check_contains(u, v)

    def chunk(a, b):
        fj = frame_jets(ctx.patch, a, b)
        df = deformed_frame(ctx, (a, b), fj=fj)
        return {
            "u": a,
            "v": b,
            "Theta": fj.Theta.value,
            "K": fj.K_int,
            "normgradh2": fj.norm_grad_h2,
            "detA": np.linalg.det(np.moveaxis(values(fj.A), (0, 1), (-2, -1))),
            "Ktilde16": df.ktilde_lemma(),
            "Ktilde18": df.ktilde_closed_form(),
        }

    return map_chunks(chunk, u, v, threads)


# -- serialization -----------------------------------------------------------------

def fmt(x: float) -> str:
    """17 significant digits; non-finite values as null."""
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "null"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float, np.floating, np.integer)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def table_csv(table: dict[str, np.ndarray], columns=REPORT_COLUMNS) -> str:
    lines = [",".join(columns)]
    for row in zip(*(table[c] for c in columns)):
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def table_json(table: dict[str, np.ndarray], columns=REPORT_COLUMNS) -> str:
    rows = [{c: float(x) for c, x in zip(columns, row)} for row in zip(*(table[c] for c in columns))]
    return dumps({"columns": list(columns), "rows": rows})
