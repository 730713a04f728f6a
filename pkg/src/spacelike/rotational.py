"""Rotationally symmetric graphs t = h(r) of constant Gaussian curvature.

The profile ODE is never written down by hand.  At each evaluation the
second derivative h'' is found by root-finding so that the curvature
reported by the generic surface kernel equals the target, and (h, h') are
advanced with an embedded Dormand-Prince 5(4) pair.  Many shooting runs are
integrated side by side, each with its own step size.

A smooth axis forces Theta = -1 and det A = h''(0)^2 >= 0 there, while the
Gauss equation gives det A = -(K + 1); hence axis starts need K < -1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import BPoly

from . import jets
from .ambient import POLAR
from .surface import SurfacePatch, frame_jets, induced_metric_jets
from .tensors import gauss_curvature

AXIS_EPS = 1e-3
AXIS_LIMIT = 1e-3  # inward runs stop here: the polar chart ends at r = 0
ROOT_TOL = 1e-10
MAX_H2 = 1e8
MIN_STEP = 1e-9
MIN_SPACING = 1e-4  # closer samples make Hermite data ill-conditioned
ATOL = 1e-10


class NoRoot(ValueError):
    """No h'' gives the target curvature: constant-K continuation is impossible."""


class InadmissibleStart(ValueError):
    pass


# -- pointwise curvature ------------------------------------------------------------

def curvature_given_h2(r, h, h1, h2) -> np.ndarray:
    """Gaussian curvature of the graph t = h(r) over polar H^2 with local data.

    The graph is built from the local jet h + h1 (r'-r) + h2 (r'-r)^2 / 2 and
    passed through the same induced-metric kernel the surface frames use.
    Entries with 1 - h1^2 <= 0 raise unless the inputs are arrays, in which
    case they come back as NaN.
    """
    r, h, h1, h2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, h, h1, h2)))
    finite = np.isfinite(r) & np.isfinite(h) & np.isfinite(h1) & np.isfinite(h2)
    bad = ~finite | ~(1.0 - h1 * h1 > 0) | ~(r > 0)
    if np.any(bad) and r.ndim == 0:
        raise NoRoot(f"non-spacelike profile data h' = {float(h1)} at r = {float(r)}")
    h1s = np.where(bad, 0.0, h1)
    rs = np.where(bad, 1.0, r)
    U = jets.jet_var("u", rs)
    V = jets.jet_var("v", np.zeros_like(rs))
    t = jets.lift((np.where(bad, 0.0, h), h1s, np.where(bad, 0.0, h2), np.zeros_like(rs)), U)
    g = induced_metric_jets(POLAR, [U, V, t])
    k = gauss_curvature(g)
    return np.where(bad, np.nan, k)


def _solve_h2_batch(r, h, h1, K_target) -> np.ndarray:
    """Vectorised solve_h2; NaN marks entries with no admissible root."""
    r, h, h1 = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (r, h, h1))
    Kt = np.broadcast_to(np.asarray(K_target, dtype=float), r.shape)
    n = r.size
    # the kernel loses about eps / (r^2 (1 - h'^2)) to cancellation near the axis
    # and near the light cone
    with np.errstate(divide="ignore", invalid="ignore"):
        tol = ROOT_TOL + 1e-14 * (1.0 + np.abs(Kt)) / (np.minimum(np.abs(r), 1.0) ** 2 * (1.0 - h1 * h1))
    # K is affine in h''; probe the bracket [0, 1] in one batched call
    k = curvature_given_h2(np.tile(r, 2), np.tile(h, 2), np.tile(h1, 2), np.repeat([0.0, 1.0], n))
    k0, k1 = k[:n], k[n:]
    slope = k1 - k0
    flat = np.abs(slope) <= 1e-14 * (1.0 + np.abs(k0))
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(flat, 0.0, (Kt - k0) / np.where(flat, 1.0, slope))
    root = np.where(flat & (np.abs(k0 - Kt) > tol), np.nan, root)
    root = np.where(np.abs(root) > MAX_H2, np.nan, root)
    for _ in range(2):
        ok = np.isfinite(root)
        kr = curvature_given_h2(r, h, h1, np.where(ok, root, 0.0))
        err = kr - Kt
        done = ~ok | (np.abs(err) <= tol) | flat
        if np.all(done):
            break
        # secant correction; a second pass verifies it
        root = np.where(done, root, root - err / np.where(flat, 1.0, slope))
    else:
        ok = np.isfinite(root)
        kr = curvature_given_h2(r, h, h1, np.where(ok, root, 0.0))
        root = np.where(np.abs(kr - Kt) <= tol, root, np.nan)
    return root


def solve_h2(r: float, h: float, h1: float, K_target: float) -> float:
    """h'' such that the rotational graph has curvature K_target at r."""
    if not 1.0 - h1 * h1 > 0:
        raise NoRoot(f"non-spacelike data h' = {h1} at r = {r}")
    root = float(_solve_h2_batch(r, h, h1, K_target)[0])
    if not math.isfinite(root):
        raise NoRoot(f"no h'' with K = {K_target} at r = {r}, h' = {h1}")
    return root


# -- starts and profiles ------------------------------------------------------------

@dataclass(frozen=True)
class AxisStart:
    """Smooth start on the axis with h''(0) = a = sqrt(-(K+1))."""


@dataclass(frozen=True)
class AnnulusStart:
    r0: float
    h0: float
    v0: float


def axis_parameter(K_target: float) -> float:
    """h''(0) for a smooth axis; rejects K >= -1."""
    if K_target > -1.0:
        raise InadmissibleStart(
            f"axis start impossible for K = {K_target}: on a smooth axis Theta = -1 and "
            f"det A = h''(0)^2 >= 0, but the Gauss equation forces det A = -(K+1) = {-(K_target + 1):.6g} < 0"
        )
    if K_target == -1.0:
        return 0.0
    return math.sqrt(-(K_target + 1.0))


@dataclass
class RotProfile:
    K_target: float
    r: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    d2h: np.ndarray
    length: np.ndarray  # signed radial arclength measured from the start radius
    start: object
    breakdown_inner: float | None = None
    breakdown_outer: float | None = None
    end_inner: str = ""
    end_outer: str = ""
    K_error_max: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def breakdown_radius(self) -> float | None:
        if self.breakdown_outer is not None:
            return self.breakdown_outer
        return self.breakdown_inner

    @property
    def radial_length(self) -> float:
        """Integral of sqrt(1 - h'^2) dr over the computed range."""
        return float(self.length[-1] - self.length[0])

    @property
    def r_range(self) -> tuple[float, float]:
        return float(self.r[0]), float(self.r[-1])

    def diagnostics(self) -> dict:
        return {
            "K_target": self.K_target,
            "start": _start_dict(self.start),
            "r_min": self.r_range[0],
            "r_max": self.r_range[1],
            "breakdown_radius": self.breakdown_radius,
            "breakdown_inner": self.breakdown_inner,
            "breakdown_outer": self.breakdown_outer,
            "end_inner": self.end_inner,
            "end_outer": self.end_outer,
            "radial_length": self.radial_length,
            "K_error_max": self.K_error_max,
            "samples": int(self.r.size),
        }


def _start_dict(start) -> dict:
    if isinstance(start, AnnulusStart):
        return {"kind": "annulus", "r0": start.r0, "h0": start.h0, "v0": start.v0}
    return {"kind": "axis"}


# -- batched Dormand-Prince 5(4) -----------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class _Run:
    r: list
    y: list  # rows (h, h', length)
    d2h: list
    end: str = ""
    breakdown: float | None = None


def _rhs(r, y, K_target, sgn):
    h, w = y[0], y[1]
    h2 = _solve_h2_batch(r, h, w, K_target)
    dl = np.sqrt(np.maximum(1.0 - w * w, 0.0))
    out = np.array([w, h2, dl])
    out[:, ~(np.abs(w) < 1.0)] = np.nan
    return out


def integrate(r0, y0, K_target, r_end, *, atol: float = ATOL, max_step: float = 0.05,
              first_step: float = 1e-3, min_step: float = MIN_STEP, max_iter: int = 200000) -> list[_Run]:
    """Integrate several profiles from (r0[i], y0[:, i]) towards r_end[i].

    ``y`` rows are (h, h', length).  Each run stops at r_end, or is declared
    broken down when a step below ``min_step`` still fails (no admissible h'',
    loss of spacelikeness or an error estimate that cannot be met).
    """
    r = np.asarray(r0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    r_end = np.broadcast_to(np.asarray(r_end, dtype=float), r.shape).copy()
    sgn = np.sign(r_end - r)
    K = np.broadcast_to(np.asarray(K_target, dtype=float), r.shape).copy()
    step = np.full(r.shape, first_step)
    k_first = _rhs(r, y, K, sgn)
    runs = [_Run([r[i]], [y[:, i].copy()], [k_first[1, i]]) for i in range(r.size)]
    active = np.isfinite(k_first).all(axis=0) & (sgn != 0)
    for i in np.flatnonzero(~active):
        runs[i].end = "breakdown" if sgn[i] != 0 else "reached_end"
        runs[i].breakdown = float(r[i]) if sgn[i] != 0 else None
    k1 = k_first
    it = 0
    while np.any(active) and it < max_iter:
        it += 1
        idx = np.flatnonzero(active)
        ra, ya, sa, Ka = r[idx], y[:, idx], sgn[idx], K[idx]
        hstep = np.minimum(np.minimum(step[idx], max_step), np.abs(r_end[idx] - ra)) * sa
        ks = [k1[:, idx]]
        for s in range(1, 7):
            yi = ya + hstep * sum(_A[s][j] * ks[j] for j in range(s))
            ks.append(_rhs(ra + _C[s] * hstep, yi, Ka, sa))
        y5 = ya + hstep * sum(_B5[j] * ks[j] for j in range(7))
        y4 = ya + hstep * sum(_B4[j] * ks[j] for j in range(7))
        err = np.max(np.abs(y5[:2] - y4[:2]), axis=0) / atol
        finite = np.isfinite(y5).all(axis=0) & np.isfinite(ks[6]).all(axis=0) & np.isfinite(err)
        accept = finite & (err <= 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(finite, 0.9 * np.power(np.maximum(err, 1e-12), -0.2), 0.5)
        fac = np.clip(fac, 0.2, 5.0)
        fac = np.where(finite, fac, 0.5)
        new_step = np.abs(hstep) * fac
        for n, i in enumerate(idx):
            if accept[n]:
                r[i] = ra[n] + hstep[n]
                if abs(r[i] - r_end[i]) <= 1e-14 * max(1.0, abs(r_end[i])):
                    r[i] = r_end[i]
                y[:, i] = y5[:, n]
                k1[:, i] = ks[6][:, n]
                run = runs[i]
                run.r.append(r[i])
                run.y.append(y[:, i].copy())
                run.d2h.append(ks[6][1, n])
                if r[i] == r_end[i]:
                    active[i] = False
                    run.end = "reached_end"
                step[i] = max(new_step[n], min_step)
            elif abs(hstep[n]) <= min_step:
                active[i] = False
                runs[i].end = "breakdown"
                runs[i].breakdown = float(ra[n])
            else:
                step[i] = max(new_step[n], min_step)
    for i in np.flatnonzero(active):
        runs[i].end = "max_iter"
    return runs


def _thin(r: np.ndarray, spacing: float = MIN_SPACING) -> np.ndarray:
    """Indices of an increasing subsequence with gaps >= spacing, keeping both ends."""
    keep = [0]
    for i in range(1, r.size):
        if r[i] - r[keep[-1]] >= spacing:
            keep.append(i)
    if keep[-1] != r.size - 1:
        if len(keep) > 1:
            keep[-1] = r.size - 1
        else:
            keep.append(r.size - 1)
    return np.array(keep)


def _inner_end(run: _Run) -> str:
    if run.end == "reached_end" and run.r[-1] <= AXIS_LIMIT * (1 + 1e-12):
        return "axis"
    return run.end


def _profile_from_runs(K_target, start, inner: _Run | None, outer: _Run | None) -> RotProfile:
    parts_r, parts_y, parts_d2 = [], [], []
    if inner is not None:
        parts_r.append(np.array(inner.r[::-1]))
        parts_y.append(np.array(inner.y[::-1]))
        parts_d2.append(np.array(inner.d2h[::-1]))
    if outer is not None:
        skip = 1 if inner is not None else 0
        parts_r.append(np.array(outer.r[skip:]))
        parts_y.append(np.array(outer.y[skip:]).reshape(-1, 3))
        parts_d2.append(np.array(outer.d2h[skip:]))
    r = np.concatenate(parts_r)
    y = np.concatenate(parts_y)
    d2 = np.concatenate(parts_d2)
    keep = _thin(r)
    r, y, d2 = r[keep], y[keep], d2[keep]
    return RotProfile(
        K_target=float(K_target), r=r, h=y[:, 0], dh=y[:, 1], d2h=d2, length=y[:, 2], start=start,
        breakdown_inner=inner.breakdown if inner is not None and inner.end == "breakdown" else None,
        breakdown_outer=outer.breakdown if outer is not None and outer.end == "breakdown" else None,
        end_inner=_inner_end(inner) if inner is not None else "axis",
        end_outer=outer.end if outer is not None else "",
    )


def shoot_many(starts: Sequence, K_target, r_span=(AXIS_LIMIT, 5.0), *, max_step: float = 0.05,
               atol: float = ATOL, check: bool = True) -> list[RotProfile]:
    """Shoot several profiles at once.

    ``K_target`` is a scalar or one value per start.  Annulus starts are
    integrated inward to ``max(r_span[0], AXIS_LIMIT)`` and outward to
    ``r_span[1]``; axis starts begin at r = AXIS_EPS from the series
    h = a r^2 / 2.
    """
    Ks = np.broadcast_to(np.asarray(K_target, dtype=float), (len(starts),))
    r_lo = max(float(r_span[0]), AXIS_LIMIT)
    r_hi = float(r_span[1])
    r0, y0, ends, owner = [], [], [], []
    for n, (st, K) in enumerate(zip(starts, Ks)):
        if isinstance(st, AnnulusStart):
            if not abs(st.v0) < 1.0:
                raise InadmissibleStart(f"|h'(r0)| = {abs(st.v0)} is not spacelike")
            if not r_lo <= st.r0 <= r_hi:
                raise InadmissibleStart(f"r0 = {st.r0} outside r_span ({r_lo}, {r_hi})")
            for end, side in ((r_lo, "in"), (r_hi, "out")):
                r0.append(st.r0)
                y0.append((st.h0, st.v0, 0.0))
                ends.append(end)
                owner.append((n, side))
        else:
            a = axis_parameter(float(K))
            r0.append(AXIS_EPS)
            y0.append((0.5 * a * AXIS_EPS**2, a * AXIS_EPS, 0.0))
            ends.append(r_hi)
            owner.append((n, "out"))
    Kper = np.array([Ks[n] for n, _ in owner])
    runs = integrate(np.array(r0), np.array(y0).T, Kper, np.array(ends), atol=atol, max_step=max_step)
    grouped: dict[int, dict] = {}
    for (n, side), run in zip(owner, runs):
        grouped.setdefault(n, {})[side] = run
    profiles = []
    for n, st in enumerate(starts):
        sides = grouped[n]
        prof = _profile_from_runs(Ks[n], st, sides.get("in"), sides.get("out"))
        if isinstance(st, AxisStart):
            prof.end_inner = "axis"
        profiles.append(prof)
    if check:
        for prof in profiles:
            if prof.r.size >= 4:
                prof.K_error_max = profile_to_patch(prof).meta["K_error_bound"]
    return profiles


def shoot(start, K_target: float, r_span=(AXIS_LIMIT, 5.0), *, max_step: float = 0.05,
          atol: float = ATOL) -> RotProfile:
    """Shoot one constant-K profile; see :func:`shoot_many`."""
    return shoot_many([start], K_target, r_span, max_step=max_step, atol=atol)[0]


# -- patches and files ----------------------------------------------------------------

@dataclass(frozen=True)
class _ProfileHeight:
    poly: BPoly

    def __call__(self, U, V):
        r = U.value
        d = [self.poly(r, nu=k) for k in range(4)]
        return jets.lift(d, U)


def profile_to_patch(profile: RotProfile, r_range=None, theta_range=(0.0, 1.0)) -> SurfacePatch:
    """Polar-chart patch t = h(r) through a quintic Hermite interpolant of the samples.

    The interpolant matches h, h' and h'' at every sample.  The patch's
    ``meta`` records the largest |K - K_target| at the samples
    (``K_error_bound``) and at the midpoints between them
    (``K_interp_error``).  Midpoint errors grow near a breakdown, where h''
    is unbounded.
    """
    if profile.r.size < 4:
        raise ValueError("profile_to_patch needs at least 4 samples")
    r = profile.r
    order = np.argsort(r)
    r = r[order]
    keep = np.concatenate([[True], np.diff(r) > 0])
    r = r[keep]
    data = np.stack([profile.h[order][keep], profile.dh[order][keep], profile.d2h[order][keep]], axis=1)
    poly = BPoly.from_derivatives(r, data)
    lo, hi = (float(r[0]), float(r[-1])) if r_range is None else (float(r_range[0]), float(r_range[1]))
    if lo < r[0] - 1e-12 or hi > r[-1] + 1e-12 or not lo < hi:
        raise ValueError(f"r_range ({lo}, {hi}) not inside the sampled range ({r[0]}, {r[-1]})")
    source = f"rotational K={profile.K_target!r} start={_start_dict(profile.start)} samples={r.size}"
    patch = SurfacePatch(
        POLAR, (lo, hi, float(theta_range[0]), float(theta_range[1])),
        (lambda U, V: U, lambda U, V: V, _ProfileHeight(poly)),
        source=source, label=f"rotational K={profile.K_target}",
    )
    sel = (r >= lo) & (r <= hi)
    rs = r[sel]
    probe = np.concatenate([rs, 0.5 * (rs[1:] + rs[:-1])])
    k = np.abs(frame_jets(patch, probe, np.full_like(probe, theta_range[0])).K_int - profile.K_target)
    patch.meta["K_error_bound"] = float(np.max(k[: rs.size]))
    patch.meta["K_interp_error"] = float(np.max(k[rs.size:])) if rs.size > 1 else 0.0
    return patch


def profile_k_check(profile: RotProfile) -> np.ndarray:
    """Pointwise curvature at the stored samples (r, h, h', h'')."""
    return curvature_given_h2(profile.r, profile.h, profile.dh, profile.d2h)


def write_profile(profile: RotProfile, csv_path) -> Path:
    """Write the CSV (r, h, dh, K_check) and its JSON sidecar; returns the sidecar path."""
    csv_path = Path(csv_path)
    k = profile_k_check(profile)
    lines = ["r,h,dh,K_check"]
    for row in zip(profile.r, profile.h, profile.dh, k):
        lines.append(",".join(f"{x:.17g}" for x in row))
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(json.dumps(_jsonable(profile.diagnostics()), indent=2, sort_keys=True) + "\n")
    return sidecar


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float):
        return float(f"{obj:.17g}") if math.isfinite(obj) else None
    return obj
