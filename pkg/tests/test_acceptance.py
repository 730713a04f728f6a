"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line; the lines are printed together
at the end of the pytest run (see ``conftest.pytest_terminal_summary``).
Thresholds are the required ones; criteria that do not hold fail.
"""

import contextlib
import io
import time

import numpy as np
import pytest

from spacelike import corpus, suite
from spacelike.ambient import DISK
from spacelike.cli import main
from spacelike.deform import DeformationContext, deformed_frame, ktilde_of_s
from spacelike.rotational import AXIS_LIMIT, AnnulusStart, AxisStart, InadmissibleStart, shoot, shoot_many
from spacelike.specfile import build_patch, parse_spec
from spacelike.surface import Grid, SurfacePatch
from spacelike.tensors import values

from conftest import record

CORPUS_IDS = ("eq1", "eq2", "eq4", "eq6", "eq7", "eq9", "eq14", "eq15", "lemma3", "eq17", "eq18")
ROT_SPEC = "chart = polar\ndomain = 0.4 0.95 0 1\nrotational = -0.5 annulus 1 0 0.2\n"
SWEEP_R0 = (0.5, 1.0, 1.5, 2.0, 2.5)
SWEEP_V0 = (0.1, 0.3, 0.5, 0.7, 0.9)


def test_criterion_1_corpus_identities(corpus_patches):
    grid = Grid(10, 10, corpus.DOMAIN)
    start = time.perf_counter()
    worst = {key: 0.0 for key in CORPUS_IDS}
    for patch in corpus_patches:
        rep = suite.run_suite(DeformationContext.free_c(patch, 1.0), grid)
        for key in CORPUS_IDS:
            worst[key] = max(worst[key], rep[key].max)
    elapsed = time.perf_counter() - start
    top = max(worst, key=worst.get)
    ok = len(corpus_patches) == 20 and worst[top] <= 1e-8 and elapsed <= 30.0
    record(1, ok, f"20 patches x 100 points, max residual {worst[top]:.3g} ({top}) <= 1e-8, runtime {elapsed:.1f} s <= 30 s")
    assert ok


def test_criterion_2_slice_exactness():
    dev = 0.0
    for t0 in (-2.0, 0.0, 0.7, 5.0):
        patch = SurfacePatch.slice(DISK, corpus.DOMAIN, t0)
        u, v = Grid(10, 10, corpus.DOMAIN).points()
        for c in (0.5, 1.0, 3.0):
            df = deformed_frame(DeformationContext.free_c(patch, c), (u, v))
            fj = df.fj
            dev = max(
                dev,
                np.max(np.abs(fj.Theta_value + 1)),
                np.max(np.abs(values(fj.A))),
                np.max(np.abs(fj.K_int + 1)),
                np.max(np.abs(values(df.gt) - values(fj.g))),
                np.max(np.abs(df.ktilde_lemma() + 1)),
                np.max(np.abs(df.ktilde_direct() + 1)),
            )
    ok = dev <= 1e-12
    record(2, ok, f"slices: Theta=-1, A=0, K=-1, g~=g, K~=-1 within {dev:.3g} <= 1e-12")
    assert ok


def test_criterion_3_lemma_independence(corpus_patches):
    u, v = Grid(10, 10, corpus.DOMAIN).points()
    worst = 0.0
    for patch in corpus_patches:
        for c in (0.5, 1.0, 2.5):
            df = deformed_frame(DeformationContext.free_c(patch, c), (u, v))
            worst = max(worst, float(np.max(np.abs(df.ktilde_lemma() - df.ktilde_direct()))))
    ok = worst <= 1e-7
    record(3, ok, f"|K~ lemma - K~ direct| max {worst:.3g} <= 1e-7 over the corpus")
    assert ok


@pytest.fixture(scope="module")
def rot_spec_patch():
    return build_patch(parse_spec(ROT_SPEC))


def test_criterion_4_claim_reproduction(rot_spec_patch):
    K = -0.5
    ctx = DeformationContext.constant_k(rot_spec_patch, K)
    grid = Grid(10, 10, rot_spec_patch.domain)
    rep = suite.run_suite(ctx, grid, default_tol=suite.ODE_TOL)
    df = deformed_frame(ctx, grid.points())
    kt = df.ktilde_direct()
    parts = {
        "c = 2": abs(ctx.c - 2.0) <= 1e-15 and ctx.consistent,
        f"pair Codazzi {rep['claim_codazzi'].max:.3g} <= 1e-6": rep["claim_codazzi"].max <= 1e-6,
        f"|K(g~,alpha) + 0.5| {rep['claim_kpair'].max:.3g} <= 1e-6": rep["claim_kpair"].max <= 1e-6,
        f"lambda {rep['lambda'].max:.3g} <= 1e-6": rep["lambda"].max <= 1e-6,
        f"sup K~ {kt.max():.6g} <= -1.5 + 1e-6": kt.max() <= -1.5 + 1e-6,
        f"inf |K~| {np.abs(kt).min():.6g} >= 1.49": np.abs(kt).min() >= 1.49,
    }
    ok = all(parts.values())
    detail = "; ".join(f"{name} [{'ok' if good else 'no'}]" for name, good in parts.items())
    record(4, ok, detail)
    assert ok


def _sweep(K):
    starts = [AnnulusStart(r0, 0.0, v0) for r0 in SWEEP_R0 for v0 in SWEEP_V0]
    runs = shoot_many(starts, K, (AXIS_LIMIT, 5.0))
    bad = set()
    longer = None
    for n, prof in enumerate(runs):
        broke = prof.end_outer == "breakdown" and np.isfinite(prof.breakdown_outer)
        if not broke:
            longer = longer or shoot_many(starts, K, (AXIS_LIMIT, 10.0), check=False)
            if not abs(longer[n].radial_length - prof.radial_length) <= 1e-6:
                bad.add(n)
        if prof.end_inner not in ("axis", "breakdown") or not np.isfinite(prof.radial_length):
            bad.add(n)
    return runs, bad


def test_criterion_5_nonexistence_witness():
    notes, ok = [], True
    for K in (-0.9, -0.5, 0.0):
        runs, bad = _sweep(K)
        ok &= not bad and len(runs) == 25
        n_break = sum(p.end_outer == "breakdown" for p in runs)
        notes.append(f"K={K}: {n_break}/25 break down, {25 - len(bad)}/25 admissible")
        try:
            shoot(AxisStart(), K)
            ok = False
            notes.append(f"axis K={K} not rejected")
        except InadmissibleStart as exc:
            ok &= "det A = -(K+1)" in str(exc)
    axis = shoot(AxisStart(), -1.5, (AXIS_LIMIT, 5.0))
    ok &= axis.r_range[1] == 5.0 and axis.K_error_max <= 1e-6
    notes.append(f"axis K=-1.5 reaches r={axis.r_range[1]:g}, K_error_max {axis.K_error_max:.3g} <= 1e-6")
    record(5, ok, "; ".join(notes) + "; axis starts rejected for K > -1")
    assert ok


def test_criterion_6_monotonicity():
    K = -0.5
    s = np.linspace(0.0, 10.0, 1001)
    kt = ktilde_of_s(K, 1.0 / (K + 1.0), s)
    d = np.diff(kt)
    ok = bool(np.all(d < 0))
    record(6, ok, f"K~(s) on [0, 10]: {np.sum(d < 0)}/{d.size} decreasing steps; K~(0) = {kt[0]:.6g}, K~(10) = {kt[-1]:.6g}")
    assert ok


def test_criterion_7_sensitivity(corpus_patches):
    grid = Grid(10, 10, corpus.DOMAIN)
    low6 = low14 = np.inf
    for patch in corpus_patches:
        rep = suite.run_suite(DeformationContext.free_c(patch, 1.0), grid, shape_scale=1.01)
        low6, low14 = min(low6, rep["eq6"].max), min(low14, rep["eq14"].max)
    ok = low6 > 1e-4 and low14 > 1e-4
    record(7, ok, f"A scaled by 1.01: smallest per-patch max eq6 {low6:.3g}, eq14 {low14:.3g} > 1e-4")
    assert ok


def _cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def test_criterion_8_determinism(tmp_path):
    spec = tmp_path / "corpus0.spec"
    spec.write_text(f"chart = disk\ndomain = -0.5 0.5 -0.5 0.5\ngraph = {corpus.load_sources()[0]}\n")
    outputs = {}
    for cmd in (["verify"], ["report", "-o", "-"], ["report", "-o", "-", "--format", "json"]):
        seen = set()
        for threads in ("1", "4", "1", "3"):
            code, out = _cli([cmd[0], str(spec), *cmd[1:], "--grid", "20x20", "--threads", threads])
            assert code == 0
            seen.add(out)
        outputs[" ".join(cmd)] = len(seen)
    ok = all(n == 1 for n in outputs.values())
    record(8, ok, "byte-identical outputs over runs and 1/3/4 threads: " + ", ".join(f"{k} [{'ok' if n == 1 else 'differs'}]" for k, n in outputs.items()))
    assert ok
