import numpy as np
import pytest
from hypothesis import given, strategies as st

from spacelike.ambient import DISK
from spacelike.deform import (
    ConditioningError,
    DeformationContext,
    InconsistentContext,
    curve_lengths,
    deformed_connection,
    deformed_frame,
    deformed_gradient,
    deformed_metric,
    hessian_det_identity,
    ktilde_closed_form,
    ktilde_lemma,
    ktilde_of_s,
    pair_curvature_and_bound,
)
from spacelike.surface import Grid, SurfacePatch, frame_at
from spacelike.tensors import values

from conftest import ROT_K

SQUARE = (-0.5, 0.5, -0.5, 0.5)

# K~ for c = 1.7, from sympy
FROZEN = [
    ("u/5", (0.1, 0.2), -0.9940340816763792),
    ("u^2/10 + 3*u*v/10", (0.1, -0.2), -1.0023048981991538),
]


def _graph(expr):
    return SurfacePatch.graph(DISK, SQUARE, expr)


class TestContext:
    def test_free_c(self, wavy_patch):
        ctx = DeformationContext.free_c(wavy_patch, 2.0)
        assert ctx.mode == "free_c" and ctx.K is None

    def test_rejects_nonpositive_c(self, wavy_patch):
        with pytest.raises(ValueError):
            DeformationContext.free_c(wavy_patch, 0.0)

    def test_constant_k_range(self, slice_patch):
        with pytest.raises(ValueError):
            DeformationContext.constant_k(slice_patch, -1.0)

    def test_inconsistent(self, wavy_patch):
        ctx = DeformationContext.constant_k(wavy_patch, -0.5)
        assert not ctx.consistent and ctx.K_deviation > 0.1
        with pytest.raises(InconsistentContext):
            ctx.require_constant_k()

    def test_free_mode_has_no_claims(self, wavy_patch):
        with pytest.raises(InconsistentContext):
            pair_curvature_and_bound(DeformationContext.free_c(wavy_patch, 1.0), (0.0, 0.0))

    def test_rotational_consistent(self, rot_patch):
        ctx = DeformationContext.constant_k(rot_patch, ROT_K)
        assert ctx.consistent and ctx.c == pytest.approx(2.0)

    def test_conditioning(self, wavy_patch):
        ctx = DeformationContext.free_c(wavy_patch, 1e15)
        with pytest.raises(ConditioningError):
            deformed_frame(ctx, (0.3, 0.3))


class TestFrozen:
    @pytest.mark.parametrize("expr, p, want", FROZEN, ids=["linear", "quadratic"])
    def test_ktilde(self, expr, p, want):
        ctx = DeformationContext.free_c(_graph(expr), 1.7)
        df = deformed_frame(ctx, p)
        assert df.ktilde_lemma() == pytest.approx(want, rel=1e-12)
        assert df.ktilde_direct() == pytest.approx(want, rel=1e-12)

    def test_slice_is_unchanged(self, slice_patch):
        ctx = DeformationContext.free_c(slice_patch, 3.0)
        p = (0.2, 0.1)
        np.testing.assert_allclose(deformed_metric(ctx, p), frame_at(slice_patch, p).g, rtol=1e-15)
        np.testing.assert_allclose(deformed_gradient(ctx, p), 0.0, atol=1e-15)
        assert ktilde_lemma(ctx, p) == pytest.approx(-1.0, rel=1e-12)


class TestClosedForm:
    def test_endpoints(self):
        K = -0.5
        c = 1 / (K + 1)
        assert ktilde_of_s(K, c, 0.0) == pytest.approx(K - 1)
        assert ktilde_of_s(K, c, 1e9) == pytest.approx(-(K + 1), rel=1e-6)

    def test_observed_increase(self):
        # on (-1, 0) the curvature climbs from K-1 towards -(K+1)
        K = -0.5
        s = np.linspace(0, 10, 50)
        assert np.all(np.diff(ktilde_of_s(K, 1 / (K + 1), s)) > 0)

    def test_rotational_patch(self, rot_patch):
        ctx = DeformationContext.constant_k(rot_patch, ROT_K)
        u, v = Grid(8, 8, rot_patch.domain).points()
        df = deformed_frame(ctx, (u, v))
        lemma, closed, direct = df.ktilde_lemma(), df.ktilde_closed_form(), df.ktilde_direct()
        np.testing.assert_allclose(lemma, direct, rtol=1e-10)
        np.testing.assert_allclose(closed, direct, rtol=1e-6)
        assert np.all(closed >= ROT_K - 1 - 1e-9) and np.all(closed <= -(ROT_K + 1) + 1e-9)

    def test_pair_record(self, rot_patch):
        ctx = DeformationContext.constant_k(rot_patch, ROT_K)
        u, v = Grid(6, 6, rot_patch.domain).points()
        rec = pair_curvature_and_bound(ctx, (u, v))
        np.testing.assert_allclose(rec.K_pair, ROT_K, atol=1e-5)
        assert np.max(rec.lambda_identity_residual) < 1e-5
        # the stated sup bound K~ <= K-1 does not hold on this patch
        assert np.max(rec.ktilde_bound_residual) > 0.1


class TestDefects:
    @pytest.mark.parametrize("fixture", ["wavy_patch", "polar_patch"])
    def test_all_small(self, fixture, request):
        patch = request.getfixturevalue(fixture)
        ctx = DeformationContext.free_c(patch, 1.3)
        u, v = Grid(5, 5, patch.domain).points()
        df = deformed_frame(ctx, (u, v))
        size = 1 + np.abs(df.fj.Theta_value) ** 6
        for name in ("det_ratio_defect", "gradient_defect", "shape_operator_defect",
                     "det_product_defect", "connection_defect", "connection_compatibility_defect"):
            assert np.max(np.abs(getattr(df, name)()) / size) < 1e-12, name
        r1, r2 = df.hessian_det_defects()
        assert np.max(np.abs(r1) / size) < 1e-12 and np.max(np.abs(r2) / size) < 1e-12
        assert np.max(hessian_det_identity(ctx, (u, v)) / size) < 1e-12

    def test_connection_vector_form(self, wavy_patch):
        ctx = DeformationContext.free_c(wavy_patch, 1.0)
        G = deformed_frame(ctx, (0.1, 0.2)).connection_direct()
        got = deformed_connection(ctx, (0.1, 0.2), [1.0, 0.0], [0.0, 1.0])
        np.testing.assert_allclose(got, G[:, 0, 1], rtol=1e-12, atol=1e-14)

    def test_shape_scale_breaks_shape_operator(self, wavy_patch):
        ctx = DeformationContext.free_c(wavy_patch, 1.0)
        df = deformed_frame(ctx, (0.2, 0.3), shape_scale=1.01)
        assert np.max(np.abs(df.shape_operator_defect())) > 1e-4


class TestLengths:
    def test_lengths_grow(self, wavy_patch):
        t = np.linspace(-0.4, 0.4, 41)
        lg, lt = curve_lengths(DeformationContext.free_c(wavy_patch, 2.0), t, 0.5 * t)
        assert lt > lg > 0

    def test_slice_lengths_equal(self, slice_patch):
        t = np.linspace(-0.4, 0.4, 11)
        lg, lt = curve_lengths(DeformationContext.free_c(slice_patch, 2.0), t, t)
        assert lt == pytest.approx(lg, rel=1e-15)


coef = st.floats(-0.4, 0.4)
pt = st.floats(-0.45, 0.45)


@given(coef, coef, st.floats(0.05, 5.0), pt, pt)
def test_lemma_matches_direct(a, b, c, u, v):
    ctx = DeformationContext.free_c(_graph(f"{a}*sin(u + v) + {b}*u*u*v"), c)
    df = deformed_frame(ctx, (u, v))
    assert df.ktilde_lemma() == pytest.approx(df.ktilde_direct(), rel=1e-10, abs=1e-12)
    # g~ dominates g
    ev = np.linalg.eigvalsh(np.moveaxis(values(df.gt) - values(df.fj.g), (0, 1), (-2, -1)))
    assert np.all(ev >= -1e-14)


@given(st.floats(-0.99, 0.0), st.floats(0.0, 50.0))
def test_closed_form_range(K, s):
    c = 1 / (K + 1)
    kt = ktilde_of_s(K, c, s)
    assert K - 1 - 1e-12 <= kt <= -(K + 1) + 1e-12


@given(coef, coef, pt, pt)
def test_small_c_limit(a, b, u, v):
    patch = _graph(f"{a}*u + {b}*v*v")
    df = deformed_frame(DeformationContext.free_c(patch, 1e-9), (u, v))
    assert df.ktilde_direct() == pytest.approx(float(df.K), abs=1e-7)
    assert ktilde_closed_form(DeformationContext.free_c(patch, 1e-9), (u, v)) == pytest.approx(
        ktilde_of_s(float(df.K), 1e-9, df.s), rel=1e-15)
