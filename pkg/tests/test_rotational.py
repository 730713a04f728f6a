import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spacelike.rotational import (
    AXIS_LIMIT,
    MIN_SPACING,
    AnnulusStart,
    AxisStart,
    InadmissibleStart,
    NoRoot,
    axis_parameter,
    curvature_given_h2,
    profile_k_check,
    profile_to_patch,
    shoot,
    shoot_many,
    solve_h2,
    write_profile,
)
from spacelike.surface import frame_jets

# closed form psi = 1 / (1 - h'^2) = -K + C sech^2 r, evaluated with mpmath
AXIS_DH = {1.0: 0.4741454532756459, 2.0: 0.563253485407351, 4.0: 0.5770920299544045}
AXIS_LENGTH = 4.2470009859345454  # K = -1.5, r from 0.001 to 5
ANNULUS_BREAKDOWN = 1.0518280648  # K = -0.5 from (1, 0, 0.2)
ANNULUS_LENGTH = 0.88052983956401  # r from 0.001 to the breakdown
POLAR_GRAPH_K = -2.0316446115806777  # t = 0.3 r^2 at r = 0.8


@pytest.fixture(scope="module")
def axis_profile():
    return shoot(AxisStart(), -1.5, (AXIS_LIMIT, 5.0))


@pytest.fixture(scope="module")
def annulus_profile():
    return shoot(AnnulusStart(1.0, 0.0, 0.2), -0.5, (AXIS_LIMIT, 2.0))


class TestPointwise:
    def test_matches_polar_graph(self):
        r = 0.8
        k = curvature_given_h2(r, 0.3 * r * r, 0.6 * r, 0.6)
        assert k == pytest.approx(POLAR_GRAPH_K, rel=1e-12)

    def test_solve_recovers_h2(self):
        r = 0.8
        assert solve_h2(r, 0.3 * r * r, 0.6 * r, POLAR_GRAPH_K) == pytest.approx(0.6, rel=1e-9)

    def test_lightlike_data(self):
        with pytest.raises(NoRoot):
            solve_h2(1.0, 0.0, 1.0, -0.5)
        with pytest.raises(NoRoot):
            curvature_given_h2(1.0, 0.0, 1.2, 0.0)

    def test_array_nan(self):
        k = curvature_given_h2(np.array([1.0, 1.0]), 0.0, np.array([0.1, 1.5]), 0.0)
        assert np.isfinite(k[0]) and np.isnan(k[1])

    @given(st.floats(0.1, 3.0), st.floats(0.05, 0.9), st.booleans(), st.floats(-3.0, 3.0))
    def test_solve_inverts_curvature(self, r, h1, flip, h2):
        # K does not depend on h'' where h' = 0, so stay away from it
        h1 = -h1 if flip else h1
        K = float(curvature_given_h2(r, 0.0, h1, h2))
        assert solve_h2(r, 0.0, h1, K) == pytest.approx(h2, rel=1e-6, abs=1e-6)


class TestStarts:
    def test_axis_parameter(self):
        assert axis_parameter(-1.5) == pytest.approx(math.sqrt(0.5))
        assert axis_parameter(-1.0) == 0.0

    @pytest.mark.parametrize("K", [-0.5, 0.0, -0.999])
    def test_axis_rejects(self, K):
        with pytest.raises(InadmissibleStart, match="det A"):
            shoot(AxisStart(), K)

    def test_annulus_lightlike(self):
        with pytest.raises(InadmissibleStart):
            shoot(AnnulusStart(1.0, 0.0, 1.0), -0.5)

    def test_annulus_outside_span(self):
        with pytest.raises(InadmissibleStart):
            shoot(AnnulusStart(6.0, 0.0, 0.0), -0.5, (AXIS_LIMIT, 5.0))


class TestAxisProfile:
    def test_reaches_end(self, axis_profile):
        assert axis_profile.end_outer == "reached_end"
        assert axis_profile.breakdown_radius is None
        assert axis_profile.r_range == (AXIS_LIMIT, 5.0)

    def test_slopes(self, axis_profile):
        patch = profile_to_patch(axis_profile)
        r = np.array(list(AXIS_DH))
        got = frame_jets(patch, r, np.zeros_like(r)).dh[0].value
        np.testing.assert_allclose(got, list(AXIS_DH.values()), rtol=1e-9)

    def test_length(self, axis_profile):
        assert axis_profile.radial_length == pytest.approx(AXIS_LENGTH, rel=1e-10)

    def test_curvature(self, axis_profile):
        assert axis_profile.K_error_max <= 1e-9
        np.testing.assert_allclose(profile_k_check(axis_profile), -1.5, atol=1e-9)


class TestAnnulusProfile:
    def test_breakdown(self, annulus_profile):
        assert annulus_profile.end_outer == "breakdown"
        assert annulus_profile.end_inner == "axis"
        assert annulus_profile.breakdown_radius == pytest.approx(ANNULUS_BREAKDOWN, abs=1e-8)

    def test_length(self, annulus_profile):
        assert annulus_profile.radial_length == pytest.approx(ANNULUS_LENGTH, rel=1e-8)

    def test_samples_thinned(self, annulus_profile):
        gaps = np.diff(annulus_profile.r)
        assert np.all(gaps > 0) and np.all(gaps[:-1] >= MIN_SPACING)

    def test_length_monotone(self, annulus_profile):
        assert np.all(np.diff(annulus_profile.length) > 0)

    def test_closed_form_invariant(self, annulus_profile):
        p = annulus_profile
        C = (1 / (1 - p.dh**2) - 0.5) * np.cosh(p.r) ** 2
        assert np.ptp(C) < 1e-8

    def test_span_independence(self, annulus_profile):
        longer = shoot(AnnulusStart(1.0, 0.0, 0.2), -0.5, (AXIS_LIMIT, 4.0))
        assert longer.radial_length == annulus_profile.radial_length


class TestBatchAndFiles:
    def test_batch_matches_single(self):
        starts = [AnnulusStart(1.0, 0.0, 0.2), AnnulusStart(0.5, 0.1, -0.3)]
        many = shoot_many(starts, [-0.5, -0.8], (0.3, 2.0))
        one = shoot(starts[1], -0.8, (0.3, 2.0))
        np.testing.assert_array_equal(many[1].r, one.r)
        np.testing.assert_array_equal(many[1].h, one.h)

    def test_refinement_reduces_interpolation_error(self):
        start = AnnulusStart(0.5, 0.0, 0.3)
        coarse = shoot(start, -1.5, (0.3, 1.5), atol=1e-5, max_step=0.2)
        fine = shoot(start, -1.5, (0.3, 1.5), atol=1e-5, max_step=0.05)
        assert coarse.end_inner == "reached_end"
        assert profile_to_patch(fine).meta["K_interp_error"] < profile_to_patch(coarse).meta["K_interp_error"]

    def test_patch_range_checked(self, rot_profile):
        with pytest.raises(ValueError):
            profile_to_patch(rot_profile, (0.5, 3.0))

    def test_write_profile(self, rot_profile, tmp_path):
        sidecar = write_profile(rot_profile, tmp_path / "prof.csv")
        rows = (tmp_path / "prof.csv").read_text().splitlines()
        assert rows[0] == "r,h,dh,K_check"
        assert len(rows) == rot_profile.r.size + 1
        r0 = [float(x) for x in rows[1].split(",")]
        assert r0[0] == rot_profile.r[0] and r0[1] == rot_profile.h[0]
        meta = json.loads(sidecar.read_text())
        assert meta["K_target"] == -0.5 and meta["start"]["kind"] == "annulus"
        assert meta["radial_length"] == rot_profile.radial_length


@settings(max_examples=6)
@given(st.floats(0.3, 1.5), st.floats(-0.6, 0.6), st.floats(-0.95, -0.05))
def test_annulus_invariant(r0, v0, K):
    # (1/(1-h'^2) + K) cosh^2 r is constant along every rotational constant-K profile
    p = shoot(AnnulusStart(r0, 0.0, v0), K, (0.2, 3.0))
    C = (1 / (1 - p.dh**2) + K) * np.cosh(p.r) ** 2
    assert np.ptp(C) <= 1e-7 * (1 + np.max(np.abs(C)))
    assert p.end_outer == "breakdown"
