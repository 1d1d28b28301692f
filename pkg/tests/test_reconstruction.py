import numpy as np
import pytest

from hopfch2 import linalg as la
from hopfch2.config import DegenerateError, PreconditionError
from hopfch2.curves import ContactCurve, great_circle_curve
from hopfch2.frames import ModelParams, UnitaryFrame, gauge_flow_Y, gauss_minus, gauss_pair_target, gauss_plus
from hopfch2.reconstruction import (GridSpec, build_patch, frame_from_null_pair, immersion_check,
                                    normalize_null_pair, perturb_frames)


def _constant_curve(point, n=16):
    t = np.linspace(0, 1, n)
    w = np.broadcast_to(np.asarray(point, dtype=complex), (n, 2)).copy()
    return ContactCurve(t, w, np.zeros_like(w))


@pytest.mark.parametrize("phi", [0.0, 0.5, -0.5])
def test_node_frames_are_exact(patches, phi):
    p = patches[phi]
    ok = ~p.excluded
    f = UnitaryFrame(p.frames[ok], p.params.r)
    assert np.max(la.frame_defect(f.u)) < 1e-10
    pair = la.herm_inner(gauss_plus(f, p.params), gauss_minus(f, p.params))
    assert np.max(np.abs(pair - gauss_pair_target(p.params))) < 1e-12


def test_sigma_roundtrip_to_input_curves(patches):
    p = patches[0.5]
    f = UnitaryFrame(p.frames, 1.0)
    pts = p.points()
    mu1, _ = p.curve1.evaluate(pts[..., 0])
    mu2, _ = p.curve2.evaluate(pts[..., 1])
    assert np.max(np.abs(la.sphere_chart(gauss_plus(f, p.params)) - mu1)) < 1e-9
    assert np.max(np.abs(la.sphere_chart(gauss_minus(f, p.params)) - mu2)) < 1e-9


def test_frame_field_matches_stored(patches):
    p = patches[-0.5]
    pts = p.points()[::5, ::5, ::3]
    assert np.allclose(p.frame_field(pts), p.frames[::5, ::5, ::3], atol=1e-13)


def test_gauge_collapse(rng):
    params = ModelParams(1.0, 0.3)
    mu1 = la.null_lift(np.array([0.6, 0.8j]))
    mu2 = la.null_lift(np.array([0.8, -0.6]))
    base = frame_from_null_pair(mu1, mu2, params, c1=1.0)
    ball = la.ball_chart(base.zeta)
    for theta in rng.uniform(-3, 3, size=5):
        rotated = frame_from_null_pair(mu1, mu2, params, c1=np.exp(1j * theta))
        assert np.max(np.abs(la.ball_chart(rotated.zeta) - ball)) < 1e-14
        assert np.max(np.abs(la.ball_chart(gauge_flow_Y(base, theta).zeta) - ball)) < 1e-14
    scaled = frame_from_null_pair(mu1, mu2, params, c1=np.exp(0.2))
    assert np.max(np.abs(la.ball_chart(scaled.zeta) - ball)) > 1e-3


def test_tau_neighbours_differ(patches):
    p = patches[0.0]
    assert np.min(np.abs(np.diff(p.ball, axis=2))) > 0


def test_same_curve_excludes_diagonal(circles):
    c = circles[0]
    p = build_patch(c, c, ModelParams(1.0, 0.5), GridSpec(8, 8, 4))
    diag = np.eye(8, dtype=bool)[:, :, None].repeat(4, axis=2)
    assert np.array_equal(p.excluded, diag)
    assert p.n_excluded == 32
    assert np.all(np.isnan(p.frames[p.excluded]))
    sv, flagged = immersion_check(p)
    assert np.all(np.isnan(sv[p.excluded]))
    assert not np.any(flagged & p.excluded)


def test_fully_coincident_is_empty():
    c = _constant_curve([1, 0])
    with pytest.raises(DegenerateError):
        build_patch(c, c, ModelParams(), GridSpec(4, 4, 4))


def test_constant_curves_flagged_everywhere():
    p = build_patch(_constant_curve([1, 0]), _constant_curve([0, 1]), ModelParams(1.0, 0.2), GridSpec(4, 4, 4))
    assert p.n_excluded == 0
    _, flagged = immersion_check(p)
    assert np.all(flagged)


def test_interior_nodes_regular(patches):
    sv, flagged = immersion_check(patches[0.5])
    assert not np.any(flagged)
    assert np.min(sv) > 1e-3


def test_borderline_rejected(circles):
    params = ModelParams.borderline_params()
    with pytest.raises(PreconditionError, match="oracle horosphere"):
        build_patch(circles[0], circles[1], params)
    with pytest.raises(PreconditionError, match="oracle horosphere"):
        normalize_null_pair(np.array([1, 1, 0]), np.array([1, 0, 1]), params)


def test_coincident_lines_rejected():
    n = la.null_lift(np.array([1.0, 0.0]))
    with pytest.raises(DegenerateError):
        normalize_null_pair(n, (2 + 1j) * n, ModelParams())
    with pytest.raises(PreconditionError):
        normalize_null_pair(n, la.null_lift(np.array([0.0, 1.0])), ModelParams(), c1=0.0)


def test_perturb_frames(patches):
    p = patches[0.5]
    q = perturb_frames(p, 1e-3, seed=1)
    assert q is not p and q.frames is not p.frames
    assert np.max(la.frame_defect(q.frames)) < 1e-12
    delta = np.max(np.abs(q.frames - p.frames))
    assert 1e-4 < delta < 1e-1
    assert np.array_equal(perturb_frames(p, 1e-3, seed=1).frames, q.frames)


def test_grid_ranges(circles):
    p = build_patch(circles[0], circles[1], ModelParams(), GridSpec(4, 5, 6, s_range=(0, 1),
                                                                    t_range=(1, 2), tau_range=(-0.5, 0.5)))
    assert p.shape == (4, 5, 6)
    assert p.s[0] == 0 and p.s[-1] == 1 and p.tau[-1] == 0.5
    full = build_patch(circles[0], circles[1], ModelParams(), GridSpec(8, 8, 2))
    # closed curves are sampled without the duplicated endpoint
    assert full.s[-1] < 2 * np.pi - 0.1
