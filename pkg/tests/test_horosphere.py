import numpy as np
import pytest

from hopfch2 import linalg as la
from hopfch2.config import PreconditionError
from hopfch2.frames import ModelParams
from hopfch2.horosphere import (DEFAULT_NULL, horosphere_patch, horosphere_points, ray_directions,
                                ray_roots, run_oracle)


@pytest.fixture(scope="module")
def box(rng):
    return np.column_stack([rng.uniform(1.0, 1.3, 50), rng.uniform(-0.3, 0.3, 50), rng.uniform(0, 0.6, 50)])


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(9)


def test_ray_root_closed_form(box):
    # r = 1, level 1, n = (1, 1, 0): |<zeta, n>|^2 = 1 gives rho = 2 cos a cos b / (1 + cos^2 a).
    d, _ = ray_directions(box)
    rho, crossings = ray_roots(d, 1.0, 1.0)
    ca, cb = np.cos(box[:, 0]), np.cos(box[:, 1])
    assert np.allclose(rho, 2 * ca * cb / (1 + ca**2), atol=1e-13)
    assert np.all(crossings >= 1)


@pytest.mark.parametrize("r,level", [(0.5, 0.5), (1.0, 1.0), (2.0, 3.0)])
def test_points_on_level_set_with_exact_tangents(box, r, level):
    n = np.asarray(DEFAULT_NULL, dtype=complex)
    zeta, tan = horosphere_points(box, r, level)
    assert np.allclose(la.form_norm2(zeta), -r**2, atol=1e-10)
    assert np.allclose(np.abs(la.herm_inner(zeta, n)), level, atol=1e-10)
    h = 1e-6
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        fd = (horosphere_points(box + step, r, level)[0] - horosphere_points(box - step, r, level)[0]) / (2 * h)
        assert np.allclose(fd, tan[:, k], atol=1e-7)


def test_unreachable_level_drops_rays():
    d, _ = ray_directions(np.array([[1.2, 0.0, 0.0]]))
    rho, crossings = ray_roots(d, 1.0, 1e-3)
    assert np.isnan(rho[0]) and crossings[0] == 0
    with pytest.raises(PreconditionError, match="no ray"):
        horosphere_patch(ModelParams.borderline_params(), (2, 2, 2), level=1e-3)


def test_partial_window_reports_dropped():
    patch = horosphere_patch(ModelParams.borderline_params(), (3, 2, 2), level=1.0,
                             window=((1.0, 1.6), (-0.3, 0.3), (0.0, 0.6)))
    # cos a cos b shrinks the root towards the centre; a = 1.6 > pi/2 has no positive root
    assert patch.dropped.any() and not patch.dropped.all()
    assert np.all(np.isnan(patch.frames[patch.dropped]))


def test_preconditions():
    with pytest.raises(PreconditionError, match="borderline"):
        horosphere_patch(ModelParams(1.0, 0.5))
    with pytest.raises(PreconditionError, match="positive"):
        horosphere_patch(ModelParams.borderline_params(), level=0.0)
    with pytest.raises(PreconditionError, match="null"):
        horosphere_patch(ModelParams.borderline_params(), n=(1.0, 0.5, 0.0))


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_oracle_spectrum(r):
    rep = run_oracle(ModelParams.borderline_params(r), level=r, grid=(3, 3, 3))
    assert rep.passed, [g for g in rep.gates if not g["passed"]]
    assert rep.counts["dropped"] == 0
    assert np.allclose(rep.nodes["alpha_est"], 2 / r, atol=1e-6)
    assert np.allclose(rep.nodes["eig_1"], 1 / r, atol=1e-6)


def test_oracle_sigma_is_a_single_point():
    rep = run_oracle(grid=(3, 3, 3))
    assert np.allclose(rep.sigma_centroid, [1, 0], atol=1e-8)
    assert rep.gate("sigma_variance")["max"] < 1e-12
