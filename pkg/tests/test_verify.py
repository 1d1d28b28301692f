import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopfch2.config import RunConfig, Tolerances
from hopfch2.frames import ModelParams, extract_forms
from hopfch2.reconstruction import GridSpec, build_patch
from hopfch2.verify import (CHUNK, _block_eigen, _near_excluded, characteristic_check, characteristic_vectors,
                            map_chunks, ricci_check, shape_operator, verify_patch)


def algebra_with_forms(eta, omega, r):
    """u(2,1) element X with eta^1..4 = eta and omega^4_1..3 = omega (eta^0 = 0)."""
    x = np.zeros(np.shape(eta)[:-1] + (3, 3), dtype=complex)
    x[..., 1, 0] = (eta[..., 1] - 1j * eta[..., 0]) / r
    x[..., 2, 0] = (eta[..., 2] + 1j * eta[..., 3]) / r
    x[..., 2, 1] = -omega[..., 0] + 1j * omega[..., 1]
    x[..., 2, 2] = 1j * omega[..., 2]
    x[..., 0, 1] = np.conj(x[..., 1, 0])
    x[..., 0, 2] = np.conj(x[..., 2, 0])
    x[..., 1, 2] = -np.conj(x[..., 2, 1])
    return x


def hopf_shape(lam, nu, alpha, angle):
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    a = np.zeros((3, 3))
    a[:2, :2] = rot @ np.diag([lam, nu]) @ rot.T
    a[2, 2] = alpha
    return a


def synthetic_forms(a, params, seed=0, eta4=0.0):
    rng = np.random.default_rng(seed)
    eta = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    omega = eta @ a.T
    full = np.concatenate([eta, np.full((3, 1), eta4)], axis=-1)
    x = algebra_with_forms(full, omega, params.r)
    return extract_forms(x[None], params)


def test_forms_helper_roundtrip():
    params = ModelParams(1.3, 0.2)
    eta = np.array([[0.1, 0.2, 0.3, 0.4]])
    omega = np.array([[0.5, -0.6, 0.7]])
    f = extract_forms(algebra_with_forms(eta, omega, params.r), params)
    assert np.allclose([f.eta1, f.eta2, f.eta3, f.eta4], eta.T)
    assert np.allclose([f.om41, f.om42, f.om43], omega.T)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_block_eigen(p, q, b):
    m = np.array([[p, b], [b, q]])
    lam, nu, v = _block_eigen(m)
    ev = np.linalg.eigvalsh(m)
    assert lam >= nu
    assert lam == pytest.approx(ev[1], abs=1e-9) and nu == pytest.approx(ev[0], abs=1e-9)
    assert np.allclose(m @ v, lam * v, atol=1e-8)


def test_shape_operator_recovers_hopf_data():
    params = ModelParams(1.0, 0.5)
    alpha, c = params.alpha, params.c
    lam = 1.5
    nu = (c + lam * alpha / 2) / (lam - alpha / 2)
    a = hopf_shape(lam, nu, alpha, 0.4)
    forms = synthetic_forms(a, params)
    shape = shape_operator(forms, params)
    assert np.allclose(shape.A[0], a, atol=1e-12)
    assert shape.lam[0] == pytest.approx(lam) and shape.nu[0] == pytest.approx(nu)
    assert shape.alpha_est[0] == pytest.approx(alpha)
    for key in ("eta4", "hopf_w43", "symmetry", "w_row", "hopf_identity"):
        assert shape.residuals[key][0] < 1e-12, key
    assert shape.residuals["split_product"][0] == pytest.approx(-np.cos(params.phi) ** 2)
    char = characteristic_check(shape, forms, params)
    assert char["char_null"][0] < 1e-12


def test_non_hopf_shape_is_detected():
    params = ModelParams(1.0, 0.5)
    a = hopf_shape(1.5, -0.3, params.alpha, 0.2)
    a[0, 2] = a[2, 0] = 0.1
    shape = shape_operator(synthetic_forms(a, params, eta4=0.01), params)
    assert shape.residuals["w_row"][0] == pytest.approx(0.1)
    assert shape.residuals["eta4"][0] == pytest.approx(0.01)
    assert shape.residuals["hopf_identity"][0] > 1e-3


def test_degenerate_tangents_flagged():
    params = ModelParams()
    eta = np.array([[1.0, 0, 0, 0], [2.0, 0, 0, 0], [0, 0, 1.0, 0]])
    x = algebra_with_forms(eta, np.zeros((3, 3)), 1.0)
    shape = shape_operator(extract_forms(x[None], params), params)
    assert shape.residuals["degenerate"][0]
    assert np.all(np.isnan(shape.A))


def test_ricci_pseudo_einstein_at_alpha_zero():
    params = ModelParams(1.0, 0.0)
    a = hopf_shape(2.0, -0.5, 0.0, 0.7)
    shape = shape_operator(synthetic_forms(a, params), params)
    ric = ricci_check(shape, params)
    assert ric.residual_w[0] < 1e-12 and ric.residual_perp[0] < 1e-12
    other = ModelParams(1.0, 0.5)
    lam = 1.5
    nu = (other.c + lam * other.alpha / 2) / (lam - other.alpha / 2)
    shape = shape_operator(synthetic_forms(hopf_shape(lam, nu, other.alpha, 0.0), other), other)
    ric = ricci_check(shape, other)
    assert max(ric.residual_w[0], ric.residual_perp[0]) > 1e-2


def test_gate_thresholds_scale_with_h():
    cfg = RunConfig(tolerances=Tolerances(h=2e-4))
    assert cfg.gate("eta4") == pytest.approx(4e-6)
    assert cfg.gate("sigma_roundtrip") == pytest.approx(1e-9)
    assert RunConfig(tolerances=Tolerances(h=1e-5)).gate("eta4") == pytest.approx(1e-6)
    assert RunConfig(gates={"eta4": 1e-7}).gate("eta4") == pytest.approx(1e-7)


def test_near_excluded():
    ex = np.zeros((4, 4, 1), dtype=bool)
    ex[1, 1, 0] = True
    near = _near_excluded(ex)
    assert near.sum() == 4
    assert near[0, 1, 0] and near[2, 1, 0] and near[1, 0, 0] and near[1, 2, 0]
    assert not near[1, 1, 0]


def test_map_chunks_order_and_threads():
    fn = lambda ids: {"v": ids * 2.0}  # noqa: E731
    n = 3 * CHUNK + 5
    one = map_chunks(fn, n, 1)["v"]
    assert np.array_equal(one, 2.0 * np.arange(n))
    assert np.array_equal(map_chunks(fn, n, 4)["v"], one)


def test_verify_reports_near_excluded_separately(circles):
    c = circles[0]
    p = build_patch(c, c, ModelParams(1.0, 0.5), GridSpec(8, 8, 4))
    rep = verify_patch(p)
    assert rep.counts["excluded"] == 32
    assert rep.counts["near_excluded"] > 0
    assert rep.counts["regular"] == rep.counts["nodes"] - rep.counts["excluded"] \
        - rep.counts["near_excluded"] - rep.counts["degenerate"]
    assert "near_excluded_eta4_max" in rep.informational


def test_verify_h_override_rescales_thresholds(patches):
    rep = verify_patch(patches[0.5], RunConfig(tolerances=Tolerances(h=2e-4)))
    assert rep.gate("eta4")["threshold"] == pytest.approx(4e-6)
    assert rep.h == 2e-4
    assert rep.passed


def test_pseudo_einstein_only_at_phi_zero(reports):
    names = [g["name"] for g in reports[0.5].gates]
    assert "pseudo_einstein_w" not in names
    assert "pseudo_einstein_w" in [g["name"] for g in reports[0.0].gates]


@pytest.mark.parametrize("phi", [0.0, 0.5, -0.5])
def test_patches_regular_and_passing(reports, phi):
    rep = reports[phi]
    failing = [g["name"] for g in rep.gates if not g["passed"]]
    assert not failing
    assert rep.counts["degenerate"] == 0


def test_characteristic_vectors_worked_example():
    # phi = 0, r = 1, lambda = 2, nu = -1/2: v+- = +-e1 + 2 J e1 and <A v, v> = 2 - 2 = 0.
    params = ModelParams(1.0, 0.0)
    shape = shape_operator(synthetic_forms(hopf_shape(2.0, -0.5, 0.0, 0.0), params), params)
    vp, vm = characteristic_vectors(shape, params)
    assert np.allclose(vp[0], np.array([1, 2, 0]) / np.sqrt(5))
    assert np.allclose(vm[0], np.array([-1, 2, 0]) / np.sqrt(5))
    for v in (vp[0], vm[0]):
        assert v @ shape.A[0] @ v == pytest.approx(0.0, abs=1e-12)
