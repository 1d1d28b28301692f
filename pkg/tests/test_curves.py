import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopfch2 import linalg as la
from hopfch2.config import PreconditionError
from hopfch2.curves import (ContactCurve, LiftError, contact_defect, explicit_curve, fd_derivative,
                            great_circle_curve, hopf_map, horizontal_lift, sphere_defect,
                            twisted_circle_curve, validate)


def test_great_circle_is_legendrian():
    c = great_circle_curve(np.array([1, 1j]) / np.sqrt(2), np.array([1j, 1]) / np.sqrt(2))
    assert c.closed
    assert c.max_defect < 1e-15
    assert validate(c).admissible
    w, dw = c.evaluate(np.array([0.3, 1.9]))
    assert np.allclose(np.linalg.norm(w, axis=-1), 1)


@pytest.mark.parametrize("p,q", [([1, 0], [0.6, 0.8]), ([1, 0], [1j, 0]), ([2, 0], [0, 1])])
def test_great_circle_preconditions(p, q):
    with pytest.raises(PreconditionError):
        great_circle_curve(p, q)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_contact_defect_matches_sphere_defect(seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=2) + 1j * rng.normal(size=2)
    w /= np.linalg.norm(w)
    dw = rng.normal(size=2) + 1j * rng.normal(size=2)
    n = la.null_lift(w)
    dn = np.concatenate([[0], dw])
    assert contact_defect(n, dn) == pytest.approx(sphere_defect(w, dw), abs=1e-14)


def test_hopf_map_convention():
    assert np.allclose(hopf_map(np.array([1, 0])), [1, 0, 0])
    assert np.allclose(hopf_map(np.array([0, 1])), [-1, 0, 0])
    w = np.array([0.6, 0.8j])
    assert np.linalg.norm(hopf_map(w)) == pytest.approx(1)
    # constant along fibers
    assert np.allclose(hopf_map(np.exp(0.7j) * w), hopf_map(w))


def test_twisted_circle_defect_is_sin_squared():
    c = twisted_circle_curve(513)
    assert np.allclose(sphere_defect(c.w, c.dw), np.sin(c.t) ** 2, atol=1e-14)
    rep = validate(c)
    assert not rep.admissible
    assert any("contact defect" in why for why in rep.reasons)


def test_equator_lift_closed_form():
    c = horizontal_lift("equator", [1, 0], steps=2000)
    half = c.t / 2
    expected = np.stack([np.cos(half), np.sin(half)], axis=-1)
    assert np.max(np.abs(c.w - expected)) < 1e-8
    assert c.max_defect <= 1e-8
    # the spline between samples stays on the curve
    tm = 0.5 * (c.t[:-1] + c.t[1:])
    w, _ = c.evaluate(tm)
    assert np.max(np.abs(w - np.stack([np.cos(tm / 2), np.sin(tm / 2)], axis=-1))) < 1e-8
    assert validate(c).admissible


def test_latitude_lift():
    h = 0.4
    rho = np.sqrt(1 - h**2)
    # pick w0 with H(w0) = (rho, 0, h): |w1|^2 - |w2|^2 = rho, 2 Im w1 conj(w2) = h
    a = np.sqrt((1 + rho) / 2)
    b = np.sqrt((1 - rho) / 2)
    w0 = np.array([a, -1j * b])
    assert np.allclose(hopf_map(w0), [rho, 0, h])
    c = horizontal_lift("latitude", w0, base_params={"height": h}, steps=2000)
    assert c.max_defect < 1e-8
    assert np.allclose(hopf_map(c.w)[:, 2], h, atol=1e-8)


def test_lift_errors():
    with pytest.raises(LiftError) as info:
        horizontal_lift("equator", [1, 0], steps=10, tol_lift=1e-14)
    assert info.value.achieved > 1e-14
    with pytest.raises(PreconditionError):
        horizontal_lift("equator", [0, 1])
    with pytest.raises(PreconditionError):
        horizontal_lift("spiral", [1, 0])


def test_fd_derivative_fourth_order():
    t = np.linspace(0, 1, 101)
    w = np.stack([np.exp(1j * t), t**3 + 0j], axis=-1)
    d = fd_derivative(t, w)
    exact = np.stack([1j * np.exp(1j * t), 3 * t**2 + 0j], axis=-1)
    assert np.max(np.abs(d - exact)) < 1e-7


def test_validate_detects_slow_and_off_sphere():
    t = np.linspace(0, 1, 50)
    w = np.stack([np.ones_like(t) + 0j, np.zeros_like(t) + 0j], axis=-1)
    rep = validate(ContactCurve(t, w, np.zeros_like(w)))
    assert not rep.admissible and any("speed" in x for x in rep.reasons)
    off = explicit_curve(t, 1.01 * np.stack([np.cos(t), np.sin(t)], axis=-1) + 0j)
    rep = validate(off)
    assert any("sphere drift" in x for x in rep.reasons)


def test_curve_sample_checks():
    t = np.array([0.0, 1.0, 0.5])
    with pytest.raises(PreconditionError):
        ContactCurve(t, np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(PreconditionError):
        ContactCurve(np.arange(3.0), np.zeros((3, 3)), np.zeros((3, 3)))


def test_reparametrized_keeps_points():
    c = great_circle_curve([1, 0], [0, 1], 65)
    r = c.reparametrized(2 * c.t)
    assert np.allclose(r.w, c.w)
    assert np.allclose(r.dw, 0.5 * c.dw)
