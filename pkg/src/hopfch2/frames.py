"""U(2,1) as a frame bundle over anti-de Sitter space.

A matrix ``u`` in U(2,1) with columns (zeta/r, e2, e3) determines the real
orthonormal frame (e0, ..., e4) at zeta via e0 = (i/r) zeta, e2 = i e1 and
e4 = i e3. One-forms on the group are handled through their values on Lie
algebra elements X = u^{-1} u'; :func:`extract_forms` turns such an X into
the canonical forms eta^0..eta^4, the connection forms omega^4_j, omega^2_1
and the kappa combinations used by the Gauss-map analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg as la
from .config import DEFAULT_TOLERANCES, DegenerateError, PreconditionError

HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class ModelParams:
    """Ambient scale ``r`` and angle ``phi``; alpha = (2/r) sin(phi), c = -1/r^2."""

    r: float = 1.0
    phi: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "phi", float(self.phi))
        if not self.r > 0:
            raise PreconditionError(f"r must be positive, got {self.r}")
        if not (-HALF_PI < self.phi <= HALF_PI):
            raise PreconditionError(f"phi must lie in (-pi/2, pi/2], got {self.phi}")

    @property
    def alpha(self) -> float:
        return 2.0 / self.r * np.sin(self.phi)

    @property
    def c(self) -> float:
        return -1.0 / self.r**2

    @property
    def borderline(self) -> bool:
        return self.phi == HALF_PI

    @classmethod
    def borderline_params(cls, r: float = 1.0) -> "ModelParams":
        return cls(r=r, phi=HALF_PI)


@dataclass(frozen=True)
class UnitaryFrame:
    """A (possibly batched) U(2,1) matrix read as a frame over H^5_1."""

    u: np.ndarray
    r: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", np.asarray(self.u, dtype=complex))

    def check(self, tol: float = DEFAULT_TOLERANCES.tol_frame) -> "UnitaryFrame":
        defect = la.frame_defect(self.u)
        if np.any(defect > tol):
            raise PreconditionError(f"not a U(2,1) frame (defect {np.max(defect):.3e})")
        return self

    @property
    def zeta(self):
        return self.r * self.u[..., :, 0]

    @property
    def e0(self):
        return 1j * self.u[..., :, 0]

    @property
    def e1(self):
        return -1j * self.u[..., :, 1]

    @property
    def e2(self):
        return self.u[..., :, 1]

    @property
    def e3(self):
        return self.u[..., :, 2]

    @property
    def e4(self):
        return 1j * self.u[..., :, 2]


def real_frame(f: UnitaryFrame):
    """(zeta, e0, e1, e2, e3, e4) of a frame."""
    return f.zeta, f.e0, f.e1, f.e2, f.e3, f.e4


def identity_frame(r: float = 1.0) -> UnitaryFrame:
    return UnitaryFrame(np.eye(3, dtype=complex), r)


def _as_matrix(f):
    return f.u if isinstance(f, UnitaryFrame) else np.asarray(f, dtype=complex)


def maurer_cartan_fd(path: Callable[[float], object], t: float, h: float = DEFAULT_TOLERANCES.h,
                     tol: float = DEFAULT_TOLERANCES.tol_frame):
    """Central-difference value of u^{-1} du/dt along a frame-valued path."""
    u = _as_matrix(path(t))
    up = _as_matrix(path(t + h))
    um = _as_matrix(path(t - h))
    for m in (u, up, um):
        if np.any(la.frame_defect(m) > tol):
            raise PreconditionError("path contains an invalid frame")
    return la.project_algebra(la.frame_inverse(u) @ (up - um) / (2 * h))


@dataclass(frozen=True)
class FormValues:
    """Values of the named one-forms on algebra element(s) X."""

    eta0: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    eta3: np.ndarray
    eta4: np.ndarray
    eta21: np.ndarray
    eta31: np.ndarray
    eta32: np.ndarray
    eta43: np.ndarray
    om41: np.ndarray
    om42: np.ndarray
    om43: np.ndarray
    om21: np.ndarray
    kp1: np.ndarray
    kp2: np.ndarray
    kp3: np.ndarray
    km1: np.ndarray
    km2: np.ndarray
    km3: np.ndarray

    @property
    def eta_triple(self):
        """(eta^1, eta^2, eta^3) stacked on a trailing axis."""
        return np.stack([self.eta1, self.eta2, self.eta3], axis=-1)

    @property
    def omega4(self):
        """(omega^4_1, omega^4_2, omega^4_3) stacked on a trailing axis."""
        return np.stack([self.om41, self.om42, self.om43], axis=-1)

    def kappa(self, sign: int):
        if sign > 0:
            return np.stack([self.kp1, self.kp2, self.kp3], axis=-1)
        return np.stack([self.km1, self.km2, self.km3], axis=-1)


def extract_forms(x, params: ModelParams, tol: float = DEFAULT_TOLERANCES.tol_algebra) -> FormValues:
    """Evaluate the canonical, connection and kappa forms on X in u(2,1).

    Kappa forms at the borderline angle reduce to the single-Gauss-map
    kappa_1, kappa_2, kappa_3 (plus and minus coincide).
    """
    x = np.asarray(x, dtype=complex)
    scale = 1.0 + np.max(np.abs(x), axis=(-2, -1))
    if np.any(la.algebra_defect(x) > tol * scale):
        raise PreconditionError("extract_forms needs an element of u(2,1)")
    r = params.r
    x11, x21, x31 = x[..., 0, 0], x[..., 1, 0], x[..., 2, 0]
    x22, x32, x33 = x[..., 1, 1], x[..., 2, 1], x[..., 2, 2]
    eta0 = r * x11.imag
    eta1 = -r * x21.imag
    eta2 = r * x21.real
    eta3 = r * x31.real
    eta4 = r * x31.imag
    eta21 = x22.imag
    eta31 = x32.imag
    eta32 = x32.real
    eta43 = x33.imag
    om41 = -eta32
    om42 = eta31
    om43 = eta43 - eta0 / r
    om21 = eta21 - eta0 / r
    s, c = np.sin(params.phi), np.cos(params.phi)
    kp1 = om41 - (s * eta1 + c * eta2) / r
    km1 = om41 - (s * eta1 - c * eta2) / r
    kp2 = om42 - (s * eta2 - c * eta1) / r
    km2 = om42 - (s * eta2 + c * eta1) / r
    kp3 = om43 - 2.0 / r * (s * eta3 + c * eta4)
    km3 = om43 - 2.0 / r * (s * eta3 - c * eta4)
    return FormValues(eta0, eta1, eta2, eta3, eta4, eta21, eta31, eta32, eta43,
                      om41, om42, om43, om21, kp1, kp2, kp3, km1, km2, km3)


def gauss_plus(f: UnitaryFrame, params: ModelParams):
    """g+ = e0 - (sin(phi) e3 + cos(phi) e4)."""
    if abs(params.phi) >= HALF_PI:
        raise PreconditionError("borderline angle: use gauss_borderline")
    return f.e0 - (np.sin(params.phi) * f.e3 + np.cos(params.phi) * f.e4)


def gauss_minus(f: UnitaryFrame, params: ModelParams):
    """g- = e0 - (sin(phi) e3 - cos(phi) e4)."""
    if abs(params.phi) >= HALF_PI:
        raise PreconditionError("borderline angle: use gauss_borderline")
    return f.e0 - (np.sin(params.phi) * f.e3 - np.cos(params.phi) * f.e4)


def gauss_borderline(f: UnitaryFrame):
    """g = e0 - e3, a null lift of -W when alpha = 2/r."""
    return f.e0 - f.e3


def gauss_pair_target(params: ModelParams) -> complex:
    """<g+, g-> for every frame: -2 cos(phi) exp(-i phi)."""
    return -2.0 * np.cos(params.phi) * np.exp(-1j * params.phi)


def gauge_flow_X(f: UnitaryFrame, theta: float) -> UnitaryFrame:
    """Move the base point along its S^1 fiber: u -> exp(i theta / r) u."""
    return UnitaryFrame(np.exp(1j * theta / f.r) * f.u, f.r)


def gauge_flow_Y(f: UnitaryFrame, theta: float) -> UnitaryFrame:
    """Rotate e1 toward e2: u -> u diag(1, exp(i theta), 1)."""
    d = np.array([1.0, np.exp(1j * theta), 1.0])
    return UnitaryFrame(f.u * d, f.r)


def align_fiber_phase(u, ref):
    """Right-multiply by diag(1, e^{i theta}, 1) so <e2, e2_ref> is real positive.

    Used to put frames of a finite-difference stencil into one continuous
    e2 gauge; the shape-operator data do not depend on that gauge.
    """
    u = np.array(u, dtype=complex)
    ph = la.herm_inner(u[..., :, 1], np.asarray(ref)[..., :, 1])
    ph = np.where(np.abs(ph) > 0, np.conj(ph) / np.where(ph == 0, 1, np.abs(ph)), 1.0)
    u[..., :, 1] *= ph[..., None]
    return u


def _horizontal_basis(zeta, r: float):
    """Real orthonormal basis (b1, i b1, b2, i b2) of the complex line orthogonal to zeta."""
    zeta = np.asarray(zeta, dtype=complex)
    # Start from the standard basis vectors least aligned with zeta.
    c1 = zeta / r
    cand = np.broadcast_to(np.eye(3, dtype=complex), zeta.shape[:-1] + (3, 3))
    out = []
    for k in (1, 2):
        v = cand[..., k, :]
        v = v + la.herm_inner(v, c1)[..., None] * c1
        for q in out:
            v = v - la.herm_inner(v, q)[..., None] * q
        v = v / np.sqrt(la.form_norm2(v))[..., None]
        out.append(v)
    b1, b2 = out
    return np.stack([b1, 1j * b1, b2, 1j * b2], axis=-2)


def adapted_frame(zeta, tangent_basis, params: ModelParams, orientation: int = 1,
                  normal_hint=None, tol: float = 1e-9) -> UnitaryFrame:
    """Adapted lift at ``zeta`` of the hypersurface with the given tangents.

    ``tangent_basis`` has shape (..., 3, 3): three lifted tangent vectors in
    C^3 at zeta. Their horizontal parts must span a real 3-space; e4 is the
    unit horizontal vector orthogonal to it, e3 = -i e4, and e2 completes
    the frame. The sign of e4 follows ``orientation`` (positive
    determinant of (t1, t2, t3, e4) in the horizontal basis) unless
    ``normal_hint`` is given, in which case e4 has positive real inner
    product with the hint.
    """
    zeta = np.asarray(zeta, dtype=complex)
    tangents = np.asarray(tangent_basis, dtype=complex)
    r = params.r
    basis = _horizontal_basis(zeta, r)
    # Real coordinates of each tangent in the horizontal basis; the
    # vertical parts (along zeta and i zeta) drop out automatically.
    coords = la.real_inner(tangents[..., :, None, :], basis[..., None, :, :])
    _, sv, vh = np.linalg.svd(coords)
    scale = np.maximum(sv[..., :1], 1e-300)
    if np.any(sv[..., 2] <= tol * scale[..., 0]):
        raise DegenerateError("tangent basis has horizontal rank < 3")
    n = vh[..., 3, :]
    if normal_hint is not None:
        hint = la.real_inner(np.asarray(normal_hint)[..., None, :], basis)
        sign = np.sign(np.sum(n * hint, axis=-1))
    else:
        full = np.concatenate([coords, n[..., None, :]], axis=-2)
        sign = np.sign(np.linalg.det(full)) * orientation
    sign = np.where(sign == 0, 1.0, sign)
    n = n * sign[..., None]
    e4 = np.einsum("...k,...kj->...j", n, basis)
    e3 = -1j * e4
    e2 = la.orthonormal_completion(zeta, e3, r)
    u = np.stack([zeta / r, e2, e3], axis=-1)
    return UnitaryFrame(u, r)


def _wedge(a_u, a_v, b_u, b_v):
    """(a ^ b)(du, dv) from the values of a and b on du and dv."""
    return a_u * b_v - a_v * b_u


def structure_residuals(family: Callable[[float, float], np.ndarray], a: float, b: float,
                        params: ModelParams, h: float = DEFAULT_TOLERANCES.h):
    """Finite-difference residuals of d gamma + gamma ^ gamma and of
    d eta^4 + omega^4_k ^ eta^k on a two-parameter frame family.

    Returns ``(mc_residual, eta4_residual)``. The exterior derivative of a
    one-form theta on (d/da, d/db) is d/da theta(d/db) - d/db theta(d/da),
    computed by nested central differences.
    """

    def gamma(aa, bb, direction):
        if direction == 0:
            return maurer_cartan_fd(lambda s: family(s, bb), aa, h)
        return maurer_cartan_fd(lambda s: family(aa, s), bb, h)

    ga = gamma(a, b, 0)
    gb = gamma(a, b, 1)
    d_gb_da = (gamma(a + h, b, 1) - gamma(a - h, b, 1)) / (2 * h)
    d_ga_db = (gamma(a, b + h, 0) - gamma(a, b - h, 0)) / (2 * h)
    dgamma = d_gb_da - d_ga_db
    mc = dgamma + (ga @ gb - gb @ ga)
    mc_res = float(np.max(np.abs(mc)))

    fa = extract_forms(ga, params)
    fb = extract_forms(gb, params)
    eta4_b = lambda aa: extract_forms(gamma(aa, b, 1), params).eta4  # noqa: E731
    eta4_a = lambda bb: extract_forms(gamma(a, bb, 0), params).eta4  # noqa: E731
    deta4 = (eta4_b(a + h) - eta4_b(a - h)) / (2 * h) - (eta4_a(b + h) - eta4_a(b - h)) / (2 * h)
    rhs = (_wedge(fa.om41, fb.om41, fa.eta1, fb.eta1)
           + _wedge(fa.om42, fb.om42, fa.eta2, fb.eta2)
           + _wedge(fa.om43, fb.om43, fa.eta3, fb.eta3))
    return mc_res, float(abs(deta4 + rhs))
