"""Contact (Legendrian) curves in S^3, the input data of the construction.

A curve is stored as dense samples ``(t_i, w_i, w'_i)`` together with a
descriptor of the generator that produced it. Great circles are evaluated
exactly off-sample; other curves are interpolated with a cubic Hermite
spline through the samples and their derivatives.

The contact condition for a curve w(t) in S^3 is Im <w', w> = 0 in C^2,
equivalently Re <n', i n> = 0 for its null lift n = (1, w) in C^3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import linalg as la
from .config import DEFAULT_TOLERANCES, PreconditionError

TWO_PI = 2.0 * np.pi


def contact_defect(n, dn, tol: float = DEFAULT_TOLERANCES.tol_null):
    """Re <dn/dt, i n> for a curve n(t) on the null cone.

    Only the zero set is independent of the lift: rescaling n by a constant
    lambda multiplies the value by |lambda|^2.
    """
    n = np.asarray(n, dtype=complex)
    if np.any(np.abs(la.herm_inner(n, n)) > tol * np.sum(np.abs(n) ** 2, axis=-1)):
        raise PreconditionError("contact_defect needs a null vector")
    return la.real_inner(dn, 1j * n)


def sphere_defect(w, dw):
    """Im <w', w> in C^2; equals :func:`contact_defect` of the lift (1, w)."""
    return np.imag(np.sum(np.asarray(dw) * np.conj(w), axis=-1))


def hopf_map(w):
    """Hopf projection S^3 -> S^2, (|w1|^2 - |w2|^2, 2 Re w1 conj(w2), 2 Im w1 conj(w2))."""
    w = np.asarray(w, dtype=complex)
    w1, w2 = w[..., 0], w[..., 1]
    x = w1 * np.conj(w2)
    return np.stack([np.abs(w1) ** 2 - np.abs(w2) ** 2, 2 * x.real, 2 * x.imag], axis=-1)


def fd_derivative(t, w):
    """Fourth-order finite-difference derivative of samples on a uniform grid."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=complex)
    n = len(t)
    if n < 5:
        raise PreconditionError("need at least 5 samples for fourth-order derivatives")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise PreconditionError("samples must be uniformly spaced")
    h = dt[0]
    d = np.empty_like(w)
    d[2:-2] = (w[:-4] - 8 * w[1:-3] + 8 * w[3:-1] - w[4:]) / (12 * h)
    fwd = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    off = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    d[0] = fwd @ w[:5]
    d[1] = off @ w[:5]
    d[-1] = -(fwd @ w[::-1][:5])
    d[-2] = -(off @ w[::-1][:5])
    return d


@dataclass
class ContactCurve:
    t: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    generator: dict = field(default_factory=lambda: {"type": "explicit-samples"})
    _exact: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        self.w = np.asarray(self.w, dtype=complex)
        self.dw = np.asarray(self.dw, dtype=complex)
        if self.w.shape != (len(self.t), 2) or self.dw.shape != self.w.shape:
            raise PreconditionError("samples must have shape (n, 2)")
        if np.any(np.diff(self.t) <= 0):
            raise PreconditionError("sample parameters must increase")
        self._spline = None

    @property
    def t_min(self) -> float:
        return float(self.t[0])

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def closed(self) -> bool:
        return bool(np.linalg.norm(self.w[0] - self.w[-1]) < 1e-9)

    @property
    def max_defect(self) -> float:
        return float(np.max(np.abs(sphere_defect(self.w, self.dw))))

    def evaluate(self, t):
        """(w(t), w'(t)) at arbitrary parameter values in [t_min, t_max]."""
        t = np.asarray(t, dtype=float)
        if self._exact is not None:
            return self._exact(t)
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.t, self.w, self.dw, axis=0)
        w = self._spline(t)
        # Interpolation leaves the sphere at O(h^4); pull back radially.
        w = w / np.linalg.norm(w, axis=-1, keepdims=True)
        return w, self._spline(t, 1)

    def reparametrized(self, t_new) -> "ContactCurve":
        """Same samples attached to new increasing parameters (derivatives rescaled)."""
        t_new = np.asarray(t_new, dtype=float)
        scale = np.gradient(self.t, t_new)
        return ContactCurve(t_new, self.w, self.dw * scale[:, None], {"type": "explicit-samples"})


def _unit2(v, name):
    v = np.asarray(v, dtype=complex)
    if v.shape != (2,):
        raise PreconditionError(f"{name} must be a vector in C^2")
    return v


def great_circle_curve(p, q, n_samples: int = 257, tol: float = 1e-12) -> ContactCurve:
    """w(t) = cos(t) p + sin(t) q on [0, 2 pi].

    Expanding Im <w', w> gives Im <q, p> (cos^2 t + sin^2 t) plus terms
    that vanish by orthonormality, so the circle is Legendrian iff
    <p, q> = 0 with both unit.
    """
    p = _unit2(p, "p")
    q = _unit2(q, "q")
    if abs(np.vdot(p, p).real - 1) > tol or abs(np.vdot(q, q).real - 1) > tol:
        raise PreconditionError("p and q must be unit vectors")
    if abs(np.vdot(q, p)) > tol:
        raise PreconditionError("p and q must be Hermitian-orthogonal (Re<p,q> = Im<q,p> = 0)")

    def exact(t):
        t = np.asarray(t, dtype=float)[..., None]
        return np.cos(t) * p + np.sin(t) * q, -np.sin(t) * p + np.cos(t) * q

    t = np.linspace(0.0, TWO_PI, n_samples)
    w, dw = exact(t)
    gen = {"type": "great-circle", "p": _pairs(p), "q": _pairs(q), "n_samples": int(n_samples)}
    return ContactCurve(t, w, dw, gen, _exact=exact)


def twisted_circle_curve(n_samples: int = 257) -> ContactCurve:
    """w(t) = (cos t, sin t e^{it}), a closed curve on S^3 that is not Legendrian.

    Im <w', w> = sin(t)^2, so it serves as a negative control for validation.
    """

    def exact(t):
        t = np.asarray(t, dtype=float)
        e = np.exp(1j * t)
        w = np.stack([np.cos(t) + 0j, np.sin(t) * e], axis=-1)
        dw = np.stack([-np.sin(t) + 0j, (np.cos(t) + 1j * np.sin(t)) * e], axis=-1)
        return w, dw

    t = np.linspace(0.0, TWO_PI, n_samples)
    w, dw = exact(t)
    return ContactCurve(t, w, dw, {"type": "twisted-circle", "n_samples": int(n_samples)}, _exact=exact)


def _pairs(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


# Base curves on S^2 for horizontal lifts: name -> (factory(params) -> (b, db)).
def _latitude(height: float = 0.0):
    rho = np.sqrt(max(0.0, 1.0 - height**2))

    def b(t):
        t = np.asarray(t, dtype=float)
        return np.stack([rho * np.cos(t), rho * np.sin(t), np.full_like(t, height)], axis=-1)

    def db(t):
        t = np.asarray(t, dtype=float)
        return np.stack([-rho * np.sin(t), rho * np.cos(t), np.zeros_like(t)], axis=-1)

    return b, db


def _constant(point=(1.0, 0.0, 0.0)):
    pt = np.asarray(point, dtype=float)

    def b(t):
        return np.broadcast_to(pt, np.shape(t) + (3,)).copy()

    def db(t):
        return np.zeros(np.shape(t) + (3,))

    return b, db


BASE_CURVES = {
    "equator": lambda **kw: _latitude(0.0),
    "latitude": lambda height=0.0, **kw: _latitude(float(height)),
    "constant": lambda point=(1.0, 0.0, 0.0), **kw: _constant(point),
}


class LiftError(PreconditionError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def _horizontal_velocity(w, db):
    """Horizontal vector at w whose Hopf image is db (least squares on the 2-plane)."""
    w1, w2 = w[0], w[1]
    v = np.array([-np.conj(w2), np.conj(w1)])

    def dh(d):
        x = d[0] * np.conj(w2) + w1 * np.conj(d[1])
        return np.array([2 * (d[0] * np.conj(w1)).real - 2 * (d[1] * np.conj(w2)).real,
                         2 * x.real, 2 * x.imag])

    jac = np.column_stack([dh(v), dh(1j * v)])
    coef, *_ = np.linalg.lstsq(jac, db, rcond=None)
    return (coef[0] + 1j * coef[1]) * v


def horizontal_lift(base: str | tuple[Callable, Callable], w0, steps: int = 2000,
                    t_span: tuple[float, float] = (0.0, TWO_PI), base_params: dict | None = None,
                    tol_lift: float = DEFAULT_TOLERANCES.tol_lift) -> ContactCurve:
    """Horizontal lift of a base curve on S^2 through w0, by classical RK4.

    The velocity is kept in the complex line orthogonal to w (so
    Im <w', w> = 0) and chosen to project onto the base velocity; each step
    is renormalized to the unit sphere. Sample derivatives are recomputed
    by fourth-order differences so that the recorded defect is an
    independent check of the integration.
    """
    base_params = dict(base_params or {})
    if isinstance(base, str):
        if base not in BASE_CURVES:
            raise PreconditionError(f"unknown base curve {base!r}")
        b, db = BASE_CURVES[base](**base_params)
        base_desc = {"type": base, **base_params}
    else:
        b, db = base
        base_desc = {"type": "callable"}
    w = np.asarray(w0, dtype=complex)
    if abs(np.linalg.norm(w) - 1) > DEFAULT_TOLERANCES.tol_sphere:
        raise PreconditionError("w0 must lie on S^3")
    t0, t1 = t_span
    if np.linalg.norm(hopf_map(w) - b(t0)) > tol_lift:
        raise PreconditionError("w0 does not project to base(t_min)")
    if steps < 8:
        raise LiftError("too few steps", np.inf)
    ts = np.linspace(t0, t1, steps + 1)
    dt = ts[1] - ts[0]
    out = np.empty((steps + 1, 2), dtype=complex)
    out[0] = w
    f = lambda t, y: _horizontal_velocity(y, db(t))  # noqa: E731
    for k in range(steps):
        t = ts[k]
        k1 = f(t, w)
        k2 = f(t + dt / 2, w + dt / 2 * k1)
        k3 = f(t + dt / 2, w + dt / 2 * k2)
        k4 = f(t + dt, w + dt * k3)
        w = w + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        w = w / np.linalg.norm(w)
        out[k + 1] = w
    dw = fd_derivative(ts, out)
    gen = {"type": "horizontal-lift", "base": base_desc, "w0": _pairs(w0), "steps": int(steps),
           "t_span": [float(t0), float(t1)]}
    curve = ContactCurve(ts, out, dw, gen)
    proj_err = float(np.max(np.linalg.norm(hopf_map(out) - b(ts), axis=-1)))
    achieved = max(curve.max_defect, proj_err)
    if achieved > tol_lift:
        raise LiftError(f"lift misses tolerance {tol_lift:.1e} (achieved {achieved:.3e}); "
                        "increase steps", achieved)
    return curve


def explicit_curve(t, w, generator: dict | None = None) -> ContactCurve:
    """Curve from raw samples; derivatives by fourth-order differences."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=complex)
    return ContactCurve(t, w, fd_derivative(t, w), generator or {"type": "explicit-samples"})


@dataclass(frozen=True)
class CurveReport:
    max_defect: float
    min_speed: float
    sphere_drift: float
    min_separation: float
    admissible: bool
    reasons: tuple[str, ...]

    def lines(self) -> list[str]:
        status = "admissible" if self.admissible else "INADMISSIBLE: " + "; ".join(self.reasons)
        return [f"max contact defect {self.max_defect:.3e}",
                f"min speed          {self.min_speed:.3e}",
                f"sphere drift       {self.sphere_drift:.3e}",
                f"min separation     {self.min_separation:.3e}",
                status]


def _min_separation(curve: ContactCurve, radius: float) -> float:
    """Smallest chord between samples at parameter distance >= radius.

    On closed curves the parameter distance is measured cyclically and the
    duplicated endpoint is ignored.
    """
    t, w = curve.t, curve.w
    if curve.closed:
        t, w = t[:-1], w[:-1]
    period = curve.t_max - curve.t_min
    dist = np.abs(t[:, None] - t[None, :])
    if curve.closed:
        dist = np.minimum(dist, period - dist)
    far = dist >= radius
    if not np.any(far):
        return np.inf
    chord = np.linalg.norm(w[:, None, :] - w[None, :, :], axis=-1)
    return float(np.min(chord[far]))


def validate(curve: ContactCurve, tol_contact: float = DEFAULT_TOLERANCES.tol_contact,
             speed_min: float = DEFAULT_TOLERANCES.speed_min,
             tol_sphere: float = DEFAULT_TOLERANCES.tol_sphere,
             embed_radius: float = 0.1, embed_min: float = 1e-3) -> CurveReport:
    """Local admissibility scan: contact defect, regularity, sphere drift.

    Embeddedness is only checked coarsely: samples at parameter distance
    at least ``embed_radius`` must stay ``embed_min`` apart.
    """
    defect = curve.max_defect
    speed = float(np.min(np.linalg.norm(curve.dw, axis=-1)))
    drift = float(np.max(np.abs(np.linalg.norm(curve.w, axis=-1) - 1.0)))
    sep = _min_separation(curve, embed_radius) if len(curve.t) <= 4096 else np.inf
    reasons = []
    if defect > tol_contact:
        reasons.append(f"contact defect {defect:.3e} > {tol_contact:.1e}")
    if speed < speed_min:
        reasons.append(f"speed {speed:.3e} < {speed_min:.1e}")
    if drift > tol_sphere:
        reasons.append(f"sphere drift {drift:.3e} > {tol_sphere:.1e}")
    if sep < embed_min:
        reasons.append(f"self-approach {sep:.3e} < {embed_min:.1e}")
    return CurveReport(defect, speed, drift, sep, not reasons, tuple(reasons))
