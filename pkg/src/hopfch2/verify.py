"""Numerical verification of Hopf hypersurface identities on frame fields.

A frame field maps parameter points (..., 3) to U(2,1) matrices (..., 3, 3).
Along each parameter direction d the Maurer-Cartan form is sampled by
central differences with step ``h``; the resulting algebra elements X_d
give the pulled-back forms. The shape operator A in the frame basis
(e1, e2, e3) then solves

    omega^4_j(X_d) = sum_k A_jk eta^k(X_d),     d = 1, 2, 3,

and every per-point identity (Hopf condition, constant alpha, the
Codazzi consequence on lambda and nu, characteristic directions, Ricci
tensor, Gauss-map images) is evaluated from A and the form values.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linalg as la
from .config import DEFAULT_GATES, RunConfig
from .curves import contact_defect
from .frames import FormValues, ModelParams, UnitaryFrame, align_fiber_phase, extract_forms, gauss_minus, gauss_plus

FrameField = Callable[[np.ndarray], np.ndarray]

# Nodes per work unit; fixed so results do not depend on the thread count.
CHUNK = 64


def adapted_tangents(field: FrameField, pts, params: ModelParams, h: float, centre=None):
    """Maurer-Cartan values and forms along the three parameter directions.

    Returns ``(X, forms)`` with X of shape (N, 3, 3, 3), indexed
    [node, direction], and forms batched the same way. Stencil frames are
    put into the e2 gauge of the centre frame before differencing.
    """
    pts = np.asarray(pts, dtype=float)
    u = field(pts) if centre is None else np.asarray(centre, dtype=complex)
    inv = la.frame_inverse(u)
    xs = []
    for d in range(3):
        step = np.zeros(3)
        step[d] = h
        up = align_fiber_phase(field(pts + step), u)
        um = align_fiber_phase(field(pts - step), u)
        xs.append(la.project_algebra(inv @ (up - um) / (2 * h)))
    x = np.stack(xs, axis=-3)
    return x, extract_forms(x, params)


@dataclass
class ShapeData:
    """Shape operator and derived quantities, batched over nodes."""

    A: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    alpha_est: np.ndarray
    m: np.ndarray
    eigvec: np.ndarray
    cond: np.ndarray
    residuals: dict = field(default_factory=dict)


def _block_eigen(a):
    """Closed-form eigenpairs of the symmetric (e1, e2) block, lambda >= nu."""
    p, q, b = a[..., 0, 0], a[..., 1, 1], a[..., 0, 1]
    mean = 0.5 * (p + q)
    rad = np.hypot(0.5 * (p - q), b)
    lam, nu = mean + rad, mean - rad
    # Eigenvector of lam from whichever row is better conditioned.
    v1 = np.stack([b, lam - p], axis=-1)
    v2 = np.stack([lam - q, b], axis=-1)
    use1 = np.linalg.norm(v1, axis=-1) >= np.linalg.norm(v2, axis=-1)
    v = np.where(use1[..., None], v1, v2)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    v = np.where(nrm > 0, v / np.where(nrm > 0, nrm, 1), np.array([1.0, 0.0]))
    return lam, nu, v


def shape_operator(forms: FormValues, params: ModelParams, cond_max: float = 1e8) -> ShapeData:
    eta = forms.eta_triple  # [node, d, k]
    omega = forms.omega4  # [node, d, j]
    cond = np.linalg.cond(eta)
    good = np.isfinite(cond) & (cond < cond_max)
    at = np.full(eta.shape, np.nan)
    if np.any(good):
        at[good] = np.linalg.solve(eta[good], omega[good])
    a = np.swapaxes(at, -1, -2)
    asym = 0.5 * (a + np.swapaxes(a, -1, -2))
    lam, nu, vec = _block_eigen(asym)
    alpha_est = asym[..., 2, 2]
    c = params.c
    res = {
        "eta4": np.max(np.abs(forms.eta4), axis=-1),
        "hopf_w43": np.max(np.abs(forms.om43 - params.alpha * forms.eta3), axis=-1),
        "symmetry": np.max(np.abs(a - np.swapaxes(a, -1, -2)), axis=(-2, -1)),
        "w_row": np.maximum(np.abs(asym[..., 2, 0]), np.abs(asym[..., 2, 1])),
        "hopf_identity": np.abs(lam * nu - 0.5 * (lam + nu) * alpha_est - c),
        "split_product": (lam - alpha_est / 2) * (nu - alpha_est / 2),
        "degenerate": ~good,
    }
    return ShapeData(asym, lam, nu, alpha_est, np.trace(asym, axis1=-2, axis2=-1), vec, cond, res)


_PAIRS = ((0, 1), (0, 2), (1, 2))


def kappa_dependence(forms: FormValues):
    """Largest |kappa_1 ^ kappa_2|(X_a, X_b) over direction pairs, for each sign."""
    out = []
    for k1, k2 in ((forms.kp1, forms.kp2), (forms.km1, forms.km2)):
        vals = [np.abs(k1[..., a] * k2[..., b] - k1[..., b] * k2[..., a]) for a, b in _PAIRS]
        out.append(np.max(np.stack(vals, axis=-1), axis=-1))
    return out[0], out[1]


def characteristic_vectors(shape: ShapeData, params: ModelParams):
    """Unit v+ and v- in the (e1, e2, e3) basis.

    With e1' the lambda-eigendirection and phi e1' = J e1' its rotation,
    v(+/-) = +/- cos(phi) e1' + (r lambda - sin(phi)) phi e1'.
    """
    a, b = shape.eigvec[..., 0], shape.eigvec[..., 1]
    e1 = np.stack([a, b, np.zeros_like(a)], axis=-1)
    je1 = np.stack([-b, a, np.zeros_like(a)], axis=-1)
    s, c = np.sin(params.phi), np.cos(params.phi)
    coef = (params.r * shape.lam - s)[..., None]
    vs = []
    for sign in (1, -1):
        v = sign * c * e1 + coef * je1
        vs.append(v / np.linalg.norm(v, axis=-1, keepdims=True))
    return vs[0], vs[1]


def _plane_angle(a1, a2, b1, b2):
    """Principal angle between the planes span(a1, a2) and span(b1, b2) in R^3."""
    na = np.cross(a1, a2)
    nb = np.cross(b1, b2)
    na = na / np.linalg.norm(na, axis=-1, keepdims=True)
    nb = nb / np.linalg.norm(nb, axis=-1, keepdims=True)
    sin = np.linalg.norm(np.cross(na, nb), axis=-1)
    cos = np.abs(np.sum(na * nb, axis=-1))
    return np.arctan2(sin, cos)


def characteristic_check(shape: ShapeData, forms: FormValues, params: ModelParams):
    """Null-form residuals of v+- and their alignment with the leaves.

    The leaf {s = const} is spanned by the t and tau tangents, whose frame
    components are the eta-triples of directions 1 and 2; it should contain
    v+ and W. Likewise {t = const} should contain v- and W.
    """
    vp, vm = characteristic_vectors(shape, params)
    shifted = shape.A - 0.5 * params.alpha * np.eye(3)
    null_p = np.abs(np.einsum("...i,...ij,...j->...", vp, shifted, vp))
    null_m = np.abs(np.einsum("...i,...ij,...j->...", vm, shifted, vm))
    eta = forms.eta_triple
    w = np.broadcast_to(np.array([0.0, 0.0, 1.0]), vp.shape)
    angle_p = _plane_angle(vp, w, eta[..., 1, :], eta[..., 2, :])
    angle_m = _plane_angle(vm, w, eta[..., 0, :], eta[..., 2, :])
    return {"char_null": np.maximum(null_p, null_m),
            "char_angle_plus": angle_p, "char_angle_minus": angle_m}


@dataclass
class RicciData:
    S: np.ndarray
    residual_w: np.ndarray
    residual_perp: np.ndarray


def ricci_check(shape: ShapeData, params: ModelParams) -> RicciData:
    """S = 5c I - 3c W W^T + m A - A^2 and its pseudo-Einstein residuals.

    The residuals measure the distance from SW = 2c W and SX = 6c X on W-perp.
    """
    c = params.c
    a = shape.A
    pw = np.zeros((3, 3))
    pw[2, 2] = 1.0
    s = 5 * c * np.eye(3) - 3 * c * pw + shape.m[..., None, None] * a - a @ a
    col = lambda k: s[..., :, k]  # noqa: E731
    basis = np.eye(3)
    rw = np.linalg.norm(col(2) - 2 * c * basis[2], axis=-1)
    rp = np.maximum(np.linalg.norm(col(0) - 6 * c * basis[0], axis=-1),
                    np.linalg.norm(col(1) - 6 * c * basis[1], axis=-1))
    return RicciData(s, rw, rp)


@dataclass
class SigmaReport:
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    roundtrip: np.ndarray
    defect: np.ndarray
    variance_plus: float
    variance_minus: float


def _max_variance(values, valid, axis):
    """Largest mean squared deviation over slices at fixed index along ``axis``."""
    v = np.moveaxis(values, axis, 0)
    m = np.moveaxis(valid, axis, 0)
    worst = 0.0
    for i in range(v.shape[0]):
        pts = v[i][m[i]]
        if len(pts) > 1:
            dev = pts - pts.mean(axis=0)
            worst = max(worst, float(np.mean(np.sum(np.abs(dev) ** 2, axis=-1))))
    return worst


def sigma_maps(patch, h: float) -> SigmaReport:
    """Gauss-map images of the patch frames compared against the input curves.

    The contact defect of the recovered curves uses central differences of
    sphere_chart(g+) along s and sphere_chart(g-) along t.
    """
    params = patch.params
    valid = ~patch.excluded
    frames = UnitaryFrame(np.where(valid[..., None, None], patch.frames, np.eye(3)), params.r)
    sp = la.sphere_chart(gauss_plus(frames, params), tol=1e-8)
    sm = la.sphere_chart(gauss_minus(frames, params), tol=1e-8)
    pts = patch.points()
    mu1, _ = patch.curve1.evaluate(pts[..., 0])
    mu2, _ = patch.curve2.evaluate(pts[..., 1])
    roundtrip = np.maximum(np.linalg.norm(sp - mu1, axis=-1), np.linalg.norm(sm - mu2, axis=-1))

    def chart(pp, sign):
        f = UnitaryFrame(patch.frame_field(pp), params.r)
        g = gauss_plus(f, params) if sign > 0 else gauss_minus(f, params)
        return la.sphere_chart(g, tol=1e-8)

    defects = []
    for axis, sign in ((0, 1), (1, -1)):
        step = np.zeros(3)
        step[axis] = h
        q = pts[valid]
        wp, wm, w0 = chart(q + step, sign), chart(q - step, sign), chart(q, sign)
        dw = (wp - wm) / (2 * h)
        defects.append(np.abs(contact_defect(la.null_lift(w0, tol=1e-8), np.concatenate(
            [np.zeros(dw.shape[:-1] + (1,)), dw], axis=-1), tol=1e-8)))
    defect = np.full(patch.shape, np.nan)
    defect[valid] = np.maximum(defects[0], defects[1])
    roundtrip = np.where(valid, roundtrip, np.nan)
    return SigmaReport(sp, sm, roundtrip, defect,
                       _max_variance(sp, valid, 0), _max_variance(sm, valid, 1))


def _near_excluded(excluded):
    """Valid nodes with an excluded grid neighbor."""
    near = np.zeros_like(excluded)
    for axis in range(excluded.ndim):
        lo = [slice(None)] * excluded.ndim
        hi = [slice(None)] * excluded.ndim
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        near[tuple(lo)] |= excluded[tuple(hi)]
        near[tuple(hi)] |= excluded[tuple(lo)]
    return near & ~excluded


NODE_FIELDS = ("eta4", "hopf_w43", "symmetry", "w_row", "alpha_est", "lam", "nu", "hopf_identity",
               "split_product", "split_signature", "kappa_plus", "kappa_minus", "char_null",
               "char_angle_plus", "char_angle_minus", "ricci_w", "ricci_perp", "cond")


def node_residuals(field: FrameField, pts, params: ModelParams, h: float, centre=None,
                   cond_max: float = 1e8) -> dict[str, np.ndarray]:
    """All per-node residuals for a batch of parameter points."""
    _, forms = adapted_tangents(field, pts, params, h, centre)
    shape = shape_operator(forms, params, cond_max)
    kp, km = kappa_dependence(forms)
    char = characteristic_check(shape, forms, params)
    ricci = ricci_check(shape, params)
    out = dict(shape.residuals)
    out.update(alpha_est=shape.alpha_est, lam=shape.lam, nu=shape.nu, cond=shape.cond,
               split_signature=np.abs(shape.residuals["split_product"]
                                      + np.cos(params.phi) ** 2 / params.r**2),
               kappa_plus=kp, kappa_minus=km, ricci_w=ricci.residual_w,
               ricci_perp=ricci.residual_perp, **char)
    return out


def map_chunks(fn, n: int, threads: int = 1):
    """Apply ``fn(index_array)`` over fixed-size chunks of range(n), in order."""
    chunks = [np.arange(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]
    if threads <= 1:
        results = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, chunks))
    keys = results[0].keys() if results else ()
    return {k: np.concatenate([r[k] for r in results]) for k in keys}


def _stats(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    return float(np.max(v)), float(np.mean(v))


def gate(name: str, value: float, threshold: float, mean: float | None = None, count: int = 0,
         extra: dict | None = None) -> dict:
    passed = bool(np.isfinite(value) and value <= threshold)
    g = {"name": name, "max": value, "mean": value if mean is None else mean,
         "threshold": threshold, "count": count, "passed": passed}
    if extra:
        g.update(extra)
    return g


@dataclass
class VerificationReport:
    params: ModelParams
    h: float
    gates: list[dict]
    nodes: dict[str, np.ndarray]
    index: np.ndarray
    counts: dict[str, int]
    informational: dict[str, float]

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates)

    def gate(self, name: str) -> dict:
        for g in self.gates:
            if g["name"] == name:
                return g
        raise KeyError(name)


def verify_patch(patch, config: RunConfig | None = None, threads: int | None = None) -> VerificationReport:
    """Run every per-node and per-patch gate on a reconstructed patch.

    Stencil centres are the stored frames, so corrupted or perturbed stored
    frames show up in the first-order gates. Nodes adjacent to excluded
    nodes are reported separately and do not fail the suite.
    """
    config = config or RunConfig()
    threads = threads or config.threads
    params = patch.params
    h = config.tolerances.h
    valid = ~patch.excluded
    near = _near_excluded(patch.excluded)
    index = np.argwhere(valid)
    pts = patch.points()[valid]
    centre = patch.frames[valid]

    def work(ids):
        return node_residuals(patch.frame_field, pts[ids], params, h, centre[ids],
                              config.tolerances.cond_max)

    nodes = map_chunks(work, len(pts), threads)
    nodes["frame_defect"] = la.frame_defect(centre)
    sig = sigma_maps(patch, h)
    nodes["sigma_roundtrip"] = sig.roundtrip[valid]
    nodes["sigma_defect"] = sig.defect[valid]
    nodes["near_excluded"] = near[valid]

    regular = ~nodes["near_excluded"] & ~nodes["degenerate"]
    thr = lambda name: config.gate(name, DEFAULT_GATES)  # noqa: E731
    gates = []
    for name in ("eta4", "hopf_w43", "symmetry", "w_row", "hopf_identity", "kappa_plus",
                 "kappa_minus", "char_null", "char_angle_plus", "char_angle_minus",
                 "sigma_roundtrip", "sigma_defect"):
        mx, mean = _stats(nodes[name][regular])
        gates.append(gate(name, mx, thr(name), mean, int(regular.sum())))
    mx, mean = _stats(nodes["frame_defect"])
    gates.append(gate("frame_validity", mx, thr("frame_validity"), mean, len(pts)))
    alpha = nodes["alpha_est"][regular]
    gates.append(gate("alpha_std", float(np.std(alpha)) if alpha.size else np.nan, thr("alpha_std"),
                      count=int(alpha.size)))
    gates.append(gate("alpha_mean", abs(float(np.mean(alpha)) - params.alpha) if alpha.size else np.nan,
                      thr("alpha_mean"), count=int(alpha.size),
                      extra={"target": params.alpha}))
    mx, mean = _stats(nodes["split_signature"][regular])
    negative = bool(np.all(nodes["split_product"][regular] < 0))
    g = gate("split_signature", mx, thr("split_signature"), mean, int(regular.sum()),
             extra={"strictly_negative": negative})
    g["passed"] = g["passed"] and negative
    gates.append(g)
    gates.append(gate("sigma_variance", max(sig.variance_plus, sig.variance_minus),
                      thr("sigma_variance")))
    n_degenerate = int(np.count_nonzero(nodes["degenerate"] & ~nodes["near_excluded"]))
    gates.append(gate("regularity", float(n_degenerate), 0.0, count=len(pts)))
    ricci_w, _ = _stats(nodes["ricci_w"][regular])
    ricci_p, _ = _stats(nodes["ricci_perp"][regular])
    informational = {"ricci_w_max": ricci_w, "ricci_perp_max": ricci_p}
    if params.phi == 0.0:
        gates.append(gate("pseudo_einstein_w", ricci_w, thr("pseudo_einstein_w")))
        gates.append(gate("pseudo_einstein_perp", ricci_p, thr("pseudo_einstein_perp")))
    if np.any(nodes["near_excluded"]):
        for name in ("eta4", "hopf_w43", "hopf_identity"):
            informational[f"near_excluded_{name}_max"] = _stats(nodes[name][nodes["near_excluded"]])[0]
    counts = {"nodes": int(np.prod(patch.shape)), "excluded": patch.n_excluded,
              "near_excluded": int(np.count_nonzero(nodes["near_excluded"])),
              "degenerate": n_degenerate, "regular": int(regular.sum())}
    return VerificationReport(params, h, gates, nodes, index, counts, informational)
