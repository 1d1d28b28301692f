"""Horosphere oracle for the borderline angle phi = pi/2.

The horosphere centred at the null line through ``n`` is sampled as the
level set |<zeta, n>| = h0 on {<zeta, zeta> = -r^2}. Sample points are
found by bisection along rays zeta = r (1, rho d) / sqrt(1 - rho^2) from the
ball centre, with ray directions d = (cos a e^{ib}, sin a e^{ic}) in S^3.
Tangent vectors come from the implicit function theorem applied to the
level function, so the adapted frames carry no finite-difference error of
their own. Its shape operator should have spectrum (1/r, 1/r, 2/r).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .config import DEFAULT_ORACLE_GATES, PreconditionError, RunConfig
from .frames import ModelParams, UnitaryFrame, adapted_frame, gauss_borderline
from .verify import adapted_tangents, gate, shape_operator

log = logging.getLogger(__name__)

DEFAULT_NULL = (1.0, 1.0, 0.0)
DEFAULT_WINDOW = ((1.0, 1.3), (-0.3, 0.3), (0.0, 0.6))

# Nodes with |lambda - nu| above this count as non-umbilic for the sigma defect.
UMBILIC_TOL = 1e-3

# Largest hyperbolic distance from the ball centre scanned for roots.
SCAN_DEPTH = 12.0


def ray_directions(pts):
    """Unit vectors d(a, b, c) = (cos a e^{ib}, sin a e^{ic}) and their derivatives."""
    pts = np.asarray(pts, dtype=float)
    a, b, c = pts[..., 0], pts[..., 1], pts[..., 2]
    eb, ec = np.exp(1j * b), np.exp(1j * c)
    d = np.stack([np.cos(a) * eb, np.sin(a) * ec], axis=-1)
    zero = np.zeros_like(eb)
    dd = np.stack([
        np.stack([-np.sin(a) * eb, np.cos(a) * ec], axis=-1),
        np.stack([1j * np.cos(a) * eb, zero], axis=-1),
        np.stack([zero, 1j * np.sin(a) * ec], axis=-1),
    ], axis=-2)
    return d, dd


def _ray_point(rho, d, r):
    one = np.ones(d.shape[:-1] + (1,), dtype=complex)
    return r * np.concatenate([one, rho[..., None] * d], axis=-1) / np.sqrt(1 - rho**2)[..., None]


def _level(rho, d, r, n):
    return np.abs(la.herm_inner(_ray_point(rho, d, r), n))


def ray_roots(d, r: float, level: float, n=DEFAULT_NULL, n_scan: int = 96, iters: int = 80):
    """Outermost root rho in (0, 1) of |<zeta(rho d), n>| = level along each ray.

    The scan is uniform in hyperbolic distance from the centre, rho = tanh(t)
    for t up to ``SCAN_DEPTH``; the final bracket is bisected. Returns ``(rho, crossings)``. rho is NaN where no sign change was found
    on the scan grid; ``crossings`` counts sign changes per ray, so values
    above 1 mark rays where the level function is not monotone.
    """
    d = np.asarray(d, dtype=complex)
    n = np.asarray(n, dtype=complex)
    grid = np.tanh(SCAN_DEPTH * np.arange(1, n_scan + 1) / n_scan)
    vals = np.stack([_level(np.full(d.shape[:-1], g), d, r, n) - level for g in grid], axis=-1)
    change = np.signbit(vals[..., :-1]) != np.signbit(vals[..., 1:])
    crossings = change.sum(axis=-1)
    found = crossings > 0
    last = change.shape[-1] - 1 - np.argmax(change[..., ::-1], axis=-1)
    lo = np.where(found, grid[last], 0.25)
    hi = np.where(found, grid[np.minimum(last + 1, len(grid) - 1)], 0.75)
    f_lo = _level(lo, d, r, n) - level
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = _level(mid, d, r, n) - level
        left = np.signbit(f_mid) == np.signbit(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    rho = np.where(found, 0.5 * (lo + hi), np.nan)
    return rho, crossings


def horosphere_points(pts, r: float, level: float, n=DEFAULT_NULL):
    """Points zeta and exact tangents d zeta / d(a, b, c), shape (..., 3, 3).

    With F = |<Z, n>|^2 the level function and Z(rho, x) the ray point,
    d rho / dx = -F_x / F_rho.
    """
    n = np.asarray(n, dtype=complex)
    d, dd = ray_directions(pts)
    rho, _ = ray_roots(d, r, level, n)
    if np.any(~np.isfinite(rho)):
        raise PreconditionError("ray root not bracketed")
    zeta = _ray_point(rho, d, r)
    q = np.sqrt(1 - rho**2)[..., None]
    lead = np.concatenate([np.zeros(d.shape[:-1] + (1,)), d], axis=-1)
    z_rho = r * lead / q + rho[..., None] * zeta / q**2
    zero = np.zeros(dd.shape[:-1] + (1,), dtype=complex)
    z_x = r * rho[..., None, None] * np.concatenate([zero, dd], axis=-1) / q[..., None]
    pair = np.conj(la.herm_inner(zeta, n))
    f_rho = 2 * np.real(la.herm_inner(z_rho, n) * pair)
    f_x = 2 * np.real(la.herm_inner(z_x, n) * pair[..., None])
    tangents = z_x + (-f_x / f_rho[..., None])[..., None] * z_rho[..., None, :]
    return zeta, tangents


@dataclass
class HorospherePatch:
    """Adapted frames on a parameter box of a horosphere."""

    params: ModelParams
    level: float
    normal: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    frames: np.ndarray
    dropped: np.ndarray
    crossings: np.ndarray
    orientation: float = 1.0
    extra: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.a), len(self.b), len(self.c))

    def points(self):
        return np.stack(np.meshgrid(self.a, self.b, self.c, indexing="ij"), axis=-1)

    def frame_field(self, pts):
        return _frames(pts, self.params, self.level, self.normal, self.orientation)


def _frames(pts, params: ModelParams, level: float, n, orientation: float):
    zeta, tangents = horosphere_points(pts, params.r, level, n)
    hint = -orientation * la.herm_inner(zeta, n)[..., None] * n
    return adapted_frame(zeta, tangents, params, normal_hint=hint).u


def horosphere_patch(params: ModelParams, grid=(8, 8, 8), level: float = 1.0, n=DEFAULT_NULL,
                     window=DEFAULT_WINDOW, h: float = 1e-4) -> HorospherePatch:
    """Sample the horosphere on a box of ray directions.

    Rays whose root is not bracketed are dropped and counted. The normal
    orientation is chosen so that the W eigenvalue is +2/r; the choice is
    made from the first kept node.
    """
    if not params.borderline:
        raise PreconditionError("horosphere_patch needs the borderline angle phi = pi/2")
    if not level > 0:
        raise PreconditionError("level must be positive")
    n = np.asarray(n, dtype=complex)
    if not la.is_null(n, tol=1e-12):
        raise PreconditionError("horosphere centre must be a null vector")
    axes = [np.linspace(lo, hi, k) for (lo, hi), k in zip(window, grid)]
    patch = HorospherePatch(params, float(level), n, *axes,
                            frames=np.full(tuple(grid) + (3, 3), np.nan, dtype=complex),
                            dropped=np.zeros(tuple(grid), dtype=bool),
                            crossings=np.zeros(tuple(grid), dtype=int))
    pts = patch.points()
    d, _ = ray_directions(pts)
    rho, crossings = ray_roots(d, params.r, level, n)
    patch.crossings = crossings
    # Every stencil point must have a root too.
    ok = np.isfinite(rho)
    for k in range(3):
        for sgn in (1, -1):
            step = np.zeros(3)
            step[k] = sgn * h
            ok &= np.isfinite(ray_roots(ray_directions(pts + step)[0], params.r, level, n)[0])
    patch.dropped = ~ok
    if not np.any(ok):
        raise PreconditionError("no ray in the window meets the horosphere; widen the window or raise the level")
    if np.any(~ok):
        log.warning("dropped %d of %d rays without a bracketed root", int((~ok).sum()), ok.size)
    if np.any(crossings[ok] > 1):
        log.info("%d rays cross the level more than once; outermost root used",
                 int(np.count_nonzero(crossings[ok] > 1)))
    probe = pts[ok][:1]
    _, forms = adapted_tangents(lambda p: _frames(p, params, level, n, 1.0), probe, params, h)
    alpha = shape_operator(forms, params).alpha_est[0]
    patch.orientation = 1.0 if alpha > 0 else -1.0
    patch.frames[ok] = patch.frame_field(pts[ok])
    return patch


@dataclass
class BorderlineSigma:
    points: np.ndarray
    centroid: np.ndarray
    variance: float
    defect: np.ndarray
    n_regular: int


def borderline_sigma(field, pts, frames, h: float, regular=None) -> BorderlineSigma:
    """Images sphere_chart(e0 - e3) of borderline frames.

    ``variance`` is the mean squared distance to the centroid. The contact
    defect Re<d sigma, i sigma> along each parameter direction is evaluated
    only on ``regular`` (non-umbilic) nodes; elsewhere it is NaN.
    """
    pts = np.asarray(pts, dtype=float)
    r = 1.0
    sig = la.sphere_chart(gauss_borderline(UnitaryFrame(frames, r)), tol=1e-8)
    centroid = sig.mean(axis=0)
    variance = float(np.mean(np.sum(np.abs(sig - centroid) ** 2, axis=-1)))
    defect = np.full(len(pts), np.nan)
    regular = np.zeros(len(pts), dtype=bool) if regular is None else np.asarray(regular, dtype=bool)
    if np.any(regular):
        q = pts[regular]
        w0 = la.null_lift(sig[regular], tol=1e-8)
        worst = np.zeros(len(q))
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            sp = la.sphere_chart(gauss_borderline(UnitaryFrame(field(q + step), r)), tol=1e-8)
            sm = la.sphere_chart(gauss_borderline(UnitaryFrame(field(q - step), r)), tol=1e-8)
            dw = (sp - sm) / (2 * h)
            dn = np.concatenate([np.zeros((len(q), 1)), dw], axis=-1)
            worst = np.maximum(worst, np.abs(np.real(la.herm_inner(dn, 1j * w0))))
        defect[regular] = worst
    return BorderlineSigma(sig, centroid, variance, defect, int(regular.sum()))


ORACLE_FIELDS = ("eig_1", "eig_2", "eig_3", "alpha_est", "lam", "nu", "spectrum", "hopf_identity",
                 "borderline", "eta4", "kappa", "symmetry")


@dataclass
class OracleReport:
    params: ModelParams
    level: float
    h: float
    gates: list[dict]
    nodes: dict[str, np.ndarray]
    index: np.ndarray
    counts: dict[str, int]
    sigma_centroid: np.ndarray

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates)

    def gate(self, name: str) -> dict:
        for g in self.gates:
            if g["name"] == name:
                return g
        raise KeyError(name)


def run_oracle(params: ModelParams | None = None, level: float = 1.0, grid=(8, 8, 8),
               config: RunConfig | None = None, window=DEFAULT_WINDOW) -> OracleReport:
    """Horosphere samples, shape-operator spectrum and borderline sigma image."""
    params = params or ModelParams.borderline_params()
    config = config or RunConfig()
    h = config.tolerances.h
    patch = horosphere_patch(params, grid, level, window=window, h=h)
    ok = ~patch.dropped
    index = np.argwhere(ok)
    pts = patch.points()[ok]
    centre = patch.frames[ok]
    _, forms = adapted_tangents(patch.frame_field, pts, params, h, centre)
    shape = shape_operator(forms, params, config.tolerances.cond_max)
    r = params.r
    eig = np.linalg.eigvalsh(shape.A)
    target = np.array([1 / r, 1 / r, 2 / r])
    a_hat = shape.alpha_est
    # kappa_1, kappa_2 over the three directions; at phi = pi/2 both signs agree.
    kappa = np.max(np.abs(forms.kappa(1)[..., :2]), axis=(-2, -1))
    nodes = {
        "eig_1": eig[:, 0], "eig_2": eig[:, 1], "eig_3": eig[:, 2],
        "alpha_est": a_hat, "lam": shape.lam, "nu": shape.nu,
        "spectrum": np.max(np.abs(eig - target), axis=-1),
        "hopf_identity": shape.residuals["hopf_identity"],
        "borderline": np.abs((shape.lam - a_hat / 2) * (shape.nu - a_hat / 2)),
        "eta4": shape.residuals["eta4"],
        "kappa": kappa,
        "symmetry": shape.residuals["symmetry"],
    }
    regular = np.abs(shape.lam - shape.nu) > UMBILIC_TOL
    sig = borderline_sigma(patch.frame_field, pts, centre, h, regular)
    thr = lambda name: config.gate(name, DEFAULT_ORACLE_GATES)  # noqa: E731
    gates = []
    for name in ("spectrum", "hopf_identity", "borderline", "eta4", "kappa"):
        v = nodes[name]
        gates.append(gate(name, float(np.max(v)), thr(name), float(np.mean(v)), len(v)))
    gates.append(gate("sigma_variance", sig.variance, thr("sigma_variance"), count=len(pts)))
    counts = {"nodes": int(np.prod(patch.shape)), "dropped": int(patch.dropped.sum()),
              "multi_crossing": int(np.count_nonzero(patch.crossings[ok] > 1)),
              "non_umbilic": sig.n_regular}
    return OracleReport(params, float(level), h, gates, nodes, index, counts, sig.centroid)
