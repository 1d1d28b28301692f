"""Hopf hypersurfaces from pairs of contact curves.

Given contact curves C1, C2 in S^3 and an angle phi with |phi| < pi/2, the
frames u whose Gauss lines g+_C(u), g-_C(u) lie on C1 and C2 form a
five-dimensional set P; two of its dimensions are the fiber and e1-e2
gauge rotations. A node (s, t, tau) fixes the lines mu1(s), mu2(t) and the
scale c1 = exp(tau) of g+, which determines the frame in closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from . import linalg as la
from .config import DEFAULT_TOLERANCES, DegenerateError, PreconditionError
from .curves import ContactCurve
from .frames import HALF_PI, ModelParams, UnitaryFrame, gauss_pair_target

log = logging.getLogger(__name__)


def _check_angle(params: ModelParams) -> None:
    if abs(params.phi) >= HALF_PI:
        raise PreconditionError(
            "borderline angle |phi| = pi/2 has no two-curve reconstruction; "
            "use `hopfch2 oracle horosphere` for the borderline case")


def normalize_null_pair(n1, n2, params: ModelParams, c1=1.0,
                        tol: float = DEFAULT_TOLERANCES.tol_coincide):
    """Rescale null vectors to (c1 n1, c2 n2) with <g+, g-> = -2 cos(phi) e^{-i phi}."""
    _check_angle(params)
    n1 = np.asarray(n1, dtype=complex)
    n2 = np.asarray(n2, dtype=complex)
    c1 = np.asarray(c1, dtype=complex)
    if np.any(c1 == 0):
        raise PreconditionError("c1 must be nonzero")
    pair = la.herm_inner(n1, n2)
    size = np.linalg.norm(n1, axis=-1) * np.linalg.norm(n2, axis=-1)
    if np.any(np.abs(pair) <= tol * size):
        raise DegenerateError("null lines coincide")
    c2 = np.conj(gauss_pair_target(params) / (c1 * pair))
    return c1[..., None] * n1, c2[..., None] * n2


def frame_from_null_pair(n1, n2, params: ModelParams, c1=1.0,
                         tol: float = DEFAULT_TOLERANCES.tol_coincide) -> UnitaryFrame:
    """The frame whose Gauss vectors g+, g- are the normalized (n1, n2)."""
    gp, gm = normalize_null_pair(n1, n2, params, c1, tol)
    s, c = np.sin(params.phi), np.cos(params.phi)
    e4 = (gm - gp) / (2 * c)
    e3 = -1j * e4
    e0 = 0.5 * (gp + gm) + s * e3
    zeta = -1j * params.r * e0
    e2 = la.orthonormal_completion(zeta, e3, params.r, tol=1e-8)
    u = np.stack([zeta / params.r, e2, e3], axis=-1)
    return UnitaryFrame(la.reorthonormalize(u, tol=1e-8), params.r)


@dataclass(frozen=True)
class GridSpec:
    n_s: int = 16
    n_t: int = 16
    n_tau: int = 8
    s_range: tuple[float, float] | None = None
    t_range: tuple[float, float] | None = None
    tau_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self) -> None:
        for name in ("s_range", "t_range", "tau_range"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, (float(v[0]), float(v[1])))
        if min(self.n_s, self.n_t, self.n_tau) < 1:
            raise PreconditionError("grid dimensions must be positive")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_s, self.n_t, self.n_tau)


def _axis(curve: ContactCurve, n: int, rng):
    if rng is None:
        lo, hi = curve.t_min, curve.t_max
        return np.linspace(lo, hi, n, endpoint=not curve.closed)
    return np.linspace(rng[0], rng[1], n)


@dataclass
class HopfPatch:
    """Frames of a reconstructed Hopf hypersurface over an (s, t, tau) grid.

    ``frames`` has shape (n_s, n_t, n_tau, 3, 3) and is NaN at excluded nodes
    (where the two null lines coincide). ``residuals`` is filled by the
    verifier.
    """

    params: ModelParams
    grid: GridSpec
    curve1: ContactCurve
    curve2: ContactCurve
    s: np.ndarray
    t: np.ndarray
    tau: np.ndarray
    frames: np.ndarray
    excluded: np.ndarray
    ball: np.ndarray
    singular_values: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    tol_coincide: float = DEFAULT_TOLERANCES.tol_coincide

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.grid.shape

    @property
    def n_excluded(self) -> int:
        return int(np.count_nonzero(self.excluded))

    def points(self):
        """Node parameters as an (n_s, n_t, n_tau, 3) array."""
        return np.stack(np.meshgrid(self.s, self.t, self.tau, indexing="ij"), axis=-1)

    def frame_field(self, pts):
        """Frames at arbitrary (s, t, tau), computed from the curves in closed form."""
        pts = np.asarray(pts, dtype=float)
        w1, _ = self.curve1.evaluate(pts[..., 0])
        w2, _ = self.curve2.evaluate(pts[..., 1])
        n1 = la.null_lift(w1, tol=1e-8)
        n2 = la.null_lift(w2, tol=1e-8)
        return frame_from_null_pair(n1, n2, self.params, np.exp(pts[..., 2]), 0.0).u

    def lifts(self, pts):
        pts = np.asarray(pts, dtype=float)
        w1, _ = self.curve1.evaluate(pts[..., 0])
        w2, _ = self.curve2.evaluate(pts[..., 1])
        return la.null_lift(w1, tol=1e-8), la.null_lift(w2, tol=1e-8)


def build_patch(curve1: ContactCurve, curve2: ContactCurve, params: ModelParams,
                grid: GridSpec = GridSpec(),
                tol_coincide: float = DEFAULT_TOLERANCES.tol_coincide) -> HopfPatch:
    """Sample the hypersurface generated by two contact curves.

    Nodes where the two null lines coincide are excluded; an empty patch
    is an error.
    """
    _check_angle(params)
    s = _axis(curve1, grid.n_s, grid.s_range)
    t = _axis(curve2, grid.n_t, grid.t_range)
    tau = np.linspace(grid.tau_range[0], grid.tau_range[1], grid.n_tau)
    patch = HopfPatch(params, grid, curve1, curve2, s, t, tau,
                      frames=np.full(grid.shape + (3, 3), np.nan, dtype=complex),
                      excluded=np.zeros(grid.shape, dtype=bool),
                      ball=np.full(grid.shape + (2,), np.nan, dtype=complex),
                      tol_coincide=tol_coincide)
    pts = patch.points()
    n1, n2 = patch.lifts(pts)
    pair = np.abs(la.herm_inner(n1, n2))
    size = np.linalg.norm(n1, axis=-1) * np.linalg.norm(n2, axis=-1)
    excluded = pair <= tol_coincide * size
    if np.all(excluded):
        raise DegenerateError("every grid node has coincident null lines; empty patch")
    ok = ~excluded
    f = frame_from_null_pair(n1[ok], n2[ok], params, np.exp(pts[ok][:, 2]), tol_coincide)
    patch.frames[ok] = f.u
    patch.ball[ok] = la.ball_chart(f.zeta)
    patch.excluded = excluded
    if np.any(excluded):
        log.info("excluded %d of %d nodes (coincident null lines)", int(excluded.sum()), excluded.size)
    return patch


def perturb_frames(patch: HopfPatch, eps: float, seed: int = 0) -> HopfPatch:
    """Copy of ``patch`` with each stored frame moved by exp(eps B), B random in u(2,1)."""
    rng = np.random.default_rng(seed)
    b = la.random_algebra_element(rng, 1.0, size=patch.shape)
    frames = patch.frames.copy()
    ok = ~patch.excluded
    frames[ok] = frames[ok] @ expm(eps * b[ok])
    ball = patch.ball.copy()
    ball[ok] = la.ball_chart(patch.params.r * frames[ok][..., :, 0])
    return replace(patch, frames=frames, ball=ball, residuals={})


def _grid_derivative(values, axis: int, coords, valid):
    """Derivative along one grid axis: central inside, one-sided at edges
    and next to invalid nodes. NaN where neither neighbor is valid."""
    n = values.shape[axis]
    out = np.full(values.shape, np.nan)
    v = np.moveaxis(values, axis, 0)
    m = np.moveaxis(valid, axis, 0)
    o = np.moveaxis(out, axis, 0)
    x = np.asarray(coords, dtype=float)
    for i in range(n):
        lo = i - 1 if i > 0 else None
        hi = i + 1 if i < n - 1 else None
        have_lo = m[lo] if lo is not None else np.zeros_like(m[i])
        have_hi = m[hi] if hi is not None else np.zeros_like(m[i])
        res = np.full(v[i].shape, np.nan)
        centre = have_lo & have_hi
        if lo is not None and hi is not None:
            res[centre] = ((v[hi] - v[lo]) / (x[hi] - x[lo]))[centre]
        fwd = ~centre & have_hi
        if hi is not None:
            res[fwd] = ((v[hi] - v[i]) / (x[hi] - x[i]))[fwd]
        bwd = ~centre & ~have_hi & have_lo
        if lo is not None:
            res[bwd] = ((v[i] - v[lo]) / (x[i] - x[lo]))[bwd]
        o[i] = res
    return out


def immersion_check(patch: HopfPatch, sing_min: float = DEFAULT_TOLERANCES.sing_min):
    """Smallest singular value of d(ball point)/d(s, t, tau) at each node.

    Uses grid neighbors; returns ``(singular_values, flagged)`` with NaN
    singular values at excluded nodes.
    """
    valid = ~patch.excluded
    real = np.stack([patch.ball[..., 0].real, patch.ball[..., 0].imag,
                     patch.ball[..., 1].real, patch.ball[..., 1].imag], axis=-1)
    cols = []
    for axis, coords in enumerate((patch.s, patch.t, patch.tau)):
        if patch.shape[axis] < 2:
            cols.append(np.full(real.shape, np.nan))
            continue
        comps = [_grid_derivative(real[..., k], axis, coords, valid) for k in range(4)]
        cols.append(np.stack(comps, axis=-1))
    jac = np.stack(cols, axis=-1)  # (..., 4, 3)
    sv = np.full(patch.shape, np.nan)
    finite = valid & np.all(np.isfinite(jac), axis=(-2, -1))
    if np.any(finite):
        sv[finite] = np.linalg.svd(jac[finite], compute_uv=False)[..., -1]
    flagged = valid & ~(sv > sing_min)
    patch.singular_values = sv
    return sv, flagged
