"""Linear algebra on C^3 with the Hermitian form of signature (2,1).

Vectors are complex arrays whose last axis has length 3; every function
broadcasts over leading axes, so a whole grid of vectors can be processed
in one call. The form is

    <a, b> = -a0 conj(b0) + a1 conj(b1) + a2 conj(b2),

linear in ``a`` and conjugate-linear in ``b``. Its real part is the
semi-Riemannian metric of anti-de Sitter space.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import expm

from .config import DEFAULT_TOLERANCES, CorruptDataError, DegenerateError, PreconditionError

log = logging.getLogger(__name__)

SIGNATURE = np.diag([-1.0, 1.0, 1.0]).astype(complex)
_SIG = np.array([-1.0, 1.0, 1.0])

# |z0| below this means the null-cone chart was fed garbage.
_Z0_FLOOR = 1e-150


def herm_inner(a, b):
    """Hermitian form <a, b> of signature (2,1)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.sum(_SIG * a * np.conj(b), axis=-1)


def real_inner(a, b):
    """Real part of :func:`herm_inner`, the real metric on C^3 = R^6."""
    return np.real(herm_inner(a, b))


def form_norm2(a):
    return np.real(herm_inner(a, a))


def is_null(a, tol: float = DEFAULT_TOLERANCES.tol_null):
    a = np.asarray(a, dtype=complex)
    if np.any(np.linalg.norm(a, axis=-1) == 0):
        raise PreconditionError("the zero vector is not a null vector")
    return np.abs(herm_inner(a, a)) <= tol


def _relative_null_defect(z):
    # Rescale first so tiny or huge vectors do not under- or overflow.
    size = np.max(np.abs(z), axis=-1, keepdims=True)
    if np.any(size == 0):
        raise PreconditionError("the zero vector is not a null vector")
    z = z / size
    return np.abs(herm_inner(z, z)) / np.sum(np.abs(z) ** 2, axis=-1)


def sphere_chart(z, tol: float = DEFAULT_TOLERANCES.tol_null):
    """Identify the null line through ``z`` with a point of S^3 in C^2.

    Returns ``(z1/z0, z2/z0)``. Nullness is checked relative to the
    Euclidean size of ``z`` so the chart is scale invariant.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(_relative_null_defect(z) > tol):
        raise PreconditionError("sphere_chart needs a null vector")
    z0 = z[..., :1]
    if np.any(np.abs(z0) < _Z0_FLOOR):
        raise CorruptDataError("null vector with vanishing z0")
    return z[..., 1:] / z0


def null_lift(p, tol: float = DEFAULT_TOLERANCES.tol_sphere):
    """Inverse of :func:`sphere_chart`: (w1, w2) -> (1, w1, w2)."""
    p = np.asarray(p, dtype=complex)
    if np.any(np.abs(np.sum(np.abs(p) ** 2, axis=-1) - 1.0) > tol):
        raise PreconditionError("null_lift needs a point of the unit sphere")
    one = np.ones(p.shape[:-1] + (1,), dtype=complex)
    return np.concatenate([one, p], axis=-1)


def ball_chart(z):
    """Ball-model coordinates (z1/z0, z2/z0) of a timelike vector."""
    z = np.asarray(z, dtype=complex)
    if np.any(form_norm2(z) >= 0):
        raise PreconditionError("ball_chart needs a timelike vector")
    return z[..., 1:] / z[..., :1]


def h_adjoint(x):
    """Adjoint with respect to the form: Sigma X^H Sigma."""
    x = np.asarray(x, dtype=complex)
    return _SIG[:, None] * np.conj(np.swapaxes(x, -1, -2)) * _SIG[None, :]


def project_algebra(x):
    """Orthogonal projection onto u(2,1) = {X : X^H Sigma + Sigma X = 0}."""
    x = np.asarray(x, dtype=complex)
    return 0.5 * (x - h_adjoint(x))


def algebra_defect(x):
    x = np.asarray(x, dtype=complex)
    return np.max(np.abs(x + h_adjoint(x)), axis=(-2, -1))


def frame_inverse(u):
    """Inverse of a U(2,1) matrix, Sigma u^H Sigma."""
    return h_adjoint(u)


def frame_defect(u):
    """max |u^H Sigma u - Sigma| over entries."""
    u = np.asarray(u, dtype=complex)
    gram = np.conj(np.swapaxes(u, -1, -2)) @ (_SIG[:, None] * u)
    return np.max(np.abs(gram - SIGNATURE), axis=(-2, -1))


def _phase_normalize(v):
    """Rotate ``v`` so its largest-modulus component is real positive.

    ``np.argmax`` returns the first maximum, which breaks ties by lowest index.
    """
    k = np.argmax(np.abs(v), axis=-1)
    lead = np.take_along_axis(v, k[..., None], axis=-1)
    return v * (np.conj(lead) / np.abs(lead))


def orthonormal_completion(zeta, e3, r: float, tol: float = DEFAULT_TOLERANCES.tol_frame):
    """Unit spacelike e2 orthogonal to ``zeta`` and ``e3``.

    The orthogonal complement of span(zeta, e3) is the complex line through
    conj((Sigma zeta) x (Sigma e3)); its phase is fixed by requiring the
    largest-modulus entry to be real positive.
    """
    zeta = np.asarray(zeta, dtype=complex)
    e3 = np.asarray(e3, dtype=complex)
    scale = 1.0 + np.sum(np.abs(zeta) ** 2, axis=-1)
    if np.any(np.abs(form_norm2(zeta) + r * r) > tol * r * r * scale):
        raise PreconditionError("zeta must satisfy <zeta, zeta> = -r^2")
    if np.any(np.abs(herm_inner(e3, e3) - 1.0) > tol * scale):
        raise PreconditionError("e3 must be a unit spacelike vector")
    if np.any(np.abs(herm_inner(zeta, e3)) > tol * r * scale):
        raise DegenerateError("zeta and e3 are not orthogonal")
    v = np.conj(np.cross(_SIG * zeta, _SIG * e3))
    n2 = form_norm2(v)
    if np.any(n2 <= 0):
        raise DegenerateError("degenerate pair in orthonormal_completion")
    v = v / np.sqrt(n2)[..., None]
    return _phase_normalize(v)


def reorthonormalize(u, tol: float = DEFAULT_TOLERANCES.tol_frame):
    """Indefinite Gram-Schmidt on the columns of ``u`` in the order 1, 3, 2.

    The first and third columns carry the geometry of a reconstructed frame
    (base point and structure-vector lift) so they are kept as directions.
    Drift above ``tol`` is logged.
    """
    u = np.array(u, dtype=complex)
    drift = frame_defect(u)
    if np.any(drift > tol):
        log.warning("frame drift %.3e before re-orthonormalization", float(np.max(drift)))
    cols = [u[..., :, j] for j in range(3)]
    done: list[tuple[int, np.ndarray]] = []
    for j in (0, 2, 1):
        v = cols[j]
        for k, q in done:
            v = v - (herm_inner(v, q) * _SIG[k])[..., None] * q
        v = v / np.sqrt(np.abs(form_norm2(v)))[..., None]
        done.append((j, v))
        cols[j] = v
    return np.stack(cols, axis=-1)


def random_algebra_element(rng: np.random.Generator, scale: float = 1.0, size=()):
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    x = rng.normal(size=shape + (3, 3)) + 1j * rng.normal(size=shape + (3, 3))
    return project_algebra(scale * x)


def random_frame(rng: np.random.Generator, scale: float = 0.5):
    """Random element of U(2,1) obtained by exponentiating an algebra element."""
    return expm(random_algebra_element(rng, scale))
