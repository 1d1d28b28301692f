"""Static figures written next to reports (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DPI = 110


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # Fixed metadata keeps PNG output independent of the matplotlib version string.
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def gate_figure(gates: list[dict], path, title: str = "gates") -> Path:
    """Ratio of worst residual to threshold for every gate, on a log axis."""
    named = [g for g in gates if g["threshold"] and g["max"] is not None]
    ratio = np.array([max(g["max"], 1e-300) / g["threshold"] for g in named])
    fig, ax = plt.subplots(figsize=(7, 0.28 * len(named) + 1.2))
    y = np.arange(len(named))
    colors = ["tab:green" if g["passed"] else "tab:red" for g in named]
    ax.barh(y, np.maximum(ratio, 1e-12), color=colors, left=0)
    ax.axvline(1.0, color="k", lw=1)
    ax.set_xscale("log")
    ax.set_yticks(y, [g["name"] for g in named])
    ax.invert_yaxis()
    ax.set_xlabel("max residual / threshold")
    ax.set_title(title)
    return _save(fig, path)


def curvature_figure(nodes: dict, alpha: float, c: float, path) -> Path:
    """Principal curvatures (lambda, nu) against the Hopf hyperbola, and alpha per node."""
    lam = np.asarray(nodes["lam"], dtype=float)
    nu = np.asarray(nodes["nu"], dtype=float)
    a_hat = np.asarray(nodes["alpha_est"], dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.scatter(lam, nu, s=4, label="nodes")
    ok = np.isfinite(lam)
    if np.any(ok):
        lo, hi = np.min(lam[ok]), np.max(lam[ok])
        pad = 0.1 * (hi - lo) + 1e-3
        x = np.linspace(lo - pad, hi + pad, 400)
        x = x[np.abs(x - alpha / 2) > 1e-6]
        ax1.plot(x, (c + x * alpha / 2) / (x - alpha / 2), "k-", lw=0.8,
                 label=r"$\lambda\nu - \frac{\lambda+\nu}{2}\alpha = c$")
        ax1.set_xlim(lo - pad, hi + pad)
        finite = nu[np.isfinite(nu)]
        if finite.size:
            p2 = 0.1 * (finite.max() - finite.min()) + 1e-3
            ax1.set_ylim(finite.min() - p2, finite.max() + p2)
    ax1.set_xlabel(r"$\lambda$")
    ax1.set_ylabel(r"$\nu$")
    ax1.legend(fontsize=8)
    ax2.plot(a_hat - alpha, ".", ms=2)
    ax2.set_xlabel("node")
    ax2.set_ylabel(r"$\hat\alpha - \alpha$")
    ax2.ticklabel_format(axis="y", style="sci", scilimits=(0, 0))
    return _save(fig, path)


def ball_figure(ball, excluded, path) -> Path:
    """Two projections of the sampled points in the unit ball of C^2."""
    ball = np.asarray(ball)
    ok = ~np.asarray(excluded)
    b = ball[ok]
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    for ax, z, lab in ((axes[0], b[:, 0], "w1"), (axes[1], b[:, 1], "w2")):
        ax.scatter(z.real, z.imag, s=2, c=np.abs(b[:, 0]) ** 2 + np.abs(b[:, 1]) ** 2, cmap="viridis")
        t = np.linspace(0, 2 * np.pi, 200)
        ax.plot(np.cos(t), np.sin(t), "k-", lw=0.5)
        ax.set_aspect("equal")
        ax.set_xlabel(f"Re {lab}")
        ax.set_ylabel(f"Im {lab}")
    return _save(fig, path)


def spectrum_figure(nodes: dict, r: float, path) -> Path:
    """Oracle eigenvalues per node with the expected values 1/r and 2/r."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for k in (1, 2, 3):
        ax.plot(np.asarray(nodes[f"eig_{k}"]), ".", ms=2, label=f"eigenvalue {k}")
    for v in (1 / r, 2 / r):
        ax.axhline(v, color="k", lw=0.5)
    ax.set_xlabel("node")
    ax.legend(fontsize=8)
    return _save(fig, path)
