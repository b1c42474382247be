"""Deterministic SVG figures: marginal heatmap, Schmidt spectrum, entropy vs ln C."""
from __future__ import annotations

import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["marginal_heatmap", "spectrum_overlay", "entropy_vs_lnC", "save_svg"]

_RC = {"svg.hashsalt": "oscillent", "svg.fonttype": "path", "font.size": 9}


def save_svg(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def marginal_heatmap(state, params, path, n_grid: int = 241, mode: str = "small_c"):
    """W(x, px) on a square grid, with the inner and outer support bands."""
    from .classical import marginal_density, support_band

    w = params.omega
    R = np.sqrt(state.E_plus - state.E_minus + 2.0 * abs(params.C) / params.Omega**2 * 2.0 * np.sqrt(state.E1 * state.E2))
    R *= 1.1
    x = np.linspace(-R / w, R / w, n_grid)
    px = np.linspace(-R, R, n_grid)
    X, P = np.meshgrid(x, px)
    with np.errstate(all="ignore"):
        W = marginal_density(X, P, state, params, mode)
    W = np.where(np.isfinite(W), W, np.nan)
    if not np.any(W > 0):
        warnings.warn("marginal density vanishes on the plotting grid; no figure written", stacklevel=2)
        return None
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 4.2))
        im = ax.pcolormesh(x, px, np.log10(np.where(W > 0, W, np.nan)), shading="auto", cmap="viridis")
        th = np.linspace(0, 2 * np.pi, 721)
        band = support_band(th, state, params)
        for Xb, ls in ((band.X1, "--"), (band.X2, "-")):
            r = np.sqrt(np.maximum(Xb, 0.0))
            ax.plot(r * np.sin(th) / w, r * np.cos(th), color="w", lw=0.8, ls=ls)
        ax.set_xlabel(r"$x$ [length]")
        ax.set_ylabel(r"$p_x$ [momentum]")
        fig.colorbar(im, ax=ax, label=r"$\log_{10} W$ [1/(length momentum)]")
        fig.tight_layout()
    return save_svg(fig, path)


def spectrum_overlay(eigenvalues, offsets, dn_max, path):
    """Exact Schmidt eigenvalues at their |dn| offsets over the arcsine lambda(dn)."""
    eigenvalues = np.asarray(eigenvalues, float)
    if eigenvalues.size == 0:
        warnings.warn("empty spectrum; no figure written", stacklevel=2)
        return None
    dn = np.linspace(0, dn_max, 400, endpoint=False)
    lam = 1.0 / (np.pi * dn_max * np.sqrt(1.0 - (dn / dn_max) ** 2))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        ax.plot(dn, lam, color="k", lw=1.0, label=r"arcsine $\lambda(\delta n)$")
        ax.scatter(offsets, eigenvalues, s=14, color="C3", zorder=3, label="exact eigenvalues")
        ax.axvline(dn_max, color="0.5", lw=0.6, ls=":")
        ax.set_xlabel(r"$|\delta n|$ [quanta]")
        ax.set_ylabel(r"weight [dimensionless]")
        ax.set_ylim(0, max(float(eigenvalues.max()), float(lam[0]) * 2.5) * 1.1)
        ax.legend(frameon=False)
        fig.tight_layout()
    return save_svg(fig, path)


def entropy_vs_lnC(rows, path, columns=("S_closed_form", "S_wkb", "S_exact_kernel")):
    """Entropy columns of a C-sweep against ln C, with a unit-slope guide."""
    rows = [r for r in rows if r.get("C", 0) > 0]
    if not rows:
        warnings.warn("no sweep rows; no figure written", stacklevel=2)
        return None
    lnC = np.log([r["C"] for r in rows])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for i, col in enumerate(columns):
            vals = [r.get(col) for r in rows]
            if all(v is None or v == "" for v in vals):
                continue
            y = np.array([np.nan if v in (None, "") else float(v) for v in vals])
            ax.plot(lnC, y, marker="o", ms=3, lw=1.0, color=f"C{i}", label=col)
        first = next(c for c in columns if rows[0].get(c) not in (None, ""))
        y0 = float(rows[0][first])
        ax.plot(lnC, y0 + lnC - lnC[0], color="0.6", lw=0.8, ls="--", label="slope 1")
        ax.set_xlabel(r"$\ln C$ [C in frequency$^2$]")
        ax.set_ylabel(r"$S$ [nats]")
        ax.legend(frameon=False)
        fig.tight_layout()
    return save_svg(fig, path)
