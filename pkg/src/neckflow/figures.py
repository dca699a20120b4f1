"""Figure rendering for finished runs (PNG files next to the TSV output)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .diffusion import cdf_of
from .geometry import arclength


def render_run_figures(result, fig_dir: str) -> list[str]:
    os.makedirs(fig_dir, exist_ok=True)
    written = []
    written.append(_profiles_figure(result, fig_dir))
    written.append(_flow_figure(result, fig_dir))
    if result.monitor is not None:
        written.append(_monitor_figure(result, fig_dir))
        written.append(_diffusion_figure(result, fig_dir))
    return [w for w in written if w]


def _profiles_figure(result, fig_dir):
    hist = result.pre_history
    fig, ax = plt.subplots(figsize=(7, 4))
    picks = np.linspace(0, len(hist.ts) - 1, min(7, len(hist.ts))).astype(int)
    for j in picks:
        p = hist.profile_at(hist.ts[j])
        ax.plot(arclength(p), p.psi, lw=1.2, label=f"t = {hist.ts[j]:.4g}")
    if result.surgery is not None:
        for tag, cap in (("cap 1", result.surgery.cap1), ("cap 2", result.surgery.cap2)):
            p = cap.profile
            ax.plot(arclength(p), p.psi, "--", lw=1.0, label=f"{tag} (post-surgery)")
    ax.set_xlabel("arclength r")
    ax.set_ylabel("fiber radius psi")
    ax.set_title(f"{result.scenario.name}: profile evolution")
    ax.legend(fontsize=7, ncol=2)
    path = os.path.join(fig_dir, "profiles.png")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _flow_figure(result, fig_dir):
    rep = result.flow_report
    if not len(rep.min_psi_history):
        return None
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    axes[0].semilogy(rep.min_psi_history[:, 0], rep.min_psi_history[:, 1], lw=1.0)
    axes[0].set_ylabel("min interior psi")
    if rep.singular_time is not None:
        axes[0].axvline(rep.singular_time, color="k", ls=":", lw=1)
        axes[0].set_title(f"pinch at t = {rep.singular_time:.5g}")
    nb = rep.neck_bump_history
    good = ~np.isnan(nb[:, 1])
    axes[1].step(nb[good, 0], nb[good, 1], where="post", label="necks")
    axes[1].step(nb[good, 0], nb[good, 2], where="post", label="bumps")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("count")
    axes[1].legend(fontsize=8)
    path = os.path.join(fig_dir, "flow.png")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _monitor_figure(result, fig_dir):
    mon = result.monitor
    fig, axes = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
    for j, series in enumerate(mon.cost_series):
        axes[0].plot(mon.tau_samples, series, marker=".", ms=3, label=f"pair {j}")
    axes[0].plot(mon.tau_samples, mon.L_series, "k--", lw=1, label="L(tau)")
    for tau, pair, jump in mon.violations:
        axes[0].axvline(tau, color="r", alpha=0.2, lw=1)
    axes[0].set_ylabel("coupled cost")
    axes[0].legend(fontsize=8)
    axes[0].set_title(
        f"violations: {len(mon.violations)} (tol = {mon.tol_mono:.3g})"
    )
    for j, series in enumerate(mon.required_L_rate):
        axes[1].plot(mon.tau_samples, series, marker=".", ms=3, label=f"pair {j}")
    for N, _, _ in result.verdict.ladder:
        axes[1].axhline(-2 * N, color="gray", ls=":", lw=1)
    axes[1].set_yscale("symlog")
    axes[1].set_xlabel("tau")
    axes[1].set_ylabel("required dL/dtau")
    path = os.path.join(fig_dir, "wsrf.png")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _diffusion_figure(result, fig_dir):
    fig, ax = plt.subplots(figsize=(7, 4))
    path1, _ = result.paths[0]
    picks = np.linspace(0, len(path1) - 1, min(5, len(path1))).astype(int)
    for k in picks:
        c = cdf_of(path1[k])
        ax.plot(c.r, c.F, lw=1.1, label=f"tau = {result.tau_grid[k]:.4g}")
    ax.set_xlabel("arclength r")
    ax.set_ylabel("CDF")
    ax.set_title("cap-1 diffusion CDF along backward time")
    ax.legend(fontsize=8)
    path = os.path.join(fig_dir, "diffusion_cdf.png")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
