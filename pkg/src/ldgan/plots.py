"""Figure rendering for run reports (headless Agg backend)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_eigen_trend(records, path: str) -> str:
    iters = [r.iteration for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(iters, [r.lambda_mean for r in records], lw=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean eigenvalue")
    ax.set_title("Separability over training")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_moments(records, path: str) -> str:
    iters = [r.iteration for r in records]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    axes[0].plot(iters, [r.var_real for r in records], lw=1.0, label="real")
    axes[0].plot(iters, [r.var_gen for r in records], lw=1.0, label="generated")
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("mean feature variance")
    axes[0].legend()
    axes[1].plot(iters, [r.mean_discrepancy for r in records], lw=1.0, color="tab:red")
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("feature mean gap")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_probe_curves(real_curve, mixed_curve, path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(real_curve)), real_curve, lw=1.2, label="real classes")
    ax.plot(range(len(mixed_curve)), mixed_curve, lw=1.2, label="real + generated")
    ax.set_xlabel("probe iteration")
    ax.set_ylabel("mean eigenvalue")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_run_figures(records, out_dir: str):
    """Standard report figures for a finished run; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if records:
        paths.append(plot_eigen_trend(records, os.path.join(out_dir, "eigen_trend.png")))
        paths.append(plot_moments(records, os.path.join(out_dir, "moments.png")))
    return paths
