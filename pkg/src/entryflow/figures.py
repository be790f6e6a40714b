"""Matplotlib rendering of pipeline outputs: marginal overlays, 2-D marginal
heatmaps, ensemble pairplots, metric time series, and compliance curves.

Figures are written as PNG files next to the delimited outputs; every plot
can also be produced from the persisted CSVs alone.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 140


def _save(fig, path):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_marginal_overlay(db_marginal, mc_marginals, path, axis_label=None, title=None):
    """Density-based marginal as a line over Monte Carlo histogram steps."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    styles = [dict(color="0.55", alpha=0.55), dict(color="k", ls="--", lw=1.2)]
    for (label, marg), style in zip(mc_marginals.items(), styles):
        e, v = marg.edges[0], marg.values
        if "alpha" in style:
            ax.stairs(v, e, fill=True, label=label, **style)
        else:
            ax.stairs(v, e, label=label, **style)
    if db_marginal is not None:
        c = db_marginal.centers()
        ax.plot(c, db_marginal.values, "o-", color="tab:red", ms=3, lw=1.4, label="DB")
    ax.set_xlabel(axis_label or db_marginal.axes[0])
    ax.set_ylabel("marginal density")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_marginal_2d(marg, path, axis_labels=None, title=None):
    fig, ax = plt.subplots(figsize=(4.6, 3.8))
    e0, e1 = marg.edges
    pm = ax.pcolormesh(e0, e1, marg.values.T, cmap="viridis", shading="flat")
    fig.colorbar(pm, ax=ax, label="density")
    labels = axis_labels or marg.axes
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    if title:
        ax.set_title(title, fontsize=10)
    return _save(fig, path)


def plot_pairplot(snapshot, path, axes=None, max_points=2000, title=None):
    """Scatter grid of the ensemble colored by density, density profile on
    the diagonal."""
    unc = snapshot.uncertain if snapshot.uncertain is not None else np.ones(
        snapshot.states.shape[1], dtype=bool
    )
    names = [n for n, u in zip(snapshot.names, unc) if u]
    if axes is not None:
        names = [n for n in names if n in axes]
    idx = [snapshot.names.index(n) for n in names]
    mask = snapshot.active & ~snapshot.failed
    pts = snapshot.states[mask][:, idx]
    n = snapshot.n[mask]
    if len(pts) > max_points:
        pts, n = pts[:max_points], n[:max_points]
    k = len(names)
    fig, axs = plt.subplots(k, k, figsize=(2.0 * k, 2.0 * k), squeeze=False)
    for i in range(k):
        for j in range(k):
            ax = axs[i][j]
            if i == j:
                ax.scatter(pts[:, i], n, s=2, c=n, cmap="viridis")
                ax.set_ylabel("n", fontsize=7)
            else:
                ax.scatter(pts[:, j], pts[:, i], s=2, c=n, cmap="viridis")
            if i == k - 1:
                ax.set_xlabel(names[j], fontsize=8)
            if j == 0 and i != j:
                ax.set_ylabel(names[i], fontsize=8)
            ax.tick_params(labelsize=6)
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    return _save(fig, path)


def plot_metric_series(reports, path, title=None):
    """Metric-vs-independent-variable curves, one line per labeled series."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for label, rep in reports.items():
        ax.plot(rep.indep, rep.values, "o-", ms=3, label=label)
    any_rep = next(iter(reports.values()))
    ax.set_xlabel("independent variable")
    ax.set_ylabel(any_rep.metric)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    return _save(fig, path)


def plot_compliance(series, path, xlabel="independent variable", title=None,
                    threshold_label=None):
    """Compliance probability curve over time or altitude."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    xs = [c.indep for c in series]
    ps = [c.probability for c in series]
    ax.plot(xs, ps, "o-", color="tab:red", ms=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    if threshold_label:
        ax.set_title(threshold_label, fontsize=10)
    elif title:
        ax.set_title(title, fontsize=10)
    return _save(fig, path)
