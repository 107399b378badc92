"""Figure rendering for the report commands (files only, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .tradeoff import breakpoints, sample_curve  # noqa: E402


def plot_tradeoff(k: int, r: int, path, num: int = 400):
    """Threshold curve alpha*(gamma) in units of M, with the corners marked."""
    pts = sample_curve(k, r, num=num)
    corners = breakpoints(1, k, r)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot([g for g, _ in pts], [a for _, a in pts], lw=1.5, label=f"k={k}, r={r}")
    ax.scatter([float(p.gamma) for p in corners], [float(p.alpha) for p in corners], s=14, zorder=3)
    msr, mbr = corners[0], corners[-1]
    ax.annotate("MSR", (float(msr.gamma), float(msr.alpha)), textcoords="offset points", xytext=(6, 6))
    ax.annotate("MBR", (float(mbr.gamma), float(mbr.alpha)), textcoords="offset points", xytext=(6, 6))
    ax.set_xlabel("repair bandwidth  γ / M")
    ax.set_ylabel("storage per node  α / M")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)
    return Path(path)


def plot_comparison(rows, path):
    """Grouped bars of the graph-based and classical MBR storage per table row."""
    labels = [r[0] for r in rows]
    ours = [float(r[1]) for r in rows]
    classical = [float(r[2]) for r in rows]
    x = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(5, 0.8 * len(rows) + 2), 4))
    ax.bar([i - 0.2 for i in x], ours, width=0.4, label="graph MBR")
    ax.bar([i + 0.2 for i in x], classical, width=0.4, label="classical MBR")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("α = γ  (units of M)")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)
    return Path(path)
