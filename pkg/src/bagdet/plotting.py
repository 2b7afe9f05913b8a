"""Figures written next to the JSON reports."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _style(ax, title):
    ax.set_title(title, fontsize=11)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)


def plot_witness_counts(report: dict, path: Path) -> Path:
    """Grouped bars of every view and the query on D and D'."""
    entries = report["counts"]
    names = [e["name"] for e in entries]
    left = [e["d"] or 0 for e in entries]
    right = [e["d_prime"] or 0 for e in entries]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(names) + 2), 3.2))
    xs = range(len(names))
    ax.bar([x - 0.2 for x in xs], left, width=0.4, label="D", color="#4c72b0")
    ax.bar([x + 0.2 for x in xs], right, width=0.4, label="D'", color="#dd8452")
    if max(left + right + [1]) > 1000:
        ax.set_yscale("symlog")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("homomorphism count")
    ax.legend(frameon=False)
    _style(ax, "answers on the witness pair")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_cone(eval_matrix, p, p_prime, path: Path) -> Path:
    """For k = 2: the cone spanned by the evaluation-matrix columns, with p and p'."""
    cols = [[float(Fraction(eval_matrix[i][j])) for i in range(2)] for j in range(2)]
    pts = [[float(Fraction(x)) for x in p], [float(Fraction(x)) for x in p_prime]]
    reach = 1.3 * max(max(abs(c) for col in cols for c in col), max(abs(c) for pt in pts for c in pt), 1.0)
    fig, ax = plt.subplots(figsize=(4, 4))
    scale = [reach / max(abs(c[0]), abs(c[1]), 1e-12) for c in cols]
    ray = [[c[0] * s, c[1] * s] for c, s in zip(cols, scale)]
    ax.fill([0, ray[0][0], ray[1][0]], [0, ray[0][1], ray[1][1]], color="0.85", zorder=0)
    for c in cols:
        ax.annotate("", xy=c, xytext=(0, 0), arrowprops=dict(arrowstyle="-|>", lw=1.5))
    ax.plot(*pts[0], "o", color="#4c72b0", label="p")
    ax.plot(*pts[1], "s", color="#dd8452", label="p'")
    ax.set_xlim(0, reach)
    ax.set_ylim(0, reach)
    ax.set_xlabel("w1 count")
    ax.set_ylabel("w2 count")
    ax.legend(frameon=False)
    _style(ax, "answer-vector cone")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_prefix_graph(graph, reach, moves, path: Path) -> Path:
    """Prefixes on a line, arcs for view edges; reachable prefixes filled."""
    from matplotlib.patches import Arc

    n = len(graph.q)
    word = graph.q.word
    fig, ax = plt.subplots(figsize=(max(4, 1.1 * n + 2), 2.8))
    on_path = set()
    pos = 0
    for vi, sign in moves or ():
        step = len(graph.views[vi]) * sign
        on_path.add((min(pos, pos + step), max(pos, pos + step), vi))
        pos += step
    for start, end, vi in graph.edges:
        width = end - start
        hl = (start, end, vi) in on_path
        ax.add_patch(
            Arc(((start + end) / 2, 0), width, width * 0.8, theta1=0, theta2=180,
                color="#c44e52" if hl else "0.5", lw=2 if hl else 1)
        )
    for i in range(n + 1):
        label = "".join(word[:i]) or "ε"
        filled = i in reach
        ax.plot(i, 0, "o", ms=12, mfc="#4c72b0" if filled else "white", mec="#4c72b0", zorder=3)
        ax.text(i, -0.35, label, ha="center", va="top", fontsize=9)
    ax.set_xlim(-0.7, n + 0.7)
    ax.set_ylim(-0.9, max(1.0, 0.45 * n))
    ax.axis("off")
    _style(ax, f"prefix graph of {graph.q}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
