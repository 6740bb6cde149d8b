"""Hasse diagrams rendered to PNG (optional; needs matplotlib)."""
from __future__ import annotations

from pathlib import Path

from .posets import Poset, PosetPair
from .verdict import label


def hasse_layout(P: Poset) -> dict:
    """Elements placed by longest-chain rank, spread evenly within a rank."""
    rank: dict = {}
    for i in P.topological_order():
        below = [rank[P.elements[a]] for a, b in P.cover_idx if b == i]
        rank[P.elements[i]] = 1 + max(below) if below else 0
    rows: dict[int, list] = {}
    for x in P.elements:
        rows.setdefault(rank[x], []).append(x)
    pos = {}
    for r, xs in rows.items():
        for k, x in enumerate(xs):
            pos[x] = (k - (len(xs) - 1) / 2, r)
    return pos


def draw_hasse(pair: PosetPair | Poset, path: str | Path, title: str = "", highlight=()) -> Path:
    """Write a Hasse diagram; boundary elements are drawn hollow, ``highlight`` in red."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(pair, Poset):
        pair = PosetPair(pair, frozenset())
    P = pair.total
    pos = hasse_layout(P)
    width = max((sum(1 for y in pos.values() if y[1] == r) for r in {p[1] for p in pos.values()}), default=1)
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * width), max(3, 1.2 * (max((p[1] for p in pos.values()),
                                                                          default=0) + 1))))
    for a, b in P.covers:
        (x0, y0), (x1, y1) = pos[a], pos[b]
        ax.plot([x0, x1], [y0, y1], color="0.6", lw=0.8, zorder=1)
    hl = set(highlight)
    for x, (u, v) in pos.items():
        colour = "tab:red" if x in hl else "tab:blue"
        face = "white" if x in pair.boundary else colour
        ax.scatter([u], [v], s=60, facecolors=face, edgecolors=colour, zorder=2)
        if len(P) <= 40:
            ax.annotate(label(x), (u, v), textcoords="offset points", xytext=(0, 7), ha="center", fontsize=7)
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=9)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
