"""DOT and CSV outputs for posterior summaries."""
from __future__ import annotations

import csv
import io
from typing import Mapping

import numpy as np

from .analysis import ConsensusOrder, EdgeMarginals

PALETTE = (
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
)


def _quote(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def group_colors(groups) -> dict:
    """Colour per group, fixed by sorted group name so reruns agree."""
    names = sorted({str(g) for g in groups})
    return {g: PALETTE[i % len(PALETTE)] for i, g in enumerate(names)}


def export_dot(consensus: ConsensusOrder, groups: Mapping | None = None, names: Mapping | None = None) -> str:
    """Digraph of the consensus display edges; strong edges red, nodes filled by group."""
    groups = groups or {}
    names = names or {}
    colors = group_colors(groups.get(a, "") for a in consensus.labels)
    lines = ["digraph consensus {", "  node [style=filled];"]
    for a in consensus.labels:
        g = str(groups.get(a, ""))
        label = names.get(a, a)
        lines.append(f"  {_quote(a)} [label={_quote(label)}, fillcolor={_quote(colors[g])}];")
    order = {a: i for i, a in enumerate(consensus.labels)}
    for a, b in sorted(consensus.display, key=lambda e: (order[e[0]], order[e[1]])):
        lines.append(f"  {_quote(a)} -> {_quote(b)} [color={consensus.edge_color((a, b))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def marginals_csv(marg: EdgeMarginals) -> str:
    """Long format: one row per ordered pair."""
    rows = [("above", "below", "probability", "mc_se")]
    se = marg.se if marg.se is not None else np.zeros_like(marg.matrix)
    for i, a in enumerate(marg.labels):
        for j, b in enumerate(marg.labels):
            if i != j:
                rows.append((a, b, repr(float(marg.matrix[i, j])), repr(float(se[i, j]))))
    return _csv(rows)


def rank_table_csv(ranks: Mapping) -> str:
    rows = [("group", "mean_rank", "mc_se")]
    for g in sorted(ranks, key=str):
        mean, se = ranks[g]
        rows.append((g, repr(mean), repr(se)))
    return _csv(rows)


def depth_csv(freqs) -> str:
    rows = [("depth", "frequency")]
    rows.extend((d + 1, repr(float(f))) for d, f in enumerate(freqs))
    return _csv(rows)
