"""Per-dimension explanation subgraphs from edge attributions.

For an edge (u, v) the model's logit decomposes exactly as
sum_d h_d(u) h_d(v). Centered against the mean contribution of dimension d
over a background edge set,

    phi_d(u, v) = h_d(u) h_d(v) - mu_d,

the positive part of phi_d over the graph's edges is dimension d's
explanation mask; its strictly positive support is the explanation
subgraph E_d with node set V_d.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph_core import EdgeMask, Graph


@dataclass
class AttributionContext:
    """Background means mu_d and the edges they were computed over."""
    mu: np.ndarray            # (K,)
    background: np.ndarray    # (B, 2)

    @classmethod
    def build(cls, h: np.ndarray, background: np.ndarray):
        background = np.asarray(background, dtype=np.int64)
        if len(background) == 0:
            raise ValueError("background edge set must be non-empty")
        prods = h[background[:, 0]].astype(np.float64) * h[background[:, 1]].astype(np.float64)
        return cls(mu=prods.mean(axis=0), background=background)


def attribution(h: np.ndarray, ctx: AttributionContext, d: int, u: int, v: int) -> float:
    """phi_d(u, v), defined for any node pair, edge or not."""
    return float(h[u, d]) * float(h[v, d]) - float(ctx.mu[d])


@dataclass
class Explanation:
    """All K explanation masks plus their supports."""
    masks: list[EdgeMask]
    edge_sets: list[frozenset]
    node_sets: list[frozenset]
    context: AttributionContext

    @property
    def num_dims(self):
        return len(self.masks)

    @property
    def empty_dims(self) -> list[int]:
        return [d for d in range(self.num_dims) if not self.edge_sets[d]]


def build_explanations(h: np.ndarray, g: Graph,
                       background: np.ndarray | None = None) -> Explanation:
    """Masks M^(d) = max(0, phi_d) over the graph's edges, every dimension.

    `background` defaults to all edges of g; pass a training edge set to
    center against what the model saw during optimization.
    """
    bg = g.edges if background is None else np.asarray(background, dtype=np.int64)
    ctx = AttributionContext.build(h, bg)
    eu, ev = g.edges[:, 0], g.edges[:, 1]
    phi = h[eu].astype(np.float64) * h[ev].astype(np.float64) - ctx.mu[None, :]
    masks, edge_sets, node_sets = [], [], []
    for d in range(h.shape[1]):
        idx = np.nonzero(phi[:, d] > 0.0)[0]
        m = EdgeMask()
        for i in idx.tolist():
            m.add(int(eu[i]), int(ev[i]), float(phi[i, d]))
        masks.append(m)
        edge_sets.append(m.support())
        node_sets.append(m.nodes())
    return Explanation(masks=masks, edge_sets=edge_sets, node_sets=node_sets, context=ctx)


def affiliation_matrix(h: np.ndarray, expl: Explanation) -> np.ndarray:
    """Node-dimension affiliations F_ud = sum_{v in V_d} phi_d(u, v).

    Closed form: the sum over the explanation's node set expands to
    H_ud * (sum_{v in V_d} H_vd) - |V_d| mu_d. Dimensions with empty node
    sets get a zero column.
    """
    v, k = h.shape
    out = np.zeros((v, k), dtype=np.float64)
    for d in range(k):
        nodes = np.fromiter(expl.node_sets[d], dtype=np.int64)
        if len(nodes) == 0:
            continue
        col = h[:, d].astype(np.float64)
        out[:, d] = col * col[nodes].sum() - len(nodes) * expl.context.mu[d]
    return out


def reconstruction_logit(h: np.ndarray, ctx: AttributionContext, u: int, v: int) -> float:
    """sum_d phi_d(u, v) + sum_d mu_d; equals the raw edge logit exactly."""
    k = h.shape[1]
    return float(sum(attribution(h, ctx, d, u, v) for d in range(k)) + ctx.mu.sum())


def explanation_to_json(expl: Explanation) -> dict:
    dims = []
    for d in range(expl.num_dims):
        items = sorted(expl.masks[d].items())
        dims.append({
            "dim": d,
            "edges": [[int(u), int(v)] for (u, v), _ in items],
            "weights": [w for _, w in items],
            "nodes": sorted(int(n) for n in expl.node_sets[d]),
            "empty": len(items) == 0,
        })
    return {
        "num_dims": expl.num_dims,
        "background_size": int(len(expl.context.background)),
        "mu": [float(x) for x in expl.context.mu],
        "dims": dims,
    }


def save_explanation(path, expl: Explanation):
    with open(path, "w") as fh:
        json.dump(explanation_to_json(expl), fh, indent=1, sort_keys=True)
        fh.write("\n")
