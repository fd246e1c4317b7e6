"""Interpretability metrics over explanation masks and embeddings.

All logarithms are natural; correlation is Pearson, computed in 64-bit on
mean-subtracted data. Metrics that can be undefined (overlap consistency,
positional coherence) return (None, reason) instead of a number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .explain import Explanation
from .graph_core import EdgeMask, Graph, GroundTruth, bfs_distances


def pearson(x, y) -> float:
    """Pearson correlation; nan when either side has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson expects two equal-length vectors")
    if len(x) < 2:
        return float("nan")
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
    if den == 0.0:
        return float("nan")
    return float(xc @ yc) / den


def weighted_f1(mask_items, mask_support, truth: frozenset, truth_size: int) -> float:
    """F1 with weighted precision and binarized recall.

    Precision weights each key by its mask value; recall counts the strictly
    positive support against the full truth size. Zero mask or zero truth
    gives 0.
    """
    if truth_size == 0:
        return 0.0
    total = 0.0
    hit = 0.0
    for key, w in mask_items:
        total += w
        if key in truth:
            hit += w
    if total <= 0.0:
        return 0.0
    prec = hit / total
    rec = len(mask_support & truth) / truth_size
    if prec <= 0.0 or rec <= 0.0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)


def comprehensibility(mask: EdgeMask, gts: GroundTruth) -> tuple[float, int | None]:
    """Best F1 of the mask against any ground-truth community.

    Returns (score, index of the best community). An empty mask scores 0
    with no community.
    """
    if len(mask) == 0:
        return 0.0, None
    items = list(mask.items())
    support = mask.support()
    best, best_i = 0.0, None
    for i, c in enumerate(gts.communities):
        f1 = weighted_f1(items, support, c.edges, len(c.edges))
        if best_i is None or f1 > best:
            best, best_i = f1, i
    return best, best_i


def sparsity(mask: EdgeMask, total_edges: int) -> float:
    """Normalized Shannon entropy of the mask's weight distribution.

    0 means all mass on one edge, 1 means uniform over all `total_edges`
    edges of the graph. Empty masks score 0.
    """
    if total_edges < 2:
        raise ValueError("sparsity needs a graph with at least 2 edges")
    if len(mask) == 0:
        return 0.0
    w = np.array([x for _, x in mask.items()], dtype=np.float64)
    q = w / w.sum()
    ent = -float(np.sum(q * np.log(q)))
    return ent / math.log(total_edges)


def jaccard(a: frozenset, b: frozenset) -> float:
    """|intersection| / |union|; two empty sets give 0."""
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def _condensed_pairs(k):
    return [(d, l) for d in range(k) for l in range(d + 1, k)]


def overlap_consistency(h: np.ndarray, expl: Explanation) -> tuple[float | None, str | None]:
    """Correlation between explanation overlap and embedding correlation.

    Over all dimension pairs d < l, Pearson between JSI(E_d, E_l) and
    rho^2(H_:,d, H_:,l). A constant embedding column contributes rho = 0 for
    its pairs. Undefined for K < 3 or when either condensed vector has zero
    variance.
    """
    k = h.shape[1]
    if k < 3:
        return None, "overlap consistency needs K >= 3"
    pairs = _condensed_pairs(k)
    jsi = np.array([jaccard(expl.edge_sets[d], expl.edge_sets[l]) for d, l in pairs])
    rho2 = np.empty(len(pairs))
    for i, (d, l) in enumerate(pairs):
        r = pearson(h[:, d], h[:, l])
        rho2[i] = 0.0 if math.isnan(r) else r * r
    value = pearson(jsi, rho2)
    if math.isnan(value):
        return None, "zero variance in JSI or rho^2 vector"
    return value, None


def proximity_to_set(g: Graph, nodes, dist_cache: dict | None = None) -> np.ndarray:
    """zeta(u, S) = sum_{v in S} 1 / (1 + dist(u, v)) for every node u.

    Unreachable pairs contribute 0 (1 / (1 + inf)). `dist_cache` memoizes
    BFS rows across calls.
    """
    zeta = np.zeros(g.num_nodes, dtype=np.float64)
    for v in nodes:
        v = int(v)
        if dist_cache is not None:
            if v not in dist_cache:
                dist_cache[v] = bfs_distances(g, v)
            row = dist_cache[v]
        else:
            row = bfs_distances(g, v)
        zeta += 1.0 / (1.0 + row)
    return zeta


def fpc(h: np.ndarray, expl: Explanation, d: int, l: int, g: Graph,
        dist_cache: dict | None = None) -> float | None:
    """Feature-positional coherence: Pearson(zeta(., V_d), H_:,l).

    None when V_d is empty or either vector is constant.
    """
    nodes = expl.node_sets[d]
    if not nodes:
        return None
    zeta = proximity_to_set(g, nodes, dist_cache)
    r = pearson(zeta, h[:, l])
    return None if math.isnan(r) else r


def fpc_matrix(h: np.ndarray, expl: Explanation, g: Graph) -> np.ndarray:
    """All FPC(d, l) values; undefined entries are nan."""
    k = h.shape[1]
    out = np.full((k, k), np.nan)
    cache: dict = {}
    zetas = []
    for d in range(k):
        nodes = expl.node_sets[d]
        zetas.append(proximity_to_set(g, nodes, cache) if nodes else None)
    for d in range(k):
        if zetas[d] is None:
            continue
        for l in range(k):
            r = pearson(zetas[d], h[:, l])
            if not math.isnan(r):
                out[d, l] = r
    return out


def positional_coherence(h: np.ndarray, expl: Explanation, g: Graph,
                         num_permutations: int = 100, seed: int = 0,
                         fpc_mat: np.ndarray | None = None) -> tuple[float | None, str | None]:
    """Diagonal FPC sum over its average under random dimension permutations.

    Permutations are drawn uniformly (fixed points included). Undefined FPC
    entries are skipped from numerator and permutation sums alike; needs at
    least 2 defined diagonal entries and a non-negligible denominator.
    """
    mat = fpc_matrix(h, expl, g) if fpc_mat is None else fpc_mat
    k = mat.shape[0]
    diag = np.diag(mat)
    if np.sum(~np.isnan(diag)) < 2:
        return None, "fewer than 2 defined diagonal FPC values"
    numer = float(np.nansum(diag))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF9C]))
    sums = np.empty(num_permutations)
    idx = np.arange(k)
    for i in range(num_permutations):
        perm = rng.permutation(k)
        sums[i] = np.nansum(mat[idx, perm])
    denom = float(sums.mean())
    if abs(denom) < 1e-9:
        return None, "permutation-average denominator is ~0"
    return numer / denom, None


def auc_pr(scores, labels) -> float:
    """Average precision: step-wise integral of the precision-recall curve.

    Scores are ranked descending with a stable sort; tied scores share one
    threshold. Both classes must be present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    npos = int(np.sum(labels == 1))
    nneg = int(np.sum(labels == 0))
    if npos + nneg != len(labels):
        raise ValueError("labels must be 0/1")
    if npos == 0 or nneg == 0:
        raise ValueError("both classes must be present")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order].astype(np.float64)
    tp = np.cumsum(y)
    ranks = np.arange(1, len(y) + 1, dtype=np.float64)
    # last index of each tied block marks one threshold
    boundary = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    prec = tp[boundary] / ranks[boundary]
    rec = tp[boundary] / npos
    prev = np.concatenate([[0.0], rec[:-1]])
    return float(np.sum((rec - prev) * prec))


@dataclass
class MetricsReport:
    """One evaluation row: scalar metrics plus per-dimension breakdowns."""
    metadata: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    per_dimension: dict = field(default_factory=dict)
    nulls: dict = field(default_factory=dict)   # metric name -> reason

    def to_json(self) -> dict:
        return {"metadata": self.metadata, "metrics": self.metrics,
                "per_dimension": self.per_dimension, "nulls": self.nulls}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def compute_report(g: Graph, h: np.ndarray, expl: Explanation,
                   gts: GroundTruth | None = None,
                   num_permutations: int = 100, seed: int = 0,
                   metadata: dict | None = None,
                   toggles: dict | None = None) -> MetricsReport:
    """Embedding-level metrics for one trained model.

    `toggles` may switch off individual metrics by name
    (comprehensibility, sparsity, ovc, poc). Ground truth is only needed
    for comprehensibility.
    """
    on = lambda name: toggles is None or toggles.get(name, True)
    rep = MetricsReport(metadata=metadata or {})
    k = h.shape[1]
    rep.metrics["num_dims"] = k
    rep.metrics["empty_dims"] = len(expl.empty_dims)

    if on("comprehensibility") and gts is not None and gts.communities:
        scores, best = [], []
        for d in range(k):
            s, i = comprehensibility(expl.masks[d], gts)
            scores.append(s)
            best.append(i)
        rep.per_dimension["comprehensibility"] = scores
        rep.per_dimension["best_community"] = best
        rep.metrics["comprehensibility_mean"] = float(np.mean(scores))

    if on("sparsity"):
        sp = [sparsity(expl.masks[d], g.num_edges) for d in range(k)]
        rep.per_dimension["sparsity"] = sp
        rep.metrics["sparsity_score"] = 1.0 - float(np.mean(sp))

    if on("ovc"):
        val, reason = overlap_consistency(h, expl)
        if val is None:
            rep.metrics["ovc"] = None
            rep.nulls["ovc"] = reason
        else:
            rep.metrics["ovc"] = val

    if on("poc"):
        mat = fpc_matrix(h, expl, g)
        rep.per_dimension["fpc_diag"] = [None if math.isnan(x) else float(x)
                                         for x in np.diag(mat)]
        val, reason = positional_coherence(h, expl, g, num_permutations, seed,
                                           fpc_mat=mat)
        if val is None:
            rep.metrics["poc"] = None
            rep.nulls["poc"] = reason
        else:
            rep.metrics["poc"] = val

    return rep
