"""Downstream tasks on frozen embeddings, with attribution-based plausibility.

Link prediction trains a logistic regression on Hadamard edge features
(train edges vs sampled non-edges); node classification trains on raw node
embeddings (planted-community membership vs background). Both tasks then
explain the classifier with exact per-feature attributions for linear
models: Psi_j(x) = beta_j (x_j - mu_j) against the training-feature means.

The positive parts of Psi_j over a global universe (all graph edges, or all
nodes) form per-feature masks B^(j); plausibility of one prediction is the
attribution-weighted F1 of those masks against the instance's own
ground-truth community.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .graph_core import EdgeSplit, Graph, GroundTruth, canonical_edge
from .metrics import auc_pr, weighted_f1


@dataclass
class LogRegModel:
    beta: np.ndarray
    intercept: float
    background_mean: np.ndarray  # training-feature means, one per feature

    def logits(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.beta + self.intercept

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return expit(self.logits(x))


def fit_logreg(features: np.ndarray, labels: np.ndarray, l2: float = 1e-4,
               iters: int = 2000, lr: float = 0.05, seed: int = 0) -> LogRegModel:
    """Binary logistic regression by full-batch Adam.

    Objective: mean log loss plus 0.5 * l2 * ||beta||^2 (intercept
    unpenalized). Weights start at zero, so the fit is deterministic; the
    seed parameter is accepted for interface stability.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("features must be (N, K) with one label per row")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))) or len(classes) != 2:
        raise ValueError("labels must contain both classes 0 and 1")
    n, k = x.shape
    beta = np.zeros(k)
    b = 0.0
    m = np.zeros(k + 1)
    v = np.zeros(k + 1)
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, iters + 1):
        z = x @ beta + b
        r = expit(z) - y
        grad = np.concatenate([x.T @ r / n + l2 * beta, [r.mean()]])
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        step = lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
        beta -= step[:k]
        b -= step[k]
    return LogRegModel(beta=beta, intercept=float(b),
                       background_mean=x.mean(axis=0))


def edge_features(h: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Hadamard features h(u) * h(v) for each pair row."""
    pairs = np.asarray(pairs, dtype=np.int64)
    return h[pairs[:, 0]].astype(np.float64) * h[pairs[:, 1]].astype(np.float64)


def linear_shap(model: LogRegModel, x: np.ndarray,
                background: np.ndarray | None = None) -> np.ndarray:
    """Exact attributions for a linear model: Psi_j = beta_j (x_j - mu_j).

    Satisfies the efficiency identity sum_j Psi_j = logit(x) - mean
    background logit. Works on one instance (K,) or a batch (N, K).
    `background` overrides the stored training-feature means; the task
    runners pass zeros, the absence state of non-negative activations.
    """
    x = np.asarray(x, dtype=np.float64)
    mu = model.background_mean if background is None else background
    return model.beta * (x - mu)


@dataclass
class TaskMasks:
    """Per-feature attribution masks over a global instance universe."""
    kind: str                       # "edge" or "node"
    masks: list[dict]               # feature j -> {key: positive weight}

    def support(self, j) -> frozenset:
        return frozenset(self.masks[j])


def build_task_masks(model: LogRegModel, features: np.ndarray, keys: list,
                     background: np.ndarray | None = None) -> TaskMasks:
    """B^(j) = max(0, Psi_j) over every universe instance, per feature.

    `keys` names each feature row: canonical edge tuples for the link task,
    node ints for the node task. Non-positive attributions are dropped, so
    mask support is strictly positive.
    """
    psi = linear_shap(model, features, background)
    kind = "edge" if keys and isinstance(keys[0], tuple) else "node"
    masks = []
    for j in range(psi.shape[1]):
        col = psi[:, j]
        masks.append({keys[i]: float(col[i]) for i in np.nonzero(col > 0.0)[0]})
    return TaskMasks(kind=kind, masks=masks)


def plausibility(psi: np.ndarray, masks: TaskMasks, gts: GroundTruth,
                 g_index: int, f1_cache: dict | None = None) -> float | None:
    """Attribution-weighted mask F1 against the instance's own community.

    P = sum_j f(Psi_j) F1(B^(j), C^g) / sum_j f(Psi_j) with f = max(0, .).
    None when no attribution is positive (zero denominator).
    """
    f = np.maximum(np.asarray(psi, dtype=np.float64), 0.0)
    tot = f.sum()
    if tot <= 0.0:
        return None
    comm = gts.communities[g_index]
    truth = comm.edges if masks.kind == "edge" else frozenset(comm.nodes)
    acc = 0.0
    for j in np.nonzero(f > 0.0)[0]:
        key = (int(j), g_index)
        if f1_cache is not None and key in f1_cache:
            f1 = f1_cache[key]
        else:
            mask = masks.masks[j]
            f1 = weighted_f1(mask.items(), frozenset(mask), truth, len(truth))
            if f1_cache is not None:
                f1_cache[key] = f1
        acc += f[j] * f1
    return acc / tot


@dataclass
class TaskResult:
    task: str
    auc_pr: float
    plausibility_mean: float | None
    per_instance: list = field(default_factory=list)   # (key, g_index, value)
    skipped: int = 0
    model: LogRegModel | None = None


def _sample_train_negatives(g: Graph, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD0]))
    n_pairs = g.num_nodes * (g.num_nodes - 1) // 2
    if n_pairs - g.num_edges < count:
        raise ValueError("not enough non-edges for classifier negatives")
    out = []
    taken = set()
    while len(out) < count:
        u = int(rng.integers(g.num_nodes))
        v = int(rng.integers(g.num_nodes))
        if u == v:
            continue
        e = canonical_edge(u, v)
        if e in g.edge_set or e in taken:
            continue
        taken.add(e)
        out.append(e)
    return np.array(out, dtype=np.int64)


def run_link_task(h: np.ndarray, g: Graph, split: EdgeSplit, gts: GroundTruth,
                  seed: int = 0, l2: float = 1e-4) -> TaskResult:
    """Link prediction plus per-edge plausibility.

    The classifier learns train edges vs an equal number of sampled
    non-edges. AUC-PR is scored on held-out edges vs the split's negatives.
    Plausibility is averaged over test edges that lie inside a ground-truth
    community; the masks B^(j) span all edges of the full graph.

    Attributions use the zero-vector SHAP background: for non-negative
    embeddings a zero feature is an absent feature, so Psi_j is the
    feature's actual contribution to this instance's logit. A mean
    background instead flips the masks of negative-coefficient features
    onto the complement of their region, which buries the informative
    dimensions (most visible on the node task).
    """
    train_neg = _sample_train_negatives(g, len(split.train_edges), seed)
    x_train = np.concatenate([edge_features(h, split.train_edges),
                              edge_features(h, train_neg)])
    y_train = np.concatenate([np.ones(len(split.train_edges)),
                              np.zeros(len(train_neg))])
    model = fit_logreg(x_train, y_train, l2=l2, seed=seed)

    x_test = np.concatenate([edge_features(h, split.test_edges),
                             edge_features(h, split.test_negatives)])
    y_test = np.concatenate([np.ones(len(split.test_edges)),
                             np.zeros(len(split.test_negatives))])
    auc = auc_pr(model.predict_proba(x_test), y_test)

    zero_bg = np.zeros_like(model.background_mean)
    keys = [canonical_edge(int(u), int(v)) for u, v in g.edges.tolist()]
    masks = build_task_masks(model, edge_features(h, g.edges), keys, zero_bg)

    cache: dict = {}
    per_instance = []
    skipped = 0
    for u, v in split.test_edges.tolist():
        gi = gts.community_of_edge(u, v)
        if gi is None:
            continue
        psi = linear_shap(model, edge_features(h, np.array([[u, v]]))[0],
                          zero_bg)
        val = plausibility(psi, masks, gts, gi, cache)
        if val is None:
            skipped += 1
        else:
            per_instance.append(((u, v), gi, val))
    mean = float(np.mean([p[2] for p in per_instance])) if per_instance else None
    return TaskResult(task="link", auc_pr=auc, plausibility_mean=mean,
                      per_instance=per_instance, skipped=skipped, model=model)


def run_node_task(h: np.ndarray, g: Graph, gts: GroundTruth, seed: int = 0,
                  test_fraction: float = 0.2, l2: float = 1e-4) -> TaskResult:
    """Community membership classification plus per-node plausibility.

    Nodes inside any planted community are the positive class, background
    nodes the negative one; needs both (so ring/sbm style graphs without
    background nodes are rejected). Masks B^(j) span all nodes and, as in
    the link task, attributions are taken against the zero background.
    """
    y = np.zeros(g.num_nodes)
    for c in gts.communities:
        for v in c.nodes:
            y[v] = 1.0
    if y.min() == y.max():
        raise ValueError("node task needs both community and background nodes")

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD1]))
    order = rng.permutation(g.num_nodes)
    n_test = int(math.floor(test_fraction * g.num_nodes + 0.5))
    if n_test < 1 or n_test >= g.num_nodes:
        raise ValueError("degenerate node split")
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    if len(np.unique(y[train_idx])) < 2 or len(np.unique(y[test_idx])) < 2:
        raise ValueError("node split left a side single-class; use another seed")

    x = h.astype(np.float64)
    model = fit_logreg(x[train_idx], y[train_idx], l2=l2, seed=seed)
    auc = auc_pr(model.predict_proba(x[test_idx]), y[test_idx])

    zero_bg = np.zeros_like(model.background_mean)
    masks = build_task_masks(model, x, list(range(g.num_nodes)), zero_bg)
    cache: dict = {}
    per_instance = []
    skipped = 0
    for v in test_idx.tolist():
        if y[v] != 1.0:
            continue
        gi = gts.community_of_node(v)
        if gi is None:
            continue
        psi = linear_shap(model, x[v], zero_bg)
        val = plausibility(psi, masks, gts, gi, cache)
        if val is None:
            skipped += 1
        else:
            per_instance.append((v, gi, val))
    mean = float(np.mean([p[2] for p in per_instance])) if per_instance else None
    return TaskResult(task="node", auc_pr=auc, plausibility_mean=mean,
                      per_instance=per_instance, skipped=skipped, model=model)


def run_task(task: str, h: np.ndarray, g: Graph, gts: GroundTruth,
             split: EdgeSplit | None = None, seed: int = 0,
             l2: float = 1e-4) -> TaskResult:
    if task == "link":
        if split is None:
            raise ValueError("link task needs an edge split")
        return run_link_task(h, g, split, gts, seed=seed, l2=l2)
    if task == "node":
        return run_node_task(h, g, gts, seed=seed, l2=l2)
    raise ValueError(f"unknown task {task!r}")
