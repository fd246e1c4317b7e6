"""Undirected graph container plus file I/O, edge splits and BFS distances.

Everything downstream (sampling, training, explanation, metrics) works on the
`Graph` type defined here: simple undirected graphs over a dense node index
range 0..num_nodes-1, no self loops, no duplicate edges, no weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

INF = math.inf


def canonical_edge(u: int, v: int) -> tuple[int, int]:
    """Unordered pair identity: (u, v) with u < v."""
    return (u, v) if u < v else (v, u)


class Graph:
    """Immutable undirected graph.

    Nodes are dense integers 0..num_nodes-1. Edges are stored both as a
    lexicographically sorted (E, 2) int array with u < v per row and as
    per-node sorted neighbor arrays. `node_ids` optionally keeps the original
    string tokens of a loaded edge list (index-aligned).

    Instances are meant to be treated as immutable; mutate nothing after
    construction.
    """

    def __init__(self, num_nodes: int, edges: np.ndarray,
                 adjacency: list[np.ndarray], node_ids: list[str] | None):
        self.num_nodes = num_nodes
        self.edges = edges
        self.adjacency = adjacency
        self.node_ids = node_ids
        self._edge_set = frozenset(map(tuple, edges.tolist()))
        self.degrees = np.array([len(a) for a in adjacency], dtype=np.int64)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self._edge_set

    @property
    def edge_set(self) -> frozenset:
        return self._edge_set

    def edge_index(self) -> dict[tuple[int, int], int]:
        """Map canonical edge -> row index into self.edges."""
        return {tuple(e): i for i, e in enumerate(self.edges.tolist())}

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


def build_graph(num_nodes: int, edges, node_ids=None) -> Graph:
    """Construct a Graph from an edge iterable, cleaning as it goes.

    Self loops are dropped, duplicates (in either orientation) collapse to
    one undirected edge, and endpoints must lie in [0, num_nodes). Isolated
    nodes are allowed: num_nodes is authoritative, not the edge list.
    """
    if num_nodes < 1:
        raise ValueError("graph needs at least one node")
    seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            continue
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise ValueError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
        seen.add(canonical_edge(u, v))
    if seen:
        arr = np.array(sorted(seen), dtype=np.int64)
    else:
        arr = np.empty((0, 2), dtype=np.int64)
    adjacency = _adjacency_from_edges(num_nodes, arr)
    return Graph(num_nodes, arr, adjacency, list(node_ids) if node_ids else None)


def _adjacency_from_edges(num_nodes, edges):
    nbrs = [[] for _ in range(num_nodes)]
    for u, v in edges.tolist():
        nbrs[u].append(v)
        nbrs[v].append(u)
    return [np.array(sorted(a), dtype=np.int64) for a in nbrs]


def connected_components(g: Graph) -> list[list[int]]:
    """Connected components as node lists, each sorted, ordered by first node."""
    unvisited = np.ones(g.num_nodes, dtype=bool)
    comps = []
    for s in range(g.num_nodes):
        if not unvisited[s]:
            continue
        comp = [s]
        unvisited[s] = False
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in g.adjacency[u].tolist():
                    if unvisited[w]:
                        unvisited[w] = False
                        comp.append(w)
                        nxt.append(w)
            frontier = nxt
        comps.append(sorted(comp))
    return comps


def largest_component_subgraph(g: Graph) -> Graph:
    """Restrict to the largest connected component, reindexing densely.

    Ties go to the component containing the smallest node index. Original
    node order (and node_ids alignment) is preserved under the new indexing.
    """
    comps = connected_components(g)
    best = max(comps, key=len)  # max() keeps the first on ties
    keep = np.array(best, dtype=np.int64)
    remap = -np.ones(g.num_nodes, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    edges = [(remap[u], remap[v]) for u, v in g.edges.tolist() if remap[u] >= 0 and remap[v] >= 0]
    ids = [g.node_ids[i] for i in best] if g.node_ids else None
    return build_graph(len(best), edges, ids)


def load_edge_list(path, largest_component: bool = True) -> Graph:
    """Load a whitespace-separated edge list.

    Each non-comment line holds two node tokens; '#' starts a comment line and
    blank lines are skipped. Tokens are remapped to dense indices in order of
    first appearance. By default the graph is then restricted to its largest
    connected component (synthetic generators bypass this entirely by
    constructing Graph objects directly).
    """
    index: dict[str, int] = {}
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 2:
                raise ValueError(f"{path}:{lineno}: expected two node tokens, got {len(toks)}")
            pair = []
            for t in toks:
                if t not in index:
                    index[t] = len(index)
                pair.append(index[t])
            edges.append(tuple(pair))
    if len(index) < 2:
        raise ValueError(f"{path}: fewer than 2 nodes after cleaning")
    ids = [None] * len(index)
    for tok, i in index.items():
        ids[i] = tok
    g = build_graph(len(index), edges, ids)
    if largest_component:
        g = largest_component_subgraph(g)
        if g.num_nodes < 2:
            raise ValueError(f"{path}: fewer than 2 nodes after cleaning")
    return g


def load_labels(path, g: Graph) -> np.ndarray:
    """Read 'node_token label_int' lines into an array aligned with g.

    Tokens that did not survive graph loading (e.g. dropped with a smaller
    component) are ignored. Every node of g must receive a label.
    """
    if g.node_ids is None:
        lookup = {str(i): i for i in range(g.num_nodes)}
    else:
        lookup = {tok: i for i, tok in enumerate(g.node_ids)}
    labels = np.full(g.num_nodes, np.iinfo(np.int64).min, dtype=np.int64)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node label', got {len(toks)} tokens")
            if toks[0] in lookup:
                labels[lookup[toks[0]]] = int(toks[1])
    missing = int((labels == np.iinfo(np.int64).min).sum())
    if missing:
        raise ValueError(f"{path}: {missing} graph nodes have no label")
    return labels


@dataclass(frozen=True)
class Community:
    """One ground-truth community: its node set and its internal edge set."""
    nodes: frozenset
    edges: frozenset


@dataclass
class GroundTruth:
    """Ground-truth communities, optionally with per-node labels attached."""
    communities: list[Community]
    labels: np.ndarray | None = None
    _edge_lookup: dict = field(default=None, repr=False, compare=False)
    _node_lookup: dict = field(default=None, repr=False, compare=False)

    def community_of_edge(self, u, v):
        """Index of the community whose edge set contains (u, v), else None."""
        if self._edge_lookup is None:
            self._edge_lookup = {}
            for i, c in enumerate(self.communities):
                for e in c.edges:
                    self._edge_lookup.setdefault(e, i)
        return self._edge_lookup.get(canonical_edge(u, v))

    def community_of_node(self, v):
        if self._node_lookup is None:
            self._node_lookup = {}
            for i, c in enumerate(self.communities):
                for n in c.nodes:
                    self._node_lookup.setdefault(n, i)
        return self._node_lookup.get(int(v))


def communities_from_labels(g: Graph, labels: np.ndarray,
                            exclude: set | None = None) -> GroundTruth:
    """Group intra-label edges into communities.

    For each label value, the community edge set is every edge whose two
    endpoints carry that label; node set is the endpoints of those edges.
    Labels listed in `exclude` (e.g. a -1 background marker) form no
    community. Communities with no internal edge are dropped.
    """
    labels = np.asarray(labels)
    if len(labels) != g.num_nodes:
        raise ValueError("labels length does not match num_nodes")
    exclude = exclude or set()
    by_label: dict[int, list] = {}
    for u, v in g.edges.tolist():
        if labels[u] == labels[v] and labels[u] not in exclude:
            by_label.setdefault(int(labels[u]), []).append((u, v))
    comms = []
    for lab in sorted(by_label):
        es = by_label[lab]
        nodes = frozenset(n for e in es for n in e)
        comms.append(Community(nodes=nodes, edges=frozenset(es)))
    return GroundTruth(communities=comms, labels=labels)


def ground_truth_to_json(g: Graph, gt: GroundTruth) -> dict:
    """Serialize communities as edge-index lists (indices into g.edges)."""
    eidx = g.edge_index()
    payload = {"communities": []}
    for c in gt.communities:
        payload["communities"].append({
            "nodes": sorted(c.nodes),
            "edge_indices": sorted(eidx[e] for e in c.edges),
        })
    if gt.labels is not None:
        payload["labels"] = [int(x) for x in gt.labels]
    return payload


def ground_truth_from_json(g: Graph, payload: dict) -> GroundTruth:
    comms = []
    for c in payload["communities"]:
        edges = frozenset(tuple(g.edges[i].tolist()) for i in c["edge_indices"])
        comms.append(Community(nodes=frozenset(int(n) for n in c["nodes"]), edges=edges))
    labels = None
    if "labels" in payload:
        labels = np.array(payload["labels"], dtype=np.int64)
        if len(labels) != g.num_nodes:
            raise ValueError("ground-truth labels length does not match graph")
    return GroundTruth(communities=comms, labels=labels)


def load_ground_truth(path, g: Graph) -> GroundTruth:
    with open(path) as fh:
        return ground_truth_from_json(g, json.load(fh))


@dataclass
class EdgeSplit:
    """Train/test edge split with matched non-edge negatives."""
    train_edges: np.ndarray      # (T, 2)
    test_edges: np.ndarray       # (S, 2)
    test_negatives: np.ndarray   # (S, 2), non-edges of the full graph


def split_edges(g: Graph, test_fraction: float, seed: int) -> EdgeSplit:
    """Uniform edge holdout plus an equal number of sampled non-edges.

    Exactly round(test_fraction * |E|) edges go to the test side. Negatives
    are distinct node pairs rejection-sampled against the full edge set.
    Deterministic for a given seed.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    m = g.num_edges
    n_test = int(math.floor(test_fraction * m + 0.5))
    if n_test < 1:
        raise ValueError(f"graph too small: round({test_fraction} * {m}) < 1 test edge")
    n_pairs = g.num_nodes * (g.num_nodes - 1) // 2
    if n_pairs - m < n_test:
        raise ValueError("not enough non-edges to sample negatives")
    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    test_idx = np.sort(order[:n_test])
    train_mask = np.ones(m, dtype=bool)
    train_mask[test_idx] = False
    negatives = _sample_non_edges(g, n_test, rng)
    return EdgeSplit(train_edges=g.edges[train_mask],
                     test_edges=g.edges[test_idx],
                     test_negatives=negatives)


def _sample_non_edges(g: Graph, count: int, rng) -> np.ndarray:
    chosen: list = []
    taken = set()
    attempts = 0
    limit = 200 * max(count, 1) + 10000
    while len(chosen) < count:
        attempts += 1
        if attempts > limit:
            # dense corner: enumerate what is left instead of rejection sampling
            rest = [e for e in _all_non_edges(g) if e not in taken]
            need = count - len(chosen)
            pick = rng.choice(len(rest), size=need, replace=False)
            chosen.extend(rest[i] for i in sorted(pick))
            break
        u = int(rng.integers(g.num_nodes))
        v = int(rng.integers(g.num_nodes))
        if u == v:
            continue
        e = canonical_edge(u, v)
        if e in g.edge_set or e in taken:
            continue
        taken.add(e)
        chosen.append(e)
    return np.array(chosen, dtype=np.int64)


def _all_non_edges(g: Graph):
    out = []
    for u in range(g.num_nodes):
        for v in range(u + 1, g.num_nodes):
            if (u, v) not in g.edge_set:
                out.append((u, v))
    return out


def train_subgraph(g: Graph, split: EdgeSplit) -> Graph:
    """Graph over the same node set containing only the training edges."""
    return build_graph(g.num_nodes, split.train_edges, g.node_ids)


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from one source; unreachable nodes get inf."""
    dist = np.full(g.num_nodes, INF)
    dist[source] = 0.0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for w in g.adjacency[u].tolist():
                if dist[w] == INF:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def distances_to_anchors(g: Graph, anchors) -> dict[int, np.ndarray]:
    """BFS distance row per anchor node: {anchor: (num_nodes,) float array}.

    Each row is independent, so callers may parallelize across anchors;
    results do not depend on ordering.
    """
    anchors = list(anchors)
    if not anchors:
        raise ValueError("anchors must be non-empty")
    return {int(a): bfs_distances(g, int(a)) for a in anchors}


class EdgeMask:
    """Sparse non-negative edge weights keyed by unordered node pairs.

    Used for explanation masks M^(d) and downstream attribution masks B^(j).
    Zero or negative weights are not stored; support is strictly positive.
    """

    def __init__(self, weights=None):
        self._w: dict[tuple[int, int], float] = {}
        if weights:
            for (u, v), w in (weights.items() if isinstance(weights, dict) else weights):
                self.add(u, v, w)

    def add(self, u, v, w):
        w = float(w)
        if w > 0.0:
            self._w[canonical_edge(int(u), int(v))] = w

    def get(self, u, v) -> float:
        return self._w.get(canonical_edge(int(u), int(v)), 0.0)

    def items(self):
        return self._w.items()

    def support(self) -> frozenset:
        return frozenset(self._w)

    def nodes(self) -> frozenset:
        return frozenset(n for e in self._w for n in e)

    def total(self) -> float:
        return float(sum(self._w.values()))

    def __len__(self):
        return len(self._w)

    def __contains__(self, edge):
        return canonical_edge(*edge) in self._w

    def __repr__(self):
        return f"EdgeMask({len(self._w)} edges, total={self.total():.4g})"
