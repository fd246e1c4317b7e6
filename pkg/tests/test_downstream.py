"""Classifier fit against a convex-optimizer oracle, exact-Shapley checks for
the linear attributions, and the two task runners end to end."""

import math
from itertools import combinations

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import expit

from disene.downstream import (LogRegModel, TaskMasks, _sample_train_negatives,
                               build_task_masks, edge_features, fit_logreg,
                               linear_shap, plausibility, run_link_task,
                               run_node_task, run_task)
from disene.graph_core import (build_graph, canonical_edge,
                               communities_from_labels, split_edges)


def _toy_dataset(seed=0, n=60, k=3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, k))
    true_beta = np.array([1.5, -2.0, 0.5])
    y = (rng.random(n) < expit(x @ true_beta + 0.3)).astype(float)
    y[0], y[1] = 0.0, 1.0
    return x, y


class TestFitLogreg:
    def test_matches_convex_oracle(self):
        x, y = _toy_dataset()
        l2 = 0.1

        def objective(w):
            z = x @ w[:-1] + w[-1]
            nll = np.mean(np.logaddexp(0.0, z) - y * z)
            return nll + 0.5 * l2 * w[:-1] @ w[:-1]

        ref = minimize(objective, np.zeros(4), method="BFGS",
                       options={"gtol": 1e-12}).x
        model = fit_logreg(x, y, l2=l2)
        np.testing.assert_allclose(model.beta, ref[:-1], atol=1e-3)
        assert model.intercept == pytest.approx(ref[-1], abs=1e-3)

    def test_all_zero_features_learn_the_prior(self):
        x = np.zeros((8, 2))
        y = np.array([1.0] * 6 + [0.0] * 2)
        model = fit_logreg(x, y)
        np.testing.assert_allclose(model.beta, 0.0, atol=1e-6)
        assert model.predict_proba(np.zeros(2)) == pytest.approx(0.75, abs=1e-3)

    def test_stores_training_means(self):
        x, y = _toy_dataset(1)
        model = fit_logreg(x, y)
        np.testing.assert_allclose(model.background_mean, x.mean(axis=0),
                                   atol=1e-12)

    def test_deterministic(self):
        x, y = _toy_dataset(2)
        a, b = fit_logreg(x, y), fit_logreg(x, y)
        np.testing.assert_array_equal(a.beta, b.beta)
        assert a.intercept == b.intercept

    def test_rejects_bad_labels(self):
        x = np.ones((4, 2))
        with pytest.raises(ValueError):
            fit_logreg(x, np.ones(4))          # single class
        with pytest.raises(ValueError):
            fit_logreg(x, np.array([0, 1, 2, 1]))
        with pytest.raises(ValueError):
            fit_logreg(x, np.array([0.0, 1.0]))  # length mismatch


class TestEdgeFeatures:
    def test_hadamard_product(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=(6, 4))
        pairs = np.array([[0, 1], [2, 5], [3, 3]])
        got = edge_features(h, pairs)
        for r, (u, v) in enumerate(pairs.tolist()):
            np.testing.assert_allclose(got[r], h[u] * h[v], atol=1e-12)


def shapley_oracle(model, x, mu):
    """Exact Shapley values of the logit by coalition enumeration."""
    k = len(x)
    out = np.zeros(k)
    for j in range(k):
        rest = [i for i in range(k) if i != j]
        for r in range(k):
            for s in combinations(rest, r):
                w = (math.factorial(len(s)) * math.factorial(k - len(s) - 1)
                     / math.factorial(k))
                xs = mu.copy()
                xs[list(s)] = x[list(s)]
                with_j = xs.copy()
                with_j[j] = x[j]
                out[j] += w * (float(model.logits(with_j))
                               - float(model.logits(xs)))
    return out


class TestLinearShap:
    def test_hand_example(self):
        model = LogRegModel(beta=np.array([2.0, -1.0]), intercept=0.3,
                            background_mean=np.array([0.5, 0.5]))
        psi = linear_shap(model, np.array([1.0, 0.0]))
        np.testing.assert_allclose(psi, [1.0, 0.5], atol=1e-12)

    def test_background_override(self):
        model = LogRegModel(beta=np.array([2.0, -1.0]), intercept=0.3,
                            background_mean=np.array([0.5, 0.5]))
        psi = linear_shap(model, np.array([1.0, 3.0]), np.zeros(2))
        np.testing.assert_allclose(psi, [2.0, -3.0], atol=1e-12)

    def test_batch_shape(self):
        model = LogRegModel(beta=np.ones(3), intercept=0.0,
                            background_mean=np.zeros(3))
        x = np.arange(12.0).reshape(4, 3)
        assert linear_shap(model, x).shape == (4, 3)

    @pytest.mark.parametrize("background", [None, "zeros"])
    def test_efficiency_identity(self, background):
        rng = np.random.default_rng(4)
        model = LogRegModel(beta=rng.normal(size=5), intercept=0.7,
                            background_mean=rng.normal(size=5))
        x = rng.normal(size=5)
        bg = np.zeros(5) if background == "zeros" else None
        mu = model.background_mean if bg is None else bg
        psi = linear_shap(model, x, bg)
        assert psi.sum() == pytest.approx(
            float(model.logits(x)) - float(model.logits(mu)), abs=1e-12)

    def test_matches_exact_shapley_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            k = int(rng.integers(2, 6))
            model = LogRegModel(beta=rng.normal(size=k),
                                intercept=float(rng.normal()),
                                background_mean=rng.normal(size=k))
            x = rng.normal(size=k)
            want = shapley_oracle(model, x, model.background_mean)
            np.testing.assert_allclose(linear_shap(model, x), want, atol=1e-9)


class TestTaskMasks:
    def test_positive_attributions_only(self):
        model = LogRegModel(beta=np.array([1.0, -1.0]), intercept=0.0,
                            background_mean=np.array([0.0, 0.0]))
        feats = np.array([[2.0, 1.0], [0.0, 3.0], [4.0, 0.0]])
        keys = [(0, 1), (1, 2), (2, 3)]
        masks = build_task_masks(model, feats, keys)
        assert masks.kind == "edge"
        assert masks.masks[0] == {(0, 1): 2.0, (2, 3): 4.0}
        assert masks.masks[1] == {}  # negative coefficient, non-negative feats

    def test_node_kind_from_int_keys(self):
        model = LogRegModel(beta=np.ones(1), intercept=0.0,
                            background_mean=np.zeros(1))
        masks = build_task_masks(model, np.array([[1.0], [0.0]]), [0, 1])
        assert masks.kind == "node"
        assert masks.masks[0] == {0: 1.0}


class TestPlausibility:
    def test_hand_weighted_combination(self, two_cliques):
        g, gts = two_cliques
        perfect = {e: 1.0 for e in gts.communities[0].edges}
        useless = {canonical_edge(4, 5): 1.0}  # the bridge: in no community
        masks = TaskMasks(kind="edge", masks=[perfect, useless])
        # f1 = (1.0, 0.0) weighted by psi = (3, 1) -> 0.75
        got = plausibility(np.array([3.0, 1.0]), masks, gts, 0)
        assert got == pytest.approx(0.75, abs=1e-12)

    def test_negative_attributions_are_ignored(self, two_cliques):
        _, gts = two_cliques
        perfect = {e: 1.0 for e in gts.communities[0].edges}
        masks = TaskMasks(kind="edge", masks=[perfect, {(0, 1): 5.0}])
        got = plausibility(np.array([2.0, -7.0]), masks, gts, 0)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_none_when_nothing_positive(self, two_cliques):
        _, gts = two_cliques
        masks = TaskMasks(kind="edge", masks=[{}, {}])
        assert plausibility(np.array([-1.0, 0.0]), masks, gts, 0) is None

    def test_cache_consistency(self, two_cliques):
        _, gts = two_cliques
        perfect = {e: 1.0 for e in gts.communities[1].edges}
        masks = TaskMasks(kind="edge", masks=[perfect])
        cache = {}
        a = plausibility(np.array([1.0]), masks, gts, 1, cache)
        b = plausibility(np.array([1.0]), masks, gts, 1, cache)
        assert a == b == pytest.approx(1.0)
        assert cache == {(0, 1): 1.0}


class TestTrainNegatives:
    def test_valid_distinct_non_edges(self, two_cliques):
        g, _ = two_cliques
        neg = _sample_train_negatives(g, 10, seed=0)
        assert len(neg) == 10
        seen = set()
        for u, v in neg.tolist():
            e = canonical_edge(u, v)
            assert e not in g.edge_set
            assert e not in seen
            seen.add(e)

    def test_deterministic(self, two_cliques):
        g, _ = two_cliques
        np.testing.assert_array_equal(_sample_train_negatives(g, 8, 3),
                                      _sample_train_negatives(g, 8, 3))

    def test_exhaustion_rejected(self):
        g = build_graph(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
        with pytest.raises(ValueError):
            _sample_train_negatives(g, 1, seed=0)  # complete graph


def _indicator_embedding(n=10):
    h = np.zeros((n, 2))
    h[:5, 0] = 1.0
    h[5:, 1] = 1.0
    return h


class TestLinkTask:
    def test_indicator_embedding_solves_the_task(self, two_cliques):
        g, gts = two_cliques
        split = split_edges(g, 0.2, seed=1)
        res = run_link_task(_indicator_embedding(), g, split, gts, seed=0)
        assert res.task == "link"
        assert res.auc_pr > 0.9
        assert res.plausibility_mean is not None
        assert 0.9 < res.plausibility_mean <= 1.0
        for (u, v), gi, val in res.per_instance:
            assert gts.community_of_edge(u, v) == gi
            assert 0.0 <= val <= 1.0

    def test_bridge_test_edge_is_excluded_from_plausibility(self, two_cliques):
        g, gts = two_cliques
        split = split_edges(g, 0.2, seed=1)
        res = run_link_task(_indicator_embedding(), g, split, gts, seed=0)
        keys = {k for k, _, _ in res.per_instance}
        assert canonical_edge(4, 5) not in keys

    def test_dispatcher(self, two_cliques):
        g, gts = two_cliques
        with pytest.raises(ValueError, match="split"):
            run_task("link", _indicator_embedding(), g, gts)
        with pytest.raises(ValueError, match="unknown task"):
            run_task("flink", _indicator_embedding(), g, gts)


@pytest.fixture
def clique_with_background():
    """5-clique (community 0) plus a 15-node background path."""
    edges = [(u, v) for u in range(5) for v in range(u + 1, 5)]
    edges += [(i, i + 1) for i in range(4, 19)]
    g = build_graph(20, edges)
    labels = np.array([0] * 5 + [-1] * 15)
    gts = communities_from_labels(g, labels, exclude={-1})
    return g, gts


class TestNodeTask:
    def test_indicator_embedding_solves_the_task(self, clique_with_background):
        g, gts = clique_with_background
        h = np.zeros((20, 2))
        h[:5, 0] = 1.0
        h[5:, 1] = 1.0
        res = run_node_task(h, g, gts, seed=0)
        assert res.task == "node"
        assert res.auc_pr == pytest.approx(1.0, abs=1e-9)
        if res.per_instance:
            assert res.plausibility_mean == pytest.approx(1.0, abs=1e-9)
            for v, gi, val in res.per_instance:
                assert gts.community_of_node(v) == gi

    def test_requires_background_nodes(self, two_cliques):
        g, gts = two_cliques  # every node belongs to a community
        with pytest.raises(ValueError, match="background"):
            run_node_task(_indicator_embedding(), g, gts, seed=0)
