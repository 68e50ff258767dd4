"""Node-by-node training oracles.

The running-output trick claims a node trained against the stored sum R
sees exactly the gradients it would get from a full forward pass through
all frozen predecessors (at amnesia 1), at a fraction of the cost.  These
tests pin that equivalence against the independently tested full-network
backprop, plus the bookkeeping invariants around R, subset assignment, and
freezing.
"""

import numpy as np
import pytest

from greedynet._py_kernels import node_gradient
from greedynet.backend import use_backend
from greedynet.greedy import (
    GreedyConfig,
    RunningOutput,
    distribute_gcn,
    distribute_gn,
    greedy_layer,
    greedy_pretrain_stack,
    rank_by_reconstruction_error,
    train_node,
    train_seed_node,
)
from greedynet.network import Mlp, OpCounter, backprop, derive_seed, NS_ASSIGN


@pytest.fixture
def toy(rng):
    """Small instance: 12 examples, 5 features, one trained seed node."""
    X = np.ascontiguousarray(rng.uniform(-1, 1, (12, 5)))
    cfg = GreedyConfig(epochs=3, lr=0.01, l2=0.5, seed=11, amnesia=1.0)
    w_in0, w_out0, bias0 = train_seed_node(X, cfg)
    running = RunningOutput(12, 5)
    running.accumulate(0, w_in0, w_out0, X, bias=bias0)
    return X, cfg, (w_in0, w_out0, bias0), running


class TestRunningSumEquivalence:
    def test_node_gradient_matches_full_forward(self, toy, rng):
        """At amnesia 1 the blended reconstruction equals a genuine forward
        pass through both nodes, so the node's gradients must match full
        backprop's slices for that node."""
        X, _, (w_in0, w_out0, bias0), running = toy
        w_in = rng.uniform(-0.4, 0.4, 6)
        w_out = rng.uniform(-0.7, 0.7, 5)

        w1_full = np.vstack([w_in0, w_in])
        w2_full = np.column_stack([w_out0, w_out, bias0])
        mlp = Mlp([w1_full, w2_full])

        for n in range(X.shape[0]):
            g_in, g_out = node_gradient(X[n], running.values[n], w_in, w_out, amnesia=1.0)
            g1_full, g2_full = backprop(mlp, X[n], X[n], "squared")
            assert np.max(np.abs(g_in - g1_full[1])) <= 1e-10
            assert np.max(np.abs(g_out - g2_full[:, 1])) <= 1e-10

    def test_accumulate_matches_batch_forward(self, toy, rng):
        """R after k nodes equals the batch forward sum over those nodes."""
        X, cfg, (w_in0, w_out0, bias0), running = toy
        ins, outs = [w_in0], [w_out0]
        for i in (1, 2):
            w_in, w_out = train_node(i, np.arange(12), X, running, cfg)
            running.accumulate(i, w_in, w_out, X)
            ins.append(w_in)
            outs.append(w_out)

        w1 = np.vstack(ins)
        h = np.tanh(X @ w1[:, :5].T + w1[:, 5])
        expected = h @ np.column_stack(outs).T + bias0
        assert np.max(np.abs(running.values - expected)) <= 1e-12

    def test_kernel_step_applies_node_gradient(self, toy):
        """One kernel step on one example moves weights by exactly
        -lr * (gradient + decay terms)."""
        X, _, _, running = toy
        w_in = np.linspace(-0.3, 0.3, 6)
        w_out = np.linspace(0.5, -0.5, 5)
        g_in, g_out = node_gradient(X[4], running.values[4], w_in, w_out, amnesia=0.7)
        lr, decay = 0.01, 0.002
        expect_out = w_out - lr * (g_out + decay * w_out)
        expect_in = w_in.copy()
        expect_in[:5] -= lr * (g_in[:5] + decay * w_in[:5])
        expect_in[5] -= lr * g_in[5]

        with use_backend("python") as kern:
            wi, wo = w_in.copy(), w_out.copy()
            kern.node_sgd_epoch(X, running.values, np.array([4]), wi, wo, 0.7, lr, decay)
        np.testing.assert_array_equal(wo, expect_out)
        np.testing.assert_array_equal(wi, expect_in)

    def test_double_accumulate_rejected(self, toy):
        X, _, (w_in0, w_out0, bias0), running = toy
        with pytest.raises(ValueError, match="already accumulated"):
            running.accumulate(0, w_in0, w_out0, X)
        assert running.accumulated == (0,)


class TestAmnesiaZero:
    def test_independent_of_predecessors(self, toy):
        """At amnesia 0 the stored rows must not influence training at all."""
        X, _, _, running = toy
        cfg = GreedyConfig(epochs=4, lr=0.01, l2=0.5, seed=3, amnesia=0.0)
        subset = np.arange(12)

        garbage = RunningOutput(12, 5)
        garbage.values[:] = 1e6
        a = train_node(1, subset, X, running, cfg)
        b = train_node(1, subset, X, garbage, cfg)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_matches_handwritten_sgd(self, toy):
        """A plain-python single-node autoencoder loop with the same seeds
        reproduces train_node bit for bit at amnesia 0."""
        X, _, _, running = toy
        cfg = GreedyConfig(epochs=2, lr=0.01, l2=0.5, seed=5, amnesia=0.0)
        subset = np.arange(12)
        with use_backend("python"):
            w_in, w_out = train_node(1, subset, X, running, cfg)

        from greedynet.network import NS_NODE, NS_SHUFFLE

        init = np.random.default_rng(derive_seed(cfg.seed, NS_NODE, 0, 1))
        bound = 1.0 / np.sqrt(6)
        oi = init.uniform(-bound, bound, 6)
        oo = init.uniform(-1 / np.sqrt(2), 1 / np.sqrt(2), 5)
        shuffle = np.random.default_rng(derive_seed(cfg.seed, NS_SHUFFLE, 0, 1))
        decay = 2.0 * cfg.l2 / 12
        import math

        for _ in range(cfg.epochs):
            for n in shuffle.permutation(subset):
                x = X[n]
                # math.tanh, like the kernels: np.tanh rounds differently
                h = math.tanh(oi[:5] @ x + oi[5])
                delta = 2.0 * (oo * h - x)
                dh = (delta @ oo) * (1.0 - h * h)
                oo -= cfg.lr * (delta * h + decay * oo)
                oi[:5] -= cfg.lr * (dh * x + decay * oi[:5])
                oi[5] -= cfg.lr * dh
        np.testing.assert_array_equal(w_in, oi)
        np.testing.assert_array_equal(w_out, oo)


class TestAssignment:
    def test_gn_even_split(self):
        subsets = distribute_gn(np.arange(100), 5)
        assert len(subsets) == 5
        np.testing.assert_array_equal(subsets[0], np.arange(100))
        assert [len(s) for s in subsets[1:]] == [25, 25, 25, 25]

    def test_gn_remainder_to_front(self):
        ranked = np.arange(10)[::-1].copy()
        subsets = distribute_gn(ranked, 4)
        assert [len(s) for s in subsets[1:]] == [4, 3, 3]
        np.testing.assert_array_equal(subsets[1], [9, 8, 7, 6])
        np.testing.assert_array_equal(subsets[3], [2, 1, 0])

    def test_gn_partition(self, rng):
        ranked = rng.permutation(37)
        subsets = distribute_gn(ranked, 6)
        merged = np.sort(np.concatenate(subsets[1:]))
        np.testing.assert_array_equal(merged, np.arange(37))

    def test_gn_width_one_and_starvation(self):
        assert len(distribute_gn(np.arange(5), 1)) == 1
        with pytest.raises(ValueError, match="cannot feed"):
            distribute_gn(np.arange(2), 4)

    def test_gcn_round_robin_and_partition(self):
        labels = np.repeat([0, 1, 2], 8)
        subsets = distribute_gcn(labels, 6, 3, seed=4)
        assert len(subsets) == 6
        for node, subset in enumerate(subsets):
            assert np.all(labels[subset] == node % 3)
            assert len(subset) == 4
        merged = np.sort(np.concatenate(subsets))
        np.testing.assert_array_equal(merged, np.arange(24))

    def test_gcn_uneven_class_sizes(self):
        labels = np.array([0] * 5 + [1] * 2)
        subsets = distribute_gcn(labels, 4, 2, seed=0)
        assert sorted(len(s) for s in (subsets[0], subsets[2])) == [2, 3]
        assert [len(subsets[1]), len(subsets[3])] == [1, 1]

    def test_gcn_errors(self):
        labels = np.repeat([0, 1, 2], 4)
        with pytest.raises(ValueError, match="cover"):
            distribute_gcn(labels, 2, 3, seed=0)
        with pytest.raises(ValueError, match="class 0 has"):
            distribute_gcn(np.array([0, 1, 1, 1, 1, 1, 1, 1]), 4, 2, seed=0)

    def test_gcn_deterministic(self):
        labels = np.repeat([0, 1], 10)
        a = distribute_gcn(labels, 4, 2, seed=9)
        b = distribute_gcn(labels, 4, 2, seed=9)
        c = distribute_gcn(labels, 4, 2, seed=10)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))


class TestRanking:
    def test_ascending_by_error(self, rng):
        X = np.ascontiguousarray(rng.uniform(-1, 1, (20, 4)))
        w_in = rng.uniform(-0.5, 0.5, 5)
        w_out = rng.uniform(-0.5, 0.5, 4)
        bias = rng.uniform(-0.5, 0.5, 4)
        order = rank_by_reconstruction_error(X, w_in, w_out, bias)
        h = np.tanh(X @ w_in[:4] + w_in[4])
        errs = np.sum((np.outer(h, w_out) + bias - X) ** 2, axis=1)
        assert np.all(np.diff(errs[order]) >= 0)

    def test_stable_ties(self):
        X = np.zeros((6, 3))
        w_in = np.zeros(4)
        w_out = np.zeros(3)
        bias = np.zeros(3)
        np.testing.assert_array_equal(
            rank_by_reconstruction_error(X, w_in, w_out, bias), np.arange(6)
        )


class TestLayerConstruction:
    def test_gn_layer_replays_manual_composition(self, rng):
        """The layer builder is exactly seed + rank + distribute + per-node
        training; recomputing any node independently gives the same row,
        so later nodes provably never modify earlier ones."""
        X = np.ascontiguousarray(rng.uniform(-1, 1, (18, 4)))
        cfg = GreedyConfig(epochs=3, lr=0.01, l2=1.0, seed=2, amnesia=0.6)
        weights, codes = greedy_layer(X, 4, cfg, "gn")

        w_in0, w_out0, bias0 = train_seed_node(X, cfg)
        running = RunningOutput(18, 4)
        running.accumulate(0, w_in0, w_out0, X, bias=bias0)
        subsets = distribute_gn(rank_by_reconstruction_error(X, w_in0, w_out0, bias0), 4)
        np.testing.assert_array_equal(weights[0], w_in0)
        for i in (1, 2, 3):
            w_in, w_out = train_node(i, subsets[i], X, running, cfg)
            running.accumulate(i, w_in, w_out, X)
            np.testing.assert_array_equal(weights[i], w_in)
        np.testing.assert_allclose(codes, np.tanh(X @ weights[:, :4].T + weights[:, 4]), atol=0)

    def test_gcn_layer_replays_manual_composition(self, rng):
        X = np.ascontiguousarray(rng.uniform(-1, 1, (20, 4)))
        labels = np.repeat([0, 1], 10)
        cfg = GreedyConfig(epochs=2, lr=0.01, seed=6, amnesia=0.4)
        weights, _ = greedy_layer(X, 4, cfg, "gcn", labels=labels, class_count=2)

        subsets = distribute_gcn(labels, 4, 2, derive_seed(cfg.seed, NS_ASSIGN, 0))
        w_in0, w_out0, bias0 = train_seed_node(X, cfg, subset=subsets[0])
        running = RunningOutput(20, 4)
        running.accumulate(0, w_in0, w_out0, X, bias=bias0)
        np.testing.assert_array_equal(weights[0], w_in0)
        for i in (1, 2, 3):
            w_in, _ = train_node(i, subsets[i], X, running, cfg)
            np.testing.assert_array_equal(weights[i], w_in)
            running.accumulate(i, w_in, _, X)

    def test_visit_totals(self, rng):
        """Unsupervised: seed sees all N, the rest partition N, so a layer
        costs 2*N*E visits.  Class-based: the subsets partition N outright."""
        X = np.ascontiguousarray(rng.uniform(-1, 1, (30, 4)))
        labels = np.repeat([0, 1, 2], 10)
        cfg = GreedyConfig(epochs=2, seed=0)

        counter = OpCounter()
        greedy_layer(X, 4, cfg, "gn", counter=counter)
        assert counter.sgd_visits == 2 * 30 * 2

        counter = OpCounter()
        greedy_layer(X, 6, cfg, "gcn", labels=labels, class_count=3, counter=counter)
        assert counter.sgd_visits == 30 * 2

    def test_width_one_layer(self, rng):
        X = np.ascontiguousarray(rng.uniform(-1, 1, (10, 3)))
        cfg = GreedyConfig(epochs=2, seed=1)
        weights, codes = greedy_layer(X, 1, cfg, "gn")
        assert weights.shape == (1, 4)
        assert codes.shape == (10, 1)

    def test_stack_deterministic_and_seed_sensitive(self, rng):
        X = np.ascontiguousarray(rng.uniform(-1, 1, (24, 5)))
        labels = np.repeat([0, 1], 12)
        cfg = GreedyConfig(epochs=2, seed=3)
        a = greedy_pretrain_stack(X, (4, 3), "gcn", cfg, labels, 2)
        b = greedy_pretrain_stack(X, (4, 3), "gcn", cfg, labels, 2)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        c = greedy_pretrain_stack(X, (4, 3), "gcn", GreedyConfig(epochs=2, seed=4), labels, 2)
        assert not np.array_equal(a[0], c[0])

    def test_validation(self, rng):
        X = np.ascontiguousarray(rng.uniform(-1, 1, (10, 3)))
        cfg = GreedyConfig(epochs=1)
        with pytest.raises(ValueError):
            greedy_layer(X, 2, cfg, "mystery")
        with pytest.raises(ValueError, match="labels and class_count"):
            greedy_layer(X, 2, cfg, "gcn")
        with pytest.raises(ValueError):
            GreedyConfig(amnesia=1.5)
        with pytest.raises(ValueError):
            GreedyConfig(amnesia=-0.1)
        with pytest.raises(ValueError, match="seed node"):
            train_node(0, np.arange(10), X, RunningOutput(10, 3), cfg)
