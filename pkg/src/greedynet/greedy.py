"""Greedy node-by-node pre-training with a running output and amnesia.

A hidden layer of width d2 is built one node at a time.  Each node i is a
tiny d1 -> 1 -> d1 autoencoder trained by SGD on its own subset S_i, but its
reconstruction blends in the frozen output of the nodes before it:

    blended = amnesia * R[n] + w_out_i * tanh(w_in_i . [x_n; 1])

where R[n] is the stored sum of the earlier nodes' output contributions for
example n.  Training node i therefore costs O(|S_i| * epochs * d1) no matter
how wide the layer already is; R absorbs the earlier nodes with one add per
component.  After node i trains, its contribution is accumulated into R and
its weights never change again.

Amnesia interpolates between extremes: 0 trains every node independently,
1 trains each node on the residual of a full forward pass.  The first node
of a layer has no predecessors; it instead learns the layer's output bias,
which is frozen into R along with its contribution.

Subset assignment is what separates the two algorithms:

* unsupervised (gn): node 0 trains on all examples and acts as a global
  feature; the rest of the layer splits the data by how well node 0
  reconstructs it, easiest examples to node 1.
* class-based (gcn): node j serves class j mod c, and each class's
  examples are split evenly among its nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .network import (
    NS_ASSIGN,
    NS_NODE,
    NS_SHUFFLE,
    OpCounter,
    accumulate_ops,
    derive_seed,
    node_step_ops,
)

__all__ = [
    "GreedyConfig",
    "RunningOutput",
    "train_seed_node",
    "train_node",
    "rank_by_reconstruction_error",
    "distribute_gn",
    "distribute_gcn",
    "greedy_layer",
    "greedy_pretrain_stack",
]

# A single hidden node feeds each output weight a fan-in of one plus bias.
OUT_BOUND = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class GreedyConfig:
    """SGD settings for node-by-node pre-training."""

    epochs: int = 300
    lr: float = 0.001
    l2: float = 1.0
    seed: int = 0
    amnesia: float = 0.4

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 strength must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0.0 <= self.amnesia <= 1.0:
            raise ValueError("amnesia must lie in [0, 1]")


class RunningOutput:
    """Sum of the frozen nodes' output contributions, one row per example.

    Row n holds sum_j w_out_j * tanh(w_in_j . [x_n; 1]) over accumulated
    nodes j, plus the layer's output bias once the first node lands.  Each
    node may be accumulated exactly once.
    """

    def __init__(self, n_examples: int, n_features: int) -> None:
        self.values = np.zeros((n_examples, n_features), dtype=np.float64)
        self._seen: set[int] = set()

    @property
    def accumulated(self) -> tuple[int, ...]:
        return tuple(sorted(self._seen))

    def accumulate(
        self,
        node_index: int,
        w_in: np.ndarray,
        w_out: np.ndarray,
        inputs: np.ndarray,
        bias: np.ndarray | None = None,
        counter: OpCounter | None = None,
    ) -> None:
        """Add one trained node's contribution for every example."""
        if node_index in self._seen:
            raise ValueError(f"node {node_index} already accumulated")
        n, d1 = self.values.shape
        if inputs.shape != (n, d1):
            raise ValueError("inputs do not match the stored shape")
        h = np.tanh(inputs @ w_in[:d1] + w_in[d1])
        self.values += np.outer(h, w_out)
        if bias is not None:
            self.values += bias
        self._seen.add(node_index)
        if counter is not None:
            counter.count(*accumulate_ops(d1, bias is not None), times=n)


def _node_rngs(cfg: GreedyConfig, layer_index: int, node_index: int):
    init = np.random.default_rng(derive_seed(cfg.seed, NS_NODE, layer_index, node_index))
    shuffle = np.random.default_rng(derive_seed(cfg.seed, NS_SHUFFLE, layer_index, node_index))
    return init, shuffle


def _sgd_node(
    X: np.ndarray,
    subset: np.ndarray,
    cfg: GreedyConfig,
    layer_index: int,
    node_index: int,
    running: RunningOutput | None,
    train_bias: bool,
    counter: OpCounter | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    n_sub = len(subset)
    d1 = X.shape[1]
    init, shuffle = _node_rngs(cfg, layer_index, node_index)
    in_bound = 1.0 / math.sqrt(d1 + 1)
    w_in = init.uniform(-in_bound, in_bound, d1 + 1)
    w_out = init.uniform(-OUT_BOUND, OUT_BOUND, d1)
    bias = init.uniform(-OUT_BOUND, OUT_BOUND, d1) if train_bias else None
    decay = 2.0 * cfg.l2 / n_sub
    kern = get_kernels()
    step = node_step_ops(d1, with_bias=train_bias)
    for _ in range(cfg.epochs):
        order = np.ascontiguousarray(shuffle.permutation(subset), dtype=np.int64)
        if train_bias:
            kern.seed_node_sgd_epoch(X, order, w_in, w_out, bias, cfg.lr, decay)
        else:
            kern.node_sgd_epoch(
                X, running.values, order, w_in, w_out, cfg.amnesia, cfg.lr, decay
            )
        if counter is not None:
            counter.count(*step, times=n_sub)
            counter.count_visit(n_sub)
    return w_in, w_out, bias


def train_seed_node(
    inputs: np.ndarray,
    cfg: GreedyConfig,
    layer_index: int = 0,
    subset: np.ndarray | None = None,
    counter: OpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Train the first node of a layer; it learns the output bias.

    By default it sees every example (the unsupervised variant's global
    feature); pass ``subset`` to restrict it (the class-based variant).
    Returns (w_in, w_out, bias).
    """
    X = np.ascontiguousarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("inputs must be a non-empty matrix")
    if subset is None:
        subset = np.arange(X.shape[0], dtype=np.int64)
    else:
        subset = np.ascontiguousarray(subset, dtype=np.int64)
        if len(subset) == 0:
            raise ValueError("subset must not be empty")
    w_in, w_out, bias = _sgd_node(
        X, subset, cfg, layer_index, 0, running=None, train_bias=True, counter=counter
    )
    return w_in, w_out, bias


def train_node(
    node_index: int,
    subset: np.ndarray,
    inputs: np.ndarray,
    running: RunningOutput,
    cfg: GreedyConfig,
    layer_index: int = 0,
    counter: OpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Train node i > 0 on its subset against the stored running output.

    Only this node's weights move; everything earlier is frozen inside
    ``running``.  Returns (w_in, w_out).
    """
    if node_index < 1:
        raise ValueError("node 0 is the seed node; use train_seed_node")
    X = np.ascontiguousarray(inputs, dtype=np.float64)
    subset = np.ascontiguousarray(subset, dtype=np.int64)
    if len(subset) == 0:
        raise ValueError("subset must not be empty")
    if running.values.shape != X.shape:
        raise ValueError("running output does not match inputs")
    w_in, w_out, _ = _sgd_node(
        X, subset, cfg, layer_index, node_index, running, train_bias=False, counter=counter
    )
    return w_in, w_out


def rank_by_reconstruction_error(
    inputs: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    bias: np.ndarray,
) -> np.ndarray:
    """Example indices sorted by the seed node's squared reconstruction error.

    Ascending: the best-reconstructed examples come first.  Ties keep their
    original order.
    """
    X = np.asarray(inputs, dtype=np.float64)
    d1 = X.shape[1]
    h = np.tanh(X @ w_in[:d1] + w_in[d1])
    residual = np.outer(h, w_out) + bias - X
    errors = np.einsum("ij,ij->i", residual, residual)
    return np.argsort(errors, kind="stable")


def distribute_gn(ranked: np.ndarray, width: int) -> list[np.ndarray]:
    """Subset per node for the unsupervised variant.

    Node 0 keeps every example.  The ranked list is cut into width - 1
    contiguous blocks, sized as evenly as possible with the remainder going
    to the earliest blocks, so nodes 1..width-1 partition the data.
    """
    ranked = np.asarray(ranked, dtype=np.int64)
    n = len(ranked)
    if width < 1:
        raise ValueError("width must be positive")
    subsets = [np.arange(n, dtype=np.int64)]
    if width == 1:
        return subsets
    groups = width - 1
    base, extra = divmod(n, groups)
    if base == 0:
        raise ValueError(f"{n} examples cannot feed {groups} nodes")
    start = 0
    for g in range(groups):
        size = base + (1 if g < extra else 0)
        subsets.append(ranked[start : start + size].copy())
        start += size
    return subsets


def distribute_gcn(
    labels: np.ndarray, width: int, class_count: int, seed: int
) -> list[np.ndarray]:
    """Subset per node for the class-based variant.

    Node j serves class j mod class_count, so a layer of width c*k gives
    each class k nodes.  Within a class the examples are shuffled once
    (seeded) and dealt evenly to the class's nodes, remainder to the
    earliest.  Every node must end up with at least one example.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if width < class_count:
        raise ValueError(
            f"layer width {width} cannot cover {class_count} classes; "
            "every class needs at least one node"
        )
    rng = np.random.default_rng(seed)
    subsets: list[np.ndarray | None] = [None] * width
    for k in range(class_count):
        nodes = list(range(k, width, class_count))
        members = rng.permutation(np.flatnonzero(labels == k))
        if len(members) < len(nodes):
            raise ValueError(
                f"class {k} has {len(members)} examples for {len(nodes)} nodes"
            )
        base, extra = divmod(len(members), len(nodes))
        start = 0
        for g, node in enumerate(nodes):
            size = base + (1 if g < extra else 0)
            subsets[node] = np.ascontiguousarray(members[start : start + size], dtype=np.int64)
            start += size
    return subsets  # type: ignore[return-value]


def greedy_layer(
    features: np.ndarray,
    width: int,
    cfg: GreedyConfig,
    mode: str,
    labels: np.ndarray | None = None,
    class_count: int = 0,
    layer_index: int = 0,
    counter: OpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Build one hidden layer node by node; returns (weights, codes).

    ``mode`` is "gn" (unsupervised assignment) or "gcn" (class-based,
    ``labels`` and ``class_count`` required).  The weight matrix stacks the
    nodes' input weights, one row each, bias in the last column.
    """
    mode = mode.lower()
    if mode not in ("gn", "gcn"):
        raise ValueError(f"unknown greedy mode {mode!r}")
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("features must be a non-empty matrix")
    if width < 1:
        raise ValueError("layer width must be positive")
    n, d1 = X.shape

    if mode == "gcn":
        if labels is None or class_count < 2:
            raise ValueError("class-based assignment needs labels and class_count")
        subsets = distribute_gcn(
            labels, width, class_count, derive_seed(cfg.seed, NS_ASSIGN, layer_index)
        )
        seed_subset = subsets[0]
    else:
        subsets = None
        seed_subset = None  # seed node sees everything

    w_in0, w_out0, bias0 = train_seed_node(X, cfg, layer_index, seed_subset, counter)
    running = RunningOutput(n, d1)
    running.accumulate(0, w_in0, w_out0, X, bias=bias0, counter=counter)
    rows = [w_in0]

    if width > 1:
        if mode == "gn":
            ranked = rank_by_reconstruction_error(X, w_in0, w_out0, bias0)
            subsets = distribute_gn(ranked, width)
        for i in range(1, width):
            w_in, w_out = train_node(i, subsets[i], X, running, cfg, layer_index, counter)
            running.accumulate(i, w_in, w_out, X, counter=counter)
            rows.append(w_in)

    weights = np.vstack(rows)
    codes = np.tanh(X @ weights[:, :d1].T + weights[:, d1])
    if counter is not None:
        counter.count(mults=(d1 + 1) * width, activations=width, times=n)
    return weights, codes


def greedy_pretrain_stack(
    features: np.ndarray,
    arch: tuple[int, ...],
    mode: str,
    cfg: GreedyConfig,
    labels: np.ndarray | None = None,
    class_count: int = 0,
    counter: OpCounter | None = None,
) -> list[np.ndarray]:
    """Pre-train a stack of hidden layers, each built node by node."""
    if not arch:
        raise ValueError("arch needs at least one hidden layer")
    codes = np.ascontiguousarray(features, dtype=np.float64)
    layers: list[np.ndarray] = []
    for i, width in enumerate(arch):
        w, codes = greedy_layer(
            codes, width, cfg, mode, labels, class_count, layer_index=i, counter=counter
        )
        layers.append(w)
    return layers
