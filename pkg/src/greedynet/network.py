"""Feedforward network core: tanh layers, exact gradients, operation accounting.

Weight convention used throughout the package: a layer mapping d_in inputs to
d_out units is a single (d_out, d_in + 1) matrix whose last column is the bias,
applied to the augmented vector [x; 1].  Hidden layers are always tanh; the
output head is either linear (squared-error pre-training) or softmax
(classification).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

__all__ = [
    "Mlp",
    "OpCounter",
    "derive_seed",
    "init_weights",
    "forward",
    "forward_batch",
    "codes_batch",
    "backprop",
    "sgd_update",
    "softmax",
    "ae_ops_per_example",
    "ae_step_ops",
    "sv_step_ops",
    "node_step_ops",
    "accumulate_ops",
    "softmax_step_ops",
    "mlp_step_ops",
    "save_weights",
    "load_weights",
]

CHECKPOINT_FORMAT = "greedynet-mlp-v1"

# Seed-derivation namespaces.  Changing any of these changes every seeded
# run in the package, so they are frozen here rather than scattered around.
NS_LAYER = 1
NS_NODE = 2
NS_SHUFFLE = 3
NS_CLASSIFIER = 4
NS_FINETUNE = 5
NS_ASSIGN = 6
NS_SPLIT = 7


def derive_seed(root: int, *path: int) -> int:
    """Derive a child seed from a root seed and an integer path.

    Distinct paths give statistically independent streams, and the mapping is
    stable across runs and platforms (it only uses numpy's SeedSequence).
    The path length is folded in because SeedSequence ignores trailing zero
    entropy words, which would otherwise alias (1, 2) with (1, 2, 0).
    """
    if root < 0:
        raise ValueError("root seed must be non-negative")
    entropy = (root, len(path), *path)
    return int(np.random.SeedSequence(entropy=entropy).generate_state(1)[0])


def init_weights(d_out: int, d_in: int, seed: int) -> np.ndarray:
    """Uniform init in ±1/sqrt(d_in + 1) for a (d_out, d_in + 1) layer matrix.

    The bias column is drawn from the same distribution as the weights.
    """
    if d_out < 1 or d_in < 1:
        raise ValueError(f"layer dimensions must be positive, got {d_out}x{d_in}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(d_in + 1)
    return rng.uniform(-bound, bound, size=(d_out, d_in + 1))


@dataclass
class Mlp:
    """A stack of tanh hidden layers plus an output head.

    ``layers[i]`` has shape (d_i, d_{i-1} + 1); the last column is the bias.
    Every layer except the last applies tanh.  The last layer applies tanh
    too when it is an interior layer of a partially built stack used for
    codes; as a full network its head is ``output_head``.
    """

    layers: list[np.ndarray]
    output_head: str = "linear"

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if self.output_head not in ("linear", "softmax"):
            raise ValueError(f"unknown output head {self.output_head!r}")
        self.layers = [np.asarray(w, dtype=np.float64) for w in self.layers]
        for i, w in enumerate(self.layers):
            if w.ndim != 2:
                raise ValueError(f"layer {i} is not a matrix")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"layer {i} contains non-finite weights")
            if i > 0 and w.shape[1] != self.layers[i - 1].shape[0] + 1:
                raise ValueError(
                    f"layer {i} expects {w.shape[1] - 1} inputs, "
                    f"previous layer emits {self.layers[i - 1].shape[0]}"
                )

    @property
    def d_in(self) -> int:
        return self.layers[0].shape[1] - 1

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(w.shape[0] for w in self.layers)

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.layers], self.output_head)


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(mlp: Mlp, x: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer for a single example.

    Returns one vector per layer; the last entry is the network output
    (softmax probabilities when the head is softmax, otherwise the linear
    pre-activation of the last layer).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (mlp.d_in,):
        raise ValueError(f"expected input of shape ({mlp.d_in},), got {x.shape}")
    acts: list[np.ndarray] = []
    a = x
    last = len(mlp.layers) - 1
    for i, w in enumerate(mlp.layers):
        z = w[:, :-1] @ a + w[:, -1]
        if i < last:
            a = np.tanh(z)
        elif mlp.output_head == "softmax":
            a = softmax(z)
        else:
            a = z
        acts.append(a)
    return acts


def forward_batch(mlp: Mlp, X: np.ndarray) -> np.ndarray:
    """Network outputs for a matrix of examples (one per row)."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != mlp.d_in:
        raise ValueError(f"expected (n, {mlp.d_in}) inputs, got {A.shape}")
    last = len(mlp.layers) - 1
    for i, w in enumerate(mlp.layers):
        Z = A @ w[:, :-1].T + w[:, -1]
        if i < last:
            A = np.tanh(Z)
        elif mlp.output_head == "softmax":
            A = softmax(Z)
        else:
            A = Z
    return A


def codes_batch(layers: list[np.ndarray], X: np.ndarray) -> np.ndarray:
    """tanh codes after pushing X through a stack of hidden layers."""
    A = np.asarray(X, dtype=np.float64)
    for w in layers:
        A = np.tanh(A @ w[:, :-1].T + w[:, -1])
    return A


def _backprop_from_acts(
    mlp: Mlp, x: np.ndarray, acts: list[np.ndarray], target: np.ndarray, loss: str
) -> list[np.ndarray]:
    last = len(mlp.layers) - 1
    out = acts[last]
    if loss == "squared":
        if mlp.output_head != "linear":
            raise ValueError("squared loss pairs with a linear head")
        delta = 2.0 * (out - target)
    elif loss == "cross_entropy":
        if mlp.output_head != "softmax":
            raise ValueError("cross-entropy loss pairs with a softmax head")
        delta = out - target
    else:
        raise ValueError(f"unknown loss {loss!r}")

    grads: list[np.ndarray | None] = [None] * len(mlp.layers)
    for i in range(last, -1, -1):
        below = acts[i - 1] if i > 0 else np.asarray(x, dtype=np.float64)
        g = np.empty_like(mlp.layers[i])
        g[:, :-1] = np.outer(delta, below)
        g[:, -1] = delta
        grads[i] = g
        if i > 0:
            delta = (delta @ mlp.layers[i][:, :-1]) * (1.0 - below * below)
    return grads  # type: ignore[return-value]


def backprop(mlp: Mlp, x: np.ndarray, target: np.ndarray, loss: str) -> list[np.ndarray]:
    """Exact loss gradient for one example, one matrix per layer.

    ``loss`` is "squared" (unaveraged squared Euclidean distance, linear head)
    or "cross_entropy" (softmax head, one-hot target).  Regularization is not
    included; callers fold weight decay into the update.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (mlp.layers[-1].shape[0],):
        raise ValueError(
            f"expected target of shape ({mlp.layers[-1].shape[0]},), got {target.shape}"
        )
    acts = forward(mlp, x)
    return _backprop_from_acts(mlp, x, acts, target, loss)


def sgd_update(
    w: np.ndarray, grad: np.ndarray, lr: float, l2: float, n_train: int
) -> np.ndarray:
    """One SGD step with L2 decay scaled by the training-set size.

    The penalty is (l2 / n_train) * ||W||^2 over the non-bias entries, so the
    update is W - lr * (grad + 2 * l2 / n_train * W) with the bias column left
    undecayed.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if l2 < 0:
        raise ValueError("l2 strength must be non-negative")
    if n_train < 1:
        raise ValueError("n_train must be positive")
    out = w - lr * grad
    if l2 > 0:
        out[:, :-1] -= lr * (2.0 * l2 / n_train) * w[:, :-1]
    return out


# ---- operation accounting ---- #


@dataclass
class OpCounter:
    """Tally of arithmetic work, split the way the cost model splits it.

    Multiply-accumulate against a weight counts as one op (mults), a bias or
    residual add as one op (adds), and an activation or its derivative as one
    op (activations).  ``sgd_visits`` counts example presentations and is not
    part of ``total``.
    """

    adds: int = 0
    mults: int = 0
    activations: int = 0
    sgd_visits: int = 0

    def count(self, adds: int = 0, mults: int = 0, activations: int = 0, times: int = 1) -> None:
        if min(adds, mults, activations, times) < 0:
            raise ValueError("op counts only grow")
        self.adds += adds * times
        self.mults += mults * times
        self.activations += activations * times

    def count_visit(self, times: int = 1) -> None:
        if times < 0:
            raise ValueError("op counts only grow")
        self.sgd_visits += times

    def total(self) -> int:
        return self.adds + self.mults + self.activations

    def merge(self, other: "OpCounter") -> None:
        self.adds += other.adds
        self.mults += other.mults
        self.activations += other.activations
        self.sgd_visits += other.sgd_visits

    def as_dict(self) -> dict[str, int]:
        d = asdict(self)
        d["total"] = self.total()
        return d


def ae_ops_per_example(d1: int, d2: int) -> int:
    """Ops for one autoencoder SGD example: 5*d1*d2 + 3*d1 + 5*d2."""
    return 5 * d1 * d2 + 3 * d1 + 5 * d2


def ae_step_ops(d1: int, d2: int) -> tuple[int, int, int]:
    """(adds, mults, activations) for one d1-d2-d1 autoencoder SGD example.

    Forward: (d1 + 1) * d2 weight ops + d2 tanh, then (d2 + 1) * d1 weight
    ops for the linear reconstruction.  Backward: d1 residual ops, the
    (d2 + 1) * d1 output-weight gradient/update, d1 * d2 backpropagated
    products, 2 * d2 tanh-derivative ops, and the (d1 + 1) * d2 hidden-weight
    gradient/update.  Totals match ae_ops_per_example exactly.
    """
    mults = (d1 + 1) * d2 + d2 * d1  # forward MACs, biases folded in
    adds = d1  # output bias adds
    activations = d2  # tanh
    # backward
    adds += d1  # residual
    mults += (d2 + 1) * d1  # output weight grad + update
    mults += d1 * d2  # delta backprop through output weights
    activations += 2 * d2  # tanh' = 1 - h^2, then apply to delta
    mults += (d1 + 1) * d2  # hidden weight grad + update
    return adds, mults, activations


def sv_step_ops(d1: int, d2: int, d_out: int) -> tuple[int, int, int]:
    """(adds, mults, activations) for one d1-d2-d_out supervised SGD example.

    Same breakdown as ae_step_ops with the reconstruction width replaced by
    the target width.
    """
    mults = (d1 + 1) * d2 + d2 * d_out
    adds = d_out
    activations = d2
    adds += d_out
    mults += (d2 + 1) * d_out
    mults += d_out * d2
    activations += 2 * d2
    mults += (d1 + 1) * d2
    return adds, mults, activations


def node_step_ops(d1: int, with_bias: bool = False) -> tuple[int, int, int]:
    """(adds, mults, activations) for one single-node SGD example.

    The node reconstructs through a stored running output, so the forward
    pass touches one hidden unit: (d1 + 1) input-weight MACs, one tanh, d1
    output-weight products, then d1 ops scaling the stored row by the
    amnesia factor and d1 adds blending it in.  The seed node has no stored
    row; it carries a learned output bias instead (d1 blend adds forward,
    d1 update adds backward).  Backward otherwise mirrors ae_step_ops at
    d2 = 1 without the output-bias column.  Both variants total 8*d1 + 5.
    """
    mults = (d1 + 1) + d1  # input MACs, output scale
    adds = d1  # blend stored row or bias into the node's output
    activations = 1
    if not with_bias:
        mults += d1  # amnesia scaling of the stored row
    # backward
    adds += d1  # residual
    mults += d1  # output weight grad + update
    mults += d1  # delta backprop
    activations += 2
    mults += d1 + 1  # input weight grad + update
    if with_bias:
        adds += d1  # bias update
    return adds, mults, activations


def accumulate_ops(d1: int, with_bias: bool = False) -> tuple[int, int, int]:
    """(adds, mults, activations) to fold one trained node into one stored row."""
    mults = d1 + 1  # input-weight MACs
    activations = 1
    mults += d1  # scale by output weights
    adds = d1  # add into the running row
    if with_bias:
        adds += d1
    return adds, mults, activations


def softmax_step_ops(d: int, c: int) -> tuple[int, int, int]:
    """(adds, mults, activations) for one softmax-regression SGD example."""
    mults = (d + 1) * c  # logits
    adds = 2 * c  # max shift, exp sum
    activations = c  # exp
    mults += c  # normalize
    adds += c  # subtract one-hot target
    mults += (d + 1) * c  # gradient + update
    return adds, mults, activations


def mlp_step_ops(widths: tuple[int, ...], d_in: int) -> tuple[int, int, int]:
    """(adds, mults, activations) for one full-network fine-tuning example.

    ``widths`` are the layer widths including the softmax head.
    """
    dims = (d_in, *widths)
    adds = mults = activations = 0
    # forward
    for i in range(len(widths)):
        mults += (dims[i] + 1) * dims[i + 1]
        activations += dims[i + 1]
    # backward
    adds += widths[-1]  # target subtraction
    for i in range(len(widths) - 1, -1, -1):
        mults += (dims[i] + 1) * dims[i + 1]  # gradient + update
        if i > 0:
            mults += dims[i] * dims[i + 1]  # delta backprop
            activations += 2 * dims[i]  # tanh'
    return adds, mults, activations


# ---- checkpoints ---- #


def save_weights(
    path,
    mlp: Mlp,
    seed: int | None = None,
    norm_lo: np.ndarray | None = None,
    norm_hi: np.ndarray | None = None,
) -> None:
    """Write an .npz checkpoint; normalization bounds ride along when given."""
    payload: dict[str, np.ndarray] = {
        "format": np.array(CHECKPOINT_FORMAT),
        "n_layers": np.array(len(mlp.layers)),
        "output_head": np.array(mlp.output_head),
        "seed": np.array(-1 if seed is None else int(seed)),
    }
    for i, w in enumerate(mlp.layers):
        payload[f"layer_{i}"] = w
    if norm_lo is not None:
        payload["norm_lo"] = np.asarray(norm_lo, dtype=np.float64)
        payload["norm_hi"] = np.asarray(norm_hi, dtype=np.float64)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_weights(path) -> tuple[Mlp, dict]:
    """Read a checkpoint back; returns the network and a metadata dict."""
    with np.load(path, allow_pickle=False) as data:
        fmt = str(data["format"])
        if fmt != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {fmt!r}")
        n = int(data["n_layers"])
        layers = [data[f"layer_{i}"] for i in range(n)]
        meta: dict = {"seed": int(data["seed"])}
        if meta["seed"] < 0:
            meta["seed"] = None
        if "norm_lo" in data:
            meta["norm_lo"] = data["norm_lo"]
            meta["norm_hi"] = data["norm_hi"]
        head = str(data["output_head"])
    return Mlp(layers, head), meta
