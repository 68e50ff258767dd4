"""Full training pipeline: pre-train, fit the output layer, fine-tune, score.

Pre-training minimizes squared reconstruction (or projection) error; the
output layer is softmax regression on the frozen codes; fine-tuning then
nudges the whole network, head included, under cross-entropy.  Timing and
operation counts are recorded per phase so the algorithms can be compared
on both clocks.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .backend import active_backend, get_kernels
from .dataset import Dataset, one_hot_matrix, out_of_range_fraction
from .greedy import GreedyConfig, greedy_pretrain_stack
from .layerwise import PretrainConfig, pretrain_stack
from .network import (
    NS_CLASSIFIER,
    NS_FINETUNE,
    Mlp,
    OpCounter,
    _backprop_from_acts,
    codes_batch,
    derive_seed,
    forward,
    forward_batch,
    init_weights,
    mlp_step_ops,
    sgd_update,
    softmax_step_ops,
)

__all__ = [
    "ALGORITHMS",
    "PipelineConfig",
    "TrainReport",
    "train_output_classifier",
    "fine_tune",
    "evaluate",
    "run_pipeline",
]

ALGORITHMS = ("sv", "usv", "gn", "gcn")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one training run depends on, seeds included."""

    algorithm: str
    arch: tuple[int, ...]
    epochs: int = 300
    lr: float = 0.001
    l2: float = 1.0
    amnesia: float = 0.4
    classifier_epochs: int = 500
    classifier_lr: float = 0.002
    finetune_epochs: int = 20
    finetune_lr: float = 0.001
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", self.algorithm.lower())
        object.__setattr__(self, "arch", tuple(int(w) for w in self.arch))
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; pick from {ALGORITHMS}")
        if not self.arch or min(self.arch) < 1:
            raise ValueError("arch must list positive hidden-layer widths")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.lr <= 0 or self.classifier_lr <= 0 or self.finetune_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.l2 < 0:
            raise ValueError("l2 strength must be non-negative")
        if not 0.0 <= self.amnesia <= 1.0:
            raise ValueError("amnesia must lie in [0, 1]")
        if self.classifier_epochs < 0 or self.finetune_epochs < 0:
            raise ValueError("epoch counts must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class TrainReport:
    """Result of one pipeline run, JSON-serializable."""

    algorithm: str
    arch: list[int]
    seed: int
    backend: str
    train_accuracy: float
    test_accuracy: float | None
    phase_seconds: dict[str, float]
    total_seconds: float
    op_counts: dict[str, dict[str, int]]
    config: dict
    data_flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainReport":
        return cls(**d)

    def comparable_dict(self) -> dict:
        """The report minus wall-clock fields, for determinism checks."""
        d = self.to_dict()
        d.pop("phase_seconds")
        d.pop("total_seconds")
        return d


def train_output_classifier(
    codes: np.ndarray,
    labels: np.ndarray,
    class_count: int,
    epochs: int = 500,
    lr: float = 0.002,
    l2: float = 1.0,
    seed: int = 0,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Softmax regression on frozen codes; returns the head weight matrix."""
    H = np.ascontiguousarray(codes, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    n, d = H.shape
    if y.shape != (n,):
        raise ValueError("labels must align with code rows")
    w = init_weights(class_count, d, derive_seed(seed, NS_CLASSIFIER, 0))
    shuffle = np.random.default_rng(derive_seed(seed, NS_CLASSIFIER, 1))
    decay = 2.0 * l2 / n
    kern = get_kernels()
    step = softmax_step_ops(d, class_count)
    for _ in range(epochs):
        order = shuffle.permutation(n)
        kern.softmax_sgd_epoch(H, y, w, order, lr, decay)
        if counter is not None:
            counter.count(*step, times=n)
            counter.count_visit(n)
    return w


def fine_tune(
    mlp: Mlp,
    features: np.ndarray,
    labels: np.ndarray,
    class_count: int,
    epochs: int = 20,
    lr: float = 0.001,
    l2: float = 1.0,
    seed: int = 0,
    counter: OpCounter | None = None,
) -> Mlp:
    """Cross-entropy SGD over every weight in the network, head included.

    Returns a tuned copy; the input network is untouched.  Zero epochs is a
    no-op copy.
    """
    if mlp.output_head != "softmax":
        raise ValueError("fine-tuning expects a softmax head")
    net = mlp.copy()
    if epochs == 0:
        return net
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    T = one_hot_matrix(labels, class_count)
    shuffle = np.random.default_rng(derive_seed(seed, NS_FINETUNE, 0))
    step = mlp_step_ops(net.widths, net.d_in)
    for _ in range(epochs):
        for idx in shuffle.permutation(n):
            x = X[idx]
            acts = forward(net, x)
            grads = _backprop_from_acts(net, x, acts, T[idx], "cross_entropy")
            for i in range(len(net.layers)):
                net.layers[i] = sgd_update(net.layers[i], grads[i], lr, l2, n)
        if counter is not None:
            counter.count(*step, times=n)
            counter.count_visit(n)
    return net


def evaluate(mlp: Mlp, ds: Dataset) -> float:
    """Classification accuracy; argmax ties resolve to the lowest class."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    probs = forward_batch(mlp, ds.features)
    preds = probs.argmax(axis=1)
    return float(np.mean(preds == ds.labels))


def run_pipeline(
    cfg: PipelineConfig, train: Dataset, test: Dataset | None = None
) -> tuple[TrainReport, Mlp]:
    """Run one algorithm end to end; returns the report and the network."""
    if test is not None:
        if test.n_features != train.n_features:
            raise ValueError("train and test feature widths differ")
        if test.class_count != train.class_count:
            raise ValueError("train and test class counts differ")
    c = train.class_count
    counters = {"pretrain": OpCounter(), "classifier": OpCounter(), "finetune": OpCounter()}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    if cfg.algorithm in ("sv", "usv"):
        pc = PretrainConfig(cfg.epochs, cfg.lr, cfg.l2, cfg.seed)
        targets = one_hot_matrix(train.labels, c) if cfg.algorithm == "sv" else None
        hidden = pretrain_stack(
            train.features, cfg.arch, cfg.algorithm, pc, targets, counters["pretrain"]
        )
    else:
        gc = GreedyConfig(cfg.epochs, cfg.lr, cfg.l2, cfg.seed, cfg.amnesia)
        hidden = greedy_pretrain_stack(
            train.features, cfg.arch, cfg.algorithm, gc,
            train.labels, c, counters["pretrain"],
        )
    pretrain_s = time.perf_counter() - t0

    codes = codes_batch(hidden, train.features)
    t0 = time.perf_counter()
    head = train_output_classifier(
        codes, train.labels, c,
        cfg.classifier_epochs, cfg.classifier_lr, cfg.l2, cfg.seed,
        counters["classifier"],
    )
    classifier_s = time.perf_counter() - t0

    net = Mlp(hidden + [head], "softmax")
    t0 = time.perf_counter()
    net = fine_tune(
        net, train.features, train.labels, c,
        cfg.finetune_epochs, cfg.finetune_lr, cfg.l2, cfg.seed,
        counters["finetune"],
    )
    finetune_s = time.perf_counter() - t0

    flags: dict = {}
    if train.norm is not None:
        flags["train_out_of_range"] = out_of_range_fraction(train)
    if test is not None and test.norm is not None:
        frac = out_of_range_fraction(test)
        flags["test_out_of_range"] = frac
        if frac > 0:
            flags["note"] = "test features exceed the training normalization range"

    report = TrainReport(
        algorithm=cfg.algorithm,
        arch=list(cfg.arch),
        seed=cfg.seed,
        backend=active_backend(),
        train_accuracy=evaluate(net, train),
        test_accuracy=None if test is None else evaluate(net, test),
        phase_seconds={
            "pretrain": pretrain_s,
            "classifier": classifier_s,
            "finetune": finetune_s,
        },
        total_seconds=time.perf_counter() - t_start,
        op_counts={name: ctr.as_dict() for name, ctr in counters.items()},
        config=asdict(cfg) | {"arch": list(cfg.arch)},
        data_flags=flags,
    )
    return report, net
