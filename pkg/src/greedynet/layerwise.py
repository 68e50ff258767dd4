"""Classical layer-by-layer pre-training baselines.

Two variants, both training one two-layer network per hidden layer and
keeping only the encoder half:

* autoencoder: d1 -> d2 -> d1, squared reconstruction loss (unsupervised)
* supervised encoder: d1 -> d2 -> c against one-hot targets

Each layer trains to completion on the codes of the layer below and is
frozen afterwards; layers never revisit earlier weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import get_kernels
from .network import (
    NS_LAYER,
    NS_SHUFFLE,
    OpCounter,
    ae_step_ops,
    derive_seed,
    init_weights,
    sv_step_ops,
)

__all__ = [
    "PretrainConfig",
    "train_autoencoder_layer",
    "train_supervised_layer",
    "pretrain_stack",
]


@dataclass(frozen=True)
class PretrainConfig:
    """Shared SGD settings for one pre-training phase."""

    epochs: int = 300
    lr: float = 0.001
    l2: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 strength must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _count_codes(counter: OpCounter | None, n: int, d1: int, d2: int) -> None:
    if counter is not None:
        counter.count(mults=(d1 + 1) * d2, activations=d2, times=n)


def _train_two_layer(
    X: np.ndarray,
    T: np.ndarray,
    width: int,
    cfg: PretrainConfig,
    layer_index: int,
    counter: OpCounter | None,
    step_ops: tuple[int, int, int],
) -> tuple[np.ndarray, np.ndarray]:
    n, d1 = X.shape
    w_hidden = init_weights(width, d1, derive_seed(cfg.seed, NS_LAYER, layer_index, 0))
    w_out = init_weights(T.shape[1], width, derive_seed(cfg.seed, NS_LAYER, layer_index, 1))
    shuffle = np.random.default_rng(derive_seed(cfg.seed, NS_SHUFFLE, layer_index))
    decay = 2.0 * cfg.l2 / n
    kern = get_kernels()
    for _ in range(cfg.epochs):
        order = shuffle.permutation(n)
        kern.ae_sgd_epoch(X, T, w_hidden, w_out, order, cfg.lr, decay)
        if counter is not None:
            counter.count(*step_ops, times=n)
            counter.count_visit(n)
    return w_hidden, w_out


def train_autoencoder_layer(
    inputs: np.ndarray,
    width: int,
    cfg: PretrainConfig,
    layer_index: int = 0,
    counter: OpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Train one d1 -> width -> d1 autoencoder with per-example SGD.

    Returns (hidden weights, decoder weights, codes); the stack keeps only
    the hidden weights and the codes.
    """
    X = np.ascontiguousarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("inputs must be a non-empty matrix")
    if width < 1:
        raise ValueError("layer width must be positive")
    d1 = X.shape[1]
    w_hidden, w_decode = _train_two_layer(
        X, X, width, cfg, layer_index, counter, ae_step_ops(d1, width)
    )
    codes = np.tanh(X @ w_hidden[:, :d1].T + w_hidden[:, d1])
    _count_codes(counter, X.shape[0], d1, width)
    return w_hidden, w_decode, codes


def train_supervised_layer(
    inputs: np.ndarray,
    targets: np.ndarray,
    width: int,
    cfg: PretrainConfig,
    layer_index: int = 0,
    counter: OpCounter | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Train one d1 -> width -> c encoder against one-hot targets.

    The projection onto the targets is discarded by the stack, same as the
    autoencoder's decoder.  Returns (hidden weights, projection, codes).
    """
    X = np.ascontiguousarray(inputs, dtype=np.float64)
    T = np.ascontiguousarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("inputs must be a non-empty matrix")
    if T.shape[0] != X.shape[0] or T.ndim != 2:
        raise ValueError("targets must align with input rows")
    rows_ok = np.all(np.isin(T, (0.0, 1.0))) and np.all(T.sum(axis=1) == 1.0)
    if not rows_ok:
        raise ValueError("targets must be one-hot rows")
    if width < 1:
        raise ValueError("layer width must be positive")
    d1 = X.shape[1]
    w_hidden, w_project = _train_two_layer(
        X, T, width, cfg, layer_index, counter, sv_step_ops(d1, width, T.shape[1])
    )
    codes = np.tanh(X @ w_hidden[:, :d1].T + w_hidden[:, d1])
    _count_codes(counter, X.shape[0], d1, width)
    return w_hidden, w_project, codes


def pretrain_stack(
    features: np.ndarray,
    arch: tuple[int, ...],
    mode: str,
    cfg: PretrainConfig,
    targets: np.ndarray | None = None,
    counter: OpCounter | None = None,
) -> list[np.ndarray]:
    """Pre-train a stack of hidden layers bottom-up; layers freeze as built.

    ``mode`` is "usv" (autoencoder per layer) or "sv" (supervised encoder
    per layer, ``targets`` required).  Returns the hidden weight matrices.
    """
    mode = mode.lower()
    if mode not in ("usv", "sv"):
        raise ValueError(f"unknown layerwise mode {mode!r}")
    if not arch:
        raise ValueError("arch needs at least one hidden layer")
    if mode == "sv" and targets is None:
        raise ValueError("supervised pre-training needs targets")

    codes = np.ascontiguousarray(features, dtype=np.float64)
    layers: list[np.ndarray] = []
    for i, width in enumerate(arch):
        if mode == "usv":
            w, _, codes = train_autoencoder_layer(codes, width, cfg, i, counter)
        else:
            w, _, codes = train_supervised_layer(codes, targets, width, cfg, i, counter)
        layers.append(w)
    return layers
