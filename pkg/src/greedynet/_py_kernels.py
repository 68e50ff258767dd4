"""Pure-numpy SGD inner loops, the reference implementation.

The Cython module `_kernels` mirrors these functions exactly; `backend.py`
picks whichever is available.  All functions mutate the weight arrays in
place and walk the examples in the order given, so both backends visit the
same data in the same sequence for the same seeds.

Update order within one example is fixed: compute the forward pass, the
output delta, and the backpropagated hidden delta with the *old* weights,
then apply the output-side update, then the input-side update.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def ae_sgd_epoch(
    X: np.ndarray,
    T: np.ndarray,
    W1: np.ndarray,
    W2: np.ndarray,
    order: np.ndarray,
    lr: float,
    decay: float,
) -> None:
    """One epoch of two-layer SGD: tanh hidden layer, linear output.

    T holds the per-example targets (T is X for an autoencoder, one-hot rows
    for a supervised encoder).  ``decay`` is the per-step L2 factor
    2 * l2 / n_train; bias columns are not decayed.
    """
    d1 = X.shape[1]
    d2 = W1.shape[0]
    for n in order:
        x = X[n]
        t = T[n]
        h = np.tanh(W1[:, :d1] @ x + W1[:, d1])
        out = W2[:, :d2] @ h + W2[:, d2]
        delta = 2.0 * (out - t)
        dh = (delta @ W2[:, :d2]) * (1.0 - h * h)
        W2[:, :d2] -= lr * (np.outer(delta, h) + decay * W2[:, :d2])
        W2[:, d2] -= lr * delta
        W1[:, :d1] -= lr * (np.outer(dh, x) + decay * W1[:, :d1])
        W1[:, d1] -= lr * dh


def node_gradient(
    x: np.ndarray,
    r: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    amnesia: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Loss gradient for one node on one example, blending the stored row.

    The node's reconstruction is amnesia * r + w_out * tanh(w_in . [x; 1]);
    the loss is the squared distance to x.  Returns (g_in, g_out) without
    any decay term.
    """
    d1 = x.shape[0]
    h = math.tanh(w_in[:d1] @ x + w_in[d1])
    delta = 2.0 * (amnesia * r + w_out * h - x)
    dh = (delta @ w_out) * (1.0 - h * h)
    g_in = np.empty_like(w_in)
    g_in[:d1] = dh * x
    g_in[d1] = dh
    return g_in, delta * h


def node_sgd_epoch(
    X: np.ndarray,
    R: np.ndarray,
    order: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    amnesia: float,
    lr: float,
    decay: float,
) -> None:
    """One epoch of single-node SGD against the stored running output.

    ``order`` holds absolute row indices into both X and R.
    """
    for n in order:
        g_in, g_out = node_gradient(X[n], R[n], w_in, w_out, amnesia)
        w_out -= lr * (g_out + decay * w_out)
        w_in[:-1] -= lr * (g_in[:-1] + decay * w_in[:-1])
        w_in[-1] -= lr * g_in[-1]


def seed_node_sgd_epoch(
    X: np.ndarray,
    order: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    bias: np.ndarray,
    lr: float,
    decay: float,
) -> None:
    """One epoch for the first node of a layer, which learns the output bias.

    Reconstruction is w_out * tanh(w_in . [x; 1]) + bias; the bias is a free
    parameter here and is frozen (carried by the running output) for every
    later node.  The bias takes plain gradient steps without decay.
    """
    d1 = X.shape[1]
    for n in order:
        x = X[n]
        h = math.tanh(w_in[:d1] @ x + w_in[d1])
        delta = 2.0 * (w_out * h + bias - x)
        dh = (delta @ w_out) * (1.0 - h * h)
        w_out -= lr * (delta * h + decay * w_out)
        bias -= lr * delta
        w_in[:d1] -= lr * (dh * x + decay * w_in[:d1])
        w_in[d1] -= lr * dh


def softmax_sgd_epoch(
    H: np.ndarray,
    labels: np.ndarray,
    W: np.ndarray,
    order: np.ndarray,
    lr: float,
    decay: float,
) -> None:
    """One epoch of softmax-regression SGD on fixed codes H."""
    d = H.shape[1]
    for n in order:
        h = H[n]
        z = W[:, :d] @ h + W[:, d]
        z -= z.max()
        p = np.exp(z)
        p /= p.sum()
        p[labels[n]] -= 1.0
        W[:, :d] -= lr * (np.outer(p, h) + decay * W[:, :d])
        W[:, d] -= lr * p
