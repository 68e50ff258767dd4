# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython SGD inner loops, mirroring _py_kernels function for function.

Same update order as the reference: forward pass, output delta, and hidden
delta are computed with the old weights, then the output side is updated,
then the input side.  Summation order inside dot products differs from
numpy's, so results match the reference to rounding, not bit for bit.
"""

import numpy as np

from libc.math cimport tanh, exp, INFINITY
from libc.stdint cimport int64_t

BACKEND_NAME = "cython"


def ae_sgd_epoch(
    const double[:, ::1] X,
    const double[:, ::1] T,
    double[:, ::1] W1,
    double[:, ::1] W2,
    const int64_t[::1] order,
    double lr,
    double decay,
):
    """One epoch of two-layer SGD: tanh hidden layer, linear output."""
    cdef Py_ssize_t d1 = X.shape[1]
    cdef Py_ssize_t d2 = W1.shape[0]
    cdef Py_ssize_t d_out = W2.shape[0]
    cdef Py_ssize_t k, n, i, j
    cdef double s
    cdef double[::1] h = np.empty(d2)
    cdef double[::1] dh = np.empty(d2)
    cdef double[::1] delta = np.empty(d_out)

    for k in range(order.shape[0]):
        n = order[k]
        for j in range(d2):
            s = W1[j, d1]
            for i in range(d1):
                s += W1[j, i] * X[n, i]
            h[j] = tanh(s)
        for i in range(d_out):
            s = W2[i, d2]
            for j in range(d2):
                s += W2[i, j] * h[j]
            delta[i] = 2.0 * (s - T[n, i])
        for j in range(d2):
            s = 0.0
            for i in range(d_out):
                s += delta[i] * W2[i, j]
            dh[j] = s * (1.0 - h[j] * h[j])
        for i in range(d_out):
            for j in range(d2):
                W2[i, j] -= lr * (delta[i] * h[j] + decay * W2[i, j])
            W2[i, d2] -= lr * delta[i]
        for j in range(d2):
            for i in range(d1):
                W1[j, i] -= lr * (dh[j] * X[n, i] + decay * W1[j, i])
            W1[j, d1] -= lr * dh[j]


def node_sgd_epoch(
    const double[:, ::1] X,
    const double[:, ::1] R,
    const int64_t[::1] order,
    double[::1] w_in,
    double[::1] w_out,
    double amnesia,
    double lr,
    double decay,
):
    """One epoch of single-node SGD against the stored running output."""
    cdef Py_ssize_t d1 = X.shape[1]
    cdef Py_ssize_t k, n, i
    cdef double s, h, dh, di
    cdef double[::1] delta = np.empty(d1)

    for k in range(order.shape[0]):
        n = order[k]
        s = w_in[d1]
        for i in range(d1):
            s += w_in[i] * X[n, i]
        h = tanh(s)
        s = 0.0
        for i in range(d1):
            di = 2.0 * (amnesia * R[n, i] + w_out[i] * h - X[n, i])
            delta[i] = di
            s += di * w_out[i]
        dh = s * (1.0 - h * h)
        for i in range(d1):
            w_out[i] -= lr * (delta[i] * h + decay * w_out[i])
        for i in range(d1):
            w_in[i] -= lr * (dh * X[n, i] + decay * w_in[i])
        w_in[d1] -= lr * dh


def seed_node_sgd_epoch(
    const double[:, ::1] X,
    const int64_t[::1] order,
    double[::1] w_in,
    double[::1] w_out,
    double[::1] bias,
    double lr,
    double decay,
):
    """One epoch for the first node of a layer, which learns the output bias."""
    cdef Py_ssize_t d1 = X.shape[1]
    cdef Py_ssize_t k, n, i
    cdef double s, h, dh, di
    cdef double[::1] delta = np.empty(d1)

    for k in range(order.shape[0]):
        n = order[k]
        s = w_in[d1]
        for i in range(d1):
            s += w_in[i] * X[n, i]
        h = tanh(s)
        s = 0.0
        for i in range(d1):
            di = 2.0 * (w_out[i] * h + bias[i] - X[n, i])
            delta[i] = di
            s += di * w_out[i]
        dh = s * (1.0 - h * h)
        for i in range(d1):
            w_out[i] -= lr * (delta[i] * h + decay * w_out[i])
            bias[i] -= lr * delta[i]
        for i in range(d1):
            w_in[i] -= lr * (dh * X[n, i] + decay * w_in[i])
        w_in[d1] -= lr * dh


def softmax_sgd_epoch(
    const double[:, ::1] H,
    const int64_t[::1] labels,
    double[:, ::1] W,
    const int64_t[::1] order,
    double lr,
    double decay,
):
    """One epoch of softmax-regression SGD on fixed codes H."""
    cdef Py_ssize_t d = H.shape[1]
    cdef Py_ssize_t c = W.shape[0]
    cdef Py_ssize_t k, n, i, j
    cdef double s, zmax
    cdef double[::1] p = np.empty(c)

    for k in range(order.shape[0]):
        n = order[k]
        zmax = -INFINITY
        for i in range(c):
            s = W[i, d]
            for j in range(d):
                s += W[i, j] * H[n, j]
            p[i] = s
            if s > zmax:
                zmax = s
        s = 0.0
        for i in range(c):
            p[i] = exp(p[i] - zmax)
            s += p[i]
        for i in range(c):
            p[i] /= s
        p[labels[n]] -= 1.0
        for i in range(c):
            for j in range(d):
                W[i, j] -= lr * (p[i] * H[n, j] + decay * W[i, j])
            W[i, d] -= lr * p[i]
