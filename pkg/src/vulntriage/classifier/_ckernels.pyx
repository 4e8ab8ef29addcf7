# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the linear softmax classifier.

Mirrors _pykernels operation for operation. Compiled with contraction
disabled so elementwise arithmetic rounds identically to numpy; only
reduction order (dot products, softmax sums) may differ from the
reference backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, pow, sqrt

cnp.import_array()

NAME = "compiled"


def forward_csr(
    cnp.float64_t[:, ::1] W,
    cnp.float64_t[::1] b,
    cnp.int64_t[::1] indptr,
    cnp.int64_t[::1] indices,
    cnp.float64_t[::1] values,
):
    """Logits for a CSR batch: out[i] = W[:, idx_i] @ val_i + b. Shape (n, C)."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_classes = W.shape[0]
    out_arr = np.empty((n, n_classes), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, c, k, s, e
    cdef double acc
    for i in range(n):
        s = indptr[i]
        e = indptr[i + 1]
        for c in range(n_classes):
            acc = 0.0
            for k in range(s, e):
                acc = acc + W[c, indices[k]] * values[k]
            out[i, c] = acc + b[c]
    return out_arr


def grad_csr(
    cnp.float64_t[:, ::1] W,
    cnp.float64_t[::1] b,
    cnp.int64_t[::1] indptr,
    cnp.int64_t[::1] indices,
    cnp.float64_t[::1] values,
    cnp.int64_t[::1] labels,
    cnp.float64_t[:, ::1] gW,
    cnp.float64_t[::1] gb,
):
    """Mean cross-entropy over the batch; accumulates 1/n-scaled grads.

    gW and gb must arrive zeroed; samples are processed in order.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_classes = W.shape[0]
    cdef double loss_sum = 0.0
    cdef double inv_n = 1.0 / n
    cdef Py_ssize_t i, c, k, s, e, y
    cdef double acc, m, z, cc
    cdef double[8] logits
    cdef double[8] coef
    if n_classes > 8:
        raise ValueError(f"grad_csr supports at most 8 classes, got {n_classes}")
    for i in range(n):
        s = indptr[i]
        e = indptr[i + 1]
        y = labels[i]
        for c in range(n_classes):
            acc = 0.0
            for k in range(s, e):
                acc = acc + W[c, indices[k]] * values[k]
            logits[c] = acc + b[c]
        m = logits[0]
        for c in range(1, n_classes):
            if logits[c] > m:
                m = logits[c]
        z = 0.0
        for c in range(n_classes):
            coef[c] = exp(logits[c] - m)
            z = z + coef[c]
        loss_sum = loss_sum + (m + log(z) - logits[y])
        for c in range(n_classes):
            cc = coef[c] / z
            if c == y:
                cc = cc - 1.0
            cc = cc * inv_n
            coef[c] = cc
            gb[c] = gb[c] + cc
        for c in range(n_classes):
            cc = coef[c]
            for k in range(s, e):
                gW[c, indices[k]] = gW[c, indices[k]] + cc * values[k]
    return loss_sum * inv_n


def adamw_apply(
    cnp.float64_t[:, ::1] W,
    cnp.float64_t[::1] b,
    cnp.float64_t[:, ::1] gW,
    cnp.float64_t[::1] gb,
    cnp.float64_t[:, ::1] mW,
    cnp.float64_t[:, ::1] vW,
    cnp.float64_t[::1] mb,
    cnp.float64_t[::1] vb,
    long t,
    double lr,
    double beta1,
    double beta2,
    double eps,
    double weight_decay,
):
    """One decoupled-weight-decay Adam step, in place. t is 1-based.

    Matches the reference backend: weights decay multiplicatively before
    the update, the bias is exempt, moments are bias-corrected.
    """
    cdef double bc1 = 1.0 - pow(beta1, <double> t)
    cdef double bc2 = 1.0 - pow(beta2, <double> t)
    cdef double sqrt_bc2 = sqrt(bc2)
    cdef double step_scale = lr / bc1
    cdef double decay_factor = 1.0 - lr * weight_decay
    cdef double omb1 = 1.0 - beta1
    cdef double omb2 = 1.0 - beta2
    cdef Py_ssize_t n_classes = W.shape[0]
    cdef Py_ssize_t dims = W.shape[1]
    cdef Py_ssize_t c, j
    cdef double g, mm, vv, denom
    for c in range(n_classes):
        for j in range(dims):
            g = gW[c, j]
            mm = beta1 * mW[c, j] + omb1 * g
            vv = beta2 * vW[c, j] + omb2 * (g * g)
            mW[c, j] = mm
            vW[c, j] = vv
            denom = sqrt(vv) / sqrt_bc2 + eps
            W[c, j] = W[c, j] * decay_factor - step_scale * (mm / denom)
    for c in range(n_classes):
        g = gb[c]
        mm = beta1 * mb[c] + omb1 * g
        vv = beta2 * vb[c] + omb2 * (g * g)
        mb[c] = mm
        vb[c] = vv
        denom = sqrt(vv) / sqrt_bc2 + eps
        b[c] = b[c] - step_scale * (mm / denom)
