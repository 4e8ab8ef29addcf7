"""Numpy reference kernels for the linear softmax classifier.

Same contract as the compiled extension: CSR-batch forward, fused
loss/gradient, and an in-place AdamW step. Scalar expressions mirror the
C loops operation for operation, so within this backend results are
bit-reproducible; across backends only summation order differs (BLAS
dot vs sequential accumulation).
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def forward_csr(
    W: np.ndarray,
    b: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    values: np.ndarray,
) -> np.ndarray:
    """Logits for a CSR batch: out[i] = W[:, idx_i] @ val_i + b. Shape (n, C)."""
    n = len(indptr) - 1
    out = np.empty((n, W.shape[0]), dtype=np.float64)
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        out[i] = W[:, indices[s:e]] @ values[s:e] + b
    return out


def grad_csr(
    W: np.ndarray,
    b: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    values: np.ndarray,
    labels: np.ndarray,
    gW: np.ndarray,
    gb: np.ndarray,
) -> float:
    """Mean cross-entropy over the batch; accumulates 1/n-scaled grads.

    gW and gb must arrive zeroed; samples are processed in order, so the
    accumulation sequence is deterministic.
    """
    n = len(indptr) - 1
    n_classes = W.shape[0]
    loss_sum = 0.0
    inv_n = 1.0 / n
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        idx = indices[s:e]
        val = values[s:e]
        y = int(labels[i])
        logits = W[:, idx] @ val + b
        m = float(np.max(logits))
        ez = np.exp(logits - m)
        z = float(np.sum(ez))
        loss_sum += m + np.log(z) - float(logits[y])
        coef = ez / z
        coef[y] -= 1.0
        coef *= inv_n
        gb += coef
        for c in range(n_classes):
            np.add.at(gW[c], idx, coef[c] * val)
    return loss_sum * inv_n


def adamw_apply(
    W: np.ndarray,
    b: np.ndarray,
    gW: np.ndarray,
    gb: np.ndarray,
    mW: np.ndarray,
    vW: np.ndarray,
    mb: np.ndarray,
    vb: np.ndarray,
    t: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    weight_decay: float,
) -> None:
    """One decoupled-weight-decay Adam step, in place. t is 1-based.

    Weights decay multiplicatively before the update; the bias is exempt
    from decay. Bias correction divides the step by (1 - beta1^t) and the
    second moment by (1 - beta2^t).
    """
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    sqrt_bc2 = np.sqrt(bc2)
    step_scale = lr / bc1
    decay_factor = 1.0 - lr * weight_decay

    mW *= beta1
    mW += (1.0 - beta1) * gW
    vW *= beta2
    vW += (1.0 - beta2) * (gW * gW)
    denom = np.sqrt(vW) / sqrt_bc2 + eps
    W *= decay_factor
    W -= step_scale * (mW / denom)

    mb *= beta1
    mb += (1.0 - beta1) * gb
    vb *= beta2
    vb += (1.0 - beta2) * (gb * gb)
    denom_b = np.sqrt(vb) / sqrt_bc2 + eps
    b -= step_scale * (mb / denom_b)
