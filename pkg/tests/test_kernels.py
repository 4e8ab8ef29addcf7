"""Kernel contract: correctness oracles and backend parity.

forward is checked against a dense matmul, gradients against central
finite differences, and the AdamW step against torch.optim.AdamW as an
independently implemented reference.
"""

import numpy as np
import pytest

from vulntriage.classifier.kernels import BACKEND, load_backend
from vulntriage.classifier.train import batch_loss, gradient_check

try:
    load_backend("compiled")
    HAS_COMPILED = True
except ImportError:
    HAS_COMPILED = False

BACKENDS = ["python"] + (["compiled"] if HAS_COMPILED else [])

C = 4


def make_batch(seed: int, dims: int = 1 << 8, n: int = 12):
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.5, size=(C, dims))
    b = rng.normal(scale=0.1, size=C)
    lengths = rng.integers(0, 20, size=n)  # zero-length rows allowed
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    total = int(indptr[-1])
    indices = np.empty(total, dtype=np.int64)
    pos = 0
    for length in lengths:
        # Unique, sorted indices per row, as featurize produces.
        row = np.sort(rng.choice(dims, size=length, replace=False)).astype(np.int64)
        indices[pos : pos + length] = row
        pos += length
    values = rng.uniform(0.5, 2.0, size=total)
    labels = rng.integers(0, C, size=n).astype(np.int64)
    return W, b, indptr, indices, values, labels


def dense_forward(W, b, indptr, indices, values):
    n = len(indptr) - 1
    X = np.zeros((n, W.shape[1]))
    for i in range(n):
        X[i, indices[indptr[i] : indptr[i + 1]]] = values[indptr[i] : indptr[i + 1]]
    return X @ W.T + b


@pytest.mark.parametrize("backend", BACKENDS)
def test_forward_matches_dense_oracle(backend):
    km = load_backend(backend)
    for seed in range(5):
        W, b, indptr, indices, values, _ = make_batch(seed)
        out = km.forward_csr(W, b, indptr, indices, values)
        assert out.shape == (len(indptr) - 1, C)
        np.testing.assert_allclose(out, dense_forward(W, b, indptr, indices, values), rtol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_row_scores_bias(backend):
    km = load_backend(backend)
    W = np.zeros((C, 16))
    b = np.array([0.1, 0.2, 0.3, 0.4])
    indptr = np.array([0, 0], dtype=np.int64)
    out = km.forward_csr(W, b, indptr, np.empty(0, np.int64), np.empty(0))
    np.testing.assert_array_equal(out[0], b)


@pytest.mark.parametrize("backend", BACKENDS)
def test_loss_matches_manual_logsumexp(backend):
    km = load_backend(backend)
    W, b, indptr, indices, values, labels = make_batch(3)
    gW = np.zeros_like(W)
    gb = np.zeros_like(b)
    loss = km.grad_csr(W, b, indptr, indices, values, labels, gW, gb)
    logits = dense_forward(W, b, indptr, indices, values)
    m = logits.max(axis=1, keepdims=True)
    lse = (m[:, 0] + np.log(np.exp(logits - m).sum(axis=1)))
    expected = float(np.mean(lse - logits[np.arange(len(labels)), labels]))
    assert loss == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_gradients_match_finite_differences(backend):
    km = load_backend(backend)
    for seed in (0, 1, 2):
        W, b, indptr, indices, values, labels = make_batch(seed, dims=1 << 6, n=6)
        err = gradient_check(W, b, indptr, indices, values, labels, kernels=km)
        assert err < 1e-6, f"seed {seed}: max relative error {err}"


@pytest.mark.parametrize("backend", BACKENDS)
def test_gradient_sums_to_zero_over_classes(backend):
    # Softmax CE gradients sum to zero across classes for each feature.
    km = load_backend(backend)
    W, b, indptr, indices, values, labels = make_batch(4)
    gW = np.zeros_like(W)
    gb = np.zeros_like(b)
    km.grad_csr(W, b, indptr, indices, values, labels, gW, gb)
    np.testing.assert_allclose(gW.sum(axis=0), np.zeros(W.shape[1]), atol=1e-14)
    assert gb.sum() == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
def test_adamw_matches_torch_reference(backend):
    torch = pytest.importorskip("torch")
    km = load_backend(backend)
    rng = np.random.default_rng(11)
    dims = 64
    W = rng.normal(size=(C, dims))
    b = rng.normal(size=C)
    lr, beta1, beta2, eps, wd = 3e-3, 0.9, 0.999, 1e-8, 0.01

    tW = torch.nn.Parameter(torch.tensor(W))
    tb = torch.nn.Parameter(torch.tensor(b))
    opt = torch.optim.AdamW(
        [
            {"params": [tW], "weight_decay": wd},
            {"params": [tb], "weight_decay": 0.0},
        ],
        lr=lr, betas=(beta1, beta2), eps=eps,
    )

    mW = np.zeros_like(W); vW = np.zeros_like(W)
    mb = np.zeros_like(b); vb = np.zeros_like(b)
    for t in range(1, 6):
        gW = rng.normal(size=(C, dims))
        gb = rng.normal(size=C)
        tW.grad = torch.tensor(gW)
        tb.grad = torch.tensor(gb)
        opt.step()
        km.adamw_apply(W, b, gW, gb, mW, vW, mb, vb, t, lr, beta1, beta2, eps, wd)
    np.testing.assert_allclose(W, tW.detach().numpy(), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(b, tb.detach().numpy(), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_weight_decay_is_decoupled(backend):
    km = load_backend(backend)
    W = np.full((C, 8), 2.0)
    b = np.full(C, 3.0)
    zeros_W = np.zeros_like(W)
    zeros_b = np.zeros_like(b)
    mW = np.zeros_like(W); vW = np.zeros_like(W)
    mb = np.zeros_like(b); vb = np.zeros_like(b)
    lr, wd = 0.1, 0.5
    km.adamw_apply(W, b, zeros_W, zeros_b, mW, vW, mb, vb, 1, lr, 0.9, 0.999, 1e-8, wd)
    # Zero gradient: weights shrink by exactly (1 - lr*wd); bias is exempt.
    np.testing.assert_array_equal(W, np.full((C, 8), 2.0 * (1 - lr * wd)))
    np.testing.assert_array_equal(b, np.full(C, 3.0))


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled extension not built")
def test_backend_parity():
    ck = load_backend("compiled")
    pk = load_backend("python")
    for seed in range(4):
        W, b, indptr, indices, values, labels = make_batch(seed)
        f_c = ck.forward_csr(W, b, indptr, indices, values)
        f_p = pk.forward_csr(W, b, indptr, indices, values)
        np.testing.assert_allclose(f_c, f_p, rtol=1e-12, atol=1e-13)

        gW_c = np.zeros_like(W); gb_c = np.zeros_like(b)
        gW_p = np.zeros_like(W); gb_p = np.zeros_like(b)
        l_c = ck.grad_csr(W, b, indptr, indices, values, labels, gW_c, gb_c)
        l_p = pk.grad_csr(W, b, indptr, indices, values, labels, gW_p, gb_p)
        assert l_c == pytest.approx(l_p, rel=1e-12)
        np.testing.assert_allclose(gW_c, gW_p, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(gb_c, gb_p, rtol=1e-12, atol=1e-14)


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled extension not built")
def test_adamw_bitwise_identical_across_backends():
    """Elementwise update math must round identically in C and numpy."""
    ck = load_backend("compiled")
    pk = load_backend("python")
    rng = np.random.default_rng(5)
    shape = (C, 128)

    def run(km):
        W = rng_state["W"].copy(); b = rng_state["b"].copy()
        mW = np.zeros(shape); vW = np.zeros(shape)
        mb = np.zeros(C); vb = np.zeros(C)
        for t in range(1, 8):
            km.adamw_apply(
                W, b, rng_state["gW"][t], rng_state["gb"][t],
                mW, vW, mb, vb, t, 1e-2, 0.9, 0.999, 1e-8, 0.01,
            )
        return W, b

    rng_state = {
        "W": rng.normal(size=shape),
        "b": rng.normal(size=C),
        "gW": {t: rng.normal(size=shape) for t in range(1, 8)},
        "gb": {t: rng.normal(size=C) for t in range(1, 8)},
    }
    W_c, b_c = run(ck)
    W_p, b_p = run(pk)
    assert np.array_equal(W_c, W_p)
    assert np.array_equal(b_c, b_p)


@pytest.mark.parametrize("backend", BACKENDS)
def test_grad_is_deterministic_within_backend(backend):
    km = load_backend(backend)
    W, b, indptr, indices, values, labels = make_batch(9)

    def run():
        gW = np.zeros_like(W)
        gb = np.zeros_like(b)
        loss = km.grad_csr(W, b, indptr, indices, values, labels, gW, gb)
        return loss, gW, gb

    l1, gW1, gb1 = run()
    l2, gW2, gb2 = run()
    assert l1 == l2
    assert np.array_equal(gW1, gW2)
    assert np.array_equal(gb1, gb2)


def test_active_backend_is_reported():
    assert BACKEND in ("compiled", "python")


def test_batch_loss_agrees_with_grad_loss():
    km = load_backend("python")
    W, b, indptr, indices, values, labels = make_batch(2)
    gW = np.zeros_like(W)
    gb = np.zeros_like(b)
    from_grad = km.grad_csr(W, b, indptr, indices, values, labels, gW, gb)
    standalone = batch_loss(W, b, indptr, indices, values, labels, kernels=km)
    assert standalone == pytest.approx(from_grad, rel=1e-12)
