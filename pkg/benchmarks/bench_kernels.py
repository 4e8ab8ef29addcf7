"""Compare the compiled and pure-Python kernel backends.

Times the two hot paths on a production-shaped workload (4 x 262,144
weights, batches of 16 sparse rows) and checks that both backends agree
on the numbers they produce.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--dims D]
"""

import argparse
import time

import numpy as np

from vulntriage.classifier.kernels import load_backend


def make_workload(dims: int, batch: int, features_per_row: int, seed: int):
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.05, size=(4, dims))
    b = np.zeros(4)
    indptr = np.arange(0, (batch + 1) * features_per_row, features_per_row, dtype=np.int64)
    indices = np.concatenate([
        np.sort(rng.choice(dims, size=features_per_row, replace=False))
        for _ in range(batch)
    ]).astype(np.int64)
    values = np.ones(batch * features_per_row)
    labels = rng.integers(0, 4, size=batch).astype(np.int64)
    return W, b, indptr, indices, values, labels


def time_backend(km, steps: int, dims: int) -> dict:
    W, b, indptr, indices, values, labels = make_workload(dims, 16, 40, seed=1)
    mW = np.zeros_like(W); vW = np.zeros_like(W)
    mb = np.zeros_like(b); vb = np.zeros_like(b)
    gW = np.zeros_like(W); gb = np.zeros_like(b)

    t0 = time.perf_counter()
    for _ in range(steps):
        km.forward_csr(W, b, indptr, indices, values)
    forward_s = (time.perf_counter() - t0) / steps

    losses = []
    t0 = time.perf_counter()
    for t in range(1, steps + 1):
        gW.fill(0.0); gb.fill(0.0)
        losses.append(km.grad_csr(W, b, indptr, indices, values, labels, gW, gb))
        km.adamw_apply(W, b, gW, gb, mW, vW, mb, vb, t, 1e-2, 0.9, 0.999, 1e-8, 0.01)
    step_s = (time.perf_counter() - t0) / steps

    return {
        "forward_ms": forward_s * 1000.0,
        "step_ms": step_s * 1000.0,
        "rows_per_s": 16 / forward_s,
        "final_loss": losses[-1],
        "weights": W,
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=50, help="Timed iterations per backend.")
    parser.add_argument("--dims", type=int, default=1 << 18, help="Feature space size.")
    args = parser.parse_args()

    results = {}
    for name in ("python", "compiled"):
        try:
            km = load_backend(name)
        except ImportError:
            print(f"{name}: not available, skipping")
            continue
        results[name] = time_backend(km, args.steps, args.dims)

    print(f"\nworkload: 4 x {args.dims} weights, batch 16 x 40 features, {args.steps} steps")
    print(f"{'backend':<10} {'forward ms':>11} {'train step ms':>14} {'rows/s':>12}")
    for name, r in results.items():
        print(f"{name:<10} {r['forward_ms']:>11.3f} {r['step_ms']:>14.3f} {r['rows_per_s']:>12.0f}")

    if len(results) == 2:
        speedup = results["python"]["step_ms"] / results["compiled"]["step_ms"]
        drift = float(np.max(np.abs(results["python"]["weights"] - results["compiled"]["weights"])))
        loss_gap = abs(results["python"]["final_loss"] - results["compiled"]["final_loss"])
        print(f"\ncompiled speedup on the train step: {speedup:.2f}x")
        print(f"max weight drift after {args.steps} steps: {drift:.3e}")
        print(f"final loss gap: {loss_gap:.3e}")


if __name__ == "__main__":
    main()
