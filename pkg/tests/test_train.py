"""Training loop: schedule, shuffling, determinism, convergence."""

import dataclasses
import math
import types

import numpy as np
import pytest

from vulntriage.classifier.kernels import load_backend
from vulntriage.classifier.train import (
    TrainConfig,
    TrainError,
    _SplitMix64,
    schedule_lr,
    train,
)
from vulntriage.dataset import DatasetRow
from vulntriage.severity import SeverityLabel

PK = load_backend("python")


def row(i: int, text: str, label) -> DatasetRow:
    return DatasetRow(
        id=f"T-{i:04d}", title=None, description=text, cpes=(),
        cvss_v3_1=5.0, label=label, split="train",
    )


def toy_rows(n_per_class: int = 12) -> list[DatasetRow]:
    phrases = {
        SeverityLabel.LOW: "minor cosmetic issue in the settings page",
        SeverityLabel.MEDIUM: "open redirect allows phishing on the login page",
        SeverityLabel.HIGH: "sql injection in the search endpoint",
        SeverityLabel.CRITICAL: "unauthenticated remote code execution in the agent",
    }
    rows = []
    i = 0
    for label, phrase in phrases.items():
        for k in range(n_per_class):
            rows.append(row(i, f"{phrase} variant {k}", label))
            i += 1
    return rows


class TestSchedule:
    def test_linear_warmup_then_linear_decay(self):
        total, warmup, peak = 100, 10, 0.5
        # Oracle: closed-form values at hand-picked steps.
        assert schedule_lr(1, total, warmup, peak) == pytest.approx(0.05)
        assert schedule_lr(5, total, warmup, peak) == pytest.approx(0.25)
        assert schedule_lr(10, total, warmup, peak) == pytest.approx(0.5)
        assert schedule_lr(55, total, warmup, peak) == pytest.approx(0.25)
        assert schedule_lr(100, total, warmup, peak) == pytest.approx(0.0)

    def test_peak_is_maximum(self):
        vals = [schedule_lr(s, 200, 12, 1e-2) for s in range(1, 201)]
        assert max(vals) == pytest.approx(1e-2)
        assert vals.index(max(vals)) == 11  # step 12, at warmup end

    def test_no_warmup(self):
        assert schedule_lr(1, 10, 0, 1.0) == pytest.approx(0.9)
        assert schedule_lr(10, 10, 0, 1.0) == pytest.approx(0.0)

    def test_never_negative(self):
        for s in range(1, 301):
            assert schedule_lr(s, 300, 18, 2e-3) >= 0.0


class TestShuffle:
    def test_deterministic_for_seed(self):
        a = list(range(50))
        b = list(range(50))
        _SplitMix64(99).shuffle(a)
        _SplitMix64(99).shuffle(b)
        assert a == b

    def test_seed_changes_order(self):
        a = list(range(50))
        b = list(range(50))
        _SplitMix64(1).shuffle(a)
        _SplitMix64(2).shuffle(b)
        assert a != b

    def test_is_a_permutation(self):
        a = list(range(200))
        _SplitMix64(7).shuffle(a)
        assert sorted(a) == list(range(200))

    def test_stream_values_are_64_bit(self):
        g = _SplitMix64(0)
        vals = [g.next_u64() for _ in range(100)]
        assert all(0 <= v < 1 << 64 for v in vals)
        assert len(set(vals)) == 100


class TestConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.learning_rate == pytest.approx(1e-2)
        assert cfg.batch_size == 16
        assert cfg.epochs == 5
        assert cfg.weight_decay == pytest.approx(0.01)
        assert cfg.warmup_fraction == pytest.approx(0.06)
        assert cfg.rng_seed == 2024

    @pytest.mark.parametrize("field,bad", [
        ("learning_rate", 0.0),
        ("learning_rate", -1.0),
        ("batch_size", 0),
        ("epochs", 0),
        ("beta1", 1.0),
        ("beta2", -0.1),
        ("eps", 0.0),
        ("weight_decay", -0.5),
        ("warmup_fraction", 1.5),
    ])
    def test_rejects_bad_values(self, field, bad):
        with pytest.raises(ValueError):
            dataclasses.replace(TrainConfig(), **{field: bad})

    def test_dict_roundtrip(self):
        cfg = TrainConfig(learning_rate=3e-3, epochs=2, rng_seed=1)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg


class TestTrain:
    def test_loss_decreases_and_fits_toy_corpus(self):
        rows = toy_rows()
        cfg = TrainConfig(epochs=4, batch_size=8)
        model, log = train(rows, cfg)
        losses = [e["loss"] for e in log]
        assert len(log) == 4
        assert losses[-1] < losses[0]
        assert log[-1]["train_accuracy"] == 1.0
        assert log[-1]["eval_accuracy"] is None
        for text, want in [
            ("cosmetic issue in settings", SeverityLabel.LOW),
            ("unauthenticated remote code execution", SeverityLabel.CRITICAL),
        ]:
            assert model.predict_text(text).label is want

    def test_same_seed_is_bitwise_reproducible(self):
        rows = toy_rows(6)
        cfg = TrainConfig(epochs=2)
        m1, log1 = train(rows, cfg)
        m2, log2 = train(rows, cfg)
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.bias, m2.bias)
        assert log1 == log2

    def test_seed_changes_visit_order_but_still_learns(self):
        rows = toy_rows(6)
        m1, _ = train(rows, TrainConfig(epochs=2, rng_seed=1))
        m2, _ = train(rows, TrainConfig(epochs=2, rng_seed=2))
        assert not np.array_equal(m1.weights, m2.weights)

    def test_eval_accuracy_reported(self):
        rows = toy_rows(8)
        model, log = train(rows, TrainConfig(epochs=2), eval_rows=rows[:10])
        assert log[-1]["eval_accuracy"] == 1.0

    def test_empty_rows_rejected(self):
        with pytest.raises(TrainError, match="no training rows"):
            train([], TrainConfig())

    def test_unlabeled_row_rejected(self):
        rows = toy_rows(2)
        rows.append(row(999, "no label here", None))
        with pytest.raises(TrainError, match="T-0999"):
            train(rows, TrainConfig(epochs=1))

    def test_non_finite_loss_aborts_with_hint(self):
        # A kernels stub whose loss is NaN must abort, not train on garbage.
        def bad_grad(W, b, indptr, indices, values, labels, gW, gb):
            return float("nan")

        stub = types.SimpleNamespace(
            NAME="stub",
            forward_csr=PK.forward_csr,
            grad_csr=bad_grad,
            adamw_apply=PK.adamw_apply,
        )
        with pytest.raises(TrainError, match="[Nn]on-finite"):
            train(toy_rows(2), TrainConfig(epochs=1), kernels=stub)

    def test_epoch_log_shape(self):
        _, log = train(toy_rows(3), TrainConfig(epochs=3))
        assert [e["epoch"] for e in log] == [1, 2, 3]
        for e in log:
            assert set(e) == {"epoch", "loss", "train_accuracy", "eval_accuracy"}
            assert math.isfinite(e["loss"])
            assert 0.0 <= e["train_accuracy"] <= 1.0
