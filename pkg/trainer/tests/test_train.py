import json

import numpy as np
import pytest
import torch

from dlcmtrainer.model import build_model
from dlcmtrainer.train import TrainConfig, top1_accuracy, train
from conftest import smooth_image


def tiny_corpus(n=3, seed=0):
    return [smooth_image(16, 16, seed=seed + s) for s in range(n)]


def test_config_validation():
    with pytest.raises(ValueError, match="loss"):
        TrainConfig(piece_size=8, loss="mse")
    with pytest.raises(ValueError):
        TrainConfig(piece_size=8, epochs=0)


@pytest.mark.parametrize("loss", ["bce", "triplet"])
def test_losses_finite_and_trending_down(loss, tmp_path):
    corpus = tiny_corpus(4)
    model = build_model("graynet", 8)
    cfg = TrainConfig(
        piece_size=8, epochs=6, steps_per_epoch=4, batch_size=16,
        lr=1e-3, loss=loss, seed=3,
    )
    log = train(corpus, model, cfg, log_path=tmp_path / "log.json")
    losses = [rec["loss"] for rec in log]
    assert all(np.isfinite(losses))
    first, last = np.mean(losses[:2]), np.mean(losses[-2:])
    assert last < first  # epoch-mean trend decreases on an easy corpus
    doc = json.loads((tmp_path / "log.json").read_text())
    assert [set(rec) for rec in doc] == [{"epoch", "loss", "val_top1"}] * len(log)
    assert all(rec["val_top1"] is None for rec in doc)


def test_validation_trace_recorded():
    corpus = tiny_corpus(4)
    model = build_model("graynet", 8)
    cfg = TrainConfig(piece_size=8, epochs=2, steps_per_epoch=2, batch_size=8, seed=4)
    log = train(corpus[:3], model, cfg, val_corpus=corpus[3:])
    assert len(log) == 2
    assert all(0.0 <= rec["val_top1"] <= 1.0 for rec in log)


def test_divergence_aborts_with_diagnostic():
    corpus = tiny_corpus(2)
    model = build_model("graynet", 8)
    with torch.no_grad():
        model.submodels[0].head.weight.fill_(float("nan"))
    cfg = TrainConfig(piece_size=8, epochs=1, steps_per_epoch=1, batch_size=4)
    with pytest.raises(RuntimeError, match="diverged"):
        train(corpus, model, cfg)


def test_early_stop_on_target_top1():
    corpus = tiny_corpus(4)
    model = build_model("graynet", 8)
    cfg = TrainConfig(piece_size=8, epochs=5, steps_per_epoch=1, batch_size=4, seed=5)
    log = train(corpus[:3], model, cfg, val_corpus=corpus[3:], stop_at_top1=0.0)
    assert len(log) == 1  # any accuracy meets a zero target


def test_top1_ties_count_favourably():
    model = build_model("graynet", 8)
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    # all scores identical: no candidate is strictly better than the truth
    assert top1_accuracy(model, [smooth_image(16, 16, seed=9)], 8) == 1.0


def test_submodels_update_independently():
    corpus = [smooth_image(16, 16, seed=s, channels=3) for s in range(3)]
    model = build_model("dlcm", 8)
    before = [
        [p.detach().clone() for p in sub.parameters()]
        for _, sub, _ in model.views()
    ]
    cfg = TrainConfig(piece_size=8, epochs=1, steps_per_epoch=2, batch_size=8, seed=6)
    train(corpus, model, cfg)
    for (name, sub, _), old in zip(model.views(), before):
        changed = any(
            not torch.equal(p.detach(), q) for p, q in zip(sub.parameters(), old)
        )
        assert changed, f"{name} did not train"
