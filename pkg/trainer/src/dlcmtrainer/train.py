"""Training loop with isolated per-sub-model updates and Top-1 validation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

from .losses import LOSSES
from .model import PairScorer, pairs_to_tensor
from .pairs import _DIR_OFFSETS, make_pair, opposite, sample_triplets, tile_grid


@dataclass
class TrainConfig:
    piece_size: int
    epochs: int = 30
    batch_size: int = 64
    steps_per_epoch: int = 8
    lr: float = 1e-4
    loss: str = "bce"
    seed: int = 0
    augment: bool = False
    same_image_prob: float = 0.5

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {sorted(LOSSES)}")
        if self.epochs < 1 or self.batch_size < 1 or self.steps_per_epoch < 1:
            raise ValueError("epochs, batch_size, steps_per_epoch must be >= 1")


@torch.no_grad()
def top1_accuracy(model: PairScorer, images, piece_size: int, batch=256) -> float:
    """Fraction of anchor edges whose true neighbor outranks every other
    edge in the image (a Type-2 pool: all four edges of all other pieces).

    Ties are counted favourably: the true candidate wins unless some other
    candidate scores strictly higher.
    """
    model.eval()
    hits = total = 0
    for image in images:
        grid = tile_grid(np.asarray(image), piece_size)
        rows, cols = grid.shape[:2]
        cells = [(r, c) for r in range(rows) for c in range(cols)]
        for r, c in cells:
            for d, (dr, dc) in _DIR_OFFSETS.items():
                nr, nc = r + dr, c + dc
                if not (0 <= nr < rows and 0 <= nc < cols):
                    continue
                pool = []
                true_idx = None
                for (qr, qc) in cells:
                    if (qr, qc) == (r, c):
                        continue
                    for ce in range(4):
                        if (qr, qc) == (nr, nc) and ce == opposite(d):
                            true_idx = len(pool)
                        pool.append(make_pair(grid[r, c], grid[qr, qc], d, ce))
                scores = []
                for i in range(0, len(pool), batch):
                    scores.append(model(pairs_to_tensor(pool[i : i + batch])))
                scores = torch.cat(scores)
                total += 1
                hits += bool((scores > scores[true_idx]).sum() == 0)
    return hits / total if total else 0.0


def train(
    corpus,
    model: PairScorer,
    cfg: TrainConfig,
    val_corpus=None,
    log_path=None,
    stop_at_top1: float = None,
):
    """Train each sub-model independently on identical batches.

    Returns a list of {"epoch", "loss", "val_top1"} records; `val_top1` is
    None when no validation corpus is given. Determinism holds under a
    fixed seed up to the compute backend's reduction order.

    `stop_at_top1` optionally ends training early once the validation
    Top-1 reaches the given level.
    """
    torch.manual_seed(cfg.seed)
    loss_fn = LOSSES[cfg.loss]
    optimizers = [
        torch.optim.Adam(sub.parameters(), lr=cfg.lr)
        for _, sub, _ in model.views()
    ]
    log = []
    step_seed = np.random.SeedSequence(cfg.seed)
    for epoch in range(cfg.epochs):
        model.train()
        epoch_losses = []
        for step in range(cfg.steps_per_epoch):
            triplets = sample_triplets(
                corpus,
                cfg.batch_size,
                cfg.piece_size,
                seed=step_seed.spawn(1)[0],
                augment=cfg.augment,
                same_image_prob=cfg.same_image_prob,
            )
            pos = pairs_to_tensor([t.pos_pair for t in triplets])
            neg = pairs_to_tensor([t.neg_pair for t in triplets])
            step_loss = 0.0
            for (_, sub, ch), opt in zip(model.views(), optimizers):
                opt.zero_grad()
                loss = loss_fn(sub(pos[:, ch]), sub(neg[:, ch])).mean()
                if not torch.isfinite(loss):
                    raise RuntimeError(
                        f"training diverged: non-finite loss at epoch {epoch}"
                    )
                loss.backward()
                opt.step()
                step_loss += float(loss.detach())
            epoch_losses.append(step_loss)
        val = (
            top1_accuracy(model, val_corpus, cfg.piece_size)
            if val_corpus
            else None
        )
        log.append(
            {"epoch": epoch, "loss": float(np.mean(epoch_losses)), "val_top1": val}
        )
        if log_path is not None:
            with open(log_path, "w") as fh:
                json.dump(log, fh, indent=2)
        if stop_at_top1 is not None and val is not None and val >= stop_at_top1:
            break
    return log
