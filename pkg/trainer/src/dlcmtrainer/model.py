"""Compact CNN compatibility models.

A sub-model maps one P x 2P pair image to a single real score: four 3x3
convolution stages with rectified activations, spatial halving after
stages 2 and 3, dropout 0.25 after every stage except the first, then a
single fully-connected scalar output. No layer uses bias terms and the
output has no activation.

The color ensemble sums four sub-models (R, G, B, and RGB); the grayscale
variant is a single one-channel sub-model.
"""

from __future__ import annotations

import torch
from torch import nn

DEFAULT_WIDTHS = (32, 64, 128, 128)


class SubModel(nn.Module):
    """One pair-scoring CNN. Input (B, C, H, W) in [0, 1]; output (B,)."""

    def __init__(
        self,
        in_channels: int,
        height: int,
        width: int,
        widths=DEFAULT_WIDTHS,
        dropout: float = 0.25,
    ):
        super().__init__()
        if len(widths) != 4:
            raise ValueError("exactly four convolution stages")
        w1, w2, w3, w4 = widths
        conv = lambda ci, co: nn.Conv2d(ci, co, 3, padding=1, bias=False)
        self.stage1 = nn.Sequential(conv(in_channels, w1), nn.ReLU())
        self.stage2 = nn.Sequential(
            conv(w1, w2), nn.ReLU(), nn.MaxPool2d(2), nn.Dropout(dropout)
        )
        self.stage3 = nn.Sequential(
            conv(w2, w3), nn.ReLU(), nn.MaxPool2d(2), nn.Dropout(dropout)
        )
        self.stage4 = nn.Sequential(conv(w3, w4), nn.ReLU(), nn.Dropout(dropout))
        flat = w4 * (height // 4) * (width // 4)
        self.head = nn.Linear(flat, 1, bias=False)
        self.in_channels = in_channels
        self.input_hw = (height, width)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.stage4(self.stage3(self.stage2(self.stage1(x))))
        return self.head(x.flatten(1)).squeeze(-1)


class PairScorer(nn.Module):
    """Sum-of-sub-models ensemble over channel views of a pair image."""

    def __init__(self, submodels, channel_slices):
        super().__init__()
        if len(submodels) != len(channel_slices):
            raise ValueError("one channel slice per sub-model")
        self.submodels = nn.ModuleList(submodels)
        self.channel_slices = list(channel_slices)

    def views(self):
        """(name, sub-model, channel slice) triples for isolated training."""
        return [
            (f"sub{i}", m, s)
            for i, (m, s) in enumerate(zip(self.submodels, self.channel_slices))
        ]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        total = None
        for m, s in zip(self.submodels, self.channel_slices):
            out = m(x[:, s])
            total = out if total is None else total + out
        return total


def build_model(kind: str, piece_size: int, widths=DEFAULT_WIDTHS) -> PairScorer:
    """`dlcm` (4 sub-models on RGB pairs) or `graynet` (1 on grayscale)."""
    h, w = piece_size, 2 * piece_size
    if kind == "dlcm":
        subs = [SubModel(1, h, w, widths) for _ in range(3)]
        subs.append(SubModel(3, h, w, widths))
        slices = [slice(0, 1), slice(1, 2), slice(2, 3), slice(0, 3)]
        return PairScorer(subs, slices)
    if kind == "graynet":
        return PairScorer([SubModel(1, h, w, widths)], [slice(0, 1)])
    raise ValueError(f"unknown model kind {kind!r}")


def pairs_to_tensor(pairs, device="cpu") -> torch.Tensor:
    """Stack uint8 pair images into a (B, C, H, W) float tensor in [0, 1]."""
    import numpy as np

    arr = np.stack([np.asarray(p) for p in pairs]).astype("float32") / 255.0
    return torch.from_numpy(arr).permute(0, 3, 1, 2).to(device)
