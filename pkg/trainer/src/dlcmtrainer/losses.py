"""Pairwise ranking losses.

Both losses consume raw model outputs; the logistic squashing lives only
inside the BCE loss and is never applied at inference time.
"""

from __future__ import annotations

import torch

_LOG_FLOOR = 1e-12


def _as_tensor(x):
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def bce_loss(f_pos, f_neg) -> torch.Tensor:
    """-[log sigma(f_pos) + log(1 - sigma(f_neg))], elementwise.

    Logs are clamped at 1e-12, so the loss is finite for any finite input.
    """
    f_pos = _as_tensor(f_pos)
    f_neg = _as_tensor(f_neg)
    p = torch.sigmoid(f_pos)
    q = torch.sigmoid(f_neg)
    return -(
        torch.log(p.clamp_min(_LOG_FLOOR))
        + torch.log((1.0 - q).clamp_min(_LOG_FLOOR))
    )


def triplet_loss(f_pos, f_neg, gamma: float = 1.0) -> torch.Tensor:
    """Hinge max(0, gamma - f_pos + f_neg), elementwise."""
    f_pos = _as_tensor(f_pos)
    f_neg = _as_tensor(f_neg)
    return torch.clamp(gamma - f_pos + f_neg, min=0.0)


LOSSES = {"bce": bce_loss, "triplet": triplet_loss}
