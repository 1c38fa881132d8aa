"""Score tensor post-processing: per-slice min-max normalization followed
by mirror-pair averaging to enforce symmetry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CompatibilityTensor


@dataclass
class NormalizationStats:
    degenerate_slices: int = 0
    total_slices: int = 0


def minmax_normalize(
    t: CompatibilityTensor, stats: NormalizationStats = None
) -> CompatibilityTensor:
    """Map every (anchor piece, anchor edge) slice to [0, 1].

    Self-pairs are excluded from the min/max; degenerate slices (max == min)
    collapse to all zeros and are counted in `stats`.
    """
    if t.normalized:
        raise ValueError("tensor already normalized")
    out = t.copy()
    scores = out.scores
    n = out.n
    # One slice per (anchor piece, anchor edge): the min/max run over every
    # candidate piece and candidate edge that edge can pair with.
    groups = {}
    for ri, (ae, _) in enumerate(out.relations):
        groups.setdefault(ae, []).append(ri)
    mask = ~np.eye(n, dtype=bool)
    for anchor in range(n):
        for ae, rel_idx in groups.items():
            block = scores[anchor, rel_idx, :]
            valid = block[:, mask[anchor]]
            if stats is not None:
                stats.total_slices += 1
            if valid.size == 0:
                scores[anchor, rel_idx, :] = 0.0
                if stats is not None:
                    stats.degenerate_slices += 1
                continue
            lo = valid.min()
            hi = valid.max()
            if hi == lo:
                scores[anchor, rel_idx, :] = 0.0
                if stats is not None:
                    stats.degenerate_slices += 1
            else:
                scores[anchor, rel_idx, :] = (block - lo) / (hi - lo)
                scores[anchor, rel_idx, anchor] = 0.0
    out.normalized = True
    out.symmetric = False
    return out


def symmetrize(t: CompatibilityTensor) -> CompatibilityTensor:
    """Replace every mirrored pair of entries by their mean.

    The mirror of (anchor, (ae, ce), candidate) is (candidate, (ce, ae),
    anchor). Idempotent; requires a normalized tensor.
    """
    if not t.normalized:
        raise ValueError("normalize first")
    out = t.copy()
    scores = out.scores
    rel_to_idx = {rel: i for i, rel in enumerate(out.relations)}
    for ri, (ae, ce) in enumerate(out.relations):
        mi = rel_to_idx[(ce, ae)]
        a = scores[:, ri, :]
        b = scores[:, mi, :].T
        mean = (a + b) / 2.0
        scores[:, ri, :] = mean
        scores[:, mi, :] = mean.T
    out.symmetric = True
    return out


def postprocess(t: CompatibilityTensor, stats: NormalizationStats = None) -> CompatibilityTensor:
    """The fixed normalize-then-symmetrize pipeline."""
    return symmetrize(minmax_normalize(t, stats))
