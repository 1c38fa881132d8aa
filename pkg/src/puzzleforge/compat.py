"""Classical pairwise compatibility measures and the ground-truth oracle.

Every measure works on the two boundary columns each piece exposes after
canonical rotation: the anchor is rotated so the compared edge faces right,
the candidate so its edge faces left. Dissimilarities convert to
compatibility scores by negation; ranking is unchanged and min-max
normalization later maps the best pair toward 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    CompatibilityTensor,
    Piece,
    PuzzleBundle,
    adjacent_pairs,
    opposite,
    relations_for,
    rot_cw,
)

MGC_COV_EPSILON = 1e-6


class MeasureKind(str, Enum):
    SSD_RGB = "ssd-rgb"
    SSD_LAB = "ssd-lab"
    MGC = "mgc"
    L1_ASYM = "l1"
    PREDICTION = "prediction"
    ORACLE = "oracle"
    EXTERNAL = "external"


def _check_skip(skip_eroded: int, width: int) -> None:
    # t = 0 is always legal (even for 2-pixel pieces); positive offsets must
    # leave at least two readable columns inside the eroded frame.
    if skip_eroded < 0 or skip_eroded + 2 > width:
        raise ValueError("skip_eroded out of range for this piece size")
    if skip_eroded > 0 and skip_eroded >= width // 2 - 1:
        raise ValueError("skip_eroded out of range for this piece size")


@dataclass(frozen=True)
class BoundaryColumns:
    """The four abutting pixel columns a measure may consult, extracted at
    offset `skip_eroded` from the cut so zeroed erosion frames are skipped."""

    anchor_last: np.ndarray
    anchor_penultimate: np.ndarray
    candidate_first: np.ndarray
    candidate_second: np.ndarray


def anchor_canonical(piece: Piece, edge: int) -> np.ndarray:
    """Piece rotated so `edge` faces right; float64 (H, W, C)."""
    return rot_cw(piece.pixels, (1 - edge) % 4).astype(np.float64)


def candidate_canonical(piece: Piece, edge: int) -> np.ndarray:
    """Piece rotated so `edge` faces left; float64 (H, W, C)."""
    return rot_cw(piece.pixels, (3 - edge) % 4).astype(np.float64)


def boundary_columns(a: Piece, b: Piece, relation, skip_eroded: int = 0) -> BoundaryColumns:
    ae, ce = relation
    width = min(a.width, a.height)
    _check_skip(skip_eroded, width)
    ac = anchor_canonical(a, ae)
    cc = candidate_canonical(b, ce)
    t = skip_eroded
    return BoundaryColumns(
        anchor_last=ac[:, ac.shape[1] - 1 - t, :],
        anchor_penultimate=ac[:, ac.shape[1] - 2 - t, :],
        candidate_first=cc[:, t, :],
        candidate_second=cc[:, t + 1, :],
    )


def _srgb_to_lab(column: np.ndarray) -> np.ndarray:
    """sRGB (8-bit) -> linear RGB -> XYZ (D65) -> CIE-LAB.

    Single-channel inputs are treated as gray by channel replication.
    """
    col = np.asarray(column, dtype=np.float64) / 255.0
    if col.shape[-1] == 1:
        col = np.repeat(col, 3, axis=-1)
    linear = np.where(
        col <= 0.04045, col / 12.92, ((col + 0.055) / 1.055) ** 2.4
    )
    m = np.array(
        [
            [0.4124564, 0.3575761, 0.1804375],
            [0.2126729, 0.7151522, 0.0721750],
            [0.0193339, 0.1191920, 0.9503041],
        ]
    )
    xyz = linear @ m.T
    white = np.array([0.95047, 1.0, 1.08883])
    ratio = xyz / white
    delta = 6.0 / 29.0
    f = np.where(
        ratio > delta**3, np.cbrt(ratio), ratio / (3 * delta**2) + 4.0 / 29.0
    )
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def _mgc_stats(samples: np.ndarray):
    """Mean and inverse covariance of boundary-gradient samples, padded with
    the dummy gradients {0, +/- e_k} and ridge-regularized so flat tiles
    cannot produce a singular covariance."""
    c = samples.shape[1]
    dummies = [np.zeros(c)]
    for k in range(c):
        e = np.zeros(c)
        e[k] = 1.0
        dummies.append(e)
        dummies.append(-e)
    full = np.vstack([samples, np.array(dummies)])
    mu = full.mean(axis=0)
    cov = np.cov(full, rowvar=False, bias=False)
    cov = np.atleast_2d(cov) + MGC_COV_EPSILON * np.eye(c)
    return mu, np.linalg.inv(cov)


def _mgc_directional(last: np.ndarray, penultimate: np.ndarray, other_first: np.ndarray) -> float:
    """Mahalanobis cost of the cross-boundary gradients against the source
    piece's internal boundary-gradient distribution."""
    mu, cov_inv = _mgc_stats(last - penultimate)
    grads = other_first - last
    centered = grads - mu
    return float(np.einsum("ij,jk,ik->", centered, cov_inv, centered))


def dissimilarity(
    kind: MeasureKind,
    a: Piece,
    b: Piece,
    relation,
    skip_eroded: int = 0,
) -> float:
    """Nonnegative dissimilarity between two oriented piece edges; lower
    means more compatible."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError("pieces must share size and channel count")
    kind = MeasureKind(kind)
    cols = boundary_columns(a, b, relation, skip_eroded)
    if kind is MeasureKind.SSD_RGB:
        return float(np.sum((cols.anchor_last - cols.candidate_first) ** 2))
    if kind is MeasureKind.SSD_LAB:
        al = _srgb_to_lab(cols.anchor_last)
        cl = _srgb_to_lab(cols.candidate_first)
        return float(np.sum((al - cl) ** 2))
    if kind is MeasureKind.MGC:
        d_lr = _mgc_directional(
            cols.anchor_last, cols.anchor_penultimate, cols.candidate_first
        )
        d_rl = _mgc_directional(
            cols.candidate_first, cols.candidate_second, cols.anchor_last
        )
        return d_lr + d_rl
    if kind is MeasureKind.L1_ASYM:
        fwd = np.abs(
            cols.candidate_first
            - (2.0 * cols.anchor_last - cols.anchor_penultimate)
        ).sum()
        bwd = np.abs(
            cols.anchor_last
            - (2.0 * cols.candidate_first - cols.candidate_second)
        ).sum()
        return float(fwd + bwd)
    if kind is MeasureKind.PREDICTION:
        fwd = (
            (
                cols.candidate_first
                - (2.0 * cols.anchor_last - cols.anchor_penultimate)
            )
            ** 2
        ).sum()
        bwd = (
            (
                cols.anchor_last
                - (2.0 * cols.candidate_first - cols.candidate_second)
            )
            ** 2
        ).sum()
        return float(fwd + bwd)
    raise ValueError(f"{kind.value} is not computed here")


def oracle_tensor(bundle: PuzzleBundle) -> CompatibilityTensor:
    """1.0 on every true adjacency, 0.0 elsewhere; already normalized and
    symmetric by construction. Requires ground truth."""
    if bundle.ground_truth is None:
        raise ValueError("oracle tensor requires ground truth")
    relations = relations_for(bundle.puzzle_type)
    n = bundle.n
    scores = np.zeros((n, len(relations), n), dtype=np.float64)
    tensor = CompatibilityTensor(
        n=n,
        puzzle_type=bundle.puzzle_type,
        scores=scores,
        normalized=True,
        symmetric=True,
        relations=relations,
    )
    for p, pe, q, qe in adjacent_pairs(bundle.ground_truth.arrangement()):
        for anchor, ae, cand, ce in ((p, pe, q, qe), (q, qe, p, pe)):
            idx = tensor.rel_index(ae, ce)
            if idx is not None:
                scores[anchor, idx, cand] = 1.0
    return tensor


def full_tensor(
    kind: MeasureKind,
    bundle: PuzzleBundle,
    skip_eroded: int = 0,
    workers: int = 1,
) -> CompatibilityTensor:
    """Negated dissimilarity for all ordered pairs under all relations.

    Embarrassingly parallel over anchors; the result is identical for any
    worker count. Raw output: normalized=False, symmetric=False.
    """
    kind = MeasureKind(kind)
    if kind is MeasureKind.EXTERNAL:
        raise ValueError("external scores are imported, not computed")
    if kind is MeasureKind.ORACLE:
        return oracle_tensor(bundle)
    relations = relations_for(bundle.puzzle_type)
    n = bundle.n
    ctx = _MeasureContext(kind, bundle, skip_eroded)
    anchors = list(range(n))
    if workers > 1:
        import multiprocessing as mp
        from concurrent.futures import ProcessPoolExecutor

        global _FORK_CONTEXT
        _FORK_CONTEXT = ctx
        try:
            with ProcessPoolExecutor(
                max_workers=workers, mp_context=mp.get_context("fork")
            ) as pool:
                rows = list(pool.map(_anchor_scores_forked, anchors))
        finally:
            _FORK_CONTEXT = None
    else:
        rows = [ctx.anchor_scores(a) for a in anchors]
    scores = np.stack(rows, axis=0)
    tensor = CompatibilityTensor(
        n=n,
        puzzle_type=bundle.puzzle_type,
        scores=scores,
        normalized=False,
        symmetric=False,
        relations=relations,
    )
    tensor.fill_diagonal_with_min()
    return tensor


_FORK_CONTEXT = None


def _anchor_scores_forked(anchor):
    return _FORK_CONTEXT.anchor_scores(anchor)


class _MeasureContext:
    """Precomputed boundary columns (and MGC statistics) for one bundle so a
    whole tensor costs O(n * relations) vector operations. Entries agree
    with the scalar `dissimilarity` path up to float summation order."""

    def __init__(self, kind: MeasureKind, bundle: PuzzleBundle, skip_eroded: int):
        self.kind = kind
        self.bundle = bundle
        self.relations = relations_for(bundle.puzzle_type)
        n = bundle.n
        t = skip_eroded
        sample = bundle.piece(0)
        _check_skip(t, min(sample.width, sample.height))
        # Per edge e: columns of every piece in canonical orientation.
        self.al = {}  # anchor last, (n, P, C)
        self.ap = {}  # anchor penultimate
        self.cf = {}  # candidate first
        self.cs = {}  # candidate second
        for e in range(4):
            al, ap, cf, cs = [], [], [], []
            for p in bundle.pieces:
                ac = anchor_canonical(p, e)
                cc = candidate_canonical(p, e)
                al.append(ac[:, ac.shape[1] - 1 - t, :])
                ap.append(ac[:, ac.shape[1] - 2 - t, :])
                cf.append(cc[:, t, :])
                cs.append(cc[:, t + 1, :])
            self.al[e] = np.stack(al)
            self.ap[e] = np.stack(ap)
            self.cf[e] = np.stack(cf)
            self.cs[e] = np.stack(cs)
        if kind is MeasureKind.SSD_LAB:
            self.al_lab = {e: _srgb_to_lab(self.al[e]) for e in range(4)}
            self.cf_lab = {e: _srgb_to_lab(self.cf[e]) for e in range(4)}
        if kind is MeasureKind.MGC:
            c = sample.channels
            self.a_mu = {e: np.zeros((n, c)) for e in range(4)}
            self.a_icov = {e: np.zeros((n, c, c)) for e in range(4)}
            self.c_mu = {e: np.zeros((n, c)) for e in range(4)}
            self.c_icov = {e: np.zeros((n, c, c)) for e in range(4)}
            for e in range(4):
                for i in range(n):
                    mu, icov = _mgc_stats(self.al[e][i] - self.ap[e][i])
                    self.a_mu[e][i] = mu
                    self.a_icov[e][i] = icov
                    mu, icov = _mgc_stats(self.cf[e][i] - self.cs[e][i])
                    self.c_mu[e][i] = mu
                    self.c_icov[e][i] = icov

    def anchor_scores(self, anchor: int) -> np.ndarray:
        n = self.bundle.n
        out = np.zeros((len(self.relations), n), dtype=np.float64)
        for ri, (ae, ce) in enumerate(self.relations):
            out[ri] = -self._pair_row(anchor, ae, ce)
        out[:, anchor] = 0.0
        return out

    def _pair_row(self, anchor: int, ae: int, ce: int) -> np.ndarray:
        kind = self.kind
        if kind is MeasureKind.SSD_RGB:
            diff = self.al[ae][anchor][None] - self.cf[ce]
            return (diff**2).sum(axis=(1, 2))
        if kind is MeasureKind.SSD_LAB:
            diff = self.al_lab[ae][anchor][None] - self.cf_lab[ce]
            return (diff**2).sum(axis=(1, 2))
        if kind is MeasureKind.MGC:
            g_lr = self.cf[ce] - self.al[ae][anchor][None]
            cen = g_lr - self.a_mu[ae][anchor][None, None, :]
            icov = self.a_icov[ae][anchor]
            d_lr = np.einsum("npc,cd,npd->n", cen, icov, cen)
            g_rl = self.al[ae][anchor][None] - self.cf[ce]
            cen = g_rl - self.c_mu[ce][:, None, :]
            d_rl = np.einsum("npc,ncd,npd->n", cen, self.c_icov[ce], cen)
            return d_lr + d_rl
        if kind in (MeasureKind.L1_ASYM, MeasureKind.PREDICTION):
            pred_fwd = 2.0 * self.al[ae][anchor] - self.ap[ae][anchor]
            fwd = self.cf[ce] - pred_fwd[None]
            pred_bwd = 2.0 * self.cf[ce] - self.cs[ce]
            bwd = self.al[ae][anchor][None] - pred_bwd
            if kind is MeasureKind.L1_ASYM:
                return np.abs(fwd).sum(axis=(1, 2)) + np.abs(bwd).sum(axis=(1, 2))
            return (fwd**2).sum(axis=(1, 2)) + (bwd**2).sum(axis=(1, 2))
        raise ValueError(f"{kind.value} is not computed here")


def strip_pair_score(score_chunks) -> float:
    """Total compatibility of a strip pair: the plain sum of chunk scores."""
    chunks = list(score_chunks)
    if not chunks:
        raise ValueError("no chunks")
    return float(sum(chunks))
