"""Pair-image construction and online triplet sampling.

A model input is a P x 2P pair image: the anchor piece on the left, the
candidate on the right, both rotated so that the compared edges meet at the
seam (columns P-1 and P). Left-edge comparisons, for example, rotate both
pieces by 180 degrees.

Edge indices and relation ordering follow the CMX interchange convention:
TOP=0, RIGHT=1, BOTTOM=2, LEFT=3; Type-1 relations are (e, opposite(e)) for
e in 0..3, Type-2 relations are all 16 ordered edge pairs in row-major
(anchor edge, candidate edge) order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

TOP, RIGHT, BOTTOM, LEFT = 0, 1, 2, 3


def opposite(edge: int) -> int:
    return (edge + 2) % 4


def relations(puzzle_type: int):
    if puzzle_type == 1:
        return tuple((a, opposite(a)) for a in range(4))
    if puzzle_type == 2:
        return tuple((a, c) for a in range(4) for c in range(4))
    raise ValueError(f"unknown puzzle type {puzzle_type}")


def rot_cw(pixels: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate an H x W x C array clockwise by quarter turns."""
    return np.rot90(pixels, -quarter_turns, axes=(0, 1))


def make_pair(
    anchor: np.ndarray, candidate: np.ndarray, anchor_edge: int, candidate_edge: int
) -> np.ndarray:
    """P x 2P pair image for one relation.

    The anchor is rotated so `anchor_edge` faces right, the candidate so
    `candidate_edge` faces left; the compared edges then meet at the seam.
    """
    if anchor.shape != candidate.shape:
        raise ValueError("anchor and candidate must share shape")
    h, w = anchor.shape[:2]
    if h != w:
        raise ValueError("pieces must be square")
    left = rot_cw(anchor, (RIGHT - anchor_edge) % 4)
    right = rot_cw(candidate, (LEFT - candidate_edge) % 4)
    return np.concatenate([left, right], axis=1)


def tile_grid(image: np.ndarray, piece_size: int) -> np.ndarray:
    """Center-crop to a multiple of the piece size and tile row-major.

    Returns an array of shape (rows, cols, P, P, C).
    """
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[:, :, None]
    h, w = image.shape[:2]
    rows, cols = h // piece_size, w // piece_size
    if rows < 1 or cols < 1:
        raise ValueError("image smaller than a single piece")
    top = (h - rows * piece_size) // 2
    lft = (w - cols * piece_size) // 2
    crop = image[top : top + rows * piece_size, lft : lft + cols * piece_size]
    tiles = crop.reshape(rows, piece_size, cols, piece_size, crop.shape[2])
    return tiles.transpose(0, 2, 1, 3, 4)


_DIR_OFFSETS = {TOP: (-1, 0), RIGHT: (0, 1), BOTTOM: (1, 0), LEFT: (0, -1)}


def degrade_frame(tile: np.ndarray, t: int) -> np.ndarray:
    """Zero the t-pixel frame of a tile (erosion-style degradation)."""
    out = tile.copy()
    if t > 0:
        out[:t] = 0
        out[-t:] = 0
        out[:, :t] = 0
        out[:, -t:] = 0
    return out


def shift_tile(tile: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Shift content left by dx and up by dy, zero-filling vacated pixels."""
    out = np.zeros_like(tile)
    h, w = tile.shape[:2]
    src = tile[max(dy, 0) : h + min(dy, 0), max(dx, 0) : w + min(dx, 0)]
    out[max(-dy, 0) : max(-dy, 0) + src.shape[0],
        max(-dx, 0) : max(-dx, 0) + src.shape[1]] = src
    return out


def augment_pair(pair: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Degrade and shift each half of a pair image independently."""
    h, w = pair.shape[:2]
    if w != 2 * h:
        raise ValueError("pair must be P x 2P")
    halves = []
    for half in (pair[:, :h], pair[:, h:]):
        t = int(rng.integers(0, 3))
        dx = int(rng.integers(-1, 2))
        dy = int(rng.integers(-1, 2))
        halves.append(shift_tile(degrade_frame(half, t), dx, dy))
    return np.concatenate(halves, axis=1)


@dataclass(frozen=True)
class TripletSample:
    """One anchor with a true-neighbor pair and a non-neighbor pair."""

    pos_pair: np.ndarray  # P x 2P x C
    neg_pair: np.ndarray  # P x 2P x C
    image_index: int
    anchor_cell: tuple
    anchor_edge: int


def _usable(corpus, piece_size):
    usable = []
    for idx, image in enumerate(corpus):
        image = np.asarray(image)
        h, w = image.shape[:2]
        rows, cols = h // piece_size, w // piece_size
        if rows * cols < 2 or (rows < 2 and cols < 2):
            warnings.warn(
                f"corpus image {idx} is smaller than two pieces; skipped",
                stacklevel=3,
            )
            continue
        usable.append((idx, tile_grid(image, piece_size)))
    return usable


def sample_triplets(
    corpus,
    batch: int,
    piece_size: int,
    seed,
    augment: bool = False,
    same_image_prob: float = 0.5,
):
    """Sample `batch` online triplets from a corpus of images.

    Positives pair an anchor edge with its true neighbor in the source
    image; negatives pair the same anchor edge with any other edge, drawn
    from the same image with probability `same_image_prob` and from the
    whole corpus otherwise.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    rng = np.random.default_rng(seed)
    usable = _usable(corpus, piece_size)
    if not usable:
        raise ValueError("no corpus image holds at least two pieces")

    samples = []
    while len(samples) < batch:
        img_idx, grid = usable[rng.integers(len(usable))]
        rows, cols = grid.shape[:2]
        r = int(rng.integers(rows))
        c = int(rng.integers(cols))
        edges = [
            d
            for d, (dr, dc) in _DIR_OFFSETS.items()
            if 0 <= r + dr < rows and 0 <= c + dc < cols
        ]
        d = int(edges[rng.integers(len(edges))])
        dr, dc = _DIR_OFFSETS[d]
        anchor = grid[r, c]
        pos_pair = make_pair(anchor, grid[r + dr, c + dc], d, opposite(d))

        while True:
            if len(usable) == 1 or rng.random() < same_image_prob:
                n_idx, n_grid = img_idx, grid
            else:
                choice = int(rng.integers(len(usable)))
                n_idx, n_grid = usable[choice]
            nr = int(rng.integers(n_grid.shape[0]))
            nc = int(rng.integers(n_grid.shape[1]))
            ce = int(rng.integers(4))
            is_positive = (
                n_idx == img_idx
                and (nr, nc) == (r + dr, c + dc)
                and ce == opposite(d)
            )
            if not is_positive:
                break
        neg_pair = make_pair(anchor, n_grid[nr, nc], d, ce)

        if augment:
            pos_pair = augment_pair(pos_pair, rng)
            neg_pair = augment_pair(neg_pair, rng)
        samples.append(
            TripletSample(pos_pair, neg_pair, img_idx, (r, c), d)
        )
    return samples
