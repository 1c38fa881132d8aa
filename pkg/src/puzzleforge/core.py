"""Shared domain types: pieces, bundles, arrangements, score tensors.

All types are immutable after construction (pixel buffers are marked
read-only) and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np


class Edge(IntEnum):
    """Side of a square piece; rotating 90 degrees clockwise maps
    Top -> Right -> Bottom -> Left -> Top."""

    TOP = 0
    RIGHT = 1
    BOTTOM = 2
    LEFT = 3


def opposite(edge: int) -> int:
    return (edge + 2) % 4


def rot_cw(pixels: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Rotate an (H, W, C) array clockwise by 90 * quarter_turns degrees."""
    return np.rot90(pixels, -(quarter_turns % 4))


# Ordered relation lists backing the tensor's middle axis.
# Type-2: index = 4 * anchor_edge + candidate_edge.
# Type-1: candidate edge is always the geometric opposite; index = anchor_edge.
RELATIONS_TYPE1 = tuple((a, opposite(a)) for a in range(4))
RELATIONS_TYPE2 = tuple((a, c) for a in range(4) for c in range(4))


def relations_for(puzzle_type: int):
    if puzzle_type == 1:
        return RELATIONS_TYPE1
    if puzzle_type == 2:
        return RELATIONS_TYPE2
    raise ValueError(f"unknown puzzle type {puzzle_type}")


@dataclass(frozen=True)
class Piece:
    """One tile: dense non-negative id plus an (H, W, C) uint8 buffer.

    Square puzzles have H == W; strip puzzles use tall rectangles.
    """

    id: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("piece id must be >= 0")
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3:
            raise ValueError("pixels must be (H, W, C)")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def size(self) -> int:
        """Side length P for square pieces."""
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def oriented(self, orientation: int) -> np.ndarray:
        """Pixel content after applying the placement rotation."""
        return rot_cw(self.pixels, orientation)


@dataclass(frozen=True)
class GroundTruth:
    """Per-piece (row, col, orientation) with orientation in quarter turns
    clockwise. Positions must tile a dense rows x cols grid."""

    placements: dict  # piece id -> (row, col, orientation)
    rows: int
    cols: int

    def __post_init__(self):
        seen = set()
        for pid, (r, c, o) in self.placements.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"piece {pid} placed outside the grid")
            if (r, c) in seen:
                raise ValueError(f"duplicate ground-truth cell ({r}, {c})")
            if o not in (0, 1, 2, 3):
                raise ValueError("orientation must be 0..3 quarter turns")
            seen.add((r, c))
        if len(self.placements) != self.rows * self.cols:
            raise ValueError("ground truth does not fill the grid")

    def arrangement(self) -> "Arrangement":
        return Arrangement(dict(self.placements), self.rows, self.cols)


@dataclass(frozen=True)
class PuzzleBundle:
    pieces: tuple
    puzzle_type: int
    known_dims: Optional[tuple] = None
    ground_truth: Optional[GroundTruth] = None
    erosion_width: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        n = len(self.pieces)
        if sorted(p.id for p in self.pieces) != list(range(n)):
            raise ValueError("piece ids must be dense 0..N-1")
        shapes = {p.pixels.shape for p in self.pieces}
        if len(shapes) > 1:
            raise ValueError("all pieces must share the same shape")
        if self.puzzle_type not in (1, 2):
            raise ValueError("puzzle_type must be 1 or 2")
        if self.known_dims is not None:
            r, c = self.known_dims
            if r * c != n:
                raise ValueError("known_dims do not match the piece count")
        if self.erosion_width < 0 or 2 * self.erosion_width >= min(
            self.pieces[0].height, self.pieces[0].width
        ):
            raise ValueError("erosion width too large for the piece size")

    @property
    def n(self) -> int:
        return len(self.pieces)

    def piece(self, pid: int) -> Piece:
        return self.pieces[pid]


@dataclass(frozen=True)
class Arrangement:
    """Complete assignment of every piece to a grid cell plus orientation."""

    cells: dict  # piece id -> (row, col, orientation)
    rows: int
    cols: int

    def __post_init__(self):
        object.__setattr__(self, "cells", dict(self.cells))

    @property
    def n(self) -> int:
        return len(self.cells)

    def is_complete(self) -> bool:
        if len(self.cells) != self.rows * self.cols:
            return False
        filled = {(r, c) for r, c, _ in self.cells.values()}
        return len(filled) == len(self.cells)

    def grid(self) -> np.ndarray:
        """(rows, cols) array of piece ids; requires completeness."""
        g = np.full((self.rows, self.cols), -1, dtype=np.int64)
        for pid, (r, c, _) in self.cells.items():
            g[r, c] = pid
        return g

    def rotated(self, quarter_turns: int) -> "Arrangement":
        """Whole-grid clockwise rotation; piece orientations follow."""
        k = quarter_turns % 4
        if k == 0:
            return self
        cells = {}
        for pid, (r, c, o) in self.cells.items():
            rows = self.rows
            for _ in range(k):
                r, c = c, rows - 1 - r
                rows = self.cols if rows == self.rows else self.rows
                o = (o + 1) % 4
            cells[pid] = (r, c, o)
        if k % 2 == 1:
            nr, nc = self.cols, self.rows
        else:
            nr, nc = self.rows, self.cols
        return Arrangement(cells, nr, nc)


def adjacent_pairs(a: Arrangement):
    """Every internal adjacency of a complete arrangement, exactly once.

    Returns (piece, edge, piece, edge) tuples with edges expressed in each
    piece's own frame after accounting for its placed orientation. Horizontal
    adjacencies are reported left-to-right, vertical ones top-to-bottom.
    """
    if not a.is_complete():
        raise ValueError("arrangement not complete")
    by_pos = {(r, c): (pid, o) for pid, (r, c, o) in a.cells.items()}
    pairs = []
    for r in range(a.rows):
        for c in range(a.cols):
            pid, o = by_pos[(r, c)]
            if c + 1 < a.cols:
                qid, qo = by_pos[(r, c + 1)]
                pairs.append(
                    (pid, (Edge.RIGHT - o) % 4, qid, (Edge.LEFT - qo) % 4)
                )
            if r + 1 < a.rows:
                qid, qo = by_pos[(r + 1, c)]
                pairs.append(
                    (pid, (Edge.BOTTOM - o) % 4, qid, (Edge.TOP - qo) % 4)
                )
    return pairs


@dataclass
class CompatibilityTensor:
    """Scores indexed by (anchor piece, relation, candidate piece).

    Self-pairs along the diagonal carry the tensor minimum so they never win
    a ranking; the array stays rectangular for bit-exact serialization.
    """

    n: int
    puzzle_type: int
    scores: np.ndarray  # (n, len(relations), n) float64
    normalized: bool = False
    symmetric: bool = False
    relations: tuple = field(default=None)

    def __post_init__(self):
        if self.relations is None:
            self.relations = relations_for(self.puzzle_type)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        expected = (self.n, len(self.relations), self.n)
        if self.scores.shape != expected:
            raise ValueError(
                f"score array shape {self.scores.shape} != {expected}"
            )

    def rel_index(self, anchor_edge: int, candidate_edge: int):
        if self.puzzle_type == 1:
            if candidate_edge != opposite(anchor_edge):
                return None
            return int(anchor_edge)
        return 4 * int(anchor_edge) + int(candidate_edge)

    def score(self, anchor: int, anchor_edge: int, cand: int, cand_edge: int) -> float:
        idx = self.rel_index(anchor_edge, cand_edge)
        if idx is None:
            raise ValueError("relation not representable for this puzzle type")
        return float(self.scores[anchor, idx, cand])

    def fill_diagonal_with_min(self) -> None:
        mask = np.eye(self.n, dtype=bool)
        lo = self.scores[:, :, :][~np.broadcast_to(mask[:, None, :], self.scores.shape)]
        floor = float(lo.min()) if lo.size else 0.0
        for r in range(len(self.relations)):
            self.scores[:, r, :][mask] = floor

    def copy(self) -> "CompatibilityTensor":
        return CompatibilityTensor(
            n=self.n,
            puzzle_type=self.puzzle_type,
            scores=self.scores.copy(),
            normalized=self.normalized,
            symmetric=self.symmetric,
            relations=self.relations,
        )
