"""Evaluation: neighbor accuracy, Top-i ranking curves, per-cell local
fitness grids, and compatibility score-map exports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Arrangement,
    CompatibilityTensor,
    GroundTruth,
    adjacent_pairs,
)


@dataclass
class EvalReport:
    neighbor_accuracy: float
    perfect: bool
    top_i: list
    fitness_gap_percent: Optional[float]
    local_fitness: Optional[np.ndarray]

    def to_dict(self) -> dict:
        return {
            "neighbor_accuracy": self.neighbor_accuracy,
            "perfect": self.perfect,
            "top_i": list(self.top_i),
            "fitness_gap_percent": self.fitness_gap_percent,
            "local_fitness": (
                self.local_fitness.tolist()
                if self.local_fitness is not None
                else None
            ),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        """Line-delimited key=value report."""
        lines = [
            f"neighbor_accuracy={self.neighbor_accuracy:.6f}",
            f"perfect={'true' if self.perfect else 'false'}",
        ]
        for i, v in enumerate(self.top_i, start=1):
            lines.append(f"top_{i}={v:.6f}")
        if self.fitness_gap_percent is not None:
            lines.append(f"fitness_gap_percent={self.fitness_gap_percent:.6f}")
        return "\n".join(lines) + "\n"


def _adjacency_set(a: Arrangement):
    """Directed adjacency keys (piece, edge, piece, edge); orientation is
    folded into the per-piece local edges, which makes the set invariant
    under whole-grid rotation."""
    out = set()
    for p, pe, q, qe in adjacent_pairs(a):
        out.add((p, pe, q, qe))
        out.add((q, qe, p, pe))
    return out


def neighbor_accuracy(a: Arrangement, gt: GroundTruth, puzzle_type: int) -> float:
    """Fraction of ground-truth adjacencies realized in the arrangement.

    An adjacency counts only if pieces, sides, and relative orientations all
    match; the edge-pair encoding is already invariant to whole-puzzle
    rotation, so rotated Type-2 solutions score correctly.
    """
    if set(a.cells) != set(gt.placements):
        raise ValueError("arrangement and ground truth cover different pieces")
    truth = _adjacency_set(gt.arrangement())
    got = _adjacency_set(a)
    if not truth:
        return 1.0
    return len(truth & got) / len(truth)


def top_i(t: CompatibilityTensor, gt: GroundTruth, i_max: int) -> list:
    """Top-i curve: fraction of directed true-neighbor boundaries whose true
    neighbor ranks within the i highest-scoring candidates.

    The candidate pool is every (other piece, edge) combination the puzzle
    type allows; puzzle-border edges have no positive pair and are excluded.
    """
    n = t.n
    if len(gt.placements) != n:
        raise ValueError("ground truth does not match the tensor")
    ranks = []
    for p, pe, q, qe in _adjacency_set(gt.arrangement()):
        ri = t.rel_index(pe, qe)
        if ri is None:
            # Type-1 adjacency is always an opposite-edge relation.
            raise ValueError("ground truth adjacency outside relation set")
        true_score = t.scores[p, ri, q]
        better = 0
        for ce in range(4):
            rj = t.rel_index(pe, ce)
            if rj is None:
                continue
            row = t.scores[p, rj]
            mask = np.arange(n) != p
            better += int(np.count_nonzero(row[mask] > true_score))
        ranks.append(better + 1)
    ranks = np.asarray(ranks)
    return [float(np.mean(ranks <= i)) for i in range(1, i_max + 1)]


def local_fitness_grid(a: Arrangement, t: CompatibilityTensor) -> np.ndarray:
    """(rows, cols) grid of each cell's mean symmetric score over its placed
    neighbors; sum(grid * degree) / 2 equals the arrangement fitness."""
    sums = {}
    counts = {}
    for p, pe, q, qe in adjacent_pairs(a):
        s = t.score(p, pe, q, qe)
        sums[p] = sums.get(p, 0.0) + s
        sums[q] = sums.get(q, 0.0) + s
        counts[p] = counts.get(p, 0) + 1
        counts[q] = counts.get(q, 0) + 1
    grid = np.zeros((a.rows, a.cols))
    for pid, (r, c, _) in a.cells.items():
        if counts.get(pid):
            grid[r, c] = sums[pid] / counts[pid]
    return grid


def score_map(t: CompatibilityTensor, gt: GroundTruth, relation) -> np.ndarray:
    """N x N 8-bit score matrix for one relation, rows and columns ordered
    by the ground truth's row-major reading order, so a good measure shows a
    bright super-diagonal."""
    ae, ce = relation
    ri = t.rel_index(ae, ce)
    if ri is None:
        raise ValueError("relation not representable for this puzzle type")
    order = sorted(
        gt.placements, key=lambda pid: (gt.placements[pid][0], gt.placements[pid][1])
    )
    perm = np.asarray(order)
    matrix = t.scores[np.ix_(perm, [ri], perm)][:, 0, :]
    lo, hi = matrix.min(), matrix.max()
    if hi == lo:
        return np.zeros(matrix.shape, dtype=np.uint8)
    return np.round((matrix - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(matrix: np.ndarray, path) -> None:
    """Binary PGM (P5), 8-bit."""
    m = np.asarray(matrix, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode())
        fh.write(m.tobytes())


def fitness_gap_percent(gt_fitness: float, best_fitness: float) -> Optional[float]:
    """Signed gap (gt - best) / gt in percent; None for a zero reference."""
    if gt_fitness == 0:
        return None
    return 100.0 * (gt_fitness - best_fitness) / gt_fitness


def evaluate(
    a: Arrangement,
    gt: GroundTruth,
    puzzle_type: int,
    tensor: Optional[CompatibilityTensor] = None,
    i_max: int = 8,
) -> EvalReport:
    acc = neighbor_accuracy(a, gt, puzzle_type)
    curve = top_i(tensor, gt, i_max) if tensor is not None else []
    gap = None
    grid = None
    if tensor is not None and tensor.normalized and tensor.symmetric:
        from .solver import fitness

        grid = local_fitness_grid(a, tensor)
        gap = fitness_gap_percent(
            fitness(gt.arrangement(), tensor), fitness(a, tensor)
        )
    return EvalReport(
        neighbor_accuracy=acc,
        perfect=acc == 1.0,
        top_i=curve,
        fitness_gap_percent=gap,
        local_fitness=grid,
    )
