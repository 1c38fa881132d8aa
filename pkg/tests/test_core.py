import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from puzzleforge.core import (
    Arrangement,
    CompatibilityTensor,
    Edge,
    GroundTruth,
    Piece,
    adjacent_pairs,
    opposite,
    relations_for,
    rot_cw,
)


def line_arrangement(ids, rows=1):
    cols = len(ids) // rows
    cells = {pid: (k // cols, k % cols, 0) for k, pid in enumerate(ids)}
    return Arrangement(cells, rows, cols)


def test_edge_rotation_cycle():
    assert [(e + 1) % 4 for e in (Edge.TOP, Edge.RIGHT, Edge.BOTTOM, Edge.LEFT)] == [
        Edge.RIGHT,
        Edge.BOTTOM,
        Edge.LEFT,
        Edge.TOP,
    ]
    for e in range(4):
        assert opposite(opposite(e)) == e


def test_rot_cw_quarter():
    a = np.arange(8).reshape(2, 2, 2)
    once = rot_cw(a, 1)
    # top-left moves to top-right under a clockwise quarter turn
    assert (once[0, 1] == a[0, 0]).all()
    assert (rot_cw(once, 3) == a).all()


def test_adjacent_pairs_1x2():
    a = line_arrangement([7, 3])
    a = Arrangement({7: (0, 0, 0), 3: (0, 1, 0)}, 1, 2)
    assert adjacent_pairs(a) == [(7, Edge.RIGHT, 3, Edge.LEFT)]


def test_adjacent_pairs_2x2_count():
    a = Arrangement({0: (0, 0, 0), 1: (0, 1, 0), 2: (1, 0, 0), 3: (1, 1, 0)}, 2, 2)
    assert len(adjacent_pairs(a)) == 4


def test_adjacent_pairs_3x4_matches_bruteforce():
    rows, cols = 3, 4
    cells = {r * cols + c: (r, c, 0) for r in range(rows) for c in range(cols)}
    a = Arrangement(cells, rows, cols)
    pairs = adjacent_pairs(a)
    # independent loop over cell neighbors
    count = 0
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                count += 1
            if r + 1 < rows:
                count += 1
    assert len(pairs) == count == 17
    assert count == rows * (cols - 1) + cols * (rows - 1)


def test_adjacent_pairs_incomplete_raises():
    a = Arrangement({0: (0, 0, 0)}, 1, 2)
    with pytest.raises(ValueError, match="not complete"):
        adjacent_pairs(a)


@given(
    rows=st.integers(1, 4),
    cols=st.integers(1, 4),
    turns=st.integers(0, 3),
    seed=st.integers(0, 1000),
)
@settings(max_examples=60, deadline=None)
def test_rotation_preserves_adjacency_multiset(rows, cols, turns, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(rows * cols)
    orient = rng.integers(0, 4, size=rows * cols)
    cells = {
        int(perm[k]): (k // cols, k % cols, int(orient[k]))
        for k in range(rows * cols)
    }
    a = Arrangement(cells, rows, cols)
    rotated = a.rotated(turns)
    def norm(pairs):
        out = set()
        for p, pe, q, qe in pairs:
            out.add((p, pe, q, qe))
            out.add((q, qe, p, pe))
        return out
    assert norm(adjacent_pairs(a)) == norm(adjacent_pairs(rotated))


def test_ground_truth_round_trip():
    placements = {0: (0, 0, 1), 1: (0, 1, 3), 2: (1, 0, 0), 3: (1, 1, 2)}
    gt = GroundTruth(placements, 2, 2)
    assert gt.arrangement().cells == placements


def test_ground_truth_rejects_duplicates():
    with pytest.raises(ValueError):
        GroundTruth({0: (0, 0, 0), 1: (0, 0, 0)}, 1, 2)


def test_piece_is_immutable():
    p = Piece(0, np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        p.pixels[0, 0, 0] = 1


def test_tensor_diagonal_min_fill():
    scores = np.ones((3, 4, 3)) * 5.0
    scores[0, 0, 1] = -2.0
    t = CompatibilityTensor(n=3, puzzle_type=1, scores=scores)
    t.fill_diagonal_with_min()
    for r in range(4):
        for i in range(3):
            assert t.scores[i, r, i] == -2.0


def test_relations_counts():
    assert len(relations_for(1)) == 4
    assert len(relations_for(2)) == 16
    assert all(c == opposite(a) for a, c in relations_for(1))
