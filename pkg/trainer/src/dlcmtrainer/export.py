"""CMX export and strip scoring.

This module owns its CMX serialization: the format (not the engine's code)
is the contract between the trainer and the reconstruction engine.

CMX layout: 16-byte little-endian header `<4sHIBBB3s` — magic "CMX1",
version 1, piece count, relation count (4 or 16), puzzle type, flags
(bit 0 normalized, bit 1 symmetric), 3 zero pad bytes — followed by
float32 scores in (anchor, relation, candidate) order. Exported tensors
are raw (flags 0); the engine applies its own post-processing.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .model import PairScorer, pairs_to_tensor
from .pairs import make_pair, relations

MAGIC = b"CMX1"
VERSION = 1
_HEADER = struct.Struct("<4sHIBBB3s")


def write_cmx(scores: np.ndarray, puzzle_type: int, destination) -> int:
    """Write a raw (n, r, n) score tensor; returns the byte count."""
    scores = np.asarray(scores, dtype=np.float64)
    n, r, n2 = scores.shape
    if n != n2 or r != len(relations(puzzle_type)):
        raise ValueError("scores must be (n, relations, n) for the puzzle type")
    if not np.isfinite(scores).all():
        raise ValueError("scores contain non-finite values")
    header = _HEADER.pack(MAGIC, VERSION, n, r, puzzle_type, 0, b"\x00" * 3)
    payload = scores.astype("<f4").tobytes()
    data = header + payload
    Path(destination).write_bytes(data)
    return len(data)


def load_bundle_pieces(bundle_dir):
    """Read a bundle directory: (pieces ordered by id, manifest dict).

    Pieces are H x W x C uint8 arrays as stored; only the documented
    directory layout is relied on, not the engine's code.
    """
    from PIL import Image

    path = Path(bundle_dir)
    manifest = json.loads((path / "manifest.json").read_text())
    pieces = []
    for entry in sorted(manifest["pieces"], key=lambda e: e["id"]):
        arr = np.asarray(Image.open(path / entry["file"]))
        if arr.ndim == 2:
            arr = arr[:, :, None]
        pieces.append(arr)
    return pieces, manifest


def _score_pairs(model: PairScorer, pair_images, batch: int) -> np.ndarray:
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(pair_images), batch):
            out.append(model(pairs_to_tensor(pair_images[i : i + batch])).numpy())
    return np.concatenate(out) if out else np.zeros(0, dtype=np.float32)


def export_scores(model: PairScorer, bundle_dir, out_path, batch: int = 256):
    """Score every ordered piece pair under every relation and write a raw
    CMX file. Requires square pieces matching the model input size."""
    pieces, manifest = load_bundle_pieces(bundle_dir)
    puzzle_type = manifest["puzzle_type"]
    rels = relations(puzzle_type)
    n = len(pieces)
    p = pieces[0].shape[0]
    if any(q.shape[:2] != (p, p) for q in pieces):
        raise ValueError("export_scores requires square pieces of equal size")
    expected_hw = (p, 2 * p)
    if model.submodels[0].input_hw != expected_hw:
        raise ValueError(
            f"model input {model.submodels[0].input_hw} does not match "
            f"piece size {p}"
        )
    scores = np.zeros((n, len(rels), n), dtype=np.float64)
    jobs = []
    index = []
    for a in range(n):
        for ri, (ae, ce) in enumerate(rels):
            for c in range(n):
                if a == c:
                    continue
                jobs.append(make_pair(pieces[a], pieces[c], ae, ce))
                index.append((a, ri, c))
    values = _score_pairs(model, jobs, batch)
    for (a, ri, c), v in zip(index, values):
        scores[a, ri, c] = v
    # self-pairs can never win a ranking
    floor = scores.min() - 1.0 if n > 1 else 0.0
    for a in range(n):
        scores[a, :, a] = floor
    write_cmx(scores, puzzle_type, out_path)
    return Path(out_path)


def chunk_strip(strip: np.ndarray, chunk: int):
    """Split a strip into square chunk x width tiles, discarding the
    remainder below the last full chunk."""
    if chunk < 1:
        raise ValueError("chunk must be positive")
    strip = np.asarray(strip)
    if strip.ndim == 2:
        strip = strip[:, :, None]
    n = strip.shape[0] // chunk
    return [strip[i * chunk : (i + 1) * chunk] for i in range(n)]


def score_strip_pair(
    model: PairScorer, strip_a: np.ndarray, strip_b: np.ndarray, chunk: int = 50,
    batch: int = 256,
) -> float:
    """Total compatibility of placing strip_b to the right of strip_a:
    the sum of per-chunk pair scores."""
    strip_a = np.asarray(strip_a)
    strip_b = np.asarray(strip_b)
    if strip_a.shape[1] != strip_b.shape[1]:
        raise ValueError("strips must share width")
    chunks_a = chunk_strip(strip_a, chunk)
    chunks_b = chunk_strip(strip_b, chunk)
    pairs = [
        np.concatenate([a, b], axis=1) for a, b in zip(chunks_a, chunks_b)
    ]
    return float(_score_pairs(model, pairs, batch).sum())


def export_strip_scores(
    model: PairScorer, bundle_dir, out_path, chunk: int = 50, batch: int = 512
):
    """Raw CMX for a 1 x n strip bundle (Type 1).

    Horizontal relations get chunk-sum scores; vertical relations, which
    are meaningless for strips, get a constant floor so post-processing
    collapses them.
    """
    pieces, manifest = load_bundle_pieces(bundle_dir)
    if manifest["puzzle_type"] != 1:
        raise ValueError("strip bundles are Type 1")
    n = len(pieces)
    rels = relations(1)
    right = rels.index((1, 3))
    left = rels.index((3, 1))

    chunked = [chunk_strip(p, chunk) for p in pieces]
    depth = min(len(c) for c in chunked)
    jobs = []
    index = []
    for a in range(n):
        for c in range(n):
            if a == c:
                continue
            for k in range(depth):
                # anchor's right edge against candidate's left edge
                jobs.append(np.concatenate([chunked[a][k], chunked[c][k]], axis=1))
                index.append((a, c, k))
    values = _score_pairs(model, jobs, batch)
    sums = np.zeros((n, n), dtype=np.float64)
    for (a, c, _), v in zip(index, values):
        sums[a, c] += v

    floor = sums.min() - 1.0
    scores = np.full((n, len(rels), n), floor, dtype=np.float64)
    for a in range(n):
        for c in range(n):
            if a == c:
                continue
            scores[a, right, c] = sums[a, c]
            # the mirrored view of the same physical seam
            scores[a, left, c] = sums[c, a]
    for a in range(n):
        scores[a, :, a] = floor - 1.0
    write_cmx(scores, 1, out_path)
    return Path(out_path)
