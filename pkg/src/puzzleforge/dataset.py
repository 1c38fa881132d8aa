"""Dataset generation: tiling and scrambling source images, erosion,
pair augmentation, strip-cut shredding, and bundle directory I/O.

A bundle on disk is a directory of per-piece PNGs (ids zero-padded to five
digits) plus `manifest.json` describing geometry, seed, and ground truth.
All randomized operations are pure functions of (input, seed).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Arrangement, GroundTruth, Piece, PuzzleBundle, rot_cw

MANIFEST_NAME = "manifest.json"


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def load_image(path) -> np.ndarray:
    """PNG (or other raster) -> (H, W, C) uint8; grayscale stays 1-channel."""
    with Image.open(path) as img:
        if img.mode in ("L", "I;16"):
            arr = np.asarray(img.convert("L"), dtype=np.uint8)[:, :, None]
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr


def save_image(arr: np.ndarray, path) -> None:
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path)


def center_crop_to_multiple(image: np.ndarray, ph: int, pw: int) -> np.ndarray:
    """Center-crop so height is a multiple of ph and width of pw."""
    h, w = image.shape[:2]
    nh, nw = (h // ph) * ph, (w // pw) * pw
    if nh == 0 or nw == 0:
        raise ValueError("image smaller than a single piece")
    top = (h - nh) // 2
    left = (w - nw) // 2
    return image[top : top + nh, left : left + nw]


def cut_and_scramble(
    image: np.ndarray, piece_size: int, puzzle_type: int, seed
) -> PuzzleBundle:
    """Tile an image row-major into P x P pieces, scramble ids (and, for
    Type-2, orientations) with a seeded permutation, and record the ground
    truth. Non-multiple images are center-cropped first."""
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.shape[0] < piece_size or image.shape[1] < piece_size:
        raise ValueError("image smaller than a single piece")
    image = center_crop_to_multiple(image, piece_size, piece_size)
    rows = image.shape[0] // piece_size
    cols = image.shape[1] // piece_size
    n = rows * cols
    rng = _rng(seed)
    perm = rng.permutation(n)  # perm[k] = id of the piece cut at position k
    orients = (
        rng.integers(0, 4, size=n) if puzzle_type == 2 else np.zeros(n, dtype=int)
    )
    pieces = [None] * n
    placements = {}
    for k in range(n):
        r, c = divmod(k, cols)
        patch = image[
            r * piece_size : (r + 1) * piece_size,
            c * piece_size : (c + 1) * piece_size,
        ]
        pid = int(perm[k])
        o = int(orients[k])
        # Stored pixels are the scrambled view; applying orientation o
        # clockwise restores the original patch.
        pieces[pid] = Piece(pid, rot_cw(patch, -o))
        placements[pid] = (r, c, o)
    return PuzzleBundle(
        pieces=pieces,
        puzzle_type=puzzle_type,
        known_dims=(rows, cols),
        ground_truth=GroundTruth(placements, rows, cols),
    )


def erode(bundle: PuzzleBundle, t: int) -> PuzzleBundle:
    """Zero the outer t-pixel frame of every piece; idempotent for fixed t."""
    if t == 0:
        return bundle
    sample = bundle.pieces[0]
    if t < 0 or 2 * t >= min(sample.height, sample.width):
        raise ValueError("erosion width must satisfy t < P/2")
    pieces = []
    for p in bundle.pieces:
        px = p.pixels.copy()
        px[:t, :, :] = 0
        px[-t:, :, :] = 0
        px[:, :t, :] = 0
        px[:, -t:, :] = 0
        pieces.append(Piece(p.id, px))
    return PuzzleBundle(
        pieces=pieces,
        puzzle_type=bundle.puzzle_type,
        known_dims=bundle.known_dims,
        ground_truth=bundle.ground_truth,
        erosion_width=max(t, bundle.erosion_width),
    )


def degrade_frame(piece_pixels: np.ndarray, t: int) -> np.ndarray:
    """Zero an outer t-pixel frame of a single piece image."""
    px = np.array(piece_pixels, dtype=np.uint8, copy=True)
    if t > 0:
        px[:t, :, :] = 0
        px[-t:, :, :] = 0
        px[:, :t, :] = 0
        px[:, -t:, :] = 0
    return px


def shift_piece(piece_pixels: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Displace a piece dx pixels left and dy pixels up, zero-filling the
    vacated right and bottom bands."""
    px = np.zeros_like(piece_pixels)
    h, w = piece_pixels.shape[:2]
    px[: h - dy, : w - dx] = piece_pixels[dy:, dx:]
    return px


def augment_pair(pair: np.ndarray, seed) -> np.ndarray:
    """Degrade and/or shift both halves of a P x 2P pair image.

    Degradation draws uniformly among no zeroing, a 1-pixel boundary, and a
    2-pixel frame; shifts draw dx, dy uniformly from {0, 1, 2} per half.
    """
    pair = np.asarray(pair)
    if pair.ndim == 2:
        pair = pair[:, :, None]
    p = pair.shape[0]
    if pair.shape[1] != 2 * p:
        raise ValueError("pair image must be P x 2P")
    rng = _rng(seed)
    halves = []
    for half in (pair[:, :p], pair[:, p:]):
        t = int(rng.integers(0, 3))
        out = degrade_frame(half, t)
        dx = int(rng.integers(0, 3))
        dy = int(rng.integers(0, 3))
        out = shift_piece(out, dx, dy)
        halves.append(out)
    return np.concatenate(halves, axis=1)


def shred(pages, strip_width: int, seed) -> PuzzleBundle:
    """Slice one or more pages into full-height vertical strips and scramble
    their order. Ground truth is the left-to-right (then page) order; pages
    are center-cropped to a width multiple of strip_width."""
    if isinstance(pages, np.ndarray):
        pages = [pages]
    strips = []
    for page in pages:
        page = np.asarray(page)
        if page.ndim == 2:
            page = page[:, :, None]
        if page.shape[1] < strip_width:
            raise ValueError("page narrower than one strip")
        page = center_crop_to_multiple(page, page.shape[0], strip_width)
        k = page.shape[1] // strip_width
        for j in range(k):
            strips.append(page[:, j * strip_width : (j + 1) * strip_width])
    heights = {s.shape[0] for s in strips}
    if len(heights) > 1:
        raise ValueError("all pages must share the same height")
    n = len(strips)
    rng = _rng(seed)
    perm = rng.permutation(n)
    pieces = [None] * n
    placements = {}
    for k in range(n):
        pid = int(perm[k])
        pieces[pid] = Piece(pid, strips[k])
        placements[pid] = (0, k, 0)
    return PuzzleBundle(
        pieces=pieces,
        puzzle_type=1,
        known_dims=(1, n),
        ground_truth=GroundTruth(placements, 1, n),
    )


def chunk_strip(strip: np.ndarray, chunk: int):
    """Split a strip into floor(H / chunk) chunk-height slices, discarding
    any residual rows."""
    if chunk <= 0:
        raise ValueError("chunk height must be positive")
    strip = np.asarray(strip)
    count = strip.shape[0] // chunk
    return [strip[i * chunk : (i + 1) * chunk] for i in range(count)]


def render_arrangement(a: Arrangement, bundle: PuzzleBundle) -> np.ndarray:
    """Paste oriented pieces onto a canvas; ground-truth round trips
    reproduce the cropped source bit-exactly."""
    sample = bundle.pieces[0]
    ph, pw = sample.height, sample.width
    canvas = np.zeros(
        (a.rows * ph, a.cols * pw, sample.channels), dtype=np.uint8
    )
    for pid, (r, c, o) in a.cells.items():
        canvas[r * ph : (r + 1) * ph, c * pw : (c + 1) * pw] = bundle.piece(
            pid
        ).oriented(o)
    return canvas


def save_bundle(bundle: PuzzleBundle, out_dir, seed=None, source=None) -> Path:
    """Write piece PNGs plus manifest.json; the manifest is the commit point
    and is written last."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for p in bundle.pieces:
        name = f"{p.id:05d}.png"
        save_image(p.pixels, out / name)
        names.append(name)
    sample = bundle.pieces[0]
    manifest = {
        "piece_height": sample.height,
        "piece_width": sample.width,
        "channels": sample.channels,
        "puzzle_type": bundle.puzzle_type,
        "erosion_width": bundle.erosion_width,
        "seed": seed,
        "source": source,
        "known_dims": list(bundle.known_dims) if bundle.known_dims else None,
        "pieces": [
            {
                "id": p.id,
                "file": names[p.id],
                "ground_truth": (
                    {
                        "row": bundle.ground_truth.placements[p.id][0],
                        "col": bundle.ground_truth.placements[p.id][1],
                        "orientation_deg": 90
                        * bundle.ground_truth.placements[p.id][2],
                    }
                    if bundle.ground_truth
                    else None
                ),
            }
            for p in bundle.pieces
        ],
    }
    if bundle.ground_truth:
        manifest["ground_truth_dims"] = [
            bundle.ground_truth.rows,
            bundle.ground_truth.cols,
        ]
    tmp = out / (MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.replace(out / MANIFEST_NAME)
    return out


def load_bundle(bundle_dir) -> PuzzleBundle:
    path = Path(bundle_dir)
    manifest = json.loads((path / MANIFEST_NAME).read_text())
    pieces = []
    placements = {}
    has_gt = True
    for entry in sorted(manifest["pieces"], key=lambda e: e["id"]):
        arr = load_image(path / entry["file"])
        pieces.append(Piece(entry["id"], arr))
        gt = entry.get("ground_truth")
        if gt is None:
            has_gt = False
        else:
            placements[entry["id"]] = (
                gt["row"],
                gt["col"],
                (gt["orientation_deg"] // 90) % 4,
            )
    ground_truth = None
    if has_gt and placements:
        rows, cols = manifest.get(
            "ground_truth_dims",
            [
                max(p[0] for p in placements.values()) + 1,
                max(p[1] for p in placements.values()) + 1,
            ],
        )
        ground_truth = GroundTruth(placements, rows, cols)
    dims = manifest.get("known_dims")
    return PuzzleBundle(
        pieces=pieces,
        puzzle_type=manifest["puzzle_type"],
        known_dims=tuple(dims) if dims else None,
        ground_truth=ground_truth,
        erosion_width=manifest.get("erosion_width", 0),
    )
