import numpy as np
import pytest

from puzzleforge.dataset import (
    augment_pair,
    center_crop_to_multiple,
    chunk_strip,
    cut_and_scramble,
    degrade_frame,
    erode,
    load_bundle,
    render_arrangement,
    save_bundle,
    shift_piece,
    shred,
)
from conftest import smooth_image


def source_image(h, w, c=3, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (h, w, c), dtype=np.uint8)


def test_center_crop_exact_multiple_is_identity():
    img = source_image(12, 16)
    assert center_crop_to_multiple(img, 4, 4) is img[0:12, 0:16] or (
        center_crop_to_multiple(img, 4, 4) == img
    ).all()


def test_center_crop_trims_symmetrically():
    img = source_image(13, 18)
    out = center_crop_to_multiple(img, 4, 4)
    assert out.shape[:2] == (12, 16)
    assert (out == img[0:12, 1:17]).all()


def test_center_crop_too_small_rejected():
    with pytest.raises(ValueError, match="smaller than a single piece"):
        center_crop_to_multiple(source_image(3, 10), 4, 4)


@pytest.mark.parametrize("puzzle_type", [1, 2])
def test_cut_and_scramble_round_trip(puzzle_type):
    img = source_image(12, 16, seed=1)
    bundle = cut_and_scramble(img, 4, puzzle_type, seed=7)
    assert bundle.n == 12
    assert bundle.known_dims == (3, 4)
    canvas = render_arrangement(bundle.ground_truth.arrangement(), bundle)
    assert (canvas == img).all()


def test_cut_and_scramble_type1_keeps_orientation_zero():
    bundle = cut_and_scramble(source_image(8, 8, seed=2), 4, 1, seed=3)
    assert all(o == 0 for (_, _, o) in bundle.ground_truth.placements.values())


def test_cut_and_scramble_type2_uses_orientations():
    bundle = cut_and_scramble(source_image(40, 40, seed=4), 4, 2, seed=5)
    orients = {o for (_, _, o) in bundle.ground_truth.placements.values()}
    assert len(orients) > 1


def test_cut_and_scramble_actually_scrambles():
    bundle = cut_and_scramble(source_image(40, 40, seed=6), 4, 1, seed=8)
    identity = all(
        (r * 10 + c) == pid
        for pid, (r, c, _) in bundle.ground_truth.placements.items()
    )
    assert not identity


def test_cut_and_scramble_deterministic():
    img = source_image(16, 16, seed=9)
    a = cut_and_scramble(img, 4, 2, seed=11)
    b = cut_and_scramble(img, 4, 2, seed=11)
    assert a.ground_truth.placements == b.ground_truth.placements
    for pa, pb in zip(a.pieces, b.pieces):
        assert (pa.pixels == pb.pixels).all()
    c = cut_and_scramble(img, 4, 2, seed=12)
    assert a.ground_truth.placements != c.ground_truth.placements


def test_erode_zeroes_exact_frame():
    bundle = cut_and_scramble(source_image(8, 8, seed=13), 4, 1, seed=13)
    out = erode(bundle, 1)
    for p in out.pieces:
        assert (p.pixels[0] == 0).all() and (p.pixels[-1] == 0).all()
        assert (p.pixels[:, 0] == 0).all() and (p.pixels[:, -1] == 0).all()
        orig = bundle.piece(p.id).pixels
        assert (p.pixels[1:-1, 1:-1] == orig[1:-1, 1:-1]).all()
    assert out.erosion_width == 1


def test_erode_idempotent_and_monotone():
    bundle = cut_and_scramble(source_image(12, 12, seed=14), 6, 1, seed=14)
    once = erode(bundle, 2)
    twice = erode(once, 2)
    for a, b in zip(once.pieces, twice.pieces):
        assert (a.pixels == b.pixels).all()
    wider = erode(once, 1)  # narrower second pass cannot restore pixels
    assert wider.erosion_width == 2


def test_erode_zero_is_noop():
    bundle = cut_and_scramble(source_image(8, 8, seed=15), 4, 1, seed=15)
    assert erode(bundle, 0) is bundle


def test_erode_rejects_too_wide():
    bundle = cut_and_scramble(source_image(8, 8, seed=16), 4, 1, seed=16)
    with pytest.raises(ValueError):
        erode(bundle, 2)


def test_degrade_frame_t0_is_copy():
    px = source_image(4, 4)
    out = degrade_frame(px, 0)
    assert (out == px).all()
    out[0, 0, 0] ^= 1
    assert (px == source_image(4, 4)).all()


def test_shift_piece_semantics():
    px = np.arange(16, dtype=np.uint8).reshape(4, 4, 1)
    out = shift_piece(px, dx=1, dy=2)
    assert (out[:2, :3, 0] == px[2:, 1:, 0]).all()
    assert (out[2:, :, :] == 0).all()
    assert (out[:, 3:, :] == 0).all()


def test_augment_pair_shape_and_determinism():
    pair = source_image(6, 12, seed=17)
    a = augment_pair(pair, seed=21)
    b = augment_pair(pair, seed=21)
    assert a.shape == pair.shape
    assert (a == b).all()


def test_augment_pair_rejects_bad_shape():
    with pytest.raises(ValueError, match="P x 2P"):
        augment_pair(source_image(6, 10), seed=0)


def test_shred_counts_and_round_trip():
    page = source_image(30, 4250, c=1, seed=18)
    bundle = shred(page, 50, seed=19)
    assert bundle.n == 85
    assert bundle.known_dims == (1, 85)
    assert bundle.puzzle_type == 1
    canvas = render_arrangement(bundle.ground_truth.arrangement(), bundle)
    assert (canvas == page).all()


def test_shred_multi_page():
    pages = [source_image(30, 450, c=1, seed=s) for s in range(9)]
    bundle = shred(pages, 50, seed=20)
    assert bundle.n == 81


def test_shred_mismatched_heights_rejected():
    pages = [source_image(30, 200, c=1), source_image(40, 200, c=1)]
    with pytest.raises(ValueError, match="same height"):
        shred(pages, 50, seed=0)


def test_chunk_strip_floor_rule():
    strip = source_image(5500, 50, c=1, seed=22)
    chunks = chunk_strip(strip, 50)
    assert len(chunks) == 110
    assert all(c.shape == (50, 50, 1) for c in chunks)
    assert len(chunk_strip(source_image(149, 50, c=1), 50)) == 2


def test_chunk_strip_rejects_nonpositive():
    with pytest.raises(ValueError):
        chunk_strip(source_image(100, 50, c=1), 0)


@pytest.mark.parametrize("puzzle_type", [1, 2])
def test_bundle_save_load_round_trip(tmp_path, puzzle_type):
    img = smooth_image(16, 20, seed=23)
    bundle = cut_and_scramble(img, 4, puzzle_type, seed=24)
    eroded = erode(bundle, 1)
    save_bundle(eroded, tmp_path / "b", seed=24)
    back = load_bundle(tmp_path / "b")
    assert back.n == eroded.n
    assert back.puzzle_type == puzzle_type
    assert back.known_dims == eroded.known_dims
    assert back.erosion_width == 1
    assert back.ground_truth.placements == eroded.ground_truth.placements
    for a, b in zip(eroded.pieces, back.pieces):
        assert a.id == b.id
        assert (a.pixels == b.pixels).all()


def test_bundle_grayscale_round_trip(tmp_path):
    img = source_image(8, 8, c=1, seed=25)
    bundle = cut_and_scramble(img, 4, 1, seed=26)
    save_bundle(bundle, tmp_path / "g")
    back = load_bundle(tmp_path / "g")
    assert back.pieces[0].channels == 1
    assert (back.pieces[0].pixels == bundle.pieces[0].pixels).all()


def test_manifest_written_last(tmp_path):
    bundle = cut_and_scramble(source_image(8, 8, seed=27), 4, 1, seed=27)
    out = save_bundle(bundle, tmp_path / "m")
    assert (out / "manifest.json").exists()
    assert not (out / "manifest.json.tmp").exists()
