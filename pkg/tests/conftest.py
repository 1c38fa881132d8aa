import numpy as np
import pytest
from scipy.ndimage import zoom

from puzzleforge.core import GroundTruth, Piece, PuzzleBundle
from puzzleforge.dataset import cut_and_scramble


def smooth_image(height, width, seed, channels=3, coarse=9, noise=3.0):
    """Natural-image stand-in: low-frequency random field plus mild noise."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 255, size=(coarse, coarse, channels))
    img = zoom(base, (height / coarse, width / coarse, 1), order=3)
    img = img[:height, :width]
    img += rng.normal(0, noise, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def random_bundle(rows, cols, piece_size=4, puzzle_type=1, seed=0, channels=3):
    img = smooth_image(rows * piece_size, cols * piece_size, seed, channels)
    return cut_and_scramble(img, piece_size, puzzle_type, seed)


def noise_bundle(rows, cols, piece_size=4, puzzle_type=1, seed=0, channels=3):
    """Pieces of pure noise; useful when boundary content must be arbitrary."""
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, size=(rows * piece_size, cols * piece_size, channels)).astype(np.uint8)
    return cut_and_scramble(img, piece_size, puzzle_type, seed)


@pytest.fixture
def tiny_bundle():
    return random_bundle(2, 2, piece_size=4, puzzle_type=1, seed=1)
