import numpy as np
import pytest
from scipy.ndimage import zoom


def smooth_image(height, width, seed, channels=1, coarse=24, noise=4.0):
    """Synthetic page/photo stand-in: low-frequency field plus mild noise."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 255, size=(coarse, coarse, channels))
    img = zoom(base, (height / coarse, width / coarse, 1), order=3)
    img = img[:height, :width]
    img += rng.normal(0, noise, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture
def gray_corpus():
    return [smooth_image(24, 24, seed=s) for s in range(4)]
