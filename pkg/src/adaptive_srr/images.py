"""Source-image pool for synthetic sequences and innovation fields."""
from __future__ import annotations

from importlib import resources

import numpy as np

from .io import read_pgm

SHIPPED = ("camera.pgm", "astronaut.pgm")

# scikit-image sample photographs of natural scenes and textures, loaded
# lazily as grayscale 0..255. Microscopy and astronomy samples are left
# out: their large flat regions make them noise-dominated test material.
_SKIMAGE_NAMES = (
    "camera",
    "astronaut",
    "coffee",
    "rocket",
    "chelsea",
    "brick",
    "grass",
    "gravel",
)


def shipped_image(name: str) -> np.ndarray:
    with resources.as_file(resources.files("adaptive_srr") / "data" / name) as p:
        return read_pgm(p)


def _to_gray(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.2125, 0.7154, 0.0721])
    return img


def skimage_pool(names=_SKIMAGE_NAMES) -> list:
    from skimage import data

    return [_to_gray(getattr(data, n)()) for n in names]


def image_pool(count: int | None = None, min_size: int = 0) -> list:
    """The shipped images followed by the scikit-image photographs.

    Falls back to the two shipped images when scikit-image is missing.
    """
    pool = [shipped_image(n) for n in SHIPPED]
    try:
        extra = skimage_pool(_SKIMAGE_NAMES[2:])
    except ImportError:
        extra = []
    pool += extra
    pool = [p for p in pool if min(p.shape) >= min_size]
    if count is not None:
        if count > len(pool):
            raise ValueError(f"requested {count} images, only {len(pool)} available")
        pool = pool[:count]
    return pool
