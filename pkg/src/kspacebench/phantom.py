"""Synthetic ground truth: ellipse phantoms, coil arrays and noisy acquisition."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .calib import normalize
from .core import GridShape, ParameterError, SensitivityMaps, as_image, make_rng
from .operators import expand, fft2c

__all__ = [
    "CoilArraySpec",
    "PhantomKind",
    "PhantomSpec",
    "SHEPP_LOGAN_ELLIPSES",
    "coil_anchors",
    "coil_profiles",
    "make_coils",
    "make_phantom",
    "simulate_acquisition",
]

# (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees), on [-1, 1]^2
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)

# stream ids for the Philox generator
_PHANTOM_STREAM = 101
_COIL_STREAM = 102
_NOISE_STREAM = 103


class PhantomKind(enum.Enum):
    ELLIPSE_STANDARD = "ellipse-standard"
    RANDOM_ELLIPSES = "random-ellipses"


@dataclass(frozen=True)
class PhantomSpec:
    shape: GridShape
    kind: PhantomKind = PhantomKind.ELLIPSE_STANDARD
    n_ellipses: int = 8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shape", GridShape.of(self.shape))
        object.__setattr__(self, "kind", PhantomKind(self.kind))
        if self.n_ellipses < 1:
            raise ParameterError("n_ellipses must be positive")


@dataclass(frozen=True)
class CoilArraySpec:
    """Gaussian bumps on a ring; ``width`` is the bump std as a fraction of the grid size."""

    n_c: int = 8
    profile: str = "gaussian-ring"
    width: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.n_c < 1:
            raise ParameterError("n_c must be >= 1")
        if self.profile != "gaussian-ring":
            raise ParameterError(f"unknown coil profile {self.profile!r}")
        if not self.width > 0:
            raise ParameterError("width must be positive")


def pixel_coordinates(shape: GridShape) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-centre coordinates on [-1, 1]^2; x runs along columns, y up the rows."""
    y = 1.0 - (2.0 * np.arange(shape.n_x) + 1.0) / shape.n_x
    x = (2.0 * np.arange(shape.n_y) + 1.0) / shape.n_y - 1.0
    return np.meshgrid(x, y)


def _paint(shape: GridShape, ellipses) -> np.ndarray:
    xx, yy = pixel_coordinates(shape)
    img = np.zeros(shape.dims)
    for value, a, b, x0, y0, phi in ellipses:
        c, s = math.cos(math.radians(phi)), math.sin(math.radians(phi))
        u = (xx - x0) * c + (yy - y0) * s
        v = -(xx - x0) * s + (yy - y0) * c
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += value
    return np.clip(img, 0.0, 1.0)


def _random_ellipses(spec: PhantomSpec):
    rng = make_rng(spec.seed, _PHANTOM_STREAM)
    ellipses = [(1.0, rng.uniform(0.6, 0.85), rng.uniform(0.7, 0.92), 0.0, 0.0, rng.uniform(-20, 20))]
    for _ in range(spec.n_ellipses - 1):
        r, t = 0.55 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
        ellipses.append(
            (
                rng.uniform(-0.6, 0.4),
                rng.uniform(0.04, 0.3),
                rng.uniform(0.04, 0.3),
                r * math.cos(t),
                r * math.sin(t),
                rng.uniform(0, 180),
            )
        )
    return ellipses


def make_phantom(spec: PhantomSpec) -> np.ndarray:
    """Real phantom image in [0, 1] with shape ``spec.shape``."""
    if spec.kind is PhantomKind.ELLIPSE_STANDARD:
        return _paint(spec.shape, SHEPP_LOGAN_ELLIPSES)
    return _paint(spec.shape, _random_ellipses(spec))


def coil_anchors(spec: CoilArraySpec, shape) -> np.ndarray:
    """``(n_c, 2)`` ring positions in cell coordinates, radius ``0.5 min(n_x, n_y)``."""
    shape = GridShape.of(shape)
    cx, cy = shape.center
    radius = 0.5 * min(shape.dims)
    angles = 2 * np.pi * np.arange(spec.n_c) / spec.n_c
    return np.stack([cx + radius * np.cos(angles), cy + radius * np.sin(angles)], axis=1)


def coil_profiles(spec: CoilArraySpec, shape) -> np.ndarray:
    """Unnormalised complex coil profiles; each has its magnitude peak at its anchor."""
    shape = GridShape.of(shape)
    rng = make_rng(spec.seed, _COIL_STREAM)
    ii, jj = np.meshgrid(np.arange(shape.n_x, dtype=float), np.arange(shape.n_y, dtype=float), indexing="ij")
    cx, cy = shape.center
    sigma = spec.width * min(shape.dims)
    profiles = np.empty((spec.n_c,) + shape.dims, dtype=np.complex128)
    for k, (ax, ay) in enumerate(coil_anchors(spec, shape)):
        bump = np.exp(-((ii - ax) ** 2 + (jj - ay) ** 2) / (2 * sigma**2))
        fx, fy = rng.uniform(-0.5, 0.5, size=2)
        phase = 2 * np.pi * (fx * (ii - cx) / shape.n_x + fy * (jj - cy) / shape.n_y) + 2 * np.pi * rng.random()
        profiles[k] = bump * np.exp(1j * phase)
    return profiles


def make_coils(spec: CoilArraySpec, shape) -> SensitivityMaps:
    return normalize(coil_profiles(spec, shape))


def simulate_acquisition(img, maps: SensitivityMaps, noise_sigma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Fully sampled multi-coil k-space ``F(S^k x) + e^k``.

    ``e^k`` is circular complex Gaussian noise with ``E|e|^2 = noise_sigma^2``,
    split equally between real and imaginary parts.
    """
    if noise_sigma < 0 or not math.isfinite(noise_sigma):
        raise ParameterError(f"noise_sigma must be non-negative, got {noise_sigma}")
    img = as_image(img, maps.shape)
    ksp = fft2c(expand(img, maps))
    if noise_sigma > 0:
        rng = make_rng(seed, _NOISE_STREAM)
        noise = rng.standard_normal(ksp.shape + (2,)) * (noise_sigma / math.sqrt(2.0))
        ksp = ksp + (noise[..., 0] + 1j * noise[..., 1])
    return ksp
