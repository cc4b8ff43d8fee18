"""Domain types and grid geometry shared across the package.

Arrays follow one layout everywhere: images are ``(n_x, n_y)``, multi-coil
data are ``(n_c, n_x, n_y)`` (coil-major, row-major). Rows are the
frequency-encode axis and columns are phase-encode lines.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "AccelerationSpec",
    "GridShape",
    "KspaceBenchError",
    "ParameterError",
    "SamplingMask",
    "Scheme",
    "SensitivityMaps",
    "achieved_acceleration",
    "as_image",
    "as_kspace",
    "kspace_radius",
    "make_rng",
    "radius_grid",
]


class KspaceBenchError(Exception):
    """Base class for all package errors. ``code`` is the CLI exit status."""

    code = 1


class ParameterError(KspaceBenchError, ValueError):
    code = 2


class EmptyMaskError(ParameterError):
    pass


class Scheme(enum.IntEnum):
    """Subsampling schemes. The integer value is the MSK1 scheme byte."""

    RANDOM_RECT = 0
    EQUISPACED_RECT = 1
    EQUISPACED_PLUS_RECT = 2
    GAUSSIAN_1D = 3
    VDPD = 4
    GAUSSIAN_2D = 5
    RADIAL = 6
    SPIRAL = 7

    @property
    def rectilinear(self) -> bool:
        return self <= Scheme.GAUSSIAN_1D

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            try:
                return cls(int(value))
            except ValueError:
                raise ParameterError(f"unknown scheme code {value}") from None
        key = str(value).strip().lower().replace("-", "").replace("_", "").replace(" ", "")
        for scheme, names in _ALIASES.items():
            if key in names:
                return scheme
        raise ParameterError(f"unknown scheme {value!r}")


_LABELS = {
    Scheme.RANDOM_RECT: "random",
    Scheme.EQUISPACED_RECT: "equispaced",
    Scheme.EQUISPACED_PLUS_RECT: "equispaced+",
    Scheme.GAUSSIAN_1D: "gaussian1d",
    Scheme.VDPD: "vdpd",
    Scheme.GAUSSIAN_2D: "gaussian2d",
    Scheme.RADIAL: "radial",
    Scheme.SPIRAL: "spiral",
}

_ALIASES = {
    Scheme.RANDOM_RECT: {"random", "randomrect", "rectrandom"},
    Scheme.EQUISPACED_RECT: {"equispaced", "equispacedrect"},
    Scheme.EQUISPACED_PLUS_RECT: {"equispaced+", "equispacedplus", "equispacedplusrect", "equispaced+rect"},
    Scheme.GAUSSIAN_1D: {"gaussian1d"},
    Scheme.VDPD: {"vdpd", "poisson", "variabledensitypoisson"},
    Scheme.GAUSSIAN_2D: {"gaussian2d"},
    Scheme.RADIAL: {"radial"},
    Scheme.SPIRAL: {"spiral"},
}


@dataclass(frozen=True)
class GridShape:
    n_x: int
    n_y: int

    def __post_init__(self):
        for name in ("n_x", "n_y"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise ParameterError(f"{name} must be >= 2, got {value}")
            object.__setattr__(self, name, int(value))

    @classmethod
    def of(cls, value) -> "GridShape":
        """Accept a GridShape, an ``(n_x, n_y)`` pair or an ``"HxW"`` string."""
        if isinstance(value, GridShape):
            return value
        if isinstance(value, str):
            parts = value.lower().replace("×", "x").split("x")
            if len(parts) != 2:
                raise ParameterError(f"shape must look like HxW, got {value!r}")
            try:
                return cls(int(parts[0]), int(parts[1]))
            except ValueError:
                raise ParameterError(f"shape must look like HxW, got {value!r}") from None
        n_x, n_y = value
        return cls(n_x, n_y)

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def dims(self) -> tuple[int, int]:
        return (self.n_x, self.n_y)

    @property
    def center(self) -> tuple[float, float]:
        # geometric centre used for radii; half-integer on even axes
        return ((self.n_x - 1) / 2.0, (self.n_y - 1) / 2.0)

    @property
    def dc(self) -> tuple[int, int]:
        # DC location of the centred FFT
        return (self.n_x // 2, self.n_y // 2)

    def __str__(self) -> str:
        return f"{self.n_x}x{self.n_y}"


@dataclass(frozen=True)
class AccelerationSpec:
    """Target acceleration ``R``, ACS fraction and relative tolerance.

    ``r_acs = 0`` disables the ACS region for rectilinear schemes.
    """

    R: float
    r_acs: float = 0.08
    tolerance: float = 0.10

    def __post_init__(self):
        if not math.isfinite(self.R) or self.R < 1.0:
            raise ParameterError(f"acceleration must be >= 1, got {self.R}")
        if not 0.0 <= self.r_acs < 1.0:
            raise ParameterError(f"r_acs must lie in [0, 1), got {self.r_acs}")
        if not self.tolerance > 0.0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SamplingMask:
    """Binary Cartesian sampling pattern with generation metadata.

    ``acs`` is the autocalibration submask (itself a SamplingMask without
    a nested ``acs``). ``acs_radius`` is the disk radius for disk-shaped
    ACS regions, ``acs_line_range`` the ``(start, count)`` pair for
    line-based ones. ``degenerate`` marks an ACS that could not be formed.
    """

    bits: np.ndarray
    scheme: Scheme
    accel_target: float = 1.0
    seed: int = 0
    acs: Optional["SamplingMask"] = None
    acs_radius: float = 0.0
    acs_line_range: tuple[int, int] = (0, 0)
    degenerate: bool = False
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2:
            raise ParameterError(f"mask bits must be 2-D, got shape {bits.shape}")
        GridShape(*bits.shape)
        object.__setattr__(self, "bits", _freeze(bits))
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        object.__setattr__(self, "seed", seed)
        if self.acs is not None:
            if self.acs.bits.shape != bits.shape:
                raise ParameterError("ACS submask shape differs from mask shape")
            if np.any(self.acs.bits & ~bits):
                raise ParameterError("ACS submask is not contained in the mask")

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.bits.shape)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def acceleration(self) -> float:
        return achieved_acceleration(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SamplingMask):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.accel_target == other.accel_target
            and self.seed == other.seed
            and self.acs_radius == other.acs_radius
            and tuple(self.acs_line_range) == tuple(other.acs_line_range)
            and self.degenerate == other.degenerate
            and np.array_equal(self.bits, other.bits)
            and self.acs == other.acs
        )

    def transpose(self) -> "SamplingMask":
        acs = self.acs.transpose() if self.acs is not None else None
        return SamplingMask(
            self.bits.T, self.scheme, self.accel_target, self.seed, acs,
            self.acs_radius, self.acs_line_range, self.degenerate,
        )


@dataclass(frozen=True, eq=False)
class SensitivityMaps:
    """Complex coil sensitivity profiles, shape ``(n_c, n_x, n_y)``."""

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128, copy=True)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3 or data.shape[0] < 1:
            raise ParameterError(f"sensitivity maps must be (n_c, n_x, n_y), got {data.shape}")
        GridShape(*data.shape[1:])
        if not np.all(np.isfinite(data)):
            raise ParameterError("sensitivity maps contain non-finite values")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def n_c(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.data.shape[1:])

    @property
    def support(self) -> np.ndarray:
        """Pixels where at least one coil has nonzero sensitivity."""
        return np.any(self.data != 0, axis=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SensitivityMaps):
            return NotImplemented
        return self.normalized == other.normalized and np.array_equal(self.data, other.data)


def as_image(data, shape: Optional[GridShape] = None) -> np.ndarray:
    """Validate a complex ``(n_x, n_y)`` image and return it as complex128."""
    img = np.asarray(data, dtype=np.complex128)
    if img.ndim != 2:
        raise ParameterError(f"image must be 2-D, got shape {img.shape}")
    if shape is not None and img.shape != shape.dims:
        raise ParameterError(f"image shape {img.shape} does not match grid {shape}")
    if not np.all(np.isfinite(img)):
        raise ParameterError("image contains non-finite values")
    return img


def as_kspace(data, shape: Optional[GridShape] = None) -> np.ndarray:
    """Validate multi-coil data ``(n_c, n_x, n_y)``; a 2-D input is one coil."""
    ksp = np.asarray(data, dtype=np.complex128)
    if ksp.ndim == 2:
        ksp = ksp[None]
    if ksp.ndim != 3 or ksp.shape[0] < 1:
        raise ParameterError(f"multi-coil data must be (n_c, n_x, n_y), got {ksp.shape}")
    if shape is not None and ksp.shape[1:] != shape.dims:
        raise ParameterError(f"data shape {ksp.shape[1:]} does not match grid {shape}")
    if not np.all(np.isfinite(ksp)):
        raise ParameterError("multi-coil data contain non-finite values")
    return ksp


def kspace_radius(shape: GridShape, i: int, j: int) -> float:
    """Distance of cell ``(i, j)`` from the geometric grid centre."""
    shape = GridShape.of(shape)
    if not (0 <= i < shape.n_x and 0 <= j < shape.n_y):
        raise IndexError(f"cell ({i}, {j}) outside grid {shape}")
    cx, cy = shape.center
    return math.hypot(i - cx, j - cy)


def radius_grid(shape: GridShape) -> np.ndarray:
    """Vectorised :func:`kspace_radius` over every cell."""
    shape = GridShape.of(shape)
    cx, cy = shape.center
    x = np.arange(shape.n_x, dtype=np.float64)[:, None] - cx
    y = np.arange(shape.n_y, dtype=np.float64)[None, :] - cy
    return np.hypot(x, y)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for ``seed``; distinct ``stream`` values are independent."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))


def achieved_acceleration(mask: SamplingMask) -> float:
    bits = mask.bits if isinstance(mask, SamplingMask) else np.asarray(mask, dtype=bool)
    count = int(np.count_nonzero(bits))
    if count == 0:
        raise EmptyMaskError("mask has no sampled cells")
    return bits.size / count
