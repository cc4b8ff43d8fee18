"""Centred orthonormal FFTs and the multi-coil SENSE operator algebra.

The forward operator is ``A = U o F o E_S`` (mask, coil-wise FFT, expand)
and its adjoint ``A* = R_S o F^-1 o U`` (mask, coil-wise inverse FFT,
reduce). With orthonormal transforms and normalised maps, ``A* A = I``
whenever the mask is full.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GridShape, ParameterError, SamplingMask, SensitivityMaps, as_image, as_kspace

__all__ = [
    "ForwardOperator",
    "adjoint",
    "apply_mask",
    "expand",
    "fft2c",
    "forward",
    "ifft2c",
    "reduce",
    "rss",
    "sense_combine",
]

_AXES = (-2, -1)


def fft2c(x: np.ndarray) -> np.ndarray:
    """Centred, orthonormal 2-D DFT over the last two axes (DC at ``n // 2``)."""
    x = np.asarray(x, dtype=np.complex128)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x, axes=_AXES), axes=_AXES, norm="ortho"), axes=_AXES)


def ifft2c(k: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`fft2c`."""
    k = np.asarray(k, dtype=np.complex128)
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k, axes=_AXES), axes=_AXES, norm="ortho"), axes=_AXES)


def _maps_data(maps) -> np.ndarray:
    if isinstance(maps, SensitivityMaps):
        return maps.data
    data = np.asarray(maps, dtype=np.complex128)
    return data[None] if data.ndim == 2 else data


def expand(img: np.ndarray, maps) -> np.ndarray:
    """Coil images ``S^k * img`` stacked coil-major."""
    s = _maps_data(maps)
    img = np.asarray(img, dtype=np.complex128)
    if img.shape != s.shape[1:]:
        raise ParameterError(f"image shape {img.shape} does not match maps {s.shape[1:]}")
    return s * img[None]


def reduce(coil_imgs: np.ndarray, maps) -> np.ndarray:
    """Conjugate-sensitivity coil combination ``sum_k conj(S^k) z^k``."""
    s = _maps_data(maps)
    z = np.asarray(coil_imgs, dtype=np.complex128)
    if z.ndim == 2:
        z = z[None]
    if z.shape != s.shape:
        raise ParameterError(f"coil images {z.shape} do not match maps {s.shape}")
    return np.einsum("kxy,kxy->xy", s.conj(), z)


def _mask_bits(mask) -> np.ndarray:
    return mask.bits if isinstance(mask, SamplingMask) else np.asarray(mask, dtype=bool)


def apply_mask(ksp: np.ndarray, mask) -> np.ndarray:
    """Zero every unsampled entry, identically on all coils."""
    bits = _mask_bits(mask)
    ksp = np.asarray(ksp, dtype=np.complex128)
    if ksp.shape[-2:] != bits.shape:
        raise ParameterError(f"k-space shape {ksp.shape[-2:]} does not match mask {bits.shape}")
    return np.where(bits, ksp, 0)


def rss(coil_imgs: np.ndarray) -> np.ndarray:
    z = np.asarray(coil_imgs)
    if z.ndim == 2:
        z = z[None]
    if z.ndim != 3 or z.shape[0] < 1:
        raise ParameterError(f"rss needs (n_c, n_x, n_y) input, got {z.shape}")
    return np.sqrt(np.sum(np.abs(z) ** 2, axis=0))


def sense_combine(coil_imgs: np.ndarray, maps) -> np.ndarray:
    return np.abs(reduce(coil_imgs, maps))


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    """Multi-coil subsampled Fourier operator for a fixed mask and map set.

    Maps that are not flagged as normalised are normalised on construction.
    """

    mask: SamplingMask
    maps: SensitivityMaps

    def __post_init__(self):
        maps = self.maps
        if not isinstance(maps, SensitivityMaps):
            maps = SensitivityMaps(maps)
        if not maps.normalized:
            from .calib import normalize

            maps = normalize(maps)
        object.__setattr__(self, "maps", maps)
        bits = _mask_bits(self.mask)
        if bits.shape != maps.shape.dims:
            raise ParameterError(f"mask shape {bits.shape} does not match maps {maps.shape}")

    @property
    def shape(self) -> GridShape:
        return self.maps.shape

    @property
    def n_c(self) -> int:
        return self.maps.n_c

    def __call__(self, img):
        return forward(self, img)

    def H(self, ksp):
        return adjoint(self, ksp)

    def normal(self, img: np.ndarray) -> np.ndarray:
        """``A* A img`` without materialising the masked k-space twice."""
        return adjoint(self, forward(self, img))


def forward(op: ForwardOperator, img: np.ndarray) -> np.ndarray:
    img = as_image(img, op.shape)
    return apply_mask(fft2c(expand(img, op.maps)), op.mask)


def adjoint(op: ForwardOperator, ksp: np.ndarray) -> np.ndarray:
    ksp = as_kspace(ksp, op.shape)
    if ksp.shape[0] != op.n_c:
        raise ParameterError(f"k-space has {ksp.shape[0]} coils, operator has {op.n_c}")
    return reduce(ifft2c(apply_mask(ksp, op.mask)), op.maps)
