"""Autocalibration: ACS extraction and RSS-based sensitivity estimation."""

from __future__ import annotations

import logging

import numpy as np

from .core import KspaceBenchError, ParameterError, SamplingMask, SensitivityMaps, as_kspace
from .operators import apply_mask, ifft2c, rss

__all__ = ["CalibrationError", "estimate_sensitivities", "extract_acs", "normalize"]

logger = logging.getLogger(__name__)

# relative RSS floor below which pixels are treated as background
RSS_EPS = 1e-9


class CalibrationError(KspaceBenchError):
    code = 4


class MissingACSError(ParameterError):
    pass


def extract_acs(ksp, mask: SamplingMask) -> np.ndarray:
    """Apply the ACS submask coil-wise.

    A degenerate (empty) ACS yields all-zero output; check ``mask.acs.degenerate``.
    """
    if mask.acs is None:
        raise MissingACSError("mask carries no ACS submask")
    ksp = as_kspace(ksp, mask.shape)
    return apply_mask(ksp, mask.acs)


def estimate_sensitivities(ksp, mask: SamplingMask, eps: float = RSS_EPS) -> SensitivityMaps:
    """Initial sensitivity estimate from the fully sampled ACS region.

    Each coil's low-resolution ACS image is divided by the RSS of all coil
    ACS images. Pixels whose RSS falls below ``eps * max(RSS)`` are zeroed.
    The result satisfies ``sum_k |S^k|^2 = 1`` on its support.
    """
    acs = extract_acs(ksp, mask)
    coil_imgs = ifft2c(acs)
    combined = rss(coil_imgs)
    peak = float(combined.max())
    if peak == 0.0 or not np.isfinite(peak):
        raise CalibrationError("ACS region carries no signal")
    support = combined >= eps * peak
    maps = np.zeros_like(coil_imgs)
    np.divide(coil_imgs, combined, out=maps, where=support[None])
    logger.debug("sensitivity estimate: %d background pixels masked", int(support.size - support.sum()))
    return SensitivityMaps(maps, normalized=True)


def normalize(maps) -> SensitivityMaps:
    """Scale each pixel's coil vector to unit l2 norm; zero-norm pixels stay zero."""
    data = maps.data if isinstance(maps, SensitivityMaps) else np.asarray(maps, dtype=np.complex128)
    if data.ndim == 2:
        data = data[None]
    norm = np.sqrt(np.sum(np.abs(data) ** 2, axis=0))
    nonzero = norm > 0
    if not nonzero.any():
        raise CalibrationError("sensitivity maps are identically zero")
    out = np.zeros(data.shape, dtype=np.complex128)
    np.divide(data, norm, out=out, where=nonzero[None])
    n_zero = int(nonzero.size - nonzero.sum())
    if n_zero:
        logger.info("normalize: %d pixels with zero coil sensitivity left at zero", n_zero)
    return SensitivityMaps(out, normalized=True)
