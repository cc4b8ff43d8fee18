"""Image quality metrics: SSIM, pSNR, NMSE and the MAE+SSIM loss.

All metrics take the reference image first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import KspaceBenchError, ParameterError

__all__ = ["MetricRecord", "ReconReport", "combined_loss", "evaluate", "nmse", "psnr", "ssim"]

WINDOW = (7, 7)
K1, K2 = 0.01, 0.03


class MetricDomainError(KspaceBenchError, ValueError):
    code = 4


def _pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ParameterError(f"shape mismatch: {u.shape} vs {v.shape}")
    return u, v


def ssim(u, v, window: tuple[int, int] = WINDOW) -> float:
    """Mean SSIM over all fully contained windows (stride 1, uniform weights).

    ``c1 = (0.01 L)^2`` and ``c2 = (0.03 L)^2`` with ``L`` the dynamic range
    of the reference ``u``; a flat reference uses ``L = 1``. Window
    statistics are population moments.
    """
    u, v = _pair(u, v)
    if u.ndim != 2 or u.shape[0] < window[0] or u.shape[1] < window[1]:
        raise ParameterError(f"ssim needs a 2-D image of at least {window}, got {u.shape}")
    data_range = float(u.max() - u.min())
    if data_range == 0.0:
        data_range = 1.0
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2

    wu = sliding_window_view(u, window)
    wv = sliding_window_view(v, window)
    axes = (-2, -1)
    mu_u = wu.mean(axis=axes)
    mu_v = wv.mean(axis=axes)
    du = wu - mu_u[..., None, None]
    dv = wv - mu_v[..., None, None]
    var_u = (du * du).mean(axis=axes)
    var_v = (dv * dv).mean(axis=axes)
    cov = (du * dv).mean(axis=axes)

    num = (2 * mu_u * mu_v + c1) * (2 * cov + c2)
    den = (mu_u**2 + mu_v**2 + c1) * (var_u + var_v + c2)
    return float(np.mean(num / den))


def psnr(u, v) -> float:
    """Peak SNR in dB using ``max(u)`` as peak; ``math.inf`` for identical inputs."""
    u, v = _pair(u, v)
    peak = float(u.max())
    if peak <= 0:
        raise MetricDomainError(f"psnr needs a positive reference peak, got {peak}")
    mse = float(np.mean((u - v) ** 2))
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(peak / math.sqrt(mse))


def nmse(u, v) -> float:
    u, v = _pair(u, v)
    ref = float(np.sum(u * u))
    if ref == 0.0:
        raise MetricDomainError("nmse reference has zero energy")
    return float(np.sum((u - v) ** 2)) / ref


def combined_loss(ref, pred) -> float:
    """l1 distance plus ``1 - ssim``."""
    ref, pred = _pair(ref, pred)
    return float(np.sum(np.abs(ref - pred))) + (1.0 - ssim(ref, pred))


@dataclass(frozen=True)
class MetricRecord:
    ssim: float
    psnr_db: float
    nmse: float

    @property
    def reported_ssim(self) -> float:
        return self.ssim * 100.0

    @property
    def reported_nmse(self) -> float:
        return self.nmse * 1000.0


def evaluate(ref, pred) -> MetricRecord:
    return MetricRecord(ssim(ref, pred), psnr(ref, pred), nmse(ref, pred))


@dataclass(frozen=True)
class ReconReport:
    """Metrics for one (case, scheme, acceleration) cell; ``metrics`` is None on failure."""

    case: str
    scheme: str
    R: float
    metrics: Optional[MetricRecord] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.metrics is None
