"""Classical reconstructions: zero-filled, unrolled gradient descent, CG-SENSE.

The unrolled iterations keep the exact update algebra of a learned
variational network but take the regulariser ``H`` as a plain callable;
by default ``H = 0`` and only data consistency remains.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import KspaceBenchError, ParameterError, SamplingMask, SensitivityMaps, as_kspace
from .operators import ForwardOperator, adjoint, apply_mask, expand, fft2c, forward, ifft2c, reduce, rss

__all__ = [
    "CgConfig",
    "CgResult",
    "DivergenceError",
    "Domain",
    "NumericalError",
    "SoftThreshold",
    "UnrolledConfig",
    "cg_sense",
    "cg_solve",
    "dc_step",
    "unrolled_recon",
    "zero_filled",
    "zero_regularizer",
]

logger = logging.getLogger(__name__)

Regularizer = Callable[[np.ndarray], np.ndarray]


class NumericalError(KspaceBenchError):
    code = 4


class DivergenceError(NumericalError):
    pass


class Domain(enum.Enum):
    IMAGE = "image"
    KSPACE = "kspace"


def zero_regularizer(w: np.ndarray) -> np.ndarray:
    return np.zeros_like(w)


@dataclass(frozen=True)
class SoftThreshold:
    """Shrinkage correction ``soft(w, threshold) - w`` acting on the magnitude."""

    threshold: float = 0.01

    def __call__(self, w: np.ndarray) -> np.ndarray:
        mag = np.abs(w)
        shrunk = np.maximum(mag - self.threshold, 0.0)
        scale = np.divide(shrunk, mag, out=np.zeros_like(mag), where=mag > 0)
        return w * scale - w


@dataclass(frozen=True)
class UnrolledConfig:
    T: int = 8
    alphas: Optional[Sequence[float]] = None
    regularizer: Regularizer = zero_regularizer
    domain: Domain = Domain.KSPACE

    def __post_init__(self):
        if self.T < 1:
            raise ParameterError("T must be >= 1")
        alphas = tuple(float(a) for a in (self.alphas if self.alphas is not None else [1.0] * self.T))
        if len(alphas) != self.T:
            raise ParameterError(f"expected {self.T} step sizes, got {len(alphas)}")
        if not all(np.isfinite(a) and a > 0 for a in alphas):
            raise ParameterError("step sizes must be finite and positive")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "domain", Domain(self.domain))


@dataclass(frozen=True)
class CgConfig:
    """Krylov solver settings.

    ``variant="cr"`` (conjugate residuals) minimises the residual norm over
    the Krylov space, so the recorded residuals never increase; ``"cg"`` is
    classical conjugate gradients, whose residual norm may oscillate.
    """

    lam: float = 1e-4
    max_iters: int = 50
    rtol: float = 1e-6
    variant: str = "cr"

    def __post_init__(self):
        if self.variant not in ("cr", "cg"):
            raise ParameterError(f"unknown solver variant {self.variant!r}")
        if not self.lam >= 0:
            raise ParameterError("lambda must be non-negative")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")
        if not 0 < self.rtol < 1:
            raise ParameterError("rtol must lie in (0, 1)")


@dataclass
class CgResult:
    image: np.ndarray
    iterations: int
    residuals: list = field(default_factory=list)
    converged: bool = False


def _as_maps(maps) -> SensitivityMaps:
    return maps if isinstance(maps, SensitivityMaps) else SensitivityMaps(maps)


def zero_filled(ksp_sub, combine: str = "rss", maps=None) -> np.ndarray:
    """Inverse transform of the subsampled data combined by RSS or SENSE."""
    coil_imgs = ifft2c(as_kspace(ksp_sub))
    if combine == "rss":
        return rss(coil_imgs)
    if combine == "sense":
        if maps is None:
            raise ParameterError("SENSE combination needs sensitivity maps")
        return np.abs(reduce(coil_imgs, _as_maps(maps)))
    raise ParameterError(f"unknown combination {combine!r}")


def dc_step(y_t, y_tilde, mask, alpha: float, h_img=None, maps=None) -> np.ndarray:
    """``y_t - alpha U (y_t - y_tilde) + F E_S(h_img)``; ``h_img`` defaults to zero."""
    y_t = np.asarray(y_t, dtype=np.complex128)
    y_tilde = np.asarray(y_tilde, dtype=np.complex128)
    if y_t.shape != y_tilde.shape:
        raise ParameterError(f"shape mismatch: {y_t.shape} vs {y_tilde.shape}")
    # (1 - alpha) y + alpha y~ on sampled entries: same update, exact at alpha = 0 and 1
    bits = mask.bits if isinstance(mask, SamplingMask) else np.asarray(mask, dtype=bool)
    out = np.where(bits, (1.0 - alpha) * y_t + alpha * y_tilde, y_t)
    if h_img is not None:
        if maps is None:
            raise ParameterError("an image correction needs sensitivity maps")
        out = out + fft2c(expand(h_img, _as_maps(maps)))
    return out


def _scale_of(ksp: np.ndarray) -> float:
    # largest zero-filled coil-image magnitude
    return float(np.abs(ifft2c(ksp)).max())


def unrolled_recon(ksp_sub, mask: SamplingMask, maps, cfg: UnrolledConfig = UnrolledConfig()) -> np.ndarray:
    """Run ``cfg.T`` unrolled gradient steps and return the image magnitude.

    Image domain: ``w <- w - alpha A*(A w - y) + H(w)`` from ``w0 = A* y``.
    k-space domain: ``y <- y - alpha U(y - y~) + F E_S H(R_S F^-1 y)`` from
    ``y0 = y~``. Data are scaled to unit peak zero-filled coil magnitude
    during the iteration.
    """
    op = ForwardOperator(mask, _as_maps(maps))
    y_tilde = apply_mask(as_kspace(ksp_sub, op.shape), mask)
    scale = _scale_of(y_tilde)
    if scale == 0.0:
        return np.zeros(op.shape.dims)
    y_tilde = y_tilde / scale
    H = cfg.regularizer

    if cfg.domain is Domain.IMAGE:
        w = adjoint(op, y_tilde)
        limit = 1e6 * max(float(np.linalg.norm(w)), np.finfo(float).tiny)
        for t, alpha in enumerate(cfg.alphas):
            w = w - alpha * adjoint(op, forward(op, w) - y_tilde) + H(w)
            _guard(w, limit, t)
        return np.abs(w) * scale

    y = y_tilde
    limit = 1e6 * max(float(np.linalg.norm(adjoint(op, y))), np.finfo(float).tiny)
    for t, alpha in enumerate(cfg.alphas):
        w = reduce(ifft2c(y), op.maps)
        y = dc_step(y, y_tilde, mask, alpha, H(w), op.maps)
        _guard(y, limit, t)
    return np.abs(reduce(ifft2c(y), op.maps)) * scale


def _guard(x: np.ndarray, limit: float, t: int) -> None:
    norm = float(np.linalg.norm(x))
    if not np.isfinite(norm) or norm > limit:
        raise DivergenceError(f"unrolled iteration diverged at step {t + 1} (norm {norm:.3g})")


def cg_solve(op: ForwardOperator, ksp_sub, cfg: CgConfig = CgConfig()) -> CgResult:
    """Solve ``(A*A + lam I) w = A* y`` from ``w = 0`` with a conjugate-direction method.

    Works on the raw data scale; see :func:`cg_sense` for the normalised
    front end. ``residuals[i]`` is the residual norm after ``i`` iterations.
    """
    b = adjoint(op, ksp_sub)
    b_norm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    if b_norm == 0.0:
        return CgResult(x, 0, [0.0], True)

    def M(v):
        return op.normal(v) + cfg.lam * v

    r = b.copy()
    p = r.copy()
    residuals = [b_norm]
    if cfg.variant == "cr":
        Ar = M(r)
        Ap = Ar.copy()
        rho = float(np.vdot(r, Ar).real)
    else:
        rho = float(np.vdot(r, r).real)
    for it in range(1, cfg.max_iters + 1):
        if cfg.variant == "cr":
            denom = float(np.vdot(Ap, Ap).real)
            q = Ap
        else:
            q = M(p)
            denom = float(np.vdot(p, q).real)
        if not np.isfinite(denom) or denom <= 0 or not np.isfinite(rho) or rho <= 0:
            raise NumericalError(f"solver breakdown at iteration {it}: denominators {rho}, {denom}")
        step = rho / denom
        x = x + step * p
        r = r - step * q
        r_norm = float(np.linalg.norm(r))
        if not np.isfinite(r_norm):
            raise NumericalError(f"non-finite residual at iteration {it}")
        residuals.append(r_norm)
        if r_norm <= cfg.rtol * b_norm:
            return CgResult(x, it, residuals, True)
        if cfg.variant == "cr":
            Ar = M(r)
            rho_new = float(np.vdot(r, Ar).real)
            beta = rho_new / rho
            p = r + beta * p
            Ap = Ar + beta * Ap
        else:
            rho_new = r_norm**2
            p = r + (rho_new / rho) * p
        rho = rho_new
    logger.debug("solver stopped at max_iters=%d, relative residual %.3g", cfg.max_iters, residuals[-1] / b_norm)
    return CgResult(x, cfg.max_iters, residuals, False)


def cg_sense(ksp_sub, mask: SamplingMask, maps, cfg: CgConfig = CgConfig(), return_result: bool = False):
    """CG-SENSE with Tikhonov weight ``cfg.lam``; returns ``|w|``.

    Data are scaled to unit peak zero-filled coil magnitude before solving,
    so ``lam`` does not depend on the data scale.
    """
    op = ForwardOperator(mask, _as_maps(maps))
    y = as_kspace(ksp_sub, op.shape)
    scale = _scale_of(apply_mask(y, mask))
    if scale == 0.0:
        result = CgResult(np.zeros(op.shape.dims, dtype=np.complex128), 0, [0.0], True)
    else:
        result = cg_solve(op, y / scale, cfg)
        result.image = result.image * scale
        result.residuals = [r * scale for r in result.residuals]
    image = np.abs(result.image)
    return (image, result) if return_result else image
