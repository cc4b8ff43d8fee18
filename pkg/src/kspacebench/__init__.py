"""k-space subsampling benchmark: masks, SENSE operators, calibration, classical reconstruction and metrics."""

from .core import (
    AccelerationSpec,
    EmptyMaskError,
    GridShape,
    KspaceBenchError,
    ParameterError,
    SamplingMask,
    Scheme,
    SensitivityMaps,
    achieved_acceleration,
    kspace_radius,
    make_rng,
)
from .masks import SchemeParams, generate, largest_sampled_disk
from .operators import ForwardOperator, adjoint, apply_mask, expand, fft2c, forward, ifft2c, reduce, rss, sense_combine
from .calib import estimate_sensitivities, extract_acs, normalize
from .recon import CgConfig, UnrolledConfig, cg_sense, dc_step, unrolled_recon, zero_filled
from .metrics import MetricRecord, ReconReport, combined_loss, evaluate, nmse, psnr, ssim
from .phantom import CoilArraySpec, PhantomSpec, make_coils, make_phantom, simulate_acquisition
from .bench import BenchConfig, run_bench

__version__ = "0.1.0"

__all__ = [
    "AccelerationSpec", "BenchConfig", "CgConfig", "CoilArraySpec", "EmptyMaskError", "ForwardOperator",
    "GridShape", "KspaceBenchError", "MetricRecord", "ParameterError", "PhantomSpec", "ReconReport",
    "SamplingMask", "Scheme", "SchemeParams", "SensitivityMaps", "UnrolledConfig", "achieved_acceleration",
    "adjoint", "apply_mask", "cg_sense", "combined_loss", "dc_step", "estimate_sensitivities", "evaluate",
    "expand", "extract_acs", "fft2c", "forward", "generate", "ifft2c", "kspace_radius", "largest_sampled_disk",
    "make_coils", "make_phantom", "make_rng", "nmse", "normalize", "psnr", "reduce", "rss", "run_bench",
    "sense_combine", "simulate_acquisition", "ssim", "unrolled_recon", "zero_filled",
]
