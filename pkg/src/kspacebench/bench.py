"""Scheme x acceleration sweep over a seeded phantom suite."""

from __future__ import annotations

import functools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calib import estimate_sensitivities
from .core import AccelerationSpec, GridShape, KspaceBenchError, ParameterError, Scheme
from .io import write_mask, write_metrics_csv
from .masks import SchemeParams, generate
from .metrics import MetricRecord, ReconReport, evaluate
from .operators import apply_mask, ifft2c, rss
from .phantom import CoilArraySpec, PhantomSpec, make_coils, make_phantom, simulate_acquisition
from .recon import CgConfig, UnrolledConfig, cg_sense, unrolled_recon, zero_filled

__all__ = ["BenchConfig", "METHODS", "reconstruct", "run_bench", "summarize", "worker_count"]

logger = logging.getLogger(__name__)

METHODS = ("cg", "zf-sense", "zf-rss", "unrolled")
WORKERS_ENV = "KSPACEBENCH_WORKERS"


@dataclass(frozen=True)
class BenchConfig:
    schemes: Sequence[Scheme] = tuple(Scheme)
    accels: Sequence[float] = (2.0, 4.0, 8.0)
    acs_fracs: Sequence[float] = (0.16, 0.08, 0.04)
    cases: int = 4
    slices: int = 1
    shape: GridShape = GridShape(64, 64)
    coils: int = 8
    noise: float = 1e-3
    method: str = "cg"
    lam: float = 1e-4
    max_iters: int = 50
    seed: int = 0
    out: Optional[Path] = None
    tolerance: float = 0.10
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) for s in self.schemes))
        object.__setattr__(self, "accels", tuple(float(a) for a in self.accels))
        object.__setattr__(self, "acs_fracs", tuple(float(a) for a in self.acs_fracs))
        object.__setattr__(self, "shape", GridShape.of(self.shape))
        if len(self.accels) != len(self.acs_fracs):
            raise ParameterError("accels and acs_fracs must have the same length")
        if self.cases < 1 or self.slices < 1 or self.coils < 1:
            raise ParameterError("cases, slices and coils must be positive")
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if not self.schemes:
            raise ParameterError("no schemes selected")


def worker_count(default: Optional[int] = None) -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ParameterError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None
    return default or os.cpu_count() or 1


def case_seed(seed: int, case: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(case,)).generate_state(2, np.uint32).view(np.uint64)[0])


@functools.lru_cache(maxsize=8)
def _case_data(cfg: BenchConfig, case: int):
    """Fully sampled slices, RSS references and true maps for one case."""
    cseed = case_seed(cfg.seed, case)
    maps = make_coils(CoilArraySpec(cfg.coils, seed=cseed), cfg.shape)
    slices = []
    for s in range(cfg.slices):
        sseed = case_seed(cseed, s)
        img = make_phantom(PhantomSpec(cfg.shape, "random-ellipses", seed=sseed))
        y = simulate_acquisition(img, maps, cfg.noise, seed=sseed)
        slices.append((y, rss(ifft2c(y))))
    return cseed, slices


def reconstruct(method: str, ksp_sub, mask, cfg: BenchConfig, maps=None) -> np.ndarray:
    """Reconstruct with ``method``; maps are estimated from the subsampled ACS unless given."""
    if method == "zf-rss":
        return zero_filled(ksp_sub, "rss")
    if maps is None:
        maps = estimate_sensitivities(ksp_sub, mask)
    if method == "zf-sense":
        return zero_filled(ksp_sub, "sense", maps)
    if method == "unrolled":
        return unrolled_recon(ksp_sub, mask, maps, UnrolledConfig())
    return cg_sense(ksp_sub, mask, maps, CgConfig(lam=cfg.lam, max_iters=cfg.max_iters))


def mask_filename(case: int, scheme: Scheme, R: float) -> str:
    return f"case{case:03d}_{scheme.label.replace('+', 'plus')}_R{R:g}.msk"


def _run_cell(cfg: BenchConfig, case: int, scheme: Scheme, R: float, r_acs: float) -> ReconReport:
    name = f"case{case:03d}"
    try:
        cseed, slices = _case_data(cfg, case)
        params = SchemeParams(scheme, AccelerationSpec(R, r_acs, cfg.tolerance), seed=cseed)
        # one mask per case, shared by all its slices
        mask = generate(cfg.shape, params)
        if cfg.out is not None:
            write_mask(Path(cfg.out) / "masks" / mask_filename(case, scheme, R), mask)
        records = []
        for y, truth in slices:
            ys = apply_mask(y, mask)
            records.append(evaluate(truth, reconstruct(cfg.method, ys, mask, cfg)))
        metrics = MetricRecord(
            float(np.mean([m.ssim for m in records])),
            float(np.mean([m.psnr_db for m in records])),
            float(np.mean([m.nmse for m in records])),
        )
        return ReconReport(name, scheme.label, R, metrics)
    except (KspaceBenchError, ValueError, FloatingPointError) as exc:
        logger.warning("%s %s R=%g failed: %s", name, scheme.label, R, exc)
        return ReconReport(name, scheme.label, R, None, f"{type(exc).__name__}: {exc}")


def _run_cell_star(args):
    return _run_cell(*args)


def run_bench(cfg: BenchConfig, workers: Optional[int] = None) -> list[ReconReport]:
    """Run every (case, scheme, R) cell and write ``metrics.csv`` under ``cfg.out``.

    Rows come back sorted by case, scheme code and acceleration regardless of
    completion order.
    """
    if cfg.out is not None:
        (Path(cfg.out) / "masks").mkdir(parents=True, exist_ok=True)
    cells = [
        (cfg, case, scheme, R, r_acs)
        for case in range(cfg.cases)
        for scheme in sorted(cfg.schemes)
        for R, r_acs in zip(cfg.accels, cfg.acs_fracs)
    ]
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(cells) == 1:
        reports = [_run_cell(*c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_cell_star, cells, chunksize=max(1, len(cells) // (4 * workers))))
    order = {s.label: int(s) for s in Scheme}
    reports.sort(key=lambda r: (r.case, order[r.scheme], r.R))
    if cfg.out is not None:
        write_metrics_csv(Path(cfg.out) / "metrics.csv", reports)
        write_summary_csv(Path(cfg.out) / "summary.csv", reports)
    return reports


def summarize(reports: Sequence[ReconReport]) -> list[tuple[str, float, float, float, float, int]]:
    """Mean metrics per scheme and per rectilinear / non-rectilinear group, by acceleration."""
    rect = {s.label for s in Scheme if s.rectilinear}
    groups: dict[tuple[str, float], list[MetricRecord]] = {}
    for r in reports:
        if r.metrics is None:
            continue
        family = "rectilinear" if r.scheme in rect else "non-rectilinear"
        for key in ((r.scheme, r.R), (family, r.R)):
            groups.setdefault(key, []).append(r.metrics)
    order = {s.label: int(s) for s in Scheme} | {"rectilinear": 100, "non-rectilinear": 101}
    rows = []
    for (group, R), ms in sorted(groups.items(), key=lambda kv: (order[kv[0][0]], kv[0][1])):
        rows.append((
            group, R,
            float(np.mean([m.ssim for m in ms])),
            float(np.mean([m.psnr_db for m in ms])),
            float(np.mean([m.nmse for m in ms])),
            len(ms),
        ))
    return rows


def write_summary_csv(path, reports: Sequence[ReconReport]) -> None:
    lines = ["group,R,mean_ssim,mean_psnr,mean_nmse,n"]
    for group, R, s, p, n_mse, n in summarize(reports):
        lines.append(f"{group},{R!r},{s!r},{p!r},{n_mse!r},{n}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
