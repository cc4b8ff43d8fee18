"""Retrospective Cartesian subsampling masks.

Eight schemes are provided, four rectilinear (whole phase-encode columns)
and four cell-wise:

=====================  =====================================================
``RANDOM_RECT``        lines kept independently at random, plus ACS lines
``EQUISPACED_RECT``    lines on an arithmetic progression, plus ACS lines
``EQUISPACED_PLUS``    equispaced with an offset that interleaves the line
                       set with its conjugate mirror
``GAUSSIAN_1D``        lines drawn from a normal law centred on DC
``VDPD``               variable-density Poisson disk (Bridson dart throwing)
``GAUSSIAN_2D``        cells drawn from a bivariate normal law
``RADIAL``             rasterised spokes through DC
``SPIRAL``             rasterised Archimedean arms starting at DC
=====================  =====================================================

Randomness comes from numpy's counter-based Philox bit generator keyed by
the 64-bit seed, so masks are bit-identical across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numba
import numpy as np

from .core import (
    AccelerationSpec,
    GridShape,
    KspaceBenchError,
    ParameterError,
    SamplingMask,
    Scheme,
    achieved_acceleration,
    make_rng,
    radius_grid,
)

__all__ = [
    "CalibrationError",
    "DegenerateACSError",
    "InfeasibleAccelerationError",
    "SamplingStallError",
    "SchemeParams",
    "acs_disk",
    "acs_lines",
    "equispaced_plus_rectilinear",
    "equispaced_rectilinear",
    "gaussian_1d",
    "gaussian_2d",
    "generate",
    "largest_sampled_disk",
    "make_rng",
    "radial_sim",
    "random_rectilinear",
    "spiral_sim",
    "vdpd",
]

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2
# radial golden angle, pi / phi
GOLDEN_ANGLE = math.pi / GOLDEN_RATIO

MAX_GAUSSIAN_DRAWS = 1_000_000
MAX_BISECTION_ITERS = 40
BRIDSON_ATTEMPTS = 30


class DegenerateACSError(ParameterError):
    pass


class InfeasibleAccelerationError(ParameterError):
    pass


class SamplingStallError(KspaceBenchError):
    code = 4


class CalibrationError(KspaceBenchError):
    """Acceleration calibration failed; ``achievable`` is the range reached."""

    code = 4

    def __init__(self, message: str, achievable: tuple[float, float] = (math.nan, math.nan)):
        super().__init__(message)
        self.achievable = achievable


@dataclass(frozen=True)
class SchemeParams:
    """Generator parameters.

    ``r_acs`` in ``accel`` is a line fraction for rectilinear schemes and an
    area fraction of the grid for the disk used by VDPD and Gaussian 2D.
    ``offset`` fixes the randomisation offset of radial, spiral and
    equispaced masks; when ``None`` it is derived from ``seed``.
    """

    scheme: Scheme
    accel: AccelerationSpec
    seed: int = 0
    offset: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not isinstance(self.accel, AccelerationSpec):
            raise ParameterError("accel must be an AccelerationSpec")
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        object.__setattr__(self, "seed", seed)
        if self.offset is not None:
            object.__setattr__(self, "offset", int(self.offset))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _relative_error(achieved: float, target: float) -> float:
    return abs(achieved - target) / target


def _lines_to_bits(shape: GridShape, lines: np.ndarray) -> np.ndarray:
    return np.broadcast_to(lines[None, :], shape.dims).copy()


def _acs_submask(bits, scheme, params: SchemeParams, **kw) -> SamplingMask:
    return SamplingMask(bits, scheme, params.accel.R, params.seed, **kw)


# ---------------------------------------------------------------- ACS regions


def _acs_line_range(n_y: int, r_acs: float) -> tuple[int, int]:
    count = _round_half_up(r_acs * n_y)
    return (n_y - count) // 2, count


def acs_lines(shape, r_acs: float, scheme: Scheme = Scheme.EQUISPACED_RECT) -> SamplingMask:
    """Centred block of ``round(r_acs * n_y)`` full phase-encode lines."""
    shape = GridShape.of(shape)
    if not 0.0 < r_acs < 1.0:
        raise ParameterError(f"r_acs must lie in (0, 1), got {r_acs}")
    start, count = _acs_line_range(shape.n_y, r_acs)
    if count == 0:
        raise DegenerateACSError(f"r_acs={r_acs} gives no ACS lines on {shape.n_y} columns")
    lines = np.zeros(shape.n_y, dtype=bool)
    lines[start : start + count] = True
    return SamplingMask(_lines_to_bits(shape, lines), scheme, acs_line_range=(start, count))


def _acs_line_vector(shape: GridShape, params: SchemeParams) -> tuple[np.ndarray, tuple[int, int]]:
    lines = np.zeros(shape.n_y, dtype=bool)
    if params.accel.r_acs == 0.0:
        return lines, (0, 0)
    start, count = _acs_line_range(shape.n_y, params.accel.r_acs)
    if count == 0:
        raise DegenerateACSError(f"r_acs={params.accel.r_acs} gives no ACS lines on {shape.n_y} columns")
    lines[start : start + count] = True
    return lines, (start, count)


def acs_disk_radius(shape: GridShape, r_acs: float) -> float:
    """Radius of the centred disk covering fraction ``r_acs`` of the grid area."""
    return math.sqrt(shape.n * r_acs / math.pi)


def acs_disk(shape, radius: float) -> np.ndarray:
    """Boolean disk of cells with ``kspace_radius <= radius``."""
    return radius_grid(GridShape.of(shape)) <= radius


def _finish_rectilinear(shape, lines, acs_vec, line_range, params, **info) -> SamplingMask:
    lines = lines | acs_vec
    acs = _acs_submask(
        _lines_to_bits(shape, acs_vec), params.scheme, params,
        acs_line_range=line_range, degenerate=not acs_vec.any(),
    )
    return SamplingMask(
        _lines_to_bits(shape, lines), params.scheme, params.accel.R, params.seed,
        acs=acs, acs_line_range=line_range, info=info,
    )


def _check_line_budget(shape: GridShape, params: SchemeParams, n_acs: int) -> float:
    target = shape.n_y / params.accel.R
    if target < n_acs:
        raise InfeasibleAccelerationError(
            f"R={params.accel.R} allows {target:.2f} lines but the ACS alone needs {n_acs}"
        )
    return target


# -------------------------------------------------------- rectilinear schemes


def random_rectilinear(shape, params: SchemeParams) -> SamplingMask:
    """Each line kept with probability ``p`` so the expected line count is ``n_y / R``.

    Lines are drawn over the full range and then united with the ACS block,
    so draws may land on ACS lines.
    """
    shape = GridShape.of(shape)
    acs_vec, line_range = _acs_line_vector(shape, params)
    n_acs = int(acs_vec.sum())
    target = _check_line_budget(shape, params, n_acs)
    free = shape.n_y - n_acs
    p = 1.0 if free == 0 else min(1.0, (target - n_acs) / free)
    rng = make_rng(params.seed, Scheme.RANDOM_RECT)
    drawn = rng.random(shape.n_y) < p
    return _finish_rectilinear(shape, drawn, acs_vec, line_range, params, probability=p)


# candidate spacings: a 1/16-cell lattice, so integer spacings are included
SPACING_STEP = 1.0 / 16.0


def _equispaced_vector(n_y: int, delta: float, offset: float) -> np.ndarray:
    lines = np.zeros(n_y, dtype=bool)
    pos = np.floor(offset + delta * np.arange(int(math.ceil(n_y / delta)) + 1) + 0.5).astype(np.int64)
    lines[pos[(pos >= 0) & (pos < n_y)]] = True
    return lines


def _offset_for(delta: float, params: SchemeParams, u: float) -> float:
    if params.offset is not None:
        return math.fmod(params.offset, delta)
    return float(int(u * delta))


def _choose_delta(n_y: int, acs_vec: np.ndarray, target: float, params: SchemeParams, u: float) -> float:
    best_delta, best_err = 1.0, math.inf
    for step in range(int((n_y - 1) / SPACING_STEP) + 1):
        delta = 1.0 + step * SPACING_STEP
        total = int((_equispaced_vector(n_y, delta, _offset_for(delta, params, u)) | acs_vec).sum())
        err = abs(total - target)
        # strict comparison keeps the smaller spacing on ties
        if err < best_err:
            best_delta, best_err = delta, err
    return best_delta


def equispaced_rectilinear(shape, params: SchemeParams) -> SamplingMask:
    """Lines at ``round(offset + k d)`` plus the ACS block.

    The spacing ``d`` (a multiple of 1/16 line) is the one bringing the total
    line count closest to ``n_y / R``, the smaller ``d`` on ties. The integer
    ``offset`` is uniform in ``[0, d)`` unless fixed in ``params``.
    """
    shape = GridShape.of(shape)
    acs_vec, line_range = _acs_line_vector(shape, params)
    target = _check_line_budget(shape, params, int(acs_vec.sum()))
    u = make_rng(params.seed, Scheme.EQUISPACED_RECT).random()
    delta = _choose_delta(shape.n_y, acs_vec, target, params, u)
    offset = _offset_for(delta, params, u)
    lines = _equispaced_vector(shape.n_y, delta, offset)
    return _finish_rectilinear(shape, lines, acs_vec, line_range, params, spacing=delta, offset=offset)


def mirrored_union_size(lines: np.ndarray) -> int:
    """``|L u mirror(L)|`` with the conjugate mirror ``k -> n_y - 1 - k``."""
    return int((lines | lines[::-1]).sum())


def equispaced_plus_rectilinear(shape, params: SchemeParams) -> SamplingMask:
    """Equispaced lines whose offset interleaves them with their mirror image.

    The spacing is chosen as in :func:`equispaced_rectilinear`. Among the
    integer offsets in ``[0, d)``, the one maximising the union of the line set
    with its mirror is used; remaining ties prefer the line count closest
    to ``n_y / R`` and then the first offset cyclically after the seeded one.
    """
    shape = GridShape.of(shape)
    acs_vec, line_range = _acs_line_vector(shape, params)
    target = _check_line_budget(shape, params, int(acs_vec.sum()))
    u = make_rng(params.seed, Scheme.EQUISPACED_RECT).random()
    delta = _choose_delta(shape.n_y, acs_vec, target, params, u)
    start = _offset_for(delta, params, u)
    n_offsets = int(math.ceil(delta))
    best, best_key = start, None
    for step in range(n_offsets):
        offset = float((int(start) + step) % n_offsets)
        full = _equispaced_vector(shape.n_y, delta, offset) | acs_vec
        key = (-mirrored_union_size(full), abs(int(full.sum()) - target))
        if best_key is None or key < best_key:
            best, best_key = offset, key
    lines = _equispaced_vector(shape.n_y, delta, best)
    return _finish_rectilinear(shape, lines, acs_vec, line_range, params, spacing=delta, offset=best)


def _first_new(indices: np.ndarray, taken: np.ndarray, need: int) -> np.ndarray:
    """First ``need`` distinct entries of ``indices`` not yet in ``taken``, in draw order."""
    uniq, first = np.unique(indices, return_index=True)
    order = np.argsort(first, kind="stable")
    fresh = uniq[order]
    fresh = fresh[~taken[fresh]]
    return fresh[:need]


def gaussian_1d(shape, params: SchemeParams) -> SamplingMask:
    """Lines drawn from ``Normal(n_y / 2, 4 sqrt(n_y / 2))`` by rejection.

    Draws are rounded to the nearest line and rejected when out of range or
    already sampled, until exactly ``round(n_y / R)`` lines (ACS included)
    are set.
    """
    shape = GridShape.of(shape)
    acs_vec, line_range = _acs_line_vector(shape, params)
    n_acs = int(acs_vec.sum())
    _check_line_budget(shape, params, n_acs)
    target = _round_half_up(shape.n_y / params.accel.R)
    if target < n_acs:
        raise InfeasibleAccelerationError(f"R={params.accel.R} allows {target} lines, ACS needs {n_acs}")
    mu = shape.n_y / 2.0
    sigma = 4.0 * math.sqrt(mu)
    rng = make_rng(params.seed, Scheme.GAUSSIAN_1D)

    lines = acs_vec.copy()
    draws = 0
    while int(lines.sum()) < target:
        if draws >= MAX_GAUSSIAN_DRAWS:
            raise SamplingStallError(f"gaussian_1d stalled after {draws} draws")
        batch = min(max(64, 8 * (target - int(lines.sum()))), MAX_GAUSSIAN_DRAWS - draws)
        idx = np.floor(rng.normal(mu, sigma, size=batch) + 0.5).astype(np.int64)
        draws += batch
        idx = idx[(idx >= 0) & (idx < shape.n_y)]
        lines[_first_new(idx, lines, target - int(lines.sum()))] = True
    return _finish_rectilinear(shape, lines, acs_vec, line_range, params, mean=mu, std=sigma, draws=draws)


# --------------------------------------------------------- cell-wise schemes


def _with_disk_acs(shape: GridShape, bits: np.ndarray, params: SchemeParams, **info) -> SamplingMask:
    radius = acs_disk_radius(shape, params.accel.r_acs)
    disk = acs_disk(shape, radius)
    acs = _acs_submask(disk, params.scheme, params, acs_radius=radius, degenerate=not disk.any())
    return SamplingMask(
        bits | disk, params.scheme, params.accel.R, params.seed, acs=acs, acs_radius=radius, info=info
    )


@numba.njit(cache=True)
def _bridson_kernel(n_x, n_y, cx, cy, rmax, d0, slope, attempts, uniforms, out):
    """Dart throwing on the integer grid with radius-dependent spacing.

    A candidate ``c`` is rejected when some accepted point ``q`` satisfies
    ``|c - q| < d(min(r_c, r_q))``; since ``d`` grows with radius that equals
    ``min(d(r_c), d(r_q))``. Returns the number of uniforms consumed, or -1
    when ``uniforms`` ran out.
    """
    n = n_x * n_y
    occupied = np.full((n_x, n_y), -1, np.int64)
    spacing = np.empty((n_x, n_y))
    for i in range(n_x):
        for j in range(n_y):
            r = math.sqrt((i - cx) ** 2 + (j - cy) ** 2)
            spacing[i, j] = d0 * (1.0 + slope * r / rmax)
    active = np.empty(n, np.int64)
    n_active = 0
    pos = 0
    total = uniforms.shape[0]

    if pos + 2 > total:
        return -1
    i0 = min(int(uniforms[pos] * n_x), n_x - 1)
    j0 = min(int(uniforms[pos + 1] * n_y), n_y - 1)
    pos += 2
    occupied[i0, j0] = i0 * n_y + j0
    out[i0, j0] = True
    active[0] = i0 * n_y + j0
    n_active = 1

    while n_active > 0:
        if pos + 1 + 2 * attempts > total:
            return -1
        slot = min(int(uniforms[pos] * n_active), n_active - 1)
        pos += 1
        p = active[slot]
        pi = p // n_y
        pj = p % n_y
        dp = spacing[pi, pj]
        found = False
        for _ in range(attempts):
            rho = dp * (1.0 + uniforms[pos])
            theta = 2.0 * math.pi * uniforms[pos + 1]
            pos += 2
            ci = int(math.floor(pi + rho * math.cos(theta) + 0.5))
            cj = int(math.floor(pj + rho * math.sin(theta) + 0.5))
            if ci < 0 or ci >= n_x or cj < 0 or cj >= n_y:
                continue
            if occupied[ci, cj] >= 0:
                continue
            dc = spacing[ci, cj]
            reach = int(math.ceil(dc))
            ok = True
            for qi in range(max(0, ci - reach), min(n_x, ci + reach + 1)):
                if not ok:
                    break
                for qj in range(max(0, cj - reach), min(n_y, cj + reach + 1)):
                    if occupied[qi, qj] < 0:
                        continue
                    need = min(dc, spacing[qi, qj])
                    if (qi - ci) ** 2 + (qj - cj) ** 2 < need * need:
                        ok = False
                        break
            if ok:
                occupied[ci, cj] = ci * n_y + cj
                out[ci, cj] = True
                active[n_active] = ci * n_y + cj
                n_active += 1
                found = True
                break
        if not found:
            active[slot] = active[n_active - 1]
            n_active -= 1
    return pos


class _UniformStream:
    """Growable prefix of one Philox uniform stream, shared across calibration runs."""

    def __init__(self, seed: int, stream: int, size: int):
        self.seed, self.stream = seed, stream
        self.values = make_rng(seed, stream).random(size)

    def grow(self):
        self.values = make_rng(self.seed, self.stream).random(2 * self.values.size)


def poisson_disk_points(shape: GridShape, slope: float, stream: _UniformStream, d0: float = 1.0) -> np.ndarray:
    """Variable-density Poisson-disk point set (no ACS) for a given slope.

    Local minimum spacing is ``d0 * (1 + slope * r / r_max)`` with ``r`` the
    cell radius and ``r_max`` the corner radius.
    """
    cx, cy = shape.center
    rmax = math.hypot(cx, cy)
    while True:
        out = np.zeros(shape.dims, dtype=np.bool_)
        used = _bridson_kernel(shape.n_x, shape.n_y, cx, cy, rmax, d0, slope, BRIDSON_ATTEMPTS, stream.values, out)
        if used >= 0:
            return out
        stream.grow()


def spacing_grid(shape: GridShape, slope: float, d0: float = 1.0) -> np.ndarray:
    cx, cy = shape.center
    return d0 * (1.0 + slope * radius_grid(shape) / math.hypot(cx, cy))


def _bisect_continuous(evaluate: Callable[[float], np.ndarray], lo: float, hi: float, target: float, tol: float, name: str):
    """Bisection on a parameter whose growth raises the acceleration.

    Returns the best mask seen and its parameter. Stops early once within a
    quarter of the tolerance; fails when the best mask misses ``tol``.
    """
    best = None

    def consider(param):
        nonlocal best
        bits = evaluate(param)
        acc = achieved_acceleration(bits)
        err = _relative_error(acc, target)
        if best is None or err < best[0]:
            best = (err, param, bits, acc)
        return acc

    acc_lo = consider(lo)
    if acc_lo > target * (1 + tol):
        raise CalibrationError(
            f"{name}: lowest achievable acceleration {acc_lo:.3f} exceeds target {target}", (acc_lo, acc_lo)
        )
    acc_hi = consider(hi)
    grow = 0
    while acc_hi < target and grow < 20:
        lo, acc_lo = hi, acc_hi
        hi *= 2.0
        acc_hi = consider(hi)
        grow += 1
    if acc_hi < target * (1 - tol) and best[0] > tol:
        raise CalibrationError(
            f"{name}: highest achievable acceleration {acc_hi:.3f} below target {target}", (acc_lo, acc_hi)
        )
    for _ in range(MAX_BISECTION_ITERS):
        if best[0] <= tol / 4:
            break
        mid = 0.5 * (lo + hi)
        acc = consider(mid)
        if acc < target:
            lo = mid
        else:
            hi = mid
    err, param, bits, acc = best
    if err > tol:
        raise CalibrationError(
            f"{name}: best acceleration {acc:.3f} misses target {target} by {100 * err:.1f}%", (acc_lo, acc_hi)
        )
    return bits, param


def vdpd(shape, params: SchemeParams) -> SamplingMask:
    """Variable-density Poisson-disk mask with a fully sampled centred ACS disk.

    Sampling density falls off as ``1 / (1 + s r)``; the slope ``s`` is found
    by bisection so the achieved acceleration, ACS disk included, is within
    ``accel.tolerance`` of ``R``. One seeded uniform stream is reused for
    every trial slope.
    """
    shape = GridShape.of(shape)
    disk = acs_disk(shape, acs_disk_radius(shape, params.accel.r_acs))
    stream = _UniformStream(params.seed, Scheme.VDPD, shape.n * 8)

    def evaluate(slope):
        return poisson_disk_points(shape, slope, stream) | disk

    _, slope = _bisect_continuous(
        evaluate, 0.0, 4.0, params.accel.R, params.accel.tolerance, "vdpd"
    )
    points = poisson_disk_points(shape, slope, stream)
    return _with_disk_acs(shape, points, params, slope=slope, poisson_points=points)


def gaussian_2d(shape, params: SchemeParams) -> SamplingMask:
    """Cells drawn from a bivariate normal law by rejection.

    Mean ``(n_x / 2, n_y / 2)``, independent per-axis standard deviations
    ``4 sqrt(n_x / 2)`` and ``4 sqrt(n_y / 2)``. Draws are rounded, rejected
    when out of range or duplicate, until ``round(n / R)`` cells (ACS disk
    included) are set.
    """
    shape = GridShape.of(shape)
    disk = acs_disk(shape, acs_disk_radius(shape, params.accel.r_acs))
    target = _round_half_up(shape.n / params.accel.R)
    if target < int(disk.sum()):
        raise InfeasibleAccelerationError(
            f"R={params.accel.R} allows {target} cells but the ACS disk holds {int(disk.sum())}"
        )
    mean = np.array([shape.n_x / 2.0, shape.n_y / 2.0])
    std = 4.0 * np.sqrt(mean)
    rng = make_rng(params.seed, Scheme.GAUSSIAN_2D)

    taken = disk.ravel().copy()
    draws = 0
    while int(taken.sum()) < target:
        if draws >= MAX_GAUSSIAN_DRAWS:
            raise SamplingStallError(f"gaussian_2d stalled after {draws} draws")
        batch = min(max(256, 8 * (target - int(taken.sum()))), MAX_GAUSSIAN_DRAWS - draws)
        xy = np.floor(rng.normal(mean, std, size=(batch, 2)) + 0.5).astype(np.int64)
        draws += batch
        keep = (xy[:, 0] >= 0) & (xy[:, 0] < shape.n_x) & (xy[:, 1] >= 0) & (xy[:, 1] < shape.n_y)
        flat = xy[keep, 0] * shape.n_y + xy[keep, 1]
        taken[_first_new(flat, taken, target - int(taken.sum()))] = True
    return _with_disk_acs(shape, taken.reshape(shape.dims), params, mean=tuple(mean), std=tuple(std), draws=draws)


# ------------------------------------------------ simulated non-Cartesian


def _derived_offset(params: SchemeParams) -> int:
    if params.offset is not None:
        return params.offset
    return int(make_rng(params.seed, params.scheme).integers(0, 2**31))


def _rasterize(shape: GridShape, xs: np.ndarray, ys: np.ndarray, out: np.ndarray) -> None:
    i = np.floor(xs + 0.5).astype(np.int64)
    j = np.floor(ys + 0.5).astype(np.int64)
    keep = (i >= 0) & (i < shape.n_x) & (j >= 0) & (j < shape.n_y)
    out[i[keep], j[keep]] = True


def radial_spokes(shape: GridShape, n_spokes: int, offset: int) -> np.ndarray:
    """Spokes through the DC cell at angles ``pi j / N + offset * golden_angle``.

    Each spoke is traversed in unit steps along its dominant axis.
    """
    out = np.zeros(shape.dims, dtype=bool)
    ci, cj = shape.dc
    base = math.fmod(offset * GOLDEN_ANGLE, math.pi)
    for k in range(n_spokes):
        theta = math.pi * k / n_spokes + base
        c, s = math.cos(theta), math.sin(theta)
        if abs(c) >= abs(s):
            xs = np.arange(shape.n_x, dtype=np.float64)
            ys = cj + (xs - ci) * (s / c)
        else:
            ys = np.arange(shape.n_y, dtype=np.float64)
            xs = ci + (ys - cj) * (c / s)
        _rasterize(shape, xs, ys, out)
    out[ci, cj] = True
    return out


def _calibrate_count(evaluate: Callable[[int], np.ndarray], target: float, tol: float, upper: int, name: str):
    """Integer search for the count whose mask acceleration is closest to ``target``.

    Acceleration falls as the count grows; binary search finds the first
    count at or below the target and its predecessor is compared with it.
    """
    cache = {}

    def acc(count):
        if count not in cache:
            bits = evaluate(count)
            cache[count] = (achieved_acceleration(bits), bits)
        return cache[count][0]

    lo, hi = 1, upper
    if acc(lo) < target * (1 - tol):
        raise CalibrationError(f"{name}: one element already gives R={acc(lo):.3f}", (acc(hi), acc(lo)))
    if acc(hi) > target:
        if _relative_error(acc(hi), target) > tol:
            raise CalibrationError(f"{name}: {upper} elements only reach R={acc(hi):.3f}", (acc(hi), acc(lo)))
        return cache[hi][1], hi
    for _ in range(MAX_BISECTION_ITERS):
        if hi - lo <= 1:
            break
        mid = (lo + hi) // 2
        if acc(mid) > target:
            lo = mid
        else:
            hi = mid
    best = min((lo, hi), key=lambda c: (_relative_error(acc(c), target), c))
    return cache[best][1], best


def radial_sim(shape, params: SchemeParams) -> SamplingMask:
    """Simulated radial mask: ``N`` rasterised spokes, ``N`` calibrated to ``R``."""
    shape = GridShape.of(shape)
    offset = _derived_offset(params)
    bits, n_spokes = _calibrate_count(
        lambda n: radial_spokes(shape, n, offset),
        params.accel.R, params.accel.tolerance, 4 * max(shape.dims), "radial",
    )
    err = _relative_error(achieved_acceleration(bits), params.accel.R)
    if err > params.accel.tolerance:
        raise CalibrationError(f"radial: {n_spokes} spokes give R={achieved_acceleration(bits):.3f}")
    return _with_largest_disk(shape, bits, params, spokes=n_spokes, offset=offset)


def spiral_arms(shape: GridShape, n_arms: int, pitch: float, rotation: float) -> np.ndarray:
    """Archimedean arms ``rho = pitch * phi`` from the DC cell to the grid corners.

    Arms are sampled with arc-length steps of at most half a cell.
    """
    out = np.zeros(shape.dims, dtype=bool)
    ci, cj = shape.dc
    rho_end = math.hypot(max(ci, shape.n_x - 1 - ci), max(cj, shape.n_y - 1 - cj)) + 1.0
    phi_end = rho_end / pitch
    dphi = 0.5 / math.hypot(rho_end, pitch)
    phi = np.arange(0.0, phi_end + dphi, dphi)
    rho = pitch * phi
    for k in range(n_arms):
        angle = phi + rotation + 2.0 * math.pi * k / n_arms
        _rasterize(shape, ci + rho * np.cos(angle), cj + rho * np.sin(angle), out)
    out[ci, cj] = True
    return out


def spiral_sim(shape, params: SchemeParams) -> SamplingMask:
    """Simulated spiral mask.

    The arm count is calibrated first at a pitch of one revolution across
    the grid; the pitch is then refined by bisection with the arm count
    fixed. Arms are rotated by ``offset`` times a golden fraction of the arm
    spacing plus a seeded jitter.
    """
    shape = GridShape.of(shape)
    offset = params.offset if params.offset is not None else 0
    ci, cj = shape.dc
    rho_end = math.hypot(max(ci, shape.n_x - 1 - ci), max(cj, shape.n_y - 1 - cj)) + 1.0
    base_pitch = rho_end / (2.0 * math.pi)
    jitter = make_rng(params.seed, Scheme.SPIRAL).random()

    def rotation(n_arms):
        spacing = 2.0 * math.pi / n_arms
        return spacing * math.fmod(offset / GOLDEN_RATIO + jitter, 1.0)

    target, tol = params.accel.R, params.accel.tolerance
    bits, n_arms = _calibrate_count(
        lambda n: spiral_arms(shape, n, base_pitch, rotation(n)), target, tol, 4 * max(shape.dims), "spiral"
    )
    pitch = base_pitch
    if _relative_error(achieved_acceleration(bits), target) > tol / 4:
        try:
            bits, pitch = _bisect_continuous(
                lambda a: spiral_arms(shape, n_arms, a, rotation(n_arms)),
                base_pitch / 4.0, base_pitch, target, tol, "spiral",
            )
        except CalibrationError:
            if _relative_error(achieved_acceleration(bits), target) > tol:
                raise
    return _with_largest_disk(shape, bits, params, arms=n_arms, pitch=pitch, offset=offset)


# ---------------------------------------------------------- ACS detection


def _largest_disk(bits: np.ndarray) -> tuple[np.ndarray, float, bool]:
    shape = GridShape(*bits.shape)
    radii = radius_grid(shape)
    inscribed = min(shape.dims) / 2.0 - 0.5
    unset = radii[~bits]
    first_gap = float(unset.min()) if unset.size else math.inf
    if first_gap > inscribed:
        return radii <= inscribed, inscribed, False
    candidates = radii[radii < first_gap]
    if candidates.size:
        rho = float(candidates.max())
        return radii <= rho, rho, False
    dc = shape.dc
    disk = np.zeros(shape.dims, dtype=bool)
    if bits[dc]:
        disk[dc] = True
        return disk, 0.0, False
    return disk, 0.0, True


def largest_sampled_disk(mask: SamplingMask) -> SamplingMask:
    """Largest centred disk, capped at the inscribed circle, that is fully sampled.

    If even the innermost ring of cells is incomplete the disk collapses to
    the DC cell (radius 0); if the DC cell is unsampled the result is empty
    and flagged ``degenerate``.
    """
    bits = mask.bits if isinstance(mask, SamplingMask) else np.asarray(mask, dtype=bool)
    if not bits.any():
        raise ParameterError("largest_sampled_disk needs a nonempty mask")
    disk, rho, degenerate = _largest_disk(bits)
    scheme = mask.scheme if isinstance(mask, SamplingMask) else Scheme.RADIAL
    return SamplingMask(disk, scheme, acs_radius=rho, degenerate=degenerate)


def _with_largest_disk(shape, bits, params, **info) -> SamplingMask:
    disk, rho, degenerate = _largest_disk(bits)
    acs = _acs_submask(disk, params.scheme, params, acs_radius=rho, degenerate=degenerate)
    return SamplingMask(bits, params.scheme, params.accel.R, params.seed, acs=acs, acs_radius=rho, info=info)


# ---------------------------------------------------------------- dispatch

GENERATORS = {
    Scheme.RANDOM_RECT: random_rectilinear,
    Scheme.EQUISPACED_RECT: equispaced_rectilinear,
    Scheme.EQUISPACED_PLUS_RECT: equispaced_plus_rectilinear,
    Scheme.GAUSSIAN_1D: gaussian_1d,
    Scheme.VDPD: vdpd,
    Scheme.GAUSSIAN_2D: gaussian_2d,
    Scheme.RADIAL: radial_sim,
    Scheme.SPIRAL: spiral_sim,
}


def generate(shape, params: SchemeParams) -> SamplingMask:
    """Build the mask for ``params.scheme`` with its ACS submask attached."""
    shape = GridShape.of(shape)
    if not isinstance(params, SchemeParams):
        raise ParameterError("generate expects SchemeParams")
    mask = GENERATORS[params.scheme](shape, params)
    mask.info["achieved_acceleration"] = achieved_acceleration(mask)
    return mask
