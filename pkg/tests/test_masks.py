import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kspacebench.core import AccelerationSpec, GridShape, ParameterError, SamplingMask, Scheme, radius_grid
from kspacebench.masks import (
    DegenerateACSError,
    InfeasibleAccelerationError,
    SchemeParams,
    acs_disk_radius,
    acs_lines,
    equispaced_plus_rectilinear,
    equispaced_rectilinear,
    gaussian_1d,
    gaussian_2d,
    generate,
    largest_sampled_disk,
    mirrored_union_size,
    radial_sim,
    random_rectilinear,
    spacing_grid,
    spiral_sim,
    vdpd,
)

SQ64 = GridShape(64, 64)
PAPER_ACS = {2.0: 0.16, 4.0: 0.08, 8.0: 0.04}


def params(scheme, R, r_acs=None, seed=0, **kw):
    r_acs = PAPER_ACS.get(R, 0.08) if r_acs is None else r_acs
    return SchemeParams(scheme, AccelerationSpec(R, r_acs), seed=seed, **kw)


def line_vector(mask):
    return mask.bits[0].copy()


# ------------------------------------------------------------- ACS lines


def test_acs_lines_examples():
    m = acs_lines(GridShape(8, 8), 0.25)
    assert list(np.flatnonzero(line_vector(m))) == [3, 4]
    m = acs_lines(GridShape(32, 32), 0.16)
    assert line_vector(m).sum() == 5
    m = acs_lines(SQ64, 0.04)
    assert line_vector(m).sum() == int(math.floor(0.04 * 64 + 0.5)) == 3
    with pytest.raises(DegenerateACSError):
        acs_lines(GridShape(8, 8), 0.01)
    with pytest.raises(ParameterError):
        acs_lines(SQ64, 0.0)


@given(st.integers(2, 80), st.floats(0.01, 0.9))
def test_acs_lines_centred(n_y, r_acs):
    count = int(math.floor(r_acs * n_y + 0.5))
    if count == 0:
        return
    lines = line_vector(acs_lines(GridShape(4, n_y), r_acs))
    idx = np.flatnonzero(lines)
    assert len(idx) == count and np.all(np.diff(idx) == 1)
    left, right = idx[0], n_y - 1 - idx[-1]
    assert left in (right, right - 1)


# ------------------------------------------------------- rectilinear masks


RECT = [Scheme.RANDOM_RECT, Scheme.EQUISPACED_RECT, Scheme.EQUISPACED_PLUS_RECT, Scheme.GAUSSIAN_1D]


@pytest.mark.parametrize("scheme", RECT)
@pytest.mark.parametrize("seed", [0, 3])
def test_rectilinear_structure_and_acs(scheme, seed):
    m = generate(GridShape(20, 64), params(scheme, 4.0, seed=seed))
    assert np.all(m.bits == m.bits[0][None, :])
    assert not np.any(m.acs.bits & ~m.bits)
    assert m.acs.bits[0].sum() == m.acs_line_range[1] == 5


def test_random_rectilinear_limit_and_statistics():
    m = random_rectilinear(SQ64, params(Scheme.RANDOM_RECT, 1.0 + 1e-12))
    assert m.acceleration == pytest.approx(1.0)
    counts = [random_rectilinear(SQ64, params(Scheme.RANDOM_RECT, 2.0, seed=s)).count for s in range(100)]
    accel = 64 * 64 / np.mean(counts)
    assert 1.7 <= accel <= 2.3
    # expected line count is n_y / R: Monte Carlo within 3 standard errors
    lines = np.array(counts) / 64
    assert abs(lines.mean() - 32) <= 3 * lines.std(ddof=1) / 10 + 1e-9


def test_random_rectilinear_deterministic():
    a = random_rectilinear(SQ64, params(Scheme.RANDOM_RECT, 4.0, seed=11))
    b = random_rectilinear(SQ64, params(Scheme.RANDOM_RECT, 4.0, seed=11))
    assert a == b
    assert a != random_rectilinear(SQ64, params(Scheme.RANDOM_RECT, 4.0, seed=12))


def test_infeasible_acceleration():
    with pytest.raises(InfeasibleAccelerationError):
        random_rectilinear(SQ64, params(Scheme.RANDOM_RECT, 8.0, r_acs=0.3))
    with pytest.raises(InfeasibleAccelerationError):
        equispaced_rectilinear(SQ64, params(Scheme.EQUISPACED_RECT, 8.0, r_acs=0.3))


def test_equispaced_exact_division():
    m = equispaced_rectilinear(GridShape(16, 16), params(Scheme.EQUISPACED_RECT, 4.0, r_acs=0.0, offset=0))
    assert list(np.flatnonzero(line_vector(m))) == [0, 4, 8, 12]


def test_equispaced_line_count_oracle():
    # independent exhaustive search over integer spacings and offsets
    m = equispaced_rectilinear(SQ64, params(Scheme.EQUISPACED_RECT, 4.0, r_acs=0.08))
    total = line_vector(m).sum()
    acs = line_vector(acs_lines(SQ64, 0.08))
    best = min(
        abs((np.isin(np.arange(64), np.arange(o, 64, d)) | acs).sum() - 16)
        for d in range(1, 64)
        for o in range(d)
    )
    assert abs(total - 16) <= max(1, best)


@pytest.mark.parametrize("scheme", [Scheme.EQUISPACED_RECT, Scheme.EQUISPACED_PLUS_RECT])
def test_equispaced_identity(scheme):
    m = generate(SQ64, params(scheme, 1.0, r_acs=0.08))
    assert m.bits.all()


@given(st.integers(0, 2**32 - 1), st.sampled_from([2.0, 4.0, 8.0]))
def test_equispaced_plus_mirror_union(seed, R):
    plain = equispaced_rectilinear(SQ64, params(Scheme.EQUISPACED_RECT, R, seed=seed))
    plus = equispaced_plus_rectilinear(SQ64, params(Scheme.EQUISPACED_PLUS_RECT, R, seed=seed))
    assert plus.info["spacing"] == plain.info["spacing"]
    assert mirrored_union_size(line_vector(plus)) >= mirrored_union_size(line_vector(plain))
    assert plus == equispaced_plus_rectilinear(SQ64, params(Scheme.EQUISPACED_PLUS_RECT, R, seed=seed))


def test_gaussian_1d_count_range_and_mean():
    means = []
    for seed in range(200):
        m = gaussian_1d(SQ64, params(Scheme.GAUSSIAN_1D, 4.0, seed=seed))
        lines = line_vector(m)
        assert lines.sum() == 16
        extra = np.flatnonzero(lines & ~line_vector(m.acs))
        means.append(extra.mean())
    mu, sigma = 32.0, 4 * math.sqrt(32)
    assert abs(np.mean(means) - mu) <= sigma / 2


@given(st.integers(0, 2**32 - 1), st.sampled_from([2.0, 3.0, 4.0, 8.0]), st.integers(8, 96))
def test_gaussian_1d_exact_count(seed, R, n_y):
    m = gaussian_1d(GridShape(4, n_y), params(Scheme.GAUSSIAN_1D, R, r_acs=0.0, seed=seed))
    assert line_vector(m).sum() == int(math.floor(n_y / R + 0.5))


# ------------------------------------------------------- cell-wise masks


def test_vdpd_acs_disk_and_acceleration():
    shape = GridShape(128, 128)
    m = vdpd(shape, params(Scheme.VDPD, 4.0, r_acs=0.08))
    radius = acs_disk_radius(shape, 0.08)
    disk = radius_grid(shape) <= radius
    assert m.bits[disk].all() and np.array_equal(m.acs.bits, disk)
    assert abs(m.acceleration - 4.0) / 4.0 <= 0.10


def pairwise_violations(mask, slack=0.05):
    """O(k^2) check of the variable minimum-distance bound on non-ACS points."""
    shape = mask.shape
    pts = np.argwhere(mask.bits & ~mask.acs.bits).astype(float)
    d = spacing_grid(shape, mask.info["slope"])
    local = d[pts[:, 0].astype(int), pts[:, 1].astype(int)]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    need = np.minimum(local[:, None], local[None, :]) * (1 - slack)
    np.fill_diagonal(dist, np.inf)
    return int(np.sum(dist < need))


@pytest.mark.parametrize("R", [2.0, 4.0, 8.0])
def test_vdpd_pairwise_distance(R):
    m = vdpd(SQ64, params(Scheme.VDPD, R, seed=5))
    assert pairwise_violations(m) == 0


def test_vdpd_deterministic():
    a = vdpd(SQ64, params(Scheme.VDPD, 4.0, seed=9))
    assert a == vdpd(SQ64, params(Scheme.VDPD, 4.0, seed=9))
    assert a != vdpd(SQ64, params(Scheme.VDPD, 4.0, seed=10))


def test_gaussian_2d_exact_count_and_determinism():
    for R in (2.0, 4.0, 8.0):
        m = gaussian_2d(SQ64, params(Scheme.GAUSSIAN_2D, R))
        assert m.acceleration == 4096 / int(math.floor(4096 / R + 0.5))
    a = gaussian_2d(SQ64, params(Scheme.GAUSSIAN_2D, 4.0, seed=2))
    assert a == gaussian_2d(SQ64, params(Scheme.GAUSSIAN_2D, 4.0, seed=2))


def test_gaussian_2d_second_moments():
    shape = GridShape(256, 256)
    sigma = 4 * math.sqrt(128)
    devs = []
    for seed in range(200):
        m = gaussian_2d(shape, params(Scheme.GAUSSIAN_2D, 32.0, r_acs=0.0, seed=seed))
        pts = np.argwhere(m.bits)
        devs.append(pts - 128.0)
    devs = np.concatenate(devs)
    std = np.sqrt((devs**2).mean(axis=0))
    assert np.all(np.abs(std - sigma) / sigma <= 0.15)


def test_radial_examples():
    for n in (8, 32):
        m = radial_sim(SQ64, params(Scheme.RADIAL, n / 4.0 if n == 8 else 8.0, offset=1))
        assert m.bits[32, 32]
    a = radial_sim(SQ64, params(Scheme.RADIAL, 8.0, offset=1))
    b = radial_sim(SQ64, params(Scheme.RADIAL, 8.0, offset=2))
    assert not np.array_equal(a.bits, b.bits)
    assert abs(a.acceleration - 8.0) / 8.0 <= 0.10


def ring_fraction(bits, r0, r1):
    r = radius_grid(GridShape(*bits.shape))
    sel = (r >= r0) & (r < r1)
    return bits[sel].mean()


def test_spiral_examples():
    m = spiral_sim(SQ64, params(Scheme.SPIRAL, 4.0, seed=1, offset=3))
    assert m.bits[32, 32]
    assert m == spiral_sim(SQ64, params(Scheme.SPIRAL, 4.0, seed=1, offset=3))
    assert ring_fraction(m.bits, 0, 8) >= ring_fraction(m.bits, 24, 32)


@pytest.mark.parametrize("scheme", [Scheme.VDPD, Scheme.GAUSSIAN_2D, Scheme.RADIAL, Scheme.SPIRAL])
def test_centre_density_exceeds_global(scheme):
    m = generate(SQ64, params(scheme, 4.0, seed=4))
    assert ring_fraction(m.bits, 0, 8) > m.bits.mean()


# ---------------------------------------------------- largest sampled disk


def disk_radius_scan(bits):
    """Largest radius, from the set of cell radii, whose disk is fully sampled and inscribed."""
    shape = GridShape(*bits.shape)
    r = radius_grid(shape)
    inscribed = min(shape.dims) / 2 - 0.5
    if bits[r <= inscribed].all():
        return inscribed
    best = None
    for rho in np.unique(r):
        if bits[r <= rho].all():
            best = rho
        else:
            break
    return best


def test_largest_disk_full_and_centre_only():
    full = SamplingMask(np.ones((32, 32), bool), Scheme.RADIAL)
    d = largest_sampled_disk(full)
    assert d.acs_radius == pytest.approx(15.5)
    assert np.array_equal(d.bits, radius_grid(GridShape(32, 32)) <= 15.5)

    only = np.zeros((33, 33), bool)
    only[16, 16] = True
    d = largest_sampled_disk(SamplingMask(only, Scheme.RADIAL))
    assert d.acs_radius == 0.0 and np.array_equal(d.bits, only) and not d.degenerate


def test_largest_disk_degenerate_when_dc_unset():
    bits = np.ones((8, 8), bool)
    bits[4, 4] = False
    d = largest_sampled_disk(SamplingMask(bits, Scheme.SPIRAL))
    assert d.degenerate and not d.bits.any()


def test_largest_disk_matches_radius_scan():
    from kspacebench.masks import radial_spokes

    bits = radial_spokes(GridShape(32, 32), 64, 0)
    d = largest_sampled_disk(SamplingMask(bits, Scheme.RADIAL))
    expected = disk_radius_scan(bits)
    assert expected is not None
    assert d.acs_radius == pytest.approx(expected)


@given(st.integers(0, 2**32 - 1), st.integers(4, 24))
def test_largest_disk_is_sampled_and_maximal(seed, n):
    rng = np.random.default_rng(seed)
    r = radius_grid(GridShape(n, n))
    bits = (r <= rng.uniform(0, n / 2)) | (rng.random((n, n)) < 0.3)
    bits[n // 2, n // 2] = True
    d = largest_sampled_disk(SamplingMask(bits, Scheme.RADIAL))
    assert not np.any(d.bits & ~bits)
    expected = disk_radius_scan(bits)
    if expected is not None:
        assert d.acs_radius == pytest.approx(expected)


# ---------------------------------------------------------------- dispatch


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("R", [2.0, 4.0, 8.0])
def test_generate_sweep_64(scheme, R):
    m = generate(SQ64, params(scheme, R, seed=1))
    assert m.info["achieved_acceleration"] == m.acceleration
    assert not np.any(m.acs.bits & ~m.bits)
    tol = 0.15 if scheme.rectilinear and R == 8.0 else 0.10
    if scheme is not Scheme.RANDOM_RECT:
        assert abs(m.acceleration - R) / R <= tol
    assert m == generate(SQ64, params(scheme, R, seed=1))


def test_generate_validation():
    with pytest.raises(ParameterError):
        generate(SQ64, params(99, 2.0))
    with pytest.raises(ParameterError):
        generate(SQ64, "vdpd")
