import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import full_mask, random_complex, random_maps, random_mask
from kspacebench.core import ParameterError, SamplingMask, Scheme, SensitivityMaps
from kspacebench.operators import (
    ForwardOperator,
    adjoint,
    apply_mask,
    expand,
    fft2c,
    forward,
    ifft2c,
    reduce,
    rss,
    sense_combine,
)

dims = st.integers(2, 24)
seeds = st.integers(0, 2**32 - 1)


def test_fft2c_hand_examples():
    k = fft2c(np.ones((2, 2)))
    expected = np.zeros((2, 2))
    expected[1, 1] = 2.0
    assert np.allclose(k, expected, atol=1e-15)

    delta = np.zeros((4, 4))
    delta[2, 2] = 1.0
    k = fft2c(delta)
    assert np.allclose(np.abs(k), 0.25, atol=1e-15)
    assert np.allclose(ifft2c(np.full((4, 4), 0.25)), delta, atol=1e-15)


def test_fft2c_matches_direct_dft_odd_size(rng):
    # direct centred DFT oracle: indices shifted so DC sits at n // 2
    x = random_complex(rng, (5, 3))
    n_x, n_y = x.shape
    u = np.arange(n_x) - n_x // 2
    v = np.arange(n_y) - n_y // 2
    Fx = np.exp(-2j * np.pi * np.outer(u, u) / n_x) / np.sqrt(n_x)
    Fy = np.exp(-2j * np.pi * np.outer(v, v) / n_y) / np.sqrt(n_y)
    assert np.allclose(fft2c(x), Fx @ x @ Fy.T, atol=1e-12)


@given(dims, dims, seeds)
def test_unitarity_and_inverse(n_x, n_y, seed):
    x = random_complex(np.random.default_rng(seed), (n_x, n_y))
    k = fft2c(x)
    assert abs(np.linalg.norm(k) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)
    assert np.linalg.norm(ifft2c(k) - x) <= 1e-12 * np.linalg.norm(x)


@given(dims, dims, seeds)
def test_ifft2c_linearity(n_x, n_y, seed):
    rng = np.random.default_rng(seed)
    x, y = random_complex(rng, (2, n_x, n_y))
    a = complex(*rng.standard_normal(2))
    assert np.allclose(ifft2c(a * x + y), a * ifft2c(x) + ifft2c(y), atol=1e-12)


def test_expand_reduce_examples(rng):
    x = random_complex(rng, (6, 5))
    one = SensitivityMaps(np.ones((1, 6, 5)))
    assert np.array_equal(expand(x, one)[0], x)
    maps = random_maps(rng, 2, 6, 5)
    assert not expand(np.zeros((6, 5)), maps).any()
    out = expand(x, maps)
    for k in range(2):
        for i in range(6):
            for j in range(5):
                prod = maps.data[k, i, j] * x[i, j]
                assert abs(out[k, i, j] - prod) <= 1e-14 * abs(prod)

    maps3 = random_maps(rng, 3, 6, 5)
    z = random_complex(rng, (3, 6, 5))
    oracle = np.zeros((6, 5), complex)
    for k in range(3):
        oracle += np.conj(maps3.data[k]) * z[k]
    assert np.allclose(reduce(z, maps3), oracle, atol=1e-14)
    assert not reduce(np.zeros((3, 6, 5)), maps3).any()


def test_shape_mismatch_errors(rng):
    maps = random_maps(rng, 2, 6, 5)
    with pytest.raises(ParameterError):
        expand(np.zeros((5, 6)), maps)
    with pytest.raises(ParameterError):
        reduce(np.zeros((3, 6, 5)), maps)
    with pytest.raises(ParameterError):
        apply_mask(np.zeros((2, 6, 5)), np.ones((5, 6), bool))
    with pytest.raises(ParameterError):
        ForwardOperator(random_mask(rng, 5, 6), maps)


@given(st.integers(1, 6), dims, dims, seeds)
def test_reduce_expand_identity(n_c, n_x, n_y, seed):
    rng = np.random.default_rng(seed)
    maps = random_maps(rng, n_c, n_x, n_y, normalized=True)
    x = random_complex(rng, (n_x, n_y))
    assert np.linalg.norm(reduce(expand(x, maps), maps) - x) <= 1e-12 * np.linalg.norm(x)


@given(dims, dims, seeds)
def test_apply_mask_projection(n_x, n_y, seed):
    rng = np.random.default_rng(seed)
    mask = random_mask(rng, n_x, n_y)
    k, y = random_complex(rng, (2, 3, n_x, n_y))
    once = apply_mask(k, mask)
    assert np.array_equal(apply_mask(once, mask), once)
    # self-adjoint
    assert np.isclose(np.vdot(y, once), np.vdot(apply_mask(y, mask), k), rtol=1e-12)
    # same pattern on every coil
    assert np.array_equal(once != 0, np.broadcast_to(mask.bits & (k != 0), k.shape))


def test_apply_mask_full_and_zero(rng):
    k = random_complex(rng, (2, 4, 4))
    assert np.array_equal(apply_mask(k, full_mask(4, 4)), k)
    assert not apply_mask(k, np.zeros((4, 4), bool)).any()


def test_forward_collapses_to_fft_single_coil(rng):
    x = random_complex(rng, (8, 6))
    op = ForwardOperator(full_mask(8, 6), SensitivityMaps(np.ones((1, 8, 6)), normalized=True))
    assert np.allclose(forward(op, x)[0], fft2c(x), atol=1e-14)
    assert not forward(op, np.zeros((8, 6))).any()
    assert not adjoint(op, np.zeros((1, 8, 6))).any()


@given(st.integers(1, 8), dims, dims, seeds)
def test_dot_test_property(n_c, n_x, n_y, seed):
    rng = np.random.default_rng(seed)
    op = ForwardOperator(random_mask(rng, n_x, n_y), random_maps(rng, n_c, n_x, n_y))
    x = random_complex(rng, (n_x, n_y))
    y = random_complex(rng, (n_c, n_x, n_y))
    lhs = np.vdot(y, op(x))
    rhs = np.vdot(op.H(y), x)
    assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


def test_forward_operator_normalizes_unflagged_maps(rng):
    maps = random_maps(rng, 3, 6, 6)
    op = ForwardOperator(full_mask(6, 6), maps)
    assert op.maps.normalized
    assert np.allclose(np.sum(np.abs(op.maps.data) ** 2, axis=0), 1.0)


def test_rss_examples(rng):
    x = random_complex(rng, (5, 5))
    assert np.allclose(rss(x[None]), np.abs(x))
    pair = np.array([np.full((2, 2), 3.0), np.full((2, 2), 4j)])
    assert np.allclose(rss(pair), 5.0)
    z = random_complex(rng, (4, 5, 5))
    oracle = np.array([[np.sqrt(sum(abs(z[k, i, j]) ** 2 for k in range(4))) for j in range(5)] for i in range(5)])
    assert np.allclose(rss(z), oracle, atol=1e-14)
    assert (rss(z) >= 0).all()


def test_sense_combine_examples(rng):
    maps = random_maps(rng, 3, 6, 6, normalized=True)
    x = random_complex(rng, (6, 6))
    assert np.allclose(sense_combine(expand(x, maps), maps), np.abs(x), atol=1e-12)
    assert not sense_combine(np.zeros((3, 6, 6)), maps).any()
    z = random_complex(rng, (3, 6, 6))
    assert np.allclose(sense_combine(z, maps), np.abs(reduce(z, maps)))
    # single coil with the phase of x: rss equals the SENSE combination
    phase = SensitivityMaps((x / np.abs(x))[None], normalized=True)
    assert np.allclose(rss(x[None]), sense_combine(x[None], phase), atol=1e-12)
