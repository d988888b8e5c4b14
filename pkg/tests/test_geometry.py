import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import codebooks_for
from swiftce.codebook import grid_angles
from swiftce.errors import ConfigurationError
from swiftce.geometry import (
    ChannelRealization,
    PathParameters,
    SystemDims,
    assemble_channel,
    draw_channel,
    draw_paths,
    steering_vector,
    unvec,
    vec,
    virtual_channel,
)

angles = st.floats(0.0, 2 * np.pi, exclude_max=True)


def test_dims_validation():
    with pytest.raises(ConfigurationError):
        SystemDims(1, 4, 1, 1)
    with pytest.raises(ConfigurationError):
        SystemDims(8, 4, 9, 1)
    with pytest.raises(ConfigurationError):
        SystemDims(8, 4, 2, 0)
    d = SystemDims()
    assert (d.n_virtual, d.t_max, d.t_u) == (512, 128, 4)


def test_path_angle_range():
    with pytest.raises(ValueError):
        PathParameters(1.0, 2 * np.pi, 0.0)
    with pytest.raises(ValueError):
        PathParameters(1.0, 0.0, -0.1)


def test_steering_broadside():
    np.testing.assert_allclose(steering_vector(np.pi / 2, 4).entries, 0.5, atol=1e-15)


def test_steering_endfire():
    np.testing.assert_allclose(steering_vector(0.0, 2).entries, [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-15)


def test_steering_scalar_oracle():
    eps, n = 1.234, 8
    got = steering_vector(eps, n).entries
    for k in range(n):
        ref = complex(np.cos(np.pi * k * np.cos(eps)), np.sin(np.pi * k * np.cos(eps))) / n ** 0.5
        assert abs(got[k] - ref) < 1e-14


@given(angles, st.integers(1, 64))
def test_steering_unit_norm_constant_modulus(eps, n):
    u = steering_vector(eps, n).entries
    assert abs(np.linalg.norm(u) - 1) < 1e-12
    np.testing.assert_allclose(np.abs(u), 1 / np.sqrt(n), atol=1e-12)


def test_draw_paths_statistics():
    rng = np.random.default_rng(1)
    paths = draw_paths(100_000, 1.0, rng)
    a = np.array([p.alpha for p in paths])
    assert 0.98 <= np.mean(np.abs(a) ** 2) <= 1.02
    # real and imaginary parts each carry half the variance
    assert abs(np.var(a.real) - 0.5) < 0.01 and abs(np.var(a.imag) - 0.5) < 0.01
    aod = np.array([p.aod for p in paths])
    aoa = np.array([p.aoa for p in paths])
    for x in (aod, aoa):
        res = stats.kstest(x, stats.uniform(0, 2 * np.pi).cdf)
        assert res.statistic < 1.628 / np.sqrt(len(x))  # 1% critical value


def test_draw_paths_count():
    assert len(draw_paths(3, 1.0, np.random.default_rng(0))) == 3


def test_assemble_hand_example():
    d = SystemDims(4, 2, 1, 1)
    ch = assemble_channel([PathParameters(1.0, np.pi / 2, np.pi / 2)], d)
    np.testing.assert_allclose(ch.h, np.ones((2, 4)), atol=1e-14)


def test_assemble_zero_and_linear(rng):
    d = SystemDims(8, 4, 2, 2)
    assert not np.any(assemble_channel([PathParameters(0j, 1.0, 2.0)], d).h)
    p = PathParameters(0.3 - 0.7j, 1.1, 4.0)
    one = assemble_channel([p], d).h
    np.testing.assert_array_equal(assemble_channel([p, p], d).h, 2 * one)
    q = PathParameters(1.2 + 0.1j, 1.1, 4.0)
    both = assemble_channel([PathParameters(p.alpha + q.alpha, 1.1, 4.0)], d).h
    np.testing.assert_allclose(both, one + assemble_channel([q], d).h, rtol=0, atol=1e-14)


def test_channel_matches_path_sum(rng):
    d = SystemDims()
    ch = draw_channel(d, 3, rng)
    ref = np.zeros((d.n_ue, d.n_bs), complex)
    for p in ch.paths:
        for r in range(d.n_ue):
            for c in range(d.n_bs):
                ref[r, c] += p.alpha * np.exp(1j * np.pi * (r * np.cos(p.aoa) - c * np.cos(p.aod)))
    assert np.linalg.norm(ch.h - ref) <= 1e-12 * np.linalg.norm(ref)


def test_on_grid_single_path_is_one_sparse(dims):
    f_c, w_c = codebooks_for(dims)
    p_idx, q_idx = 7, 3
    path = PathParameters(1.0, float(grid_angles(dims.n_bs)[p_idx]), float(grid_angles(dims.n_ue)[q_idx]))
    hv = virtual_channel(assemble_channel([path], dims), f_c, w_c)
    assert abs(abs(hv[q_idx, p_idx]) - np.sqrt(dims.n_virtual)) < 1e-9
    mask = np.ones_like(hv, bool)
    mask[q_idx, p_idx] = False
    assert np.abs(hv[mask]).max() < 1e-9


def test_on_grid_draws_record_bins(dims, rng):
    f_c, w_c = codebooks_for(dims)
    ch = draw_channel(dims, 3, rng, on_grid=True)
    hv = np.abs(virtual_channel(ch, f_c, w_c))
    bins = set(ch.grid_bins)
    assert len(bins) == 3
    for q, p in bins:
        assert hv[q, p] > 1e-6
    off = [hv[q, p] for q in range(dims.n_ue) for p in range(dims.n_bs) if (q, p) not in bins]
    assert max(off) < 1e-9 * np.sqrt(dims.n_virtual)


def test_virtual_channel_zero_and_roundtrip(dims, rng):
    f_c, w_c = codebooks_for(dims)
    zero = ChannelRealization(np.zeros((dims.n_ue, dims.n_bs), complex), ())
    assert not np.any(np.abs(virtual_channel(zero, f_c, w_c)) > 1e-15)
    h = rng.standard_normal((dims.n_ue, dims.n_bs)) + 1j * rng.standard_normal((dims.n_ue, dims.n_bs))
    hv = virtual_channel(h, f_c, w_c)
    back = w_c.matrix @ hv @ f_c.matrix.conj().T
    assert np.linalg.norm(back - h) <= 1e-12 * np.linalg.norm(h)


def test_virtual_channel_shape_mismatch(dims):
    f_c, w_c = codebooks_for(dims)
    with pytest.raises(ConfigurationError):
        virtual_channel(np.zeros((4, 4)), f_c, w_c)


def test_vec_is_column_stacking(rng):
    a, b, c = (rng.standard_normal((3, 4)), rng.standard_normal((4, 5)), rng.standard_normal((5, 2)))
    np.testing.assert_allclose(vec(a @ b @ c), np.kron(c.T, a) @ vec(b), atol=1e-12)
    m = np.arange(6).reshape(2, 3)
    assert list(vec(m)) == [0, 3, 1, 4, 2, 5]
    np.testing.assert_array_equal(unvec(vec(m), 2, 3), m)
