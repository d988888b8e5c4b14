import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import codebooks_for
from swiftce.codebook import Side, grid_angles
from swiftce.controller import regenerate_bs_sequence
from swiftce.errors import ConfigurationError, ProtocolError
from swiftce.geometry import ChannelRealization, PathParameters, SystemDims, assemble_channel, draw_channel, vec, virtual_channel
from swiftce.measurement import (
    QPSK,
    BeamSelection,
    BsSchedule,
    MeasurementLedger,
    MeasurementRecord,
    PilotSymbols,
    TrialSeeds,
    append,
    draw_pilots,
    measure_timeslot,
    observe,
    select_beams,
    sensing_block,
)


def _sel(idx, side):
    return BeamSelection(np.asarray(idx, dtype=np.intp), Side(side))


def test_inclusion_frequency():
    rng = np.random.default_rng(5)
    n_draws = 100_000
    hits = sum(0 in select_beams(rng, 32, 8).indices for _ in range(n_draws))
    sigma = np.sqrt(0.25 * 0.75 / n_draws)
    assert abs(hits / n_draws - 0.25) <= 3 * sigma


def test_selection_edge_cases(rng):
    assert sorted(select_beams(rng, 5, 5).indices) == list(range(5))
    for _ in range(200):
        s = select_beams(rng, 16, 4, Side.UE)
        assert len(set(s.indices)) == 4 and s.side is Side.UE
    with pytest.raises(ConfigurationError):
        select_beams(rng, 4, 5)


def test_pilots():
    rng = np.random.default_rng(3)
    s = np.stack([draw_pilots(rng, 4).symbols for _ in range(100_000)])
    np.testing.assert_allclose(np.abs(s), 1.0)
    cov = s.T @ s.conj() / len(s)
    assert np.abs(cov - np.eye(4)).max() < 0.02
    a = draw_pilots(np.random.default_rng(9), 8).symbols
    b = draw_pilots(np.random.default_rng(9), 8).symbols
    np.testing.assert_array_equal(a, b)


def _on_grid(d, p, q, alpha=1.0):
    path = PathParameters(alpha, float(grid_angles(d.n_bs)[p]), float(grid_angles(d.n_ue)[q]))
    return assemble_channel([path], d)


def test_observe_path_not_selected(dims, rng):
    ch = _on_grid(dims, 5, 2)
    bs = _sel([0, 1, 2, 3, 4, 6, 7, 8], "BS")
    rec = observe(ch, bs, _sel([0, 1, 2, 3], "UE"), draw_pilots(rng, 8), 1.0, 0.0, rng)
    assert np.abs(rec.y).max() < 1e-12


def test_observe_aligned_entry(dims, rng):
    ch = _on_grid(dims, 5, 2)
    bs = _sel([9, 5, 1, 3, 4, 6, 7, 8], "BS")
    ue = _sel([0, 2, 11, 3], "UE")
    pil = draw_pilots(rng, 8)
    rec = observe(ch, bs, ue, pil, 2.0, 0.0, rng)
    expect = np.sqrt(2.0 / 8) * np.sqrt(dims.n_virtual) * pil.symbols[1]
    assert abs(rec.y[1] - expect) < 1e-10
    assert np.abs(np.delete(rec.y, 1)).max() < 1e-10


def test_observe_zero_power_noise_level(dims):
    rng = np.random.default_rng(11)
    ch = draw_channel(dims, 1, rng)
    ys = []
    for _ in range(20_000):
        rec = observe(ch, select_beams(rng, 32, 8), select_beams(rng, 16, 4, "UE"), draw_pilots(rng, 8), 0.0, 0.3, rng)
        ys.append(rec.y)
    ys = np.array(ys)
    cov = ys.T @ ys.conj() / len(ys)
    assert np.abs(cov - 0.3 * np.eye(4)).max() < 0.02 * 0.3 * 3


def test_noise_covariance_zero_channel():
    d = SystemDims()
    rng = np.random.default_rng(12)
    ch = ChannelRealization(np.zeros((d.n_ue, d.n_bs), complex), ())
    ys = np.array([
        observe(ch, select_beams(rng, 32, 8), select_beams(rng, 16, 4, "UE"), draw_pilots(rng, 8), 1.0, 0.5, rng).y
        for _ in range(100_000)
    ])
    cov = ys.T @ ys.conj() / len(ys)
    assert np.abs(cov - 0.5 * np.eye(4)).max() < 0.02 * 0.5


def test_single_entry_block():
    a = sensing_block(_sel([2], "BS"), _sel([1], "UE"), PilotSymbols(np.array([1j])), (4, 3))
    expect = np.zeros((1, 12), complex)
    expect[0, 2 * 3 + 1] = 1j
    np.testing.assert_array_equal(a, expect)


def test_zero_pilots_block():
    a = sensing_block(_sel([0, 2], "BS"), _sel([1], "UE"), PilotSymbols(np.zeros(2, complex)), (4, 2))
    assert not a.any()


@given(st.integers(0, 2**32 - 1))
def test_block_identity_small(seed):
    d = SystemDims(4, 2, 2, 1)
    rng = np.random.default_rng(seed)
    f_c, w_c = codebooks_for(d)
    h = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    bs, ue = select_beams(rng, 4, 2), select_beams(rng, 2, 1, "UE")
    pil = draw_pilots(rng, 2)
    lhs = sensing_block(bs, ue, pil, (f_c, w_c)) @ vec(w_c.matrix.conj().T @ h @ f_c.matrix)
    rhs = w_c.matrix[:, ue.indices].conj().T @ h @ f_c.matrix[:, bs.indices] @ pil.symbols
    assert np.abs(lhs - rhs).max() < 1e-12


def test_block_matches_kronecker(dims, rng):
    f_c, w_c = codebooks_for(dims)
    bs, ue, pil = select_beams(rng, 32, 8), select_beams(rng, 16, 4, "UE"), draw_pilots(rng, 8)
    kron = np.kron(pil.symbols @ f_c.matrix[:, bs.indices].T @ f_c.matrix.conj(), w_c.matrix[:, ue.indices].conj().T @ w_c.matrix)
    assert np.abs(sensing_block(bs, ue, pil, (f_c, w_c)) - kron).max() < 1e-12
    assert (np.abs(sensing_block(bs, ue, pil, (f_c, w_c))) > 0).sum(axis=1).tolist() == [8] * 4


def test_ledger_stacking(dims):
    seeds = TrialSeeds(7, (0,))
    ch = draw_channel(dims, 2, seeds.channel())
    f_c, w_c = codebooks_for(dims)
    led = MeasurementLedger(dims, 1.0)
    assert led.n_rows == 0 and led.stacked_a.shape == (0, 512) and len(led.stacked_y) == 0
    sched = BsSchedule(seeds.bs(), dims)
    ue_rng, n_rng = seeds.ue(), seeds.noise()
    for _ in range(10):
        measure_timeslot(led, ch, sched, ue_rng, n_rng, 0.0)
    assert len(led.stacked_y) == 40 and led.stacked_a.shape == (40, 512)
    v = vec(virtual_channel(ch, f_c, w_c))
    assert np.abs(led.stacked_y - led.scale * led.stacked_a @ v).max() < 1e-10
    for m, rec in enumerate(led.records):
        blk = sensing_block(rec.bs_selection, rec.ue_selection, rec.pilots, (f_c, w_c))
        np.testing.assert_array_equal(led.stacked_a[4 * m:4 * m + 4], blk)
    assert led.scale == pytest.approx(np.sqrt(1 / 8))


def test_ledger_out_of_order(small_dims, rng):
    led = MeasurementLedger(small_dims, 1.0)
    rec = MeasurementRecord(2, np.zeros(2, complex), select_beams(rng, 8, 2), select_beams(rng, 4, 2, "UE"), draw_pilots(rng, 2))
    with pytest.raises(ProtocolError):
        append(led, rec)
    ok = MeasurementRecord(1, rec.y, rec.bs_selection, rec.ue_selection, rec.pilots)
    assert len(append(led, ok)) == 1


def test_shared_bs_stream(dims):
    seeds = TrialSeeds(99, (4,))
    a = regenerate_bs_sequence(seeds, dims, 50)
    b = regenerate_bs_sequence(TrialSeeds(99, (4,)), dims, 50)
    for (sa, pa), (sb, pb) in zip(a, b):
        np.testing.assert_array_equal(sa.indices, sb.indices)
        np.testing.assert_array_equal(pa, pb)
    # private streams differ across users
    assert seeds.ue(0).integers(1 << 30) != seeds.ue(1).integers(1 << 30)


def test_qpsk_constellation():
    np.testing.assert_array_equal(np.sort_complex(QPSK), np.sort_complex(np.array([1, 1j, -1, -1j])))
