import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdofdm.channel import ChannelConfig, generate_channels
from mdofdm.errors import ShapeError, SolveError
from mdofdm.metrics import compute_papr
from mdofdm.numerics import RandomStream, gray_qam_demodulate, gray_qam_modulate
from mdofdm.transceiver import (
    apply_channel,
    md_build_tx,
    md_equalize,
    mmse_build_tx,
    mmse_equalize,
    select_antenna,
    synthesize_waveform,
)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def qpsk_grid(rng, *shape):
    bits = rng.integers(0, 2, size=int(np.prod(shape)) * 2)
    return bits, gray_qam_modulate(bits, 4).reshape(shape)


class TestMmseTx:
    def test_single_antenna_passthrough(self):
        row = np.array([[1 + 1j, -1 + 1j, 1 - 1j]]) / np.sqrt(2)
        np.testing.assert_array_equal(mmse_build_tx(row), row)

    def test_power_per_subcarrier(self):
        _, grid = qpsk_grid(np.random.default_rng(0), 4, 64)
        frame = mmse_build_tx(grid, 4, 64)
        np.testing.assert_allclose(np.sum(np.abs(frame) ** 2, axis=0), 4.0)
        np.testing.assert_array_equal(frame, grid)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mmse_build_tx(np.ones((3, 8)), n_tx=4, n_sc=8)


class TestSelection:
    def test_argmax_siso(self):
        H = np.array([[1, 3, 2, 0.5]])
        assert select_antenna(H) == 1

    def test_tie_lowest_index(self):
        assert select_antenna(np.ones((2, 4))) == 0

    def test_against_exhaustive_scan(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            H = crandn(rng, 4, 4)
            best, best_gain = 0, -1.0
            for j in range(4):
                g = sum(abs(H[i, j]) ** 2 for i in range(4))
                if g > best_gain:
                    best, best_gain = j, g
            assert select_antenna(H) == best

    def test_batched_optimality(self):
        H = generate_channels(ChannelConfig(4, 1, 64), RandomStream(3, [0]), 20)
        sel = select_antenna(H)
        gains = np.sum(np.abs(H) ** 2, axis=-2)
        chosen = np.take_along_axis(gains, sel[..., None], axis=-1)
        assert np.all(chosen >= gains)

    @given(st.floats(1e-3, 1e3), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance(self, c, seed):
        H = crandn(np.random.default_rng(seed), 3, 5)
        assert select_antenna(c * H) == select_antenna(H)


class TestMdTx:
    def test_all_zero_selection(self):
        s = np.array([1, 2, 3, 4j])
        frame = md_build_tx(s, np.zeros(4, int), 2)
        np.testing.assert_array_equal(frame[0], s)
        np.testing.assert_array_equal(frame[1], 0)

    @given(st.integers(1, 6), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_one_hot_columns(self, n_tx, seed):
        rng = np.random.default_rng(seed)
        _, s = qpsk_grid(rng, 32)
        sel = rng.integers(0, n_tx, 32)
        frame = md_build_tx(s, sel, n_tx)
        assert frame.shape == (n_tx, 32)
        assert np.all(np.count_nonzero(frame, axis=0) == 1)
        np.testing.assert_allclose(np.sum(np.abs(frame) ** 2, axis=0), np.abs(s) ** 2)
        np.testing.assert_array_equal(frame[sel, np.arange(32)], s)

    def test_index_out_of_range(self):
        with pytest.raises(ShapeError):
            md_build_tx(np.ones(3), np.array([0, 2, 1]), 2)


class TestMmseEqualize:
    def test_identity_noiseless(self):
        y = np.array([1, 2j, -1, 0.5])
        np.testing.assert_allclose(mmse_equalize(np.eye(4), y, 0.0), y, atol=1e-15)

    def test_scalar(self):
        np.testing.assert_allclose(mmse_equalize(np.array([[1.0]]), np.array([2 + 4j]), 1.0), [1 + 2j])

    def test_against_explicit_inverse(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            H = crandn(rng, 4, 4) / np.sqrt(2)
            y = crandn(rng, 4)
            W = np.linalg.inv(H.conj().T @ H + 0.1 * np.eye(4)) @ H.conj().T
            np.testing.assert_allclose(mmse_equalize(H, y, 0.1), W @ y, rtol=0, atol=1e-10)

    def test_zf_limit(self):
        rng = np.random.default_rng(13)
        H = crandn(rng, 6, 4)
        x = crandn(rng, 4)
        np.testing.assert_allclose(mmse_equalize(H, H @ x, 0.0), x, atol=1e-9)

    def test_rank_deficient_noiseless(self):
        H = np.ones((2, 2))
        with pytest.raises(SolveError):
            mmse_equalize(H, np.ones(2), 0.0)


class TestMdEqualize:
    def test_identity(self):
        assert md_equalize(1.0, 0.3 - 0.7j) == pytest.approx(0.3 - 0.7j)

    def test_phase_and_scale(self):
        s = (1 - 1j) / np.sqrt(2)
        assert md_equalize(2j, 2j * s) == pytest.approx(s)

    def test_zero_channel(self):
        assert md_equalize(0.0, 1 + 1j) == 0


class TestApplyChannel:
    def test_siso_noiseless(self):
        s = np.array([[1 + 1j, 1 - 1j]])
        y = apply_channel(s, np.ones((2, 1, 1)), 0.0, None)
        np.testing.assert_array_equal(y, s)

    def test_md_frame_noiseless(self):
        rng = np.random.default_rng(14)
        H = crandn(rng, 16, 1, 4)
        _, s = qpsk_grid(rng, 16)
        sel = select_antenna(H)
        y = apply_channel(md_build_tx(s, sel, 4), H, 0.0, None)
        np.testing.assert_allclose(y[0], H[np.arange(16), 0, sel] * s, atol=1e-15)

    def test_noise_power(self):
        n_sc = 1024
        frame = np.zeros((1, n_sc))
        y = apply_channel(np.broadcast_to(frame, (1000, 1, n_sc)), np.ones((n_sc, 1, 1)), 0.25,
                          RandomStream(15, [0]))
        assert np.mean(np.abs(y) ** 2) == pytest.approx(0.25, rel=0.01)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            apply_channel(np.ones((2, 8)), np.ones((8, 1, 3)), 0.0, None)


class TestNoiselessChains:
    def test_md_end_to_end(self):
        rng = np.random.default_rng(16)
        H = generate_channels(ChannelConfig(4, 1, 64), RandomStream(16, [0]), 10)
        bits, s = qpsk_grid(rng, 10, 64)
        sel = select_antenna(H)
        y = apply_channel(md_build_tx(s, sel, 4), H, 0.0, None)
        h = np.take_along_axis(H[..., 0, :], sel[..., None], axis=-1)[..., 0]
        np.testing.assert_array_equal(gray_qam_demodulate(md_equalize(h, y[:, 0]), 4), bits)

    def test_mmse_end_to_end(self):
        rng = np.random.default_rng(17)
        H = generate_channels(ChannelConfig(4, 4, 64), RandomStream(17, [0]), 10)
        bits, s = qpsk_grid(rng, 10, 4, 64)
        y = apply_channel(mmse_build_tx(s), H, 0.0, None)
        est = np.swapaxes(mmse_equalize(H, np.swapaxes(y, -1, -2), 0.0), -1, -2)
        np.testing.assert_array_equal(gray_qam_demodulate(est, 4), bits)


class TestWaveform:
    def test_single_subcarrier_constant_envelope(self):
        X = np.zeros((1, 64), complex)
        X[0, 0] = 3 - 2j
        x = synthesize_waveform(X, 4)
        assert x.shape == (1, 256)
        assert abs(compute_papr(x[0]) - 1.0) <= 1e-9

    @pytest.mark.parametrize("L", [1, 2, 4, 8])
    def test_all_ones(self, L):
        x = synthesize_waveform(np.ones((1, 64)), L)[0]
        assert np.abs(x[0]) ** 2 == pytest.approx(64**2 / (L * 64))
        assert np.mean(np.abs(x) ** 2) == pytest.approx(64 / (L * 64))
        assert compute_papr(x) == pytest.approx(64.0, rel=1e-12)

    def test_energy_preserved(self):
        rng = np.random.default_rng(18)
        X = crandn(rng, 4, 64)
        x = synthesize_waveform(X, 4)
        np.testing.assert_allclose(np.sum(np.abs(x) ** 2, -1), np.sum(np.abs(X) ** 2, -1), rtol=1e-12)

    def test_zero_padding_placement(self):
        rng = np.random.default_rng(19)
        X = crandn(rng, 2, 16)
        x = synthesize_waveform(X, 2)
        n = np.arange(32)[:, None]
        k = np.arange(16)[None, :]
        direct = (np.exp(2j * np.pi * n * k / 32) @ X.T).T / np.sqrt(32)
        np.testing.assert_allclose(x, direct, atol=1e-12)

    def test_rejects_bad_oversampling(self):
        with pytest.raises(ShapeError):
            synthesize_waveform(np.ones((1, 8)), 3)
