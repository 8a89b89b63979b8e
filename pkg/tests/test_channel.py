import numpy as np
import pytest

from mdofdm.channel import ChannelConfig, generate_channel, generate_channels, uniform_correlation
from mdofdm.errors import ConfigError, DecompositionError, DomainError
from mdofdm.numerics import RandomStream, cholesky_lower, sample_complex_gaussian


def test_uniform_correlation_identity():
    np.testing.assert_array_equal(uniform_correlation(4, 0.0), np.eye(4))


def test_uniform_correlation_half():
    R = uniform_correlation(3, 0.5)
    np.testing.assert_array_equal(np.diag(R), np.ones(3))
    assert np.all(R[~np.eye(3, dtype=bool)] == 0.5)
    np.testing.assert_array_equal(R, R.T)


def test_uniform_correlation_one_is_valid_but_singular():
    R = uniform_correlation(2, 1.0)
    np.testing.assert_array_equal(R, np.ones((2, 2)))
    with pytest.raises(DecompositionError):
        cholesky_lower(R)


@pytest.mark.parametrize("rho", [-0.1, 1.01])
def test_uniform_correlation_domain(rho):
    with pytest.raises(DomainError):
        uniform_correlation(2, rho)


@pytest.mark.parametrize("kwargs", [
    dict(rho_tx=1.0), dict(rho_rx=1.0), dict(rho_tx=-0.2), dict(n_sc=48), dict(n_tx=0), dict(n_rx=0),
])
def test_config_rejects(kwargs):
    base = dict(n_tx=2, n_rx=2, n_sc=8)
    with pytest.raises(ConfigError):
        ChannelConfig(**{**base, **kwargs})


def test_uncorrelated_equals_raw_draw():
    cfg = ChannelConfig(3, 2, 8)
    H = generate_channel(cfg, RandomStream(9, [1]))
    G = sample_complex_gaussian(RandomStream(9, [1]), (1, 8, 2, 3))[0]
    np.testing.assert_array_equal(H, G)


def test_shape_and_determinism():
    cfg = ChannelConfig(4, 2, 16, 0.3, 0.5)
    H = generate_channels(cfg, RandomStream(1, [2]), 5)
    assert H.shape == (5, 16, 2, 4)
    assert np.all(np.isfinite(H))
    np.testing.assert_array_equal(H, generate_channels(cfg, RandomStream(1, [2]), 5))
    assert generate_channel(cfg, RandomStream(1, [2])).shape == (16, 2, 4)


def test_kronecker_structure():
    cfg = ChannelConfig(3, 2, 4, 0.4, 0.2)
    H = generate_channels(cfg, RandomStream(5, [0]), 2)
    G = sample_complex_gaussian(RandomStream(5, [0]), (2, 4, 2, 3))
    L_tx = np.linalg.cholesky(uniform_correlation(3, 0.4))
    L_rx = np.linalg.cholesky(uniform_correlation(2, 0.2))
    np.testing.assert_allclose(H, L_rx @ G @ L_tx.conj().T, atol=1e-14)


def test_entry_power_and_tx_correlation():
    cfg = ChannelConfig(4, 4, 1, rho_tx=0.3)
    H = generate_channels(cfg, RandomStream(21, [0]), 10**5)[:, 0]
    power = np.mean(np.abs(H) ** 2, axis=0)
    assert np.all(np.abs(power - 1.0) <= 0.02)
    for a in range(4):
        for b in range(4):
            if a != b:
                corr = np.mean(H[:, :, a] * np.conj(H[:, :, b]))
                assert abs(corr - 0.3) <= 0.02


def test_rx_correlation():
    cfg = ChannelConfig(2, 3, 1, rho_rx=0.6)
    H = generate_channels(cfg, RandomStream(22, [0]), 10**5)[:, 0]
    corr = np.mean(H[:, 0, :] * np.conj(H[:, 2, :]))
    assert abs(corr - 0.6) <= 0.02


def test_subcarrier_independence():
    cfg = ChannelConfig(2, 2, 4, 0.5, 0.5)
    H = generate_channels(cfg, RandomStream(23, [0]), 10**5)
    for k in range(1, 4):
        corr = np.mean(H[:, 0, 0, 0] * np.conj(H[:, k, 0, 0]))
        assert abs(corr) <= 0.02


def test_siso_reduction():
    cfg = ChannelConfig(1, 1, 8)
    H = generate_channels(cfg, RandomStream(24, [0]), 2 * 10**4)
    assert H.shape[-2:] == (1, 1)
    assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, abs=0.02)
