"""Kronecker-correlated Rayleigh MIMO channel, drawn per subcarrier."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, DomainError
from .numerics import RandomStream, cholesky_lower, is_power_of_two, sample_complex_gaussian

__all__ = ["ChannelConfig", "uniform_correlation", "generate_channel", "generate_channels"]


def uniform_correlation(n: int, rho: float) -> np.ndarray:
    """(1 - rho) I + rho J: unit diagonal, every off-diagonal entry ``rho``."""
    if n < 1:
        raise DomainError(f"matrix size must be >= 1, got {n}")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"correlation coefficient {rho} outside [0, 1]")
    return (1.0 - rho) * np.eye(n) + rho * np.ones((n, n))


@dataclass(frozen=True)
class ChannelConfig:
    n_tx: int
    n_rx: int
    n_sc: int
    rho_tx: float = 0.0
    rho_rx: float = 0.0

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_sc"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if not is_power_of_two(self.n_sc):
            raise ConfigError("n_sc", "must be a power of two")
        for name in ("rho_tx", "rho_rx"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(name, "must lie in [0, 1)")

    @cached_property
    def l_tx(self) -> np.ndarray:
        return cholesky_lower(uniform_correlation(self.n_tx, self.rho_tx))

    @cached_property
    def l_rx(self) -> np.ndarray:
        return cholesky_lower(uniform_correlation(self.n_rx, self.rho_rx))


def generate_channels(cfg: ChannelConfig, stream: RandomStream, n_symbols: int) -> np.ndarray:
    """Independent realizations for ``n_symbols`` OFDM symbols.

    Returns shape ``(n_symbols, n_sc, n_rx, n_tx)``;
    ``H_k = L_rx @ G_k @ L_tx^H`` with ``G_k`` i.i.d. CN(0, 1).
    """
    G = sample_complex_gaussian(stream, (n_symbols, cfg.n_sc, cfg.n_rx, cfg.n_tx))
    if cfg.rho_tx == 0.0 and cfg.rho_rx == 0.0:
        return G
    return cfg.l_rx @ G @ cfg.l_tx.conj().T


def generate_channel(cfg: ChannelConfig, stream: RandomStream) -> np.ndarray:
    """One realization, shape ``(n_sc, n_rx, n_tx)``."""
    return generate_channels(cfg, stream, 1)[0]
