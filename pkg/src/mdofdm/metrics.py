"""Monte Carlo BER, PAPR/CCDF estimation, power and energy-efficiency models,
plus the closed-form and quadrature baselines the simulations are checked
against.

SNR convention: ``noise_var = E_s / SNR`` is the *total* complex noise
variance per receive antenna, and the same number regularizes the MMSE
equalizer.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .channel import ChannelConfig, generate_channels
from .errors import ConfigError, DomainError, UndefinedPaprError
from .numerics import RandomStream, gray_qam_demodulate, gray_qam_modulate
from .transceiver import (
    apply_channel,
    md_build_tx,
    md_equalize,
    mmse_build_tx,
    mmse_equalize,
    select_antenna,
    synthesize_waveform,
)

if TYPE_CHECKING:
    from .config import SimConfig

__all__ = [
    "SCHEMES",
    "BerPoint",
    "CcdfCurve",
    "PowerModel",
    "EeRecord",
    "noise_var_from_snr",
    "run_ber_point",
    "analytic_rayleigh_qpsk_ber",
    "analytic_selection_ber",
    "compute_papr",
    "papr_db",
    "collect_papr_samples",
    "estimate_ccdf",
    "total_power",
    "effective_se",
    "energy_efficiency",
    "threshold_at_probability",
]

SCHEMES = ("mmse", "md")
SCHEME_CODE = {"mmse": 0, "md": 1}

# symbols per independently seeded work unit; fixed so results never depend
# on how many workers share the units
BLOCK_SYMBOLS = 256
EARLY_STOP_ERRORS = 500


@dataclass(frozen=True)
class BerPoint:
    scheme: str
    snr_db: float
    bits_sent: int
    bit_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent


@dataclass(frozen=True)
class CcdfCurve:
    thresholds_db: tuple[float, ...]
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class PowerModel:
    """Power constants in mW.

    The defaults solve both power equations against the published totals
    (864.0 mW for 4x4 MMSE, 404.0 mW for 4x1 MD, 64 subcarriers) given an
    80 mW RF chain. All three are exact binary fractions.
    """

    p_rf_mw: float = 80.0
    p_mmse_proc_mw: float = 224.0 / 4096.0
    p_sel_proc_mw: float = 4.0 / 256.0

    def __post_init__(self):
        for name in ("p_rf_mw", "p_mmse_proc_mw", "p_sel_proc_mw"):
            if not getattr(self, name) >= 0:
                raise ConfigError(name, "must be non-negative")


@dataclass(frozen=True)
class EeRecord:
    scheme: str
    snr_db: float
    ber: float
    se_ideal: float
    se_eff: float
    bandwidth_hz: float
    p_total_mw: float
    ee_bits_per_joule: float


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ConfigError("schemes", f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


# ---------------------------------------------------------------------------
# BER
# ---------------------------------------------------------------------------
def noise_var_from_snr(snr_db: float, symbol_energy: float = 1.0) -> float:
    if not symbol_energy > 0:
        raise DomainError(f"symbol energy must be positive, got {symbol_energy}")
    return symbol_energy / 10.0 ** (snr_db / 10.0)


def _channel_config(cfg: "SimConfig", scheme: str) -> ChannelConfig:
    n_rx = cfg.n_rx_for(scheme)
    if scheme == "md" and n_rx != 1:
        raise ConfigError("n_rx", "md requires n_rx = 1")
    return ChannelConfig(cfg.n_tx, n_rx, cfg.n_sc, cfg.rho_tx, cfg.rho_rx)


def _streams_per_symbol(scheme: str, n_tx: int) -> int:
    return n_tx if scheme == "mmse" else 1


def _draw_symbols(stream: RandomStream, shape: tuple[int, ...], order: int):
    k = int(math.log2(order))
    bits = stream.generator.integers(0, 2, size=shape + (k,), dtype=np.uint8)
    symbols = gray_qam_modulate(bits.reshape(-1), order).reshape(shape)
    return bits, symbols


def _ber_block(scheme: str, cfg: "SimConfig", chan: ChannelConfig, noise_var: float,
               stream: RandomStream, n_sym: int) -> tuple[int, int]:
    order = cfg.modulation_order
    n_streams = _streams_per_symbol(scheme, cfg.n_tx)
    bits, symbols = _draw_symbols(stream.child(0), (n_sym, n_streams, cfg.n_sc), order)
    H = generate_channels(chan, stream.child(1), n_sym)

    if scheme == "mmse":
        scale = 1.0 / math.sqrt(cfg.n_tx) if cfg.normalize_total_tx_power else 1.0
        frame = mmse_build_tx(symbols) * scale
        y = apply_channel(frame, H, noise_var, stream.child(2))
        # equalize against the effective channel so estimates are unit-energy symbols
        est = mmse_equalize(H * scale, np.swapaxes(y, -1, -2), noise_var)
        est = np.swapaxes(est, -1, -2)
    else:
        sel = select_antenna(H)
        frame = md_build_tx(symbols[:, 0, :], sel, cfg.n_tx)
        y = apply_channel(frame, H, noise_var, stream.child(2))
        h_sel = np.take_along_axis(H[..., 0, :], sel[..., None], axis=-1)[..., 0]
        est = md_equalize(h_sel, y[:, 0, :])[:, None, :]

    detected = gray_qam_demodulate(est.reshape(-1), order)
    errors = int(np.count_nonzero(detected != bits.reshape(-1)))
    return bits.size, errors


def _blocks(n_symbols: int) -> list[tuple[int, int]]:
    return [(b, min(BLOCK_SYMBOLS, n_symbols - b * BLOCK_SYMBOLS))
            for b in range(-(-n_symbols // BLOCK_SYMBOLS))]


def _map_blocks(fn: Callable, blocks: Sequence, workers: int) -> list:
    if workers <= 1 or len(blocks) <= 1:
        return [fn(blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def run_ber_point(scheme: str, cfg: "SimConfig", snr_db: float, n_ofdm_symbols: int,
                  stream: RandomStream, *, noise_var: float | None = None,
                  workers: int = 1, early_stop: bool = False) -> BerPoint:
    """Simulate ``n_ofdm_symbols`` symbols at one SNR and count bit errors.

    A fresh channel is drawn for every OFDM symbol. Work is split into
    fixed blocks of :data:`BLOCK_SYMBOLS`, each with its own child stream,
    so the result is identical for any ``workers``. With ``early_stop``
    the count is truncated after the first block prefix that reaches
    :data:`EARLY_STOP_ERRORS` errors.
    """
    _check_scheme(scheme)
    if n_ofdm_symbols < 1:
        raise DomainError("n_ofdm_symbols must be >= 1")
    chan = _channel_config(cfg, scheme)
    nv = noise_var_from_snr(snr_db) if noise_var is None else noise_var

    def work(blk):
        idx, n = blk
        return _ber_block(scheme, cfg, chan, nv, stream.child(idx), n)

    blocks = _blocks(n_ofdm_symbols)
    if not early_stop:
        results = _map_blocks(work, blocks, workers)
    else:
        results = []
        wave = max(1, workers)
        for start in range(0, len(blocks), wave):
            results.extend(_map_blocks(work, blocks[start:start + wave], workers))
            if sum(e for _, e in results) >= EARLY_STOP_ERRORS:
                break
        # cut at the first prefix reaching the threshold, independent of wave size
        total = 0
        for i, (_, e) in enumerate(results):
            total += e
            if total >= EARLY_STOP_ERRORS:
                results = results[: i + 1]
                break

    return BerPoint(scheme, float(snr_db),
                    sum(b for b, _ in results), sum(e for _, e in results))


def _qpsk_bit_snr(snr_db: float, bits_per_symbol: int = 2) -> float:
    return (1.0 / noise_var_from_snr(snr_db)) / bits_per_symbol


def analytic_rayleigh_qpsk_ber(snr_db: float) -> float:
    """Gray QPSK over flat Rayleigh fading: 0.5 (1 - sqrt(g / (1 + g))).

    ``g`` is the mean per-bit SNR, ``(E_s / noise_var) / 2``.
    """
    if snr_db == math.inf:
        return 0.0
    g = _qpsk_bit_snr(snr_db)
    return 0.5 * (1.0 - math.sqrt(g / (1.0 + g)))


def _q(x):
    return 0.5 * special.erfc(x / math.sqrt(2.0))


def analytic_selection_ber(snr_db: float, branches: int) -> float:
    """Gray QPSK BER after picking the strongest of ``branches`` i.i.d.
    Rayleigh branches, by quadrature of Q(sqrt(2 g)) over the selection
    density f(g) = (L / m) e^{-g/m} (1 - e^{-g/m})^{L-1}, m the mean bit SNR.
    """
    if branches < 1:
        raise DomainError("branches must be >= 1")
    mean = _qpsk_bit_snr(snr_db)

    def integrand(t):
        # t = g / mean
        return _q(math.sqrt(2.0 * mean * t)) * branches * math.exp(-t) * (-math.expm1(-t)) ** (branches - 1)

    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-10, limit=200)
    return float(val)


# ---------------------------------------------------------------------------
# PAPR
# ---------------------------------------------------------------------------
def compute_papr(waveform) -> np.ndarray | float:
    """Peak over mean of |x|^2 along the last axis (linear)."""
    p = np.abs(np.asarray(waveform, dtype=complex)) ** 2
    if p.shape[-1] == 0:
        raise UndefinedPaprError("empty waveform")
    mean = p.mean(axis=-1)
    if np.any(mean == 0):
        raise UndefinedPaprError("PAPR is undefined for an all-zero waveform")
    out = p.max(axis=-1) / mean
    return out if np.ndim(out) else float(out)


def papr_db(waveform) -> np.ndarray | float:
    return 10.0 * np.log10(compute_papr(waveform))


def _papr_block(scheme: str, cfg: "SimConfig", chan: ChannelConfig,
                stream: RandomStream, n_sym: int) -> np.ndarray:
    n_streams = _streams_per_symbol(scheme, cfg.n_tx)
    _, symbols = _draw_symbols(stream.child(0), (n_sym, n_streams, cfg.n_sc), cfg.modulation_order)
    if scheme == "mmse":
        frame = mmse_build_tx(symbols)
    else:
        sel = select_antenna(generate_channels(chan, stream.child(1), n_sym))
        frame = md_build_tx(symbols[:, 0, :], sel, cfg.n_tx)

    active = np.any(frame != 0, axis=-1)  # (n_sym, n_tx)
    power = np.abs(synthesize_waveform(frame, cfg.papr_oversampling)) ** 2
    mean = power.mean(axis=-1)
    ratio = np.divide(power.max(axis=-1), mean, out=np.zeros_like(mean), where=active)
    values = 10.0 * np.log10(np.where(active, ratio, 1.0))
    if cfg.papr_reduce == "max_over_antennas":
        return np.where(active, values, -np.inf).max(axis=-1)
    return values[active]  # row-major: symbol order, then antenna order


def collect_papr_samples(scheme: str, cfg: "SimConfig", n_symbols: int,
                         stream: RandomStream, *, workers: int = 1) -> np.ndarray:
    """PAPR in dB, one value per active antenna per OFDM symbol (or one
    per symbol, the worst antenna, when ``cfg.papr_reduce`` says so)."""
    _check_scheme(scheme)
    if n_symbols < 1:
        raise DomainError("n_symbols must be >= 1")
    chan = _channel_config(cfg, scheme)
    parts = _map_blocks(lambda blk: _papr_block(scheme, cfg, chan, stream.child(blk[0]), blk[1]),
                        _blocks(n_symbols), workers)
    return np.concatenate(parts)


def estimate_ccdf(samples_db: Iterable[float], thresholds_db: Iterable[float]) -> CcdfCurve:
    """Fraction of samples strictly above each threshold."""
    s = np.sort(np.asarray(list(samples_db), dtype=float))
    if s.size == 0:
        raise DomainError("no PAPR samples")
    t = np.asarray(list(thresholds_db), dtype=float)
    above = s.size - np.searchsorted(s, t, side="right")
    return CcdfCurve(tuple(float(v) for v in t), tuple(float(v) for v in above / s.size))


# ---------------------------------------------------------------------------
# Power and energy efficiency
# ---------------------------------------------------------------------------
def total_power(scheme: str, model: PowerModel, n_tx: int, n_rx_rf: int, n_sc: int) -> float:
    """Total consumption in mW. MD always counts a single receive RF chain."""
    _check_scheme(scheme)
    if min(n_tx, n_rx_rf, n_sc) < 1:
        raise DomainError("antenna and subcarrier counts must be >= 1")
    if scheme == "mmse":
        return model.p_rf_mw * (n_tx + n_rx_rf) + model.p_mmse_proc_mw * n_sc * n_tx**3
    return model.p_rf_mw * (n_tx + 1) + model.p_sel_proc_mw * n_sc * n_tx


def effective_se(scheme: str, modulation_order: int, ber: float, n_tx: int = 1) -> tuple[float, float]:
    """(ideal, effective) spectral efficiency in bits/s/Hz."""
    _check_scheme(scheme)
    if not 0.0 <= ber <= 1.0:
        raise DomainError(f"ber must lie in [0, 1], got {ber}")
    streams = n_tx if scheme == "mmse" else 1
    ideal = streams * math.log2(modulation_order)
    return ideal, ideal * (1.0 - ber)


def energy_efficiency(se_eff: float, bandwidth_hz: float, p_total_mw: float) -> float:
    """Delivered bits per Joule."""
    if not p_total_mw > 0:
        raise DomainError(f"total power must be positive, got {p_total_mw}")
    return se_eff * bandwidth_hz / (p_total_mw / 1000.0)


def threshold_at_probability(curve: CcdfCurve, level: float) -> float:
    """Threshold (dB) where the CCDF first drops to ``level``, interpolated
    linearly in log-probability between neighbouring grid points."""
    t = np.asarray(curve.thresholds_db)
    p = np.asarray(curve.probabilities)
    below = np.nonzero(p <= level)[0]
    if below.size == 0:
        return math.inf
    i = int(below[0])
    if i == 0:
        return float(t[0])
    hi, lo = p[i - 1], p[i]
    if lo > 0:
        frac = (math.log(hi) - math.log(level)) / (math.log(hi) - math.log(lo))
    else:
        frac = (hi - level) / hi
    return float(t[i - 1] + (t[i] - t[i - 1]) * frac)
