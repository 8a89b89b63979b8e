"""Transmit and receive chains for the two schemes.

Array layout (leading batch axes allowed everywhere):

* frame / grid: ``(..., n_tx, n_sc)`` frequency-domain symbols per antenna
* channel:      ``(..., n_sc, n_rx, n_tx)``
* received:     ``(..., n_rx, n_sc)``
* waveform:     ``(..., n_tx, L * n_sc)``

Both chains assume perfect CSI: selection and equalization use the true
channel. There is no cyclic prefix; the channel acts per subcarrier.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError
from .numerics import RandomStream, sample_complex_gaussian, solve_hermitian, unitary_idft

__all__ = [
    "mmse_build_tx",
    "select_antenna",
    "md_build_tx",
    "mmse_equalize",
    "md_equalize",
    "apply_channel",
    "synthesize_waveform",
]

OVERSAMPLING_FACTORS = (1, 2, 4, 8)


def mmse_build_tx(symbols, n_tx: int | None = None, n_sc: int | None = None) -> np.ndarray:
    """Spatial multiplexing: every antenna sends its own row, unscaled."""
    grid = np.asarray(symbols, dtype=complex)
    if grid.ndim < 2:
        raise ShapeError(f"symbol grid must be (n_tx, n_sc), got shape {grid.shape}")
    if (n_tx is not None and grid.shape[-2] != n_tx) or (n_sc is not None and grid.shape[-1] != n_sc):
        raise ShapeError(f"symbol grid shape {grid.shape[-2:]} does not match ({n_tx}, {n_sc})")
    return grid.copy()


def select_antenna(H) -> np.ndarray:
    """Index of the transmit antenna with the largest squared column norm.

    ``H`` is ``(..., n_rx, n_tx)``; ties go to the lowest index.
    """
    H = np.asarray(H)
    gain = np.sum(np.abs(H) ** 2, axis=-2)
    return np.argmax(gain, axis=-1)


def md_build_tx(symbols, selection, n_tx: int) -> np.ndarray:
    """Place ``symbols[k]`` on antenna ``selection[k]``; other antennas idle."""
    s = np.asarray(symbols, dtype=complex)
    sel = np.asarray(selection)
    if s.shape != sel.shape:
        raise ShapeError(f"symbols {s.shape} and selection {sel.shape} differ in shape")
    if sel.size and (sel.min() < 0 or sel.max() >= n_tx):
        raise ShapeError(f"antenna index out of range [0, {n_tx})")
    onehot = sel[..., None, :] == np.arange(n_tx)[:, None]
    return np.where(onehot, s[..., None, :], 0.0 + 0.0j)


def mmse_equalize(H, y, noise_var: float) -> np.ndarray:
    """x_hat = (H^H H + noise_var I)^-1 H^H y, via a Hermitian solve.

    ``H`` is ``(..., n_rx, n_tx)`` and ``y`` is ``(..., n_rx)``.
    """
    if noise_var < 0:
        raise DomainError(f"noise variance must be >= 0, got {noise_var}")
    H = np.asarray(H, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != H.shape[-2]:
        raise ShapeError(f"received vector length {y.shape[-1]} != n_rx {H.shape[-2]}")
    Hh = np.conj(np.swapaxes(H, -1, -2))
    gram = Hh @ H + noise_var * np.eye(H.shape[-1])
    rhs = np.einsum("...tr,...r->...t", Hh, y)
    return solve_hermitian(gram, rhs)


def md_equalize(h, y):
    """Scalar zero-forcing: y / h, with a zero estimate where h == 0."""
    h = np.asarray(h, dtype=complex)
    y = np.asarray(y, dtype=complex)
    nz = h != 0
    out = np.divide(y, np.where(nz, h, 1.0))
    out = np.where(nz, out, 0.0)
    return out if out.ndim else complex(out)


def apply_channel(frame, channel, noise_var: float, stream: RandomStream | None) -> np.ndarray:
    """y_k = H_k x_k + n_k with n_k ~ CN(0, noise_var) per receive antenna."""
    x = np.asarray(frame, dtype=complex)
    H = np.asarray(channel, dtype=complex)
    if H.shape[-1] != x.shape[-2] or H.shape[-3] != x.shape[-1]:
        raise ShapeError(f"channel {H.shape} incompatible with frame {x.shape}")
    y = np.einsum("...krt,...tk->...rk", H, x)
    if noise_var > 0:
        if stream is None:
            raise ValueError("a random stream is required when noise_var > 0")
        y = y + np.sqrt(noise_var) * sample_complex_gaussian(stream, y.shape)
    return y


def synthesize_waveform(frame, oversampling: int = 4) -> np.ndarray:
    """Per-antenna time-domain samples of length ``oversampling * n_sc``.

    Occupied subcarriers sit in bins ``0 .. n_sc-1``; the rest are zero.
    """
    if oversampling not in OVERSAMPLING_FACTORS:
        raise ShapeError(f"oversampling must be one of {OVERSAMPLING_FACTORS}")
    X = np.asarray(frame, dtype=complex)
    n_sc = X.shape[-1]
    pad = [(0, 0)] * (X.ndim - 1) + [(0, (oversampling - 1) * n_sc)]
    return unitary_idft(np.pad(X, pad))
