"""Numerical building blocks: Gray QAM modem, unitary DFT pair, small
Hermitian linear algebra and reproducible random streams.

Every routine works on numpy arrays and broadcasts over leading (batch)
axes so a whole block of OFDM symbols is processed in one call.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DecompositionError, ShapeError, SolveError

__all__ = [
    "QamConstellation",
    "RandomStream",
    "qam_constellation",
    "gray_qam_modulate",
    "gray_qam_demodulate",
    "unitary_idft",
    "unitary_dft",
    "is_power_of_two",
    "cholesky_lower",
    "solve_hermitian",
    "sample_complex_gaussian",
]

SUPPORTED_ORDERS = (4, 16, 64)


# ---------------------------------------------------------------------------
# Gray-coded square QAM
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class QamConstellation:
    """Unit-energy square M-QAM with per-axis Gray labels.

    ``points[i]`` carries the label whose integer value (MSB first) is ``i``.
    The first half of the label bits address the in-phase axis.
    """

    order: int
    points: np.ndarray  # (M,) complex
    pam_levels: np.ndarray  # (sqrt M,) real, indexed by per-axis label
    scale: float

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def bit_labels(self) -> np.ndarray:
        """(M, log2 M) array of label bits, row ``i`` belongs to ``points[i]``."""
        k = self.bits_per_symbol
        idx = np.arange(self.order)
        return ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)


@lru_cache(maxsize=None)
def qam_constellation(order: int) -> QamConstellation:
    if order not in SUPPORTED_ORDERS:
        raise ShapeError(f"unsupported modulation order {order}; use one of {SUPPORTED_ORDERS}")
    side = int(round(np.sqrt(order)))
    # position p counts from the most positive amplitude; its label is gray(p)
    pos = np.arange(side)
    amplitude = (side - 1 - 2 * pos).astype(float)
    gray = pos ^ (pos >> 1)
    levels = np.empty(side)
    levels[gray] = amplitude
    scale = float(np.sqrt(2.0 * np.mean(amplitude**2)))
    levels = levels / scale

    half = int(np.log2(side))
    idx = np.arange(order)
    points = levels[idx >> half] + 1j * levels[idx & (side - 1)]
    levels.setflags(write=False)
    points.setflags(write=False)
    return QamConstellation(order=order, points=points, pam_levels=levels, scale=scale)


def _as_constellation(constellation: QamConstellation | int) -> QamConstellation:
    if isinstance(constellation, QamConstellation):
        return constellation
    return qam_constellation(int(constellation))


def gray_qam_modulate(bits, constellation: QamConstellation | int) -> np.ndarray:
    """Map a flat bit sequence to symbols, ``log2(M)`` bits per symbol."""
    const = _as_constellation(constellation)
    k = const.bits_per_symbol
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if bits.size % k:
        raise ShapeError(f"bit count {bits.size} is not a multiple of {k}")
    groups = bits.reshape(-1, k).astype(np.int64)
    labels = groups @ (1 << np.arange(k - 1, -1, -1))
    return const.points[labels]


def _slice_axis(values: np.ndarray, levels: np.ndarray) -> np.ndarray:
    # argmin keeps the first minimum, i.e. the lowest label on exact ties
    dist = (values[..., None] - levels) ** 2
    return np.argmin(dist, axis=-1)


def gray_qam_demodulate(symbols, constellation: QamConstellation | int) -> np.ndarray:
    """Hard-decision demodulation to the Euclidean-nearest point's label bits.

    The square grid makes the 2-D distance separable, so each axis is sliced
    on its own; ties resolve to the lowest constellation index.
    """
    const = _as_constellation(constellation)
    k = const.bits_per_symbol
    half = k // 2
    sym = np.asarray(symbols, dtype=complex).reshape(-1)
    li = _slice_axis(sym.real, const.pam_levels)
    lq = _slice_axis(sym.imag, const.pam_levels)
    labels = (li << half) | lq
    return ((labels[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8).reshape(-1)


# ---------------------------------------------------------------------------
# Unitary DFT pair
# ---------------------------------------------------------------------------
def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_len(x: np.ndarray) -> None:
    n = x.shape[-1]
    if not is_power_of_two(n):
        raise ShapeError(f"transform length {n} is not a power of two")


def unitary_idft(X, axis: int = -1) -> np.ndarray:
    """x[n] = 1/sqrt(N) * sum_k X[k] exp(+j 2 pi n k / N) along ``axis``."""
    X = np.moveaxis(np.asarray(X, dtype=complex), axis, -1)
    _check_len(X)
    return np.moveaxis(np.fft.ifft(X, norm="ortho"), -1, axis)


def unitary_dft(x, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`unitary_idft`."""
    x = np.moveaxis(np.asarray(x, dtype=complex), axis, -1)
    _check_len(x)
    return np.moveaxis(np.fft.fft(x, norm="ortho"), -1, axis)


# ---------------------------------------------------------------------------
# Hermitian linear algebra (batched over leading axes)
# ---------------------------------------------------------------------------
def _check_square(A: np.ndarray) -> int:
    if A.ndim < 2 or A.shape[-1] != A.shape[-2] or A.shape[-1] < 1:
        raise ShapeError(f"expected square matrix (or stack), got shape {A.shape}")
    return A.shape[-1]


def cholesky_lower(R, herm_tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular L with real positive diagonal and ``L @ L^H == R``.

    Works on a single matrix or a stack ``(..., n, n)``. Raises
    :class:`DecompositionError` naming the first non-positive pivot.
    """
    R = np.asarray(R, dtype=complex)
    n = _check_square(R)
    scale = max(1.0, float(np.max(np.abs(R), initial=0.0)))
    if np.max(np.abs(R - np.conj(np.swapaxes(R, -1, -2))), initial=0.0) > herm_tol * scale:
        raise ShapeError("matrix is not Hermitian")

    L = np.zeros_like(R)
    for j in range(n):
        row = L[..., j, :j]
        d = R[..., j, j].real - np.sum(np.abs(row) ** 2, axis=-1)
        # relative threshold so that rounding noise on a singular pivot is caught
        floor = 1e-13 * np.abs(R[..., j, j].real)
        bad = ~(d > floor)
        if np.any(bad):
            raise DecompositionError(j, float(np.min(np.where(bad, d, np.inf))))
        djj = np.sqrt(d)
        L[..., j, j] = djj
        if j + 1 < n:
            acc = R[..., j + 1 :, j] - np.einsum("...ik,...k->...i", L[..., j + 1 :, :j], np.conj(row))
            L[..., j + 1 :, j] = acc / djj[..., None]
    return L


def _forward(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = L.shape[-1]
    Y = np.zeros(np.broadcast_shapes(L.shape[:-2], B.shape[:-2]) + B.shape[-2:], dtype=complex)
    for i in range(n):
        acc = B[..., i, :] - np.einsum("...k,...km->...m", L[..., i, :i], Y[..., :i, :])
        Y[..., i, :] = acc / L[..., i, i, None]
    return Y


def _backward_adjoint(L: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # solves L^H X = Y; (L^H)[i, k] = conj(L[k, i])
    n = L.shape[-1]
    X = np.zeros_like(Y)
    for i in range(n - 1, -1, -1):
        acc = Y[..., i, :] - np.einsum("...k,...km->...m", np.conj(L[..., i + 1 :, i]), X[..., i + 1 :, :])
        X[..., i, :] = acc / L[..., i, i, None].real
    return X


def solve_hermitian(A, B) -> np.ndarray:
    """Solve ``A X = B`` for Hermitian positive-definite ``A`` via Cholesky.

    ``B`` may be a matrix ``(..., n, m)`` or, when it has one axis fewer
    than ``A``, a vector ``(..., n)``.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = _check_square(A)
    vector = B.ndim == A.ndim - 1
    if vector:
        B = B[..., None]
    if B.shape[-2] != n:
        raise ShapeError(f"right-hand side has {B.shape[-2]} rows, expected {n}")
    try:
        L = cholesky_lower(A)
    except DecompositionError as exc:
        raise SolveError(f"singular or indefinite system ({exc})") from exc
    X = _backward_adjoint(L, _forward(L, B))
    return X[..., 0] if vector else X


# ---------------------------------------------------------------------------
# Reproducible random streams
# ---------------------------------------------------------------------------
class RandomStream:
    """Deterministic generator keyed by ``(seed, labels)``.

    Built on a counter-based bit generator (Philox) seeded from a
    ``SeedSequence`` whose spawn key is the label path, so streams never
    depend on the order in which they were created.
    """

    def __init__(self, seed: int, labels: Sequence[int] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if any(int(lab) < 0 for lab in labels):
            raise ValueError("stream labels must be non-negative integers")
        self.seed = int(seed)
        self.labels = tuple(int(lab) for lab in labels)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.labels)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def child(self, *labels: int) -> "RandomStream":
        return RandomStream(self.seed, self.labels + tuple(labels))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, labels={list(self.labels)})"


def sample_complex_gaussian(stream: RandomStream, n) -> np.ndarray:
    """Draw CN(0, 1) samples; ``n`` may be a count or a shape tuple."""
    shape = (n,) if np.isscalar(n) else tuple(n)
    z = stream.generator.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
