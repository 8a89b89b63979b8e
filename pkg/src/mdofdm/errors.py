"""Exception types shared across the simulator."""
from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Input array has the wrong shape or length."""


class DomainError(ValueError):
    """A scalar argument lies outside its admissible range."""


class DecompositionError(np.linalg.LinAlgError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot} has value {value:.3e}"
        )


class SolveError(np.linalg.LinAlgError):
    """Hermitian system could not be solved (singular or indefinite)."""


class ConfigError(ValueError):
    """Invalid simulation configuration; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class UndefinedPaprError(ValueError):
    """PAPR requested for an all-zero waveform."""
