"""Simulation configuration: a flat ``key: value`` document.

Example::

    # 4x4 MMSE against 4x1 MD-OFDM, QPSK
    schemes: [mmse, md]
    n_tx: 4
    n_sc: 64
    snr_grid_db: 0:2:20        # or an explicit list [0, 5, 10]
    seed: 42

Values are typed (YAML scalars and flow lists); ``#`` starts a comment.
Omitted keys take the defaults of :class:`SimConfig`.
"""
from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .metrics import SCHEMES, PowerModel
from .numerics import SUPPORTED_ORDERS, is_power_of_two
from .transceiver import OVERSAMPLING_FACTORS

__all__ = ["SimConfig", "load_config", "parse_config", "parse_range", "SEED_ENV_VAR"]

SEED_ENV_VAR = "MDOFDM_SEED"
PAPR_REDUCE_MODES = ("per_antenna", "max_over_antennas")
DEFAULT_SEED = 42


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1e6``-style floats (YAML 1.1 wants a dot)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"""),
    list("-+0123456789"),
)


def parse_range(text: str) -> tuple[float, ...]:
    """``"LO:STEP:HI"`` -> inclusive grid; values rounded to 12 decimals."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValueError(f"range {text!r} is not of the form LO:STEP:HI")
    lo, step, hi = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"range {text!r} must have STEP > 0 and HI >= LO")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + i * step, 12) + 0.0 for i in range(count))


def _default_snr() -> tuple[float, ...]:
    return parse_range("0:2:20")


def _default_thresholds() -> tuple[float, ...]:
    return parse_range("4.0:0.25:13.0")


@dataclass(frozen=True)
class SimConfig:
    """Every knob of a run. ``n_rx=None`` means the per-scheme default:
    ``n_tx`` receive antennas for MMSE and a single one for MD."""

    schemes: tuple[str, ...] = SCHEMES
    n_tx: int = 4
    n_rx: int | None = None
    n_sc: int = 64
    modulation_order: int = 4
    rho_tx: float = 0.0
    rho_rx: float = 0.0
    snr_grid_db: tuple[float, ...] = field(default_factory=_default_snr)
    # ceil(1e6 / 128): at least 10^6 bits per point for 4x1 MD with QPSK
    n_symbols_per_point: int = 7813
    early_stop: bool = False
    papr_oversampling: int = 4
    papr_n_symbols: int = 25000
    papr_thresholds_db: tuple[float, ...] = field(default_factory=_default_thresholds)
    papr_reduce: str = "per_antenna"
    power_model: PowerModel = field(default_factory=PowerModel)
    bandwidth_hz: float = 1e6
    seed: int = DEFAULT_SEED
    normalize_total_tx_power: bool = False

    def __post_init__(self):
        self.validate()

    def n_rx_for(self, scheme: str) -> int:
        if self.n_rx is not None:
            return self.n_rx
        return self.n_tx if scheme == "mmse" else 1

    def validate(self) -> None:
        if not self.schemes:
            raise ConfigError("schemes", "must name at least one scheme")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError("schemes", f"unknown scheme {s!r}; expected one of {list(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes", "duplicate scheme")
        if self.n_tx < 1:
            raise ConfigError("n_tx", "must be >= 1")
        if self.n_rx is not None and self.n_rx < 1:
            raise ConfigError("n_rx", "must be >= 1")
        if "md" in self.schemes and self.n_rx_for("md") != 1:
            raise ConfigError("n_rx", "md requires n_rx = 1")
        if not is_power_of_two(self.n_sc):
            raise ConfigError("n_sc", "must be a power of two")
        if self.modulation_order not in SUPPORTED_ORDERS:
            raise ConfigError("modulation_order", f"must be one of {list(SUPPORTED_ORDERS)}")
        for name in ("rho_tx", "rho_rx"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(name, "must lie in [0, 1)")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db", "must not be empty")
        if any(not math.isfinite(v) for v in self.snr_grid_db):
            raise ConfigError("snr_grid_db", "values must be finite")
        if self.n_symbols_per_point < 1:
            raise ConfigError("n_symbols_per_point", "must be >= 1")
        if self.papr_oversampling not in OVERSAMPLING_FACTORS:
            raise ConfigError("papr_oversampling", f"must be one of {list(OVERSAMPLING_FACTORS)}")
        if self.papr_n_symbols < 1:
            raise ConfigError("papr_n_symbols", "must be >= 1")
        if not self.papr_thresholds_db or list(self.papr_thresholds_db) != sorted(self.papr_thresholds_db):
            raise ConfigError("papr_thresholds_db", "must be a non-empty ascending list")
        if self.papr_reduce not in PAPR_REDUCE_MODES:
            raise ConfigError("papr_reduce", f"must be one of {list(PAPR_REDUCE_MODES)}")
        if not (self.bandwidth_hz > 0 and math.isfinite(self.bandwidth_hz)):
            raise ConfigError("bandwidth_hz", "must be a positive finite number")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "power_model":
                out.update(dataclasses.asdict(value))
            else:
                out[f.name] = value
        return out

    def to_text(self) -> str:
        lines = [f"{key}: {_format_value(value)}" for key, value in self.to_dict().items()]
        return "\n".join(lines) + "\n"


_POWER_KEYS = {f.name for f in dataclasses.fields(PowerModel)}
_FIELD_TYPES = {
    "schemes": "str_list",
    "n_tx": int,
    "n_rx": "optional_int",
    "n_sc": int,
    "modulation_order": int,
    "rho_tx": float,
    "rho_rx": float,
    "snr_grid_db": "float_list",
    "n_symbols_per_point": int,
    "early_stop": bool,
    "papr_oversampling": int,
    "papr_n_symbols": int,
    "papr_thresholds_db": "float_list",
    "papr_reduce": str,
    "bandwidth_hz": float,
    "seed": int,
    "normalize_total_tx_power": bool,
    **{k: float for k in _POWER_KEYS},
}


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def _coerce(key: str, raw: Any) -> Any:
    kind = _FIELD_TYPES[key]
    try:
        if kind is bool:
            if not isinstance(raw, bool):
                raise TypeError("expected true or false")
            return raw
        if kind is int:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise TypeError("expected an integer")
            return raw
        if kind == "optional_int":
            if raw in (None, "auto"):
                return None
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise TypeError("expected an integer or auto")
            return raw
        if kind is float:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise TypeError("expected a number")
            return float(raw)
        if kind is str:
            if not isinstance(raw, str):
                raise TypeError("expected a string")
            return raw
        if kind == "str_list":
            items = [raw] if isinstance(raw, str) else raw
            if not isinstance(items, list) or not all(isinstance(v, str) for v in items):
                raise TypeError("expected a list of names")
            return tuple(items)
        if kind == "float_list":
            if isinstance(raw, str):
                return parse_range(raw)
            if isinstance(raw, (int, float)) and not isinstance(raw, bool):
                return (float(raw),)
            if not isinstance(raw, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
            ):
                raise TypeError("expected a list of numbers or LO:STEP:HI")
            return tuple(float(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"{exc} (got {raw!r})") from None
    raise AssertionError(kind)


def parse_config(text: str, *, source: str = "<config>", env: dict | None = None) -> SimConfig:
    """Parse and validate a config document.

    The seed comes from the document, else from ``MDOFDM_SEED``, else 42.
    """
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        if exc.context_mark is not None and exc.context_mark is not mark:
            where += f" ({exc.context} at line {exc.context_mark.line + 1})"
        raise ConfigError("<parse>", f"{source}: {where}: {exc.problem or exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<parse>", f"{source}: document must be a flat key: value mapping")

    kwargs: dict[str, Any] = {}
    power: dict[str, float] = {}
    for key, raw in doc.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(str(key), "unknown key")
        value = _coerce(key, raw)
        if key in _POWER_KEYS:
            power[key] = value
        else:
            kwargs[key] = value
    if "seed" not in kwargs:
        env = os.environ if env is None else env
        if env.get(SEED_ENV_VAR):
            try:
                kwargs["seed"] = int(env[SEED_ENV_VAR])
            except ValueError:
                raise ConfigError("seed", f"{SEED_ENV_VAR}={env[SEED_ENV_VAR]!r} is not an integer") from None
    kwargs["power_model"] = PowerModel(**power)
    return SimConfig(**kwargs)


def load_config(path: str | os.PathLike | None, *, env: dict | None = None) -> SimConfig:
    """Read ``path`` (``None`` means an empty document)."""
    if path is None:
        return parse_config("", env=env)
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, source=str(p), env=env)
