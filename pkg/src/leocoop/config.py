"""Scenario configuration, presets, and the flat key-value config format."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

SPEED_OF_LIGHT = 299_792_458.0
EARTH_RADIUS = 6_371_000.0

ASSOCIATION_MODES = ("single", "full", "proposed")
SYNC_MODES = ("random", "optimized")
INTERFERENCE_MODES = ("exact", "statistical")
NOISE_REFERENCES = ("subcarrier", "total")
SYNC_SEARCH = ("fft", "symbol")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical, waveform, and campaign parameters for one scenario.

    Angles are in degrees, distances in meters, frequencies in Hz, power
    levels in dBW. ``cp_len``, ``cp_add`` and ``cp_margin`` are in samples.

    ``noise_reference`` selects whether ``noise_power`` is the noise power in
    one subcarrier (default) or the total in-band noise split evenly over the
    ``n_subcarriers``. ``beam_squint`` evaluates array responses at each
    subcarrier frequency instead of the carrier. ``sync_search`` restricts the
    sync-point search to the FFT window ``[0, N)`` or widens it to the whole
    symbol.
    """

    altitude: float = 600e3
    min_elevation: float = 10.0
    sat_cap_angle: float = 15.84
    ut_cap_angle: float = 15.84
    carrier_freq: float = 2e9
    bandwidth: float = 30e6
    n_subcarriers: int = 1024
    cp_len: int = 64
    cp_add: int = 600
    cp_margin: int = 0
    sat_array: tuple[int, int] = (32, 32)
    ut_array: tuple[int, int] = (1, 1)
    antenna_spacing: float = 0.5
    pfd_limit: float = -144.0
    noise_power: float = -152.24
    noise_reference: str = "subcarrier"
    n_sats: int = 100
    n_uts: int = 100
    seed: int = 0
    association_mode: str = "proposed"
    sync_mode: str = "optimized"
    interference_mode: str = "statistical"
    beam_squint: bool = False
    sync_search: str = "fft"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sat_array", tuple(int(v) for v in self.sat_array))
        object.__setattr__(self, "ut_array", tuple(int(v) for v in self.ut_array))
        self.validate()

    def validate(self) -> None:
        n = self.n_subcarriers
        if n < 16 or n & (n - 1):
            raise ConfigError(f"n_subcarriers must be a power of two >= 16, got {n}")
        if min(self.cp_len, self.cp_add, self.cp_margin) < 0:
            raise ConfigError("cp_len, cp_add and cp_margin must be non-negative")
        if self.cp_len + self.cp_add >= n:
            raise ConfigError(
                f"cp_len + cp_add must be below n_subcarriers ({self.cp_len} + {self.cp_add} >= {n})"
            )
        if not 0.0 < self.min_elevation < 90.0:
            raise ConfigError("min_elevation must lie in (0, 90) degrees")
        if self.altitude <= 0:
            raise ConfigError("altitude must be positive")
        if not (0.0 < self.sat_cap_angle < 90.0 and 0.0 < self.ut_cap_angle < 90.0):
            raise ConfigError("cap angles must lie in (0, 90) degrees")
        if self.n_sats < 1 or self.n_uts < 1:
            raise ConfigError("n_sats and n_uts must be at least 1")
        if self.carrier_freq <= 0 or self.bandwidth <= 0:
            raise ConfigError("carrier_freq and bandwidth must be positive")
        if len(self.sat_array) != 2 or len(self.ut_array) != 2 or min(self.sat_array + self.ut_array) < 1:
            raise ConfigError("array dimensions must be two positive counts")
        if self.antenna_spacing <= 0:
            raise ConfigError("antenna_spacing must be positive")
        _check_choice("association_mode", self.association_mode, ASSOCIATION_MODES)
        _check_choice("sync_mode", self.sync_mode, SYNC_MODES)
        _check_choice("interference_mode", self.interference_mode, INTERFERENCE_MODES)
        _check_choice("noise_reference", self.noise_reference, NOISE_REFERENCES)
        _check_choice("sync_search", self.sync_search, SYNC_SEARCH)

    @property
    def sampling_period(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def subcarrier_spacing(self) -> float:
        return self.bandwidth / self.n_subcarriers

    @property
    def n_tx(self) -> int:
        return self.sat_array[0] * self.sat_array[1]

    @property
    def n_rx(self) -> int:
        return self.ut_array[0] * self.ut_array[1]

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    def symbol_len(self, mode: str | None = None) -> int:
        """OFDM symbol length in samples for an association mode.

        The baselines transmit the conventional CP only; the proposed mode
        appends the additional CP.
        """
        mode = mode or self.association_mode
        if mode == "proposed":
            return self.n_subcarriers + self.cp_len + self.cp_add
        return self.n_subcarriers + self.cp_len

    def guard(self, mode: str | None = None) -> int:
        mode = mode or self.association_mode
        if mode == "proposed":
            return self.cp_len + self.cp_add
        return self.cp_len

    def noise_per_subcarrier(self) -> float:
        """Noise variance in watts on one subcarrier."""
        p = 10.0 ** (self.noise_power / 10.0)
        if self.noise_reference == "total":
            return p / self.n_subcarriers
        return p

    def with_(self, **changes: Any) -> "ScenarioConfig":
        return replace(self, **changes)


def _check_choice(name: str, value: str, choices: tuple[str, ...]) -> None:
    if value not in choices:
        raise ConfigError(f"{name} must be one of {choices}, got {value!r}")


# Full-scale reference scenario; exact interference is intractable here.
PAPER = ScenarioConfig()

# Same subcarrier spacing as PAPER so the per-subcarrier SNR regime carries over.
DESK = ScenarioConfig(
    n_subcarriers=128,
    bandwidth=128 * 30e6 / 1024,
    cp_len=8,
    cp_add=75,
    n_sats=20,
    n_uts=10,
)

PRESETS = {"paper": PAPER, "desk": DESK}


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _parse_value(key: str, raw: str) -> Any:
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "tuple[int, int]":
            parts = raw.replace("x", ",").replace("×", ",").split(",")
            if len(parts) != 2:
                raise ValueError(raw)
            return (int(parts[0]), int(parts[1]))
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse flat ``key = value`` text into a config.

    Blank lines and ``#`` comments are ignored. The optional ``preset`` key
    picks the starting point; every other key must name a config field.
    """
    values: dict[str, Any] = {}
    start = base
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "preset":
            start = preset(raw)
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return replace(start or PAPER, **values)


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def dump_config(config: ScenarioConfig) -> str:
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = f"{value[0]}x{value[1]}"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def max_central_angle(altitude: float, min_elevation_deg: float) -> float:
    """Earth-central angle (radians) at which a satellite sits at the elevation mask."""
    eps = math.radians(min_elevation_deg)
    return math.pi / 2 - eps - math.asin(EARTH_RADIUS * math.cos(eps) / (EARTH_RADIUS + altitude))


def slant_range_at_elevation(altitude: float, elevation_deg: float) -> float:
    """Slant range (m) from a ground point to a satellite seen at ``elevation_deg``."""
    sin_e = math.sin(math.radians(elevation_deg))
    r_s = EARTH_RADIUS + altitude
    return -EARTH_RADIUS * sin_e + math.sqrt((EARTH_RADIUS * sin_e) ** 2 + r_s**2 - EARTH_RADIUS**2)


__all__ = [
    "ASSOCIATION_MODES",
    "ConfigError",
    "DESK",
    "EARTH_RADIUS",
    "PAPER",
    "PRESETS",
    "SPEED_OF_LIGHT",
    "ScenarioConfig",
    "dump_config",
    "load_config",
    "max_central_angle",
    "parse_config",
    "preset",
    "slant_range_at_elevation",
]
