"""Unit-tagged value parsing for the configuration boundary.

All dimensioned configuration values are written with an explicit unit
("2mm", "21deg", "-155dBHz").  Internally everything is SI and linear:
metres, radians, watts, hertz, kelvin, ohms.  dB-valued inputs are
converted to linear ratios exactly once, here.
"""

from __future__ import annotations

import math
import re

from .errors import ConfigError

_QUANTITY_RE = re.compile(r"^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*([^\s]*)\s*$")

# unit -> multiplier to SI, per dimension
_LINEAR_UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "area": {"m2": 1.0, "cm2": 1e-4, "mm2": 1e-6, "um2": 1e-12, "µm2": 1e-12},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "resistance": {"ohm": 1.0, "Ohm": 1.0, "kohm": 1e3},
    "temperature": {"K": 1.0},
    "responsivity": {"A/W": 1.0},
    "dimensionless": {"": 1.0},
}


def parse_quantity(text: str | float | int, dimension: str) -> float:
    """Parse a unit-tagged string into an SI (and linear) float.

    ``dimension`` selects the accepted unit set: one of the keys of the
    linear-unit table plus "angle" (deg/rad), "ratio_db" (dB or plain
    linear), and "per_hz_db" (dBHz, i.e. dB relative to 1/Hz).
    Bare numbers are accepted only for dimensionless inputs; everything
    else must carry a unit.
    """
    if isinstance(text, (int, float)):
        if dimension in ("dimensionless", "ratio_db", "per_hz_db"):
            return float(text)
        raise ConfigError(f"value {text!r} needs an explicit unit ({dimension})")
    match = _QUANTITY_RE.match(text)
    if not match:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value = float(match.group(1))
    unit = match.group(2)

    if dimension == "angle":
        if unit == "deg":
            return math.radians(value)
        if unit == "rad":
            return value
        raise ConfigError(f"angle {text!r} must end in 'deg' or 'rad'")
    if dimension == "ratio_db":
        if unit == "dB":
            return 10.0 ** (value / 10.0)
        if unit == "":
            return value
        raise ConfigError(f"ratio {text!r} must be plain linear or end in 'dB'")
    if dimension == "per_hz_db":
        if unit in ("dBHz", "dB/Hz"):
            return 10.0 ** (value / 10.0)
        if unit == "":
            return value
        raise ConfigError(f"spectral density {text!r} must be linear or end in 'dBHz'")

    try:
        table = _LINEAR_UNITS[dimension]
    except KeyError:
        raise ConfigError(f"unknown dimension {dimension!r}") from None
    if unit not in table:
        raise ConfigError(
            f"{text!r}: unit {unit!r} not valid for {dimension} "
            f"(expected one of {sorted(table)})"
        )
    return value * table[unit]


def db(linear: float) -> float:
    """Linear power ratio to dB."""
    return 10.0 * math.log10(linear)


def from_db(decibels: float) -> float:
    """dB to linear power ratio."""
    return 10.0 ** (decibels / 10.0)
