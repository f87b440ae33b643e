"""Natural units (hbar = c = 1) with energies in GeV.

Conversion factors come from CODATA via :mod:`scipy.constants`.
"""
from __future__ import annotations

import math
import re

from scipy import constants as _c

GEV_J = _c.giga * _c.electron_volt
HBAR_GEV_S = _c.hbar / GEV_J                       # 6.582e-25 GeV s
HBARC_GEV_M = _c.hbar * _c.c / GEV_J               # 1.9733e-16 GeV m

METRE = 1.0 / HBARC_GEV_M                          # GeV^-1 per metre
SECOND = 1.0 / HBAR_GEV_S                          # GeV^-1 per second
KILOGRAM = _c.c ** 2 / GEV_J                       # GeV per kilogram
GRAM = KILOGRAM * 1e-3

PLANCK_MASS = math.sqrt(_c.hbar * _c.c / _c.G) * KILOGRAM   # 1.2209e19 GeV (non-reduced)
G_NEWTON = 1.0 / PLANCK_MASS ** 2

ELECTRON_MASS = _c.physical_constants["electron mass energy equivalent in MeV"][0] * 1e-3
NUCLEON_MASS = _c.physical_constants["atomic mass constant energy equivalent in MeV"][0] * 1e-3
PROTON_MASS = _c.physical_constants["proton mass energy equivalent in MeV"][0] * 1e-3

_MASS = {
    "GeV": 1.0, "MeV": 1e-3, "keV": 1e-6, "eV": 1e-9, "TeV": 1e3,
    "kg": KILOGRAM, "g": GRAM, "mg": 1e-3 * GRAM, "ug": 1e-6 * GRAM,
    "ng": 1e-9 * GRAM, "pg": 1e-12 * GRAM, "u": NUCLEON_MASS, "amu": NUCLEON_MASS,
    "m_e": ELECTRON_MASS, "m_p": PLANCK_MASS,
}
_LENGTH = {
    "GeV^-1": 1.0, "1/GeV": 1.0,
    "m": METRE, "cm": 1e-2 * METRE, "mm": 1e-3 * METRE, "um": 1e-6 * METRE,
    "nm": 1e-9 * METRE, "pm": 1e-12 * METRE, "fm": 1e-15 * METRE,
}
_TIME = {
    "GeV^-1": 1.0, "1/GeV": 1.0,
    "s": SECOND, "ms": 1e-3 * SECOND, "us": 1e-6 * SECOND, "ns": 1e-9 * SECOND,
    "min": 60 * SECOND, "h": 3600 * SECOND, "day": 86400 * SECOND,
    "yr": 365.25 * 86400 * SECOND,
}
DIMENSIONS = {"mass": _MASS, "energy": _MASS, "length": _LENGTH, "time": _TIME}


class UnitError(ValueError):
    pass


def to_natural(value: float, unit: str, dimension: str) -> float:
    """Convert ``value`` in ``unit`` to GeV-based natural units."""
    table = DIMENSIONS[dimension]
    if unit not in table:
        raise UnitError(f"unknown {dimension} unit {unit!r} (known: {', '.join(table)})")
    return value * table[unit]


def from_natural(value: float, unit: str, dimension: str) -> float:
    table = DIMENSIONS[dimension]
    if unit not in table:
        raise UnitError(f"unknown {dimension} unit {unit!r}")
    return value / table[unit]


def seconds(t_natural: float) -> float:
    return t_natural / SECOND


def grams(m_natural: float) -> float:
    return m_natural / GRAM


def metres(l_natural: float) -> float:
    return l_natural / METRE


_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s].*)?$")


def parse_quantity(text: str) -> tuple[float, str | None]:
    """Split ``"26 GeV"`` into ``(26.0, "GeV")``; a bare number has unit None."""
    m = _QTY.match(text)
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    unit = m.group(2).strip() if m.group(2) else None
    return float(m.group(1)), unit


def dimension_of(unit: str) -> list[str]:
    return [d for d, t in DIMENSIONS.items() if unit in t and d != "energy"]
