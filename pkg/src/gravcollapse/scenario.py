"""Flat ``key = value [unit]`` scenario files.

Dimensional keys need an explicit unit (``mass = 26 GeV``, ``tau = 1 s``);
lists are comma separated. Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import units

HEADER = ("name", "kind", "seed", "output")
DIMENSIONAL = {"mass": "mass", "length": "length", "time": "time", "lengths": "length"}


class ScenarioError(ValueError):
    """Malformed scenario (exit code 2)."""


@dataclass(frozen=True)
class Param:
    type: str
    default: Any = None
    required: bool = False
    when: tuple[str, tuple[str, ...]] | None = None
    """Required only when another key takes one of the listed values."""
    choices: tuple[str, ...] | None = None


_GEOM = {
    "smearing_radius": Param("length"),
    "displacement": Param("length"),
    "n_constituents": Param("int", 1),
    "entangled_fraction": Param("float", 1.0),
    "profile": Param("str", "gaussian", choices=("gaussian", "uniform_sphere")),
}
_EST = ("collapse_time", "required_mass")
_SN = {
    "mass": Param("mass", required=True),
    "G": Param("float", required=True),
    "r_max": Param("length", required=True),
    "n_points": Param("int", 2000),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "estimate": {
        "quantity": Param("str", required=True, choices=("collapse_time", "required_mass", "qubits")),
        "mass": Param("mass", when=("quantity", _EST)),
        **{k: (Param(p.type, p.default, when=("quantity", _EST)) if p.default is None else p)
           for k, p in _GEOM.items()},
        "tau": Param("time", when=("quantity", ("required_mass", "qubits"))),
        "electrons_per_qubit": Param("int", when=("quantity", ("qubits",))),
        "scaling": Param("str", "both", choices=("entangled", "product", "both")),
        "evaluate": Param("str", "mean", choices=("mean", "centre")),
    },
    "two_branch": {
        "alpha1": Param("complex", required=True),
        "alpha2": Param("complex", required=True),
        "mass": Param("mass", required=True),
        "phi1": Param("float", required=True),
        "phi2": Param("float", required=True),
        "duration": Param("time", required=True),
        "n_nodes": Param("int", 2001),
    },
    "rotation": {
        "alpha2_sq": Param("floats", required=True),
        "schedules": Param("strs", ("linear", "smoothstep", "cosine")),
        "energy1": Param("mass", 0.0),
        "energy2": Param("mass", 0.0),
        "duration": Param("time", required=True),
        "n_nodes": Param("int", 2001),
    },
    "born_race": {
        "weights": Param("floats", required=True),
        "n_samples": Param("int", 10 ** 6),
        "n_nodes": Param("int", 2001),
    },
    "sn_ground": dict(_SN),
    "sn_evolve": {
        **_SN,
        "sigma": Param("length", required=True),
        "dt": Param("time", required=True),
        "steps": Param("int", required=True),
        "record_every": Param("int", 10),
    },
    "pd_compare": {
        "mass": Param("mass", required=True),
        "smearing_radius": Param("length", required=True),
        "profile": _GEOM["profile"],
        "separations": Param("lengths", required=True),
    },
    "weak_measure": {
        "state": Param("complexes", required=True),
        "q": Param("complexes", required=True),
        "p": Param("float", required=True),
        "n_samples": Param("int", 10 ** 5),
    },
}
KINDS = tuple(SCHEMAS)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, complex):
        return repr(x).strip("()")
    return repr(x)


def _parse_scalar(key: str, ptype: str, text: str):
    try:
        if ptype == "int":
            return int(text)
        if ptype == "float":
            return float(text)
        if ptype == "complex":
            return complex(text.replace(" ", ""))
        if ptype == "str":
            if not re.fullmatch(r"[A-Za-z0-9_.\-]+", text):
                raise ValueError
            return text
    except ValueError:
        raise ScenarioError(f"key {key!r}: cannot read {text!r} as {ptype}") from None
    raise AssertionError(ptype)


def _split_unit(key: str, text: str, dim: str) -> tuple[str, str]:
    m = re.fullmatch(r"(.*?)\s+(\S+)", text.strip())
    if not m or not units.dimension_of(m.group(2)):
        raise ScenarioError(f"key {key!r}: {dim} value needs a unit, got {text!r}")
    unit = m.group(2)
    if dim not in units.dimension_of(unit):
        raise ScenarioError(f"key {key!r}: unit {unit!r} is not a {dim} unit")
    return m.group(1), unit


@dataclass(frozen=True)
class Value:
    """A parsed entry: the value as written (in ``unit``) and the unit."""

    raw: Any
    unit: str | None = None

    def natural(self, dim: str | None):
        if self.unit is None or dim is None:
            return self.raw
        if isinstance(self.raw, tuple):
            return tuple(units.to_natural(v, self.unit, dim) for v in self.raw)
        return units.to_natural(self.raw, self.unit, dim)

    def text(self) -> str:
        body = ", ".join(_fmt(v) for v in self.raw) if isinstance(self.raw, tuple) else _fmt(self.raw)
        return f"{body} {self.unit}" if self.unit else body


def parse_value(key: str, p: Param, text: str) -> Value:
    dim = DIMENSIONAL.get(p.type)
    unit = None
    if dim is not None:
        text, unit = _split_unit(key, text, dim)
    if p.type in ("floats", "lengths", "strs", "complexes"):
        base = {"floats": "float", "lengths": "float", "strs": "str", "complexes": "complex"}[p.type]
        items = [t.strip() for t in text.split(",")]
        if not items or any(not t for t in items):
            raise ScenarioError(f"key {key!r}: empty list entry in {text!r}")
        raw = tuple(_parse_scalar(key, base, t) for t in items)
    else:
        raw = _parse_scalar(key, "float" if dim else p.type, text.strip())
    if p.choices:
        for v in raw if isinstance(raw, tuple) else (raw,):
            if v not in p.choices:
                raise ScenarioError(f"key {key!r}: {v!r} not one of {', '.join(p.choices)}")
    return Value(raw, unit)


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    seed: int = 0
    output: str | None = None
    entries: dict[str, Value] = field(default_factory=dict)

    def get(self, key: str):
        """Value of ``key`` in natural units (or its default)."""
        p = SCHEMAS[self.kind][key]
        if key in self.entries:
            return self.entries[key].natural(DIMENSIONAL.get(p.type))
        return p.default

    def params(self) -> dict[str, Any]:
        return {k: self.get(k) for k in SCHEMAS[self.kind]}

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(self.name, self.kind, seed, self.output, dict(self.entries))

    def dumps(self) -> str:
        lines = [f"name = {self.name}", f"kind = {self.kind}", f"seed = {self.seed}"]
        if self.output:
            lines.append(f"output = {self.output}")
        for key in SCHEMAS[self.kind]:
            if key in self.entries:
                lines.append(f"{key} = {self.entries[key].text()}")
        return "\n".join(lines) + "\n"


def loads(text: str, source: str = "<string>") -> Scenario:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = val
    for key in ("name", "kind"):
        if key not in raw:
            raise ScenarioError(f"{source}: missing required key {key!r}")
    kind = raw.pop("kind")
    if kind not in SCHEMAS:
        raise ScenarioError(f"{source}: unknown kind {kind!r} (known: {', '.join(KINDS)})")
    name = raw.pop("name")
    if not re.fullmatch(r"[A-Za-z0-9_.\-]+", name):
        raise ScenarioError(f"{source}: invalid scenario name {name!r}")
    seed = _parse_scalar("seed", "int", raw.pop("seed", "0"))
    output = raw.pop("output", None)
    schema = SCHEMAS[kind]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ScenarioError(f"{source}: unknown key(s) for kind {kind!r}: {', '.join(unknown)}")
    entries = {k: parse_value(k, schema[k], raw[k]) for k in schema if k in raw}
    sc = Scenario(name, kind, seed, output, entries)
    for key, p in schema.items():
        needed = p.required
        if p.when is not None:
            other, values = p.when
            needed = sc.get(other) in values
        if needed and key not in entries:
            raise ScenarioError(f"{source}: missing required key {key!r} for kind {kind!r}")
    return sc


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))


BUNDLED_DIR = Path(__file__).with_name("scenarios")


def bundled() -> dict[str, Path]:
    return {p.stem: p for p in sorted(BUNDLED_DIR.glob("*.scn"))}


def resolve(ref: str) -> Path:
    """A file path, or the name of a bundled scenario."""
    p = Path(ref)
    if p.exists():
        return p
    table = bundled()
    if ref in table:
        return table[ref]
    raise ScenarioError(f"no scenario file or bundled scenario named {ref!r}")
