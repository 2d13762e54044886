"""Run configuration: a flat key=value text format with dotted section keys.

Grammar (one entry per line):

    # comment
    section.key = value

Values are parsed by the schema: floats, ints, booleans (true/false),
strings, pairs ("x,y") and sweeps. A sweep value is either a scalar or
"lo:hi:n" for n evenly spaced points, inclusive. Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ConfigError", "RunConfig", "Sweep", "load_config", "parse_config", "SCHEMA"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class Sweep:
    lo: float
    hi: float
    n: int

    def as_array(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def canonical(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.n}"


# key -> (type, default). A None default means "unset"; subcommands that
# need the key raise "section.key required".
SCHEMA: dict[str, tuple[str, object]] = {
    "geometry.a": ("float", None),
    "geometry.n_side": ("int", 9),
    "geometry.layers": ("int", 1),
    "geometry.L": ("sweep", None),
    "geometry.curved": ("bool", False),
    "geometry.w0_curvature": ("float", None),
    "drive.delta": ("sweep", None),
    "drive.w0": ("float", 1.5),
    "drive.k_perp": ("pair", (0.0, 0.0)),
    "drive.omega0": ("float", 1e-3),
    "drive.channels": ("str", ""),
    "numerics.dt": ("float", 1e-2),
    "numerics.t_max": ("float", 10.0),
    "numerics.t_points": ("int", 101),
    "numerics.alpha0": ("float", 0.01),
    "numerics.alpha_ratio": ("float", 0.5),
    "numerics.alpha_steps": ("int", 12),
    "numerics.q_max": ("float", None),
    "numerics.bz_grid": ("int", 32),
    "numerics.k_points": ("int", 41),
    "numerics.k_max": ("float", 2.0),
    "numerics.eps_cone": ("float", 1e-9),
    "numerics.rtol": ("float", 5e-2),
    "numerics.include_evanescent": ("bool", True),
    "numerics.correlation_time": ("float", 0.0),
    "output.dir": ("str", "."),
    "output.prefix": ("str", "atomlat"),
    "xcheck.file_a": ("str", None),
    "xcheck.file_b": ("str", None),
    "xcheck.scale_fit": ("bool", False),
    "xcheck.tolerance": ("float", 0.05),
}


def _parse_value(key: str, text: str):
    kind = SCHEMA[key][0]
    text = text.strip()
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind == "str":
            return text
        if kind == "pair":
            parts = text.split(",")
            if len(parts) != 2:
                raise ValueError(text)
            return (float(parts[0]), float(parts[1]))
        if kind == "sweep":
            if ":" in text:
                lo, hi, n = text.split(":")
                sweep = Sweep(float(lo), float(hi), int(n))
                if sweep.n < 2:
                    raise ValueError("sweep needs at least 2 points")
                return sweep
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}") from exc
    raise ConfigError(f"{key}: unknown value kind {kind!r}")


def _canonical(value) -> str:
    if isinstance(value, Sweep):
        return value.canonical()
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, (_, default) in SCHEMA.items():
            self.values.setdefault(key, default)

    def __getitem__(self, key: str):
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        return self.values[key]

    def require(self, key: str):
        value = self[key]
        if value is None:
            raise ConfigError(f"{key} required")
        return value

    def require_scalar(self, key: str) -> float:
        value = self.require(key)
        if isinstance(value, Sweep):
            raise ConfigError(f"{key}: expected a single value, got a sweep")
        return float(value)

    def require_sweep(self, key: str) -> np.ndarray:
        value = self.require(key)
        if isinstance(value, Sweep):
            return value.as_array()
        return np.array([float(value)])

    def set_text(self, key: str, text: str) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        self.values[key] = _parse_value(key, text)

    def _hash_over(self, keys) -> str:
        blob = "\n".join(f"{k}={_canonical(self.values[k])}" for k in sorted(keys))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def config_hash(self) -> str:
        return self._hash_over(SCHEMA.keys() - {"output.dir", "output.prefix"})

    @property
    def geometry_hash(self) -> str:
        return self._hash_over(k for k in SCHEMA if k.startswith("geometry."))


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        cfg.set_text(key.strip(), value)
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
