"""Scenario configuration: flat INI files with ``key = value unit`` entries.

Dimensional values must carry a unit; they are converted to SI (or E_r /
lattice wavelengths where noted) on load.  :func:`dump` writes an effective
config in canonical units that :func:`parse` reads back unchanged.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping

from scipy import constants

from .errors import DomainError

UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "mass": {"kg": 1.0, "u": constants.atomic_mass},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "energy": {"Er": 1.0},
    "lattice_length": {"lambda": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180, "pi": math.pi},
}

# section -> key -> (kind, default); kind is a unit family, "float", "int",
# "str", "bool" or "floats" (comma list, dimensionless)
SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "units": {
        "lattice_wavelength": ("length", "850 nm"),
        "atom_mass": ("mass", "86.909180527 u"),
    },
    "beam": {
        "aperture": ("length", "20 mm"),
        "focal_length": ("length", "20 mm"),
        "input_waist": ("length", "20 mm"),
        "wavelength": ("length", "421 nm"),
        "power": ("power", "17 uW"),
    },
    "lattice": {
        "depth": ("energy", "50 Er"),
    },
    "lines": {
        "file": ("str", "rb87_6p"),
    },
    "calibration": {
        "mode": ("str", "calibrated"),
        "splitting": ("energy", "107 Er"),
    },
    "grid": {
        "r_max": ("lattice_length", "1.5 lambda"),
        "points": ("int", "301"),
        "map_half_width": ("lattice_length", "1 lambda"),
        "map_points": ("int", "81"),
    },
    "pulse": {
        "omega0_over_delta_half": ("float", "0.125"),
        "chi": ("angle", "0 rad"),
        "rabi_ratios": ("floats", "1.81"),
        "rabi_detunings": ("floats", "0, 8"),
        "rabi_samples": ("int", "281"),
    },
    "sweep": {
        "ratio_start": ("float", "0.05"),
        "ratio_stop": ("float", "6"),
        "ratio_step": ("float", "0.05"),
        "detuning_over_omega0": ("float", "8"),
        "area_detunings": ("floats", "0, 8"),
    },
    "sequence": {
        "alpha": ("angle", "0.5 pi"),
        "xi": ("float", "0.005"),
        "ramp_nodes": ("int", "32"),
        "refocus": ("str", "ideal"),
        "refocus_duration": ("float", "0"),
        "focus_during_refocus": ("bool", "false"),
        "static_phase_drift": ("angle", "0 rad"),
    },
    "wavelength": {
        "range_min": ("length", "420.35 nm"),
        "range_max": ("length", "421.62 nm"),
        "grid_points": ("int", "201"),
    },
    "detect": {
        "linewidth": ("frequency", "1.42102628 MHz"),
        "detuning": ("frequency", "27.6 MHz"),
        "neighbor_distance": ("lattice_length", "0.5 lambda"),
    },
    "misalignment": {
        "offset": ("length", "1 nm"),
    },
    "solver": {
        "tol": ("float", "1e-10"),
        "threads": ("int", "1"),
    },
}

# canonical unit written by dump() per family
CANONICAL = {"length": "m", "mass": "kg", "power": "W", "frequency": "Hz", "energy": "Er",
             "lattice_length": "lambda", "angle": "rad"}


class ConfigError(DomainError):
    """Invalid configuration; the message names the offending field."""


def _number(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: {text!r} is not a number") from None


def convert(kind: str, text: str, where: str = "value") -> Any:
    text = text.strip()
    if kind == "str":
        if not text:
            raise ConfigError(f"{where}: empty value")
        return text
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{where}: {text!r} is not a boolean")
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{where}: {text!r} is not an integer") from None
    if kind == "float":
        return _number(text, where)
    if kind == "floats":
        parts = [p for p in text.replace(",", " ").split() if p]
        if not parts:
            raise ConfigError(f"{where}: empty list")
        return tuple(_number(p, where) for p in parts)
    parts = text.split()
    if len(parts) != 2:
        units = ", ".join(UNITS[kind])
        raise ConfigError(f"{where}: expected '<number> <unit>' with unit one of {units}, got {text!r}")
    factor = UNITS[kind].get(parts[1])
    if factor is None:
        raise ConfigError(f"{where}: unknown {kind} unit {parts[1]!r} (use one of {', '.join(UNITS[kind])})")
    return _number(parts[0], where) * factor


def _format(kind: str, value) -> str:
    if kind in ("str",):
        return value
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(value)
    if kind == "float":
        return repr(float(value))
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    return f"{float(value)!r} {CANONICAL[kind]}"


@dataclass(frozen=True)
class ScenarioConfig:
    values: Mapping[str, Mapping[str, Any]]
    base_dir: str = "."

    def __getitem__(self, key: str):
        section, _, name = key.partition(".")
        return self.values[section][name]

    def section(self, name: str) -> Mapping[str, Any]:
        return self.values[name]

    def lines_path(self) -> str | None:
        """Path of the line file, or None for a bundled dataset name."""
        name = self["lines.file"]
        if name.endswith(".lines") or os.sep in name or "/" in name:
            path = name if os.path.isabs(name) else os.path.join(self.base_dir, name)
            return path
        return None

    def with_overrides(self, overrides) -> "ScenarioConfig":
        vals = {s: dict(v) for s, v in self.values.items()}
        for item in overrides:
            key, sep, text = item.partition("=")
            section, _, name = key.strip().partition(".")
            if not sep or section not in SCHEMA or name not in SCHEMA[section]:
                raise ConfigError(f"--set {item!r}: expected section.key=value with a known key")
            vals[section][name] = convert(SCHEMA[section][name][0], text, f"[{section}] {name}")
        return _validated(ScenarioConfig(vals, self.base_dir))


def _validated(cfg: ScenarioConfig) -> ScenarioConfig:
    positive = ["units.lattice_wavelength", "units.atom_mass", "beam.aperture", "beam.focal_length",
                "beam.input_waist", "beam.wavelength", "lattice.depth", "calibration.splitting",
                "grid.r_max", "grid.map_half_width", "pulse.omega0_over_delta_half",
                "sweep.ratio_step", "detect.linewidth", "wavelength.range_min",
                "wavelength.range_max", "solver.tol"]
    for key in positive:
        if not cfg[key] > 0:
            raise ConfigError(f"[{key.replace('.', '] ')} must be positive")
    if cfg["beam.power"] < 0:
        raise ConfigError("[beam] power must be non-negative")
    if cfg["calibration.mode"] not in ("calibrated", "raw"):
        raise ConfigError("[calibration] mode must be 'calibrated' or 'raw'")
    if cfg["sequence.refocus"] not in ("ideal", "square"):
        raise ConfigError("[sequence] refocus must be 'ideal' or 'square'")
    if not 0 < cfg["sequence.xi"] < 1:
        raise ConfigError("[sequence] xi must lie in (0, 1)")
    if not 0 <= cfg["sequence.alpha"] <= 2 * math.pi + 1e-12:
        raise ConfigError("[sequence] alpha must lie in [0, 2 pi]")
    if cfg["grid.points"] < 4 or cfg["grid.map_points"] < 2:
        raise ConfigError("[grid] needs points >= 4 and map_points >= 2")
    if not 1e-12 <= cfg["solver.tol"] <= 1e-6:
        raise ConfigError("[solver] tol must lie in [1e-12, 1e-6]")
    if cfg["solver.threads"] < 1:
        raise ConfigError("[solver] threads must be >= 1")
    if cfg["sweep.ratio_stop"] < cfg["sweep.ratio_start"]:
        raise ConfigError("[sweep] ratio_stop must not be below ratio_start")
    if cfg["detect.detuning"] == 0:
        raise ConfigError("[detect] detuning must be non-zero")
    path = cfg.lines_path()
    if path is not None and not os.path.isfile(path):
        raise ConfigError(f"[lines] file {path!r} does not exist")
    return cfg


def parse(text: str, base_dir: str = ".", source: str = "<config>") -> ScenarioConfig:
    """Parse INI text; missing keys take their defaults, unknown ones are errors."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
    values: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (kind, default) in keys.items():
            raw = cp.get(section, key, fallback=default)
            values[section][key] = convert(kind, raw, f"[{section}] {key}")
    return _validated(ScenarioConfig(values, base_dir))


def load(path=None) -> ScenarioConfig:
    """Load a config file, or the bundled default scenario when ``path`` is None."""
    if path is None:
        text = (resources.files("latticeaddr") / "data" / "default.ini").read_text(encoding="utf-8")
        return parse(text, ".", "bundled:default.ini")
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse(text, os.path.dirname(os.path.abspath(path)), path)


def dump(cfg: ScenarioConfig) -> str:
    """Effective config in canonical units (re-parses to an equal config)."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key, (kind, _) in keys.items():
            out.append(f"{key} = {_format(kind, cfg.values[section][key])}")
        out.append("")
    return "\n".join(out)
