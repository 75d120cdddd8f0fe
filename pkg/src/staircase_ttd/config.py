"""JSON run configuration with nested sections and path-qualified validation errors.

Angles are given in degrees and SNR in dB; both are converted here so the
library only sees radians and linear ratios.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .codebook import DesignSpec, Formulation
from .linksim import SWEEP_VARIABLES, LinkConfig, SweepSpec
from .wavefield import DEFAULT_ANGLE_COUNT, ArrayConfig, OfdmGrid

SECTIONS = ("scenario", "grid", "array", "design", "link", "sweep", "output")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


@dataclass(frozen=True)
class DesignSection:
    k_users: int
    theta_1: float  # rad
    theta_2: float  # rad
    formulation: Formulation = Formulation.MODULO
    rotation: int | None = None


@dataclass(frozen=True)
class SweepSection:
    variable: str
    values: tuple
    sector_samples: int = 64


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    angle_grid_size: int = DEFAULT_ANGLE_COUNT
    freq_count: int = 256
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid: OfdmGrid
    array: ArrayConfig
    design: DesignSection | None
    snr_db: float
    sweep: SweepSection | None
    output: OutputSection

    def design_spec(self) -> DesignSpec:
        if self.design is None:
            raise ConfigError("design: section is required for this command")
        d = self.design
        return DesignSpec(d.k_users, d.theta_1, d.theta_2, self.grid, self.array)

    def link_config(self) -> LinkConfig:
        if self.design is not None:
            return LinkConfig(self.grid, self.array, self.design.k_users, 10 ** (self.snr_db / 10),
                              (self.design.theta_1, self.design.theta_2))
        return LinkConfig(self.grid, self.array, 1, 10 ** (self.snr_db / 10))

    def sweep_spec(self, seed: int | None = None) -> SweepSpec:
        if self.sweep is None:
            raise ConfigError("sweep: section is required for this command")
        s = self.sweep
        try:
            return SweepSpec(s.variable, s.values, self.link_config(), s.sector_samples,
                             self.output.seed if seed is None else seed)
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from exc


_MISSING = object()


def _get(section: dict, key: str, path: str, kind, default=_MISSING):
    full = f"{path}.{key}"
    if key not in section:
        if default is _MISSING:
            raise ConfigError(f"{full}: missing required key")
        return default
    value = section[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(f"{full}: expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{full}: expected a finite number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{full}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{full}: expected a non-empty list, got {value!r}")
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{full}[{i}]: expected a number, got {v!r}")
        return tuple(float(v) for v in value)
    raise TypeError(kind)


def _section(data: dict, name: str, required: bool) -> dict | None:
    if name not in data:
        if required:
            raise ConfigError(f"{name}: missing required section")
        return None
    sec = data[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object")
    return sec


def _build(path: str, factory, *args):
    try:
        return factory(*args)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a JSON object")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"<root>: unknown sections {unknown}")

    g = _section(data, "grid", True)
    grid = _build("grid", OfdmGrid, _get(g, "f_c", "grid", float), _get(g, "bw", "grid", float),
                  _get(g, "m_tot", "grid", int))

    a = _section(data, "array", True)
    array = _build("array", ArrayConfig, _get(a, "n_t", "array", int),
                   _get(a, "spacing_factor", "array", float, 1.0))

    design = None
    d = _section(data, "design", False)
    if d is not None:
        formulation = _get(d, "formulation", "design", str, Formulation.MODULO.value)
        try:
            formulation = Formulation(formulation)
        except ValueError:
            raise ConfigError(f"design.formulation: expected one of "
                              f"{[f.value for f in Formulation]}, got {formulation!r}") from None
        rotation = _get(d, "rotation", "design", int, None)
        design = DesignSection(
            k_users=_get(d, "k_users", "design", int),
            theta_1=math.radians(_get(d, "theta_1_deg", "design", float)),
            theta_2=math.radians(_get(d, "theta_2_deg", "design", float)),
            formulation=formulation,
            rotation=rotation,
        )
        _build("design", DesignSpec, design.k_users, design.theta_1, design.theta_2, grid, array)
        if rotation is not None and not 1 <= rotation <= design.k_users:
            raise ConfigError(f"design.rotation: must lie in [1, {design.k_users}], got {rotation}")

    lk = _section(data, "link", False) or {}
    snr_db = _get(lk, "snr_db", "link", float, 10.0)

    sweep = None
    s = _section(data, "sweep", False)
    if s is not None:
        variable = _get(s, "variable", "sweep", str)
        if variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: expected one of {list(SWEEP_VARIABLES)}, got {variable!r}")
        values = _get(s, "values", "sweep", list)
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep.values: must be strictly increasing")
        samples = _get(s, "sector_samples", "sweep", int, 64)
        if samples < 1:
            raise ConfigError("sweep.sector_samples: must be >= 1")
        sweep = SweepSection(variable, values, samples)

    o = _section(data, "output", False) or {}
    output = OutputSection(
        dir=_get(o, "dir", "output", str, "out"),
        angle_grid_size=_get(o, "angle_grid_size", "output", int, DEFAULT_ANGLE_COUNT),
        freq_count=_get(o, "freq_count", "output", int, 256),
        seed=_get(o, "seed", "output", int, 0),
    )
    if output.angle_grid_size < 2:
        raise ConfigError("output.angle_grid_size: must be >= 2")
    if output.freq_count < 1:
        raise ConfigError("output.freq_count: must be >= 1")
    if output.seed < 0:
        raise ConfigError("output.seed: must be >= 0")

    scenario = data.get("scenario", "unnamed")
    if not isinstance(scenario, str):
        raise ConfigError(f"scenario: expected a string, got {scenario!r}")
    return RunConfig(scenario, grid, array, design, snr_db, sweep, output)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON in {path}: {exc}") from exc
    return parse_config(data)
