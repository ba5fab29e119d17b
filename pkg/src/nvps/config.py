"""Run configuration: YAML with mandatory units, defaults, and round-tripping.

Every dimensional quantity is written "value unit" ("92 MHz", "4.4 mT"); a
bare number where a unit is required is a hard parse error, because a silent
Hz-versus-MHz slip costs an afternoon.  Unknown keys are rejected with their
path.  All values are optional; the defaults reproduce the isolated NV with
the standard parameter set.
"""

import io
import math
import os
from dataclasses import dataclass, fields

import yaml

from .constants import DEBYE, EV
from .errors import ConfigError

_UNIT_TABLES = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "energy": {"eV": EV, "meV": 1e-3 * EV, "J": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "G": 1e-4},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "intensity": {"W/m^2": 1.0, "mW/um^2": 1e9, "uW/um^2": 1e6, "W/um^2": 1e12,
                  "kW/cm^2": 1e7, "W/cm^2": 1e4},
    "dipole": {"D": DEBYE, "C*m": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0, "mrad": 1e-3},
}


def _parse_quantity(raw, kind, path, line):
    units = _UNIT_TABLES[kind]
    where = f"{path}" + (f" (line {line})" if line is not None else "")
    if not isinstance(raw, str):
        raise ConfigError(
            f"{where}: expected '<value> <unit>' with unit in {sorted(units)}, "
            f"got bare {raw!r}")
    parts = raw.replace("µ", "u").split()
    if len(parts) != 2:
        raise ConfigError(
            f"{where}: expected '<value> <unit>' with unit in {sorted(units)}, "
            f"got {raw!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigError(f"{where}: cannot read number from {raw!r}") from None
    if parts[1] not in units:
        raise ConfigError(
            f"{where}: unknown unit {parts[1]!r}; expected one of {sorted(units)}")
    return value * units[parts[1]]


def _format_quantity(si_value, kind, unit):
    return f"{si_value / _UNIT_TABLES[kind][unit]!r} {unit}"


# Schema leaves: (handler, *args).  "q" = quantity with (kind, canonical unit),
# "num"/"int"/"bool"/"str" are bare scalars, "enum" restricts strings,
# "qlist" is a list of quantities.
_SCHEMA = {
    "nv": {
        "bands": ("int",),
        "vibronic_table": ("maybe_str",),
        "zpl_energy": ("q", "energy", "eV"),
        "dipole_moment": ("q", "dipole", "D"),
        "optical_dephasing_rate": ("q", "frequency", "THz"),
        "excited_vibronic_rate": ("q", "frequency", "THz"),
        "index_of_refraction": ("num",),
    },
    "spin": {
        "zero_field_splitting_gs": ("q", "frequency", "GHz"),
        "zero_field_splitting_es": ("q", "frequency", "GHz"),
        "static_field": ("q", "field", "mT"),
        "microwave_field": ("q", "field", "mT"),
        "microwave_frequency": ("q", "frequency", "GHz"),
        "t1_ground": ("q", "time", "ms"),
        "t1_excited": ("q", "time", "ms"),
        "t2_ground": ("q", "time", "us"),
        "t2_excited": ("q", "time", "ns"),
    },
    "isc": {
        "rate_es_pm1": ("q", "frequency", "MHz"),
        "rate_es_0": ("q", "frequency", "MHz"),
        "rate_sg_pm1": ("q", "frequency", "MHz"),
        "rate_sg_0": ("q", "frequency", "MHz"),
        "rate_singlet": ("q", "frequency", "GHz"),
        "gap_excited": ("q", "energy", "eV"),
        "gap_singlet": ("q", "energy", "eV"),
    },
    "drive": {
        "photon_energy": ("energy_or_auto",),
        "intensity": ("q", "intensity", "mW/um^2"),
        "background_index": ("num",),
    },
    "particle": {
        "material": ("str",),
        "radius": ("q", "length", "nm"),
        "separation": ("q", "length", "nm"),
        "orientation": ("enum", ("radial", "tangential", "angle")),
        "theta": ("maybe_q", "angle", "deg"),
        "far_field_scale": ("num",),
        "band_efficiency": ("bool",),
        "nonlinear_drive": ("bool",),
    },
    "experiment": {
        "odmr": {
            "start": ("q", "frequency", "GHz"),
            "stop": ("q", "frequency", "GHz"),
            "points": ("int",),
        },
        "trace": {
            "t_max": ("q", "time", "us"),
            "points": ("int",),
            "microwave": ("bool",),
            "initial": ("strlist", ("zero", "pm1", "plus1", "minus1")),
        },
        "spectrum": {
            "start": ("q", "energy", "eV"),
            "stop": ("q", "energy", "eV"),
            "points": ("int",),
            "mode": ("enum", ("far", "near")),
        },
        "sweep": {
            "intensities": ("qlist", "intensity", "uW/um^2"),
        },
        "angles": {
            "points": ("int",),
        },
    },
    "output": {
        "directory": ("str",),
    },
}

_DEFAULTS = {
    "nv": {
        "bands": 7,
        "vibronic_table": None,
        "zpl_energy": "1.941 eV",
        "dipole_moment": "5.2 D",
        "optical_dephasing_rate": "15.0 THz",
        "excited_vibronic_rate": "1434.0 THz",
        "index_of_refraction": 2.4,
    },
    "spin": {
        "zero_field_splitting_gs": "2.87 GHz",
        "zero_field_splitting_es": "1.42 GHz",
        "static_field": "4.4 mT",
        "microwave_field": "0.35 mT",
        "microwave_frequency": "2.87 GHz",
        "t1_ground": "7.7 ms",
        "t1_excited": "1.0 ms",
        "t2_ground": "6.7 us",
        "t2_excited": "10.0 ns",
    },
    "isc": {
        "rate_es_pm1": "92.0 MHz",
        "rate_es_0": "11.4 MHz",
        "rate_sg_pm1": "2.35 MHz",
        "rate_sg_0": "4.84 MHz",
        "rate_singlet": "1.0 GHz",
        "gap_excited": "0.4 eV",
        "gap_singlet": "1.19 eV",
    },
    "drive": {
        "photon_energy": "2.033 eV",
        "intensity": "0.5 mW/um^2",
        "background_index": 1.0,
    },
    "particle": {
        "material": "Ag",
        "radius": "10.0 nm",
        "separation": "20.0 nm",
        "orientation": "radial",
        "theta": None,
        "far_field_scale": 1.0,
        "band_efficiency": True,
        "nonlinear_drive": False,
    },
    "experiment": {
        "odmr": {"start": "2.6 GHz", "stop": "3.14 GHz", "points": 271},
        "trace": {"t_max": "10.0 us", "points": 801, "microwave": False,
                  "initial": ["zero", "pm1"]},
        "spectrum": {"start": "1.5 eV", "stop": "2.1 eV", "points": 1201,
                     "mode": "far"},
        "sweep": {"intensities": ["1.0 uW/um^2", "10.0 uW/um^2",
                                  "100.0 uW/um^2", "1000.0 uW/um^2"]},
        "angles": {"points": 10},
    },
    "output": {
        "directory": ".",
    },
}


@dataclass(frozen=True)
class NVConfig:
    bands: int
    vibronic_table: str
    zpl_energy: float
    dipole_moment: float
    optical_dephasing_rate: float
    excited_vibronic_rate: float
    index_of_refraction: float


@dataclass(frozen=True)
class SpinConfig:
    zero_field_splitting_gs: float
    zero_field_splitting_es: float
    static_field: float
    microwave_field: float
    microwave_frequency: float
    t1_ground: float
    t1_excited: float
    t2_ground: float
    t2_excited: float


@dataclass(frozen=True)
class ISCConfig:
    rate_es_pm1: float
    rate_es_0: float
    rate_sg_pm1: float
    rate_sg_0: float
    rate_singlet: float
    gap_excited: float
    gap_singlet: float


@dataclass(frozen=True)
class DriveConfig:
    photon_energy: object  # J, or the string "auto"
    intensity: float
    background_index: float


@dataclass(frozen=True)
class ParticleConfig:
    material: str
    radius: float
    separation: float
    orientation: str
    theta: float
    far_field_scale: float
    band_efficiency: bool
    nonlinear_drive: bool


@dataclass(frozen=True)
class OdmrExperiment:
    start: float
    stop: float
    points: int


@dataclass(frozen=True)
class TraceExperiment:
    t_max: float
    points: int
    microwave: bool
    initial: tuple


@dataclass(frozen=True)
class SpectrumExperiment:
    start: float
    stop: float
    points: int
    mode: str


@dataclass(frozen=True)
class SweepExperiment:
    intensities: tuple


@dataclass(frozen=True)
class AngleExperiment:
    points: int


@dataclass(frozen=True)
class ExperimentConfig:
    odmr: OdmrExperiment
    trace: TraceExperiment
    spectrum: SpectrumExperiment
    sweep: SweepExperiment
    angles: AngleExperiment


@dataclass(frozen=True)
class RunConfig:
    nv: NVConfig
    spin: SpinConfig
    isc: ISCConfig
    drive: DriveConfig
    particle: ParticleConfig  # or None
    experiment: ExperimentConfig
    output_directory: str


def _line_map(text):
    """Map 'a.b.c' paths to 1-based source lines for error messages."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    out = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key_node, val_node in node.value:
                path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
                out[path] = key_node.start_mark.line + 1
                walk(val_node, path)
    walk(root, "")
    return out


def _convert_leaf(spec, raw, path, lines):
    line = lines.get(path)
    where = f"{path}" + (f" (line {line})" if line is not None else "")
    kind = spec[0]
    if kind == "q":
        return _parse_quantity(raw, spec[1], path, line)
    if kind == "maybe_q":
        if raw is None:
            return None
        return _parse_quantity(raw, spec[1], path, line)
    if kind == "energy_or_auto":
        if raw == "auto":
            return "auto"
        return _parse_quantity(raw, "energy", path, line)
    if kind == "num":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{where}: expected a bare number, got {raw!r}")
        return float(raw)
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{where}: expected an integer, got {raw!r}")
        return int(raw)
    if kind == "bool":
        if not isinstance(raw, bool):
            raise ConfigError(f"{where}: expected true/false, got {raw!r}")
        return bool(raw)
    if kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(f"{where}: expected a string, got {raw!r}")
        return raw
    if kind == "maybe_str":
        if raw is not None and not isinstance(raw, str):
            raise ConfigError(f"{where}: expected a string or null, got {raw!r}")
        return raw
    if kind == "enum":
        if raw not in spec[1]:
            raise ConfigError(f"{where}: expected one of {list(spec[1])}, got {raw!r}")
        return raw
    if kind == "strlist":
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}: expected a nonempty list")
        for item in raw:
            if item not in spec[1]:
                raise ConfigError(
                    f"{where}: entry {item!r} not one of {list(spec[1])}")
        return tuple(raw)
    if kind == "qlist":
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}: expected a nonempty list of quantities")
        return tuple(_parse_quantity(item, spec[1], f"{path}[{i}]", line)
                     for i, item in enumerate(raw))
    raise AssertionError(kind)


def _merge(defaults, user, path, lines):
    if user is None:
        return dict(defaults)
    if not isinstance(user, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    out = dict(defaults)
    for key, val in user.items():
        kpath = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigError(
                f"{kpath}: unknown key; allowed here: {sorted(defaults)}")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], val, kpath, lines)
        else:
            out[key] = val
    return out


def _convert_section(schema, mapping, path, lines):
    out = {}
    for key, spec in schema.items():
        kpath = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _convert_section(spec, mapping[key], kpath, lines)
        else:
            out[key] = _convert_leaf(spec, mapping[key], kpath, lines)
    return out


def parse_config(source):
    """Parse YAML text, a file path, an open file, or an already-loaded mapping.

    Returns a fully resolved RunConfig; every omitted key takes its default.
    """
    lines = {}
    if isinstance(source, dict) or source is None:
        data = source or {}
    else:
        if hasattr(source, "read"):
            text = source.read()
        elif isinstance(source, os.PathLike) or (
                isinstance(source, str) and "\n" not in source and os.path.exists(source)):
            try:
                with open(source, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config file {source}: {exc}") from None
        elif isinstance(source, str) and source.endswith((".yaml", ".yml")):
            raise ConfigError(f"cannot read config file {source}: no such file")
        else:
            text = str(source)
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML: {exc}") from None
        data = data or {}
        lines = _line_map(text)
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a mapping")

    particle_absent = "particle" not in data or data.get("particle") is None
    merged = _merge(_DEFAULTS, {k: v for k, v in data.items() if k != "particle"},
                    "", lines)
    if not particle_absent:
        merged["particle"] = _merge(_DEFAULTS["particle"], data["particle"],
                                    "particle", lines)
    conv = _convert_section(
        {k: v for k, v in _SCHEMA.items() if k != "particle"},
        {k: v for k, v in merged.items() if k != "particle"}, "", lines)
    particle = None
    if not particle_absent:
        pconv = _convert_section(_SCHEMA["particle"], merged["particle"],
                                 "particle", lines)
        if pconv["orientation"] == "angle" and pconv["theta"] is None:
            raise ConfigError("particle.theta: required when orientation is 'angle'")
        particle = ParticleConfig(**pconv)

    exp = conv["experiment"]
    experiment = ExperimentConfig(
        odmr=OdmrExperiment(**exp["odmr"]),
        trace=TraceExperiment(**exp["trace"]),
        spectrum=SpectrumExperiment(**exp["spectrum"]),
        sweep=SweepExperiment(**exp["sweep"]),
        angles=AngleExperiment(**exp["angles"]),
    )
    return RunConfig(
        nv=NVConfig(**conv["nv"]),
        spin=SpinConfig(**conv["spin"]),
        isc=ISCConfig(**conv["isc"]),
        drive=DriveConfig(**conv["drive"]),
        particle=particle,
        experiment=experiment,
        output_directory=conv["output"]["directory"],
    )


def _emit_leaf(spec, value):
    kind = spec[0]
    if kind == "q":
        return _format_quantity(value, spec[1], spec[2])
    if kind == "maybe_q":
        return None if value is None else _format_quantity(value, spec[1], spec[2])
    if kind == "energy_or_auto":
        return "auto" if value == "auto" else _format_quantity(value, "energy", "eV")
    if kind == "qlist":
        return [_format_quantity(v, spec[1], spec[2]) for v in value]
    if kind == "strlist":
        return list(value)
    return value


def to_mapping(cfg):
    """RunConfig -> plain mapping in canonical units (the serialization form)."""
    def section(schema, obj):
        out = {}
        for key, spec in schema.items():
            if isinstance(spec, dict):
                out[key] = section(spec, getattr(obj, key))
            else:
                out[key] = _emit_leaf(spec, getattr(obj, key))
        return out

    out = {
        "nv": section(_SCHEMA["nv"], cfg.nv),
        "spin": section(_SCHEMA["spin"], cfg.spin),
        "isc": section(_SCHEMA["isc"], cfg.isc),
        "drive": section(_SCHEMA["drive"], cfg.drive),
        "particle": (None if cfg.particle is None
                     else section(_SCHEMA["particle"], cfg.particle)),
        "experiment": {
            "odmr": section(_SCHEMA["experiment"]["odmr"], cfg.experiment.odmr),
            "trace": section(_SCHEMA["experiment"]["trace"], cfg.experiment.trace),
            "spectrum": section(_SCHEMA["experiment"]["spectrum"],
                                cfg.experiment.spectrum),
            "sweep": section(_SCHEMA["experiment"]["sweep"], cfg.experiment.sweep),
            "angles": section(_SCHEMA["experiment"]["angles"], cfg.experiment.angles),
        },
        "output": {"directory": cfg.output_directory},
    }
    return out


def serialize(cfg):
    """Canonical YAML text; parse(serialize(parse(x))) is a fixed point."""
    buf = io.StringIO()
    yaml.safe_dump(to_mapping(cfg), buf, sort_keys=False, default_flow_style=False)
    return buf.getvalue()


def describe(cfg):
    """Flat resolved-SI dict for manifests: every leaf in base units."""
    out = {}

    def flatten(prefix, obj):
        if obj is None:
            out[prefix] = None
            return
        for f in fields(obj):
            val = getattr(obj, f.name)
            key = f"{prefix}.{f.name}" if prefix else f.name
            if hasattr(val, "__dataclass_fields__"):
                flatten(key, val)
            elif isinstance(val, tuple):
                out[key] = list(val)
            else:
                out[key] = val
    flatten("nv", cfg.nv)
    flatten("spin", cfg.spin)
    flatten("isc", cfg.isc)
    flatten("drive", cfg.drive)
    flatten("particle", cfg.particle)
    flatten("experiment", cfg.experiment)
    out["output.directory"] = cfg.output_directory
    return out
