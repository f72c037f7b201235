"""Configuration loading, validation, and canonical serialization.

The configuration is a YAML document with four top-level sections:
``material`` (dispersion constants and mode calibration targets),
``photorefraction`` (per-temperature saturable-law constants and time
constants), ``devices`` (fpi, squeezer, coupler, homodyne_coupler, qpm),
and ``run`` (per-subcommand grids, schedules, output settings, seed).
Defaults cover the reference chip geometry; user values are merged on top.
Unknown keys are rejected in strict mode and logged otherwise.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from .cavity import FpiCavity, SqueezerCavity
from .coupler import CouplerGeometry, coupling_length
from .material import (
    MaterialModel,
    PhotorefractionParams,
    SellmeierCoefficients,
)

__all__ = ["ConfigError", "Config", "parse_config", "DEFAULT_CONFIG"]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Configuration failed validation; the message names the field path."""


# Schema tree: nested dicts; None marks a scalar/list leaf, "*" matches any key.
_SELLMEIER_KEYS = {
    k: None
    for k in ("a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3", "b4",
              "t_low", "t_high")
}

_SCHEMA: dict[str, Any] = {
    "material": {
        "sellmeier": _SELLMEIER_KEYS,
        "modes": {"*": {"wavelength_nm": None, "temperature_c": None, "n_eff": None}},
    },
    "photorefraction": {
        "*": {"a": None, "b": None, "c": None, "tau_build_s": None,
              "tau_dark_s": None, "tau_erase_s": None}
    },
    "devices": {
        "fpi": {
            "length_mm": None,
            "facet_reflectivity_probe": None,
            "facet_reflectivity_pump": None,
            "angled_facets": None,
            "probe_mode": None,
            "pump_mode": None,
        },
        "squeezer": {"length_mm": None, "mirror_r1": None, "mirror_r2": None,
                     "mode": None},
        "coupler": {
            "interaction_length_mm": None,
            "waveguide_separation_um": None,
            "design_wavelength_nm": None,
            "coupling_constant_per_mm": {"*": None},
        },
        "homodyne_coupler": {
            "balanced": None,
            "interaction_length_mm": None,
            "waveguide_separation_um": None,
            "design_wavelength_nm": None,
            "coupling_constant_per_mm": {"*": None},
        },
        "qpm": {
            "length_mm": None,
            "poling_period_um": None,
            "telecom_shift_fraction": None,
            "calibration": {
                "temperature_c": None,
                "pump_wavelength_nm": None,
                "degeneracy_wavelength_nm": None,
                "reference_pump_power_mw": None,
            },
        },
    },
    "run": {
        "seed": None,
        "output_dir": None,
        "fpi_trace": {
            "temperature_c": None,
            "probe_wavelength_nm": None,
            "sample_period_s": None,
            "duration_s": None,
            "schedule": None,
        },
        "fpi_char": {"temperature_c": None, "wavelengths_nm": None},
        "coupler_sweep": {
            "temperatures_c": None,
            "probe_wavelength_nm": None,
            "pump_powers_mw": None,
            "noise_fraction": None,
        },
        "homodyne": {
            "reflectivity": None,
            "squeezing_db": None,
            "lo_amplitude_sq": None,
            "phases_rad": None,
        },
        "opo_spectrum": {
            "initial_squeezing_db": None,
            "detunings": None,
            "detection_efficiency": None,
            "omega_max": None,
            "omega_step": None,
        },
        "spdc_spectrum": {
            "temperatures_c": None,
            "pump_wavelength_nm": None,
            "pump_powers_mw": None,
            "wavelength_span_nm": None,
            "points": None,
            "background": None,
        },
        "squeeze_budget": {
            "temperature_c": None,
            "probe_wavelength_nm": None,
            "initial_levels_db": None,
            "pump_powers_mw": None,
            "mu0_per_sqrt_mw": None,
            "spdc_pump_wavelength_nm": None,
            "spdc_pump_powers_mw": None,
        },
        "fit_dn": {"probe_wavelength_nm": None, "inputs": None},
        "fit_fpi": {
            "input": None,
            "temperature_c": None,
            "probe_wavelength_nm": None,
            "pump_on_time_s": None,
            "mask_intervals_s": None,
        },
    },
}

DEFAULT_CONFIG: dict[str, Any] = {
    "material": {
        "sellmeier": {
            "a1": 5.35583,
            "a2": 0.100473,
            "a3": 0.20692,
            "a4": 100.0,
            "a5": 11.34927,
            "a6": 1.5334e-2,
            "b1": 4.629e-7,
            "b2": 3.862e-8,
            "b3": -0.89e-8,
            "b4": 2.657e-5,
            "t_low": 24.5,
            "t_high": 570.82,
        },
        "modes": {
            "fundamental-telecom": {
                "wavelength_nm": 1550.0,
                "temperature_c": 30.0,
                "n_eff": 2.13,
            },
            "fundamental-nir": {
                "wavelength_nm": 775.0,
                "temperature_c": 30.0,
                "n_eff": 2.18,
            },
        },
    },
    "photorefraction": {
        "30.0": {
            "a": 1.1e-4, "b": 10.0, "c": 0.02,
            "tau_build_s": 5.0, "tau_dark_s": 1.0e4, "tau_erase_s": 10.0,
        },
        "60.0": {
            "a": 3.0e-5, "b": 10.0, "c": 0.02,
            "tau_build_s": 5.0, "tau_dark_s": 1.0e4, "tau_erase_s": 10.0,
        },
        "90.0": {
            "a": 1.5e-7, "b": 10.0, "c": 0.02,
            "tau_build_s": 5.0, "tau_dark_s": 1.0e4, "tau_erase_s": 10.0,
        },
    },
    "devices": {
        "fpi": {
            "length_mm": 15.0,
            "facet_reflectivity_probe": 0.14,
            "facet_reflectivity_pump": 0.13,
            "angled_facets": False,
            "probe_mode": "fundamental-telecom",
            "pump_mode": "fundamental-nir",
        },
        "squeezer": {
            "length_mm": 15.0,
            "mirror_r1": 0.77,
            "mirror_r2": 0.99,
            "mode": "fundamental-telecom",
        },
        "coupler": {
            "interaction_length_mm": 4.3,
            "waveguide_separation_um": 14.0,
            "design_wavelength_nm": 1550.0,
            "coupling_constant_per_mm": {
                "30.0": 0.46,
                "60.0": 0.48039,
                "90.0": 0.53070,
            },
        },
        "homodyne_coupler": {
            "balanced": True,
            "waveguide_separation_um": 14.0,
            "design_wavelength_nm": 1550.0,
            "coupling_constant_per_mm": {"30.0": 0.46},
        },
        "qpm": {
            "length_mm": 15.0,
            "telecom_shift_fraction": 0.0,
            "calibration": {
                "temperature_c": 30.0,
                "pump_wavelength_nm": 770.73,
                "degeneracy_wavelength_nm": 1541.46,
                "reference_pump_power_mw": 5.0,
            },
        },
    },
    "run": {
        "seed": 20260810,
        "output_dir": "out",
        "fpi_trace": {
            "temperature_c": 30.0,
            "probe_wavelength_nm": 1550.0,
            "sample_period_s": 0.05,
            "duration_s": 60.0,
            "schedule": [
                {"start_s": 10.0, "end_s": 60.0, "pump_power_mw": 5.0,
                 "erasing_light": False},
            ],
        },
        "fpi_char": {"temperature_c": 30.0, "wavelengths_nm": [1550.0, 775.0]},
        "coupler_sweep": {
            "temperatures_c": [30.0, 60.0, 90.0],
            "probe_wavelength_nm": 1550.0,
            "pump_powers_mw": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            "noise_fraction": 0.0,
        },
        "homodyne": {
            "reflectivity": 0.5,
            "squeezing_db": 0.0,
            "lo_amplitude_sq": 1.0,
            "phases_rad": [0.0],
        },
        "opo_spectrum": {
            "initial_squeezing_db": -5.0,
            "detunings": [0.0, 0.5, 1.0, 1.5, 2.0, 3.0],
            "detection_efficiency": 1.0,
            "omega_max": 20.0,
            "omega_step": 0.05,
        },
        "spdc_spectrum": {
            "temperatures_c": [30.0, 90.0],
            "pump_wavelength_nm": {"30.0": 770.73, "90.0": 774.63},
            "pump_powers_mw": [0.25, 1.0, 2.0, 5.0],
            "wavelength_span_nm": 220.0,
            "points": 881,
            "background": 0.0,
        },
        "squeeze_budget": {
            "temperature_c": 30.0,
            "probe_wavelength_nm": 1550.0,
            "initial_levels_db": [-3.0, -5.0, -10.0],
            "pump_powers_mw": [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.5, 10.0],
            "mu0_per_sqrt_mw": 0.101,
            "spdc_pump_wavelength_nm": 770.73,
            "spdc_pump_powers_mw": [0.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0],
        },
        "fit_dn": {"probe_wavelength_nm": 1550.0, "inputs": []},
        "fit_fpi": {
            "input": "",
            "temperature_c": 30.0,
            "probe_wavelength_nm": 1550.0,
            "pump_on_time_s": None,
            "mask_intervals_s": [],
        },
    },
}


def _walk_unknown(user: Mapping, schema: Mapping, path: str, unknown: list[str]) -> None:
    wildcard = "*" in schema
    for key, value in user.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in schema and not wildcard:
            unknown.append(where)
            continue
        subschema = schema.get(key, schema.get("*"))
        if isinstance(value, Mapping) and isinstance(subschema, Mapping):
            _walk_unknown(value, subschema, where, unknown)


def _deep_merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _normalize_temperature_keys(section: Mapping, path: str) -> dict[str, Any]:
    out = {}
    for key, value in section.items():
        try:
            t = float(key)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: key {key!r} is not a temperature") from None
        out[repr(t)] = value
    return out


def _normalize_temperature_maps(tree: dict) -> None:
    """Canonicalize every temperature-keyed mapping in place."""
    if "photorefraction" in tree:
        tree["photorefraction"] = _normalize_temperature_keys(
            tree["photorefraction"], "photorefraction"
        )
    for name in ("coupler", "homodyne_coupler"):
        device = tree.get("devices", {}).get(name, {})
        if "coupling_constant_per_mm" in device:
            device["coupling_constant_per_mm"] = _normalize_temperature_keys(
                device["coupling_constant_per_mm"],
                f"devices.{name}.coupling_constant_per_mm",
            )
    spdc = tree.get("run", {}).get("spdc_spectrum", {})
    if isinstance(spdc.get("pump_wavelength_nm"), Mapping):
        spdc["pump_wavelength_nm"] = _normalize_temperature_keys(
            spdc["pump_wavelength_nm"], "run.spdc_spectrum.pump_wavelength_nm"
        )


@dataclass
class Config:
    """Validated configuration with builder helpers for the domain objects."""

    resolved: dict[str, Any]
    source_path: str | None = None

    # -- generic access -----------------------------------------------------

    def run_section(self, name: str) -> dict[str, Any]:
        return self.resolved["run"][name]

    @property
    def seed(self) -> int:
        return int(self.resolved["run"]["seed"])

    @property
    def output_dir(self) -> str:
        return str(self.resolved["run"]["output_dir"])

    def config_hash(self) -> str:
        canonical = json.dumps(self.resolved, sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.resolved, sort_keys=True)

    # -- builders ------------------------------------------------------------

    def material(self) -> MaterialModel:
        section = self.resolved["material"]
        coeffs = SellmeierCoefficients(**section["sellmeier"])
        targets = {
            mode: (entry["wavelength_nm"], entry["temperature_c"], entry["n_eff"])
            for mode, entry in section["modes"].items()
        }
        try:
            return MaterialModel.calibrated(targets, coeffs)
        except ValueError as exc:
            raise ConfigError(f"material.modes: {exc}") from None

    def photorefraction_temperatures(self) -> list[float]:
        return sorted(float(k) for k in self.resolved["photorefraction"])

    def photorefraction(self, temperature_c: float) -> PhotorefractionParams:
        key = repr(float(temperature_c))
        table = self.resolved["photorefraction"]
        if key not in table:
            known = ", ".join(sorted(table))
            raise ConfigError(
                f"photorefraction: no parameter set at {temperature_c} C "
                f"(configured: {known})"
            )
        entry = table[key]
        try:
            return PhotorefractionParams(
                a=float(entry["a"]),
                b=float(entry["b"]),
                c=float(entry["c"]),
                tau_build_s=float(entry.get("tau_build_s", 5.0)),
                tau_dark_s=float(entry.get("tau_dark_s", 1.0e4)),
                tau_erase_s=float(entry.get("tau_erase_s", 10.0)),
                temperature_c=float(temperature_c),
            )
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"photorefraction[{key!r}]: {exc}") from None

    def fpi_cavity(self, material: MaterialModel | None = None) -> FpiCavity:
        section = self.resolved["devices"]["fpi"]
        try:
            return FpiCavity(
                length_mm=float(section["length_mm"]),
                facet_reflectivity_probe=float(section["facet_reflectivity_probe"]),
                facet_reflectivity_pump=float(section["facet_reflectivity_pump"]),
                material=material or self.material(),
                angled_facets=bool(section["angled_facets"]),
                probe_mode=section["probe_mode"],
                pump_mode=section["pump_mode"],
            )
        except ValueError as exc:
            raise ConfigError(f"devices.fpi: {exc}") from None

    def squeezer_cavity(self, material: MaterialModel | None = None) -> SqueezerCavity:
        section = self.resolved["devices"]["squeezer"]
        try:
            return SqueezerCavity(
                length_mm=float(section["length_mm"]),
                mirror_r1=float(section["mirror_r1"]),
                mirror_r2=float(section["mirror_r2"]),
                material=material or self.material(),
                mode=section["mode"],
            )
        except ValueError as exc:
            raise ConfigError(f"devices.squeezer: {exc}") from None

    def _coupling_constant(self, section_name: str, temperature_c: float) -> float:
        table = self.resolved["devices"][section_name]["coupling_constant_per_mm"]
        key = repr(float(temperature_c))
        if key not in table:
            known = ", ".join(sorted(table))
            raise ConfigError(
                f"devices.{section_name}.coupling_constant_per_mm: no value at "
                f"{temperature_c} C (configured: {known})"
            )
        return float(table[key])

    def coupler_geometry(self, temperature_c: float) -> CouplerGeometry:
        section = self.resolved["devices"]["coupler"]
        try:
            return CouplerGeometry(
                coupling_constant_per_mm=self._coupling_constant("coupler", temperature_c),
                interaction_length_mm=float(section["interaction_length_mm"]),
                waveguide_separation_um=section.get("waveguide_separation_um"),
                design_wavelength_nm=float(section["design_wavelength_nm"]),
            )
        except ValueError as exc:
            raise ConfigError(f"devices.coupler: {exc}") from None

    def homodyne_geometry(self, temperature_c: float) -> CouplerGeometry:
        section = self.resolved["devices"]["homodyne_coupler"]
        k = self._coupling_constant("homodyne_coupler", temperature_c)
        if section.get("balanced", True):
            length = 1.5 * coupling_length(k)
        else:
            length = float(section["interaction_length_mm"])
        try:
            return CouplerGeometry(
                coupling_constant_per_mm=k,
                interaction_length_mm=length,
                waveguide_separation_um=section.get("waveguide_separation_um"),
                design_wavelength_nm=float(section["design_wavelength_nm"]),
            )
        except ValueError as exc:
            raise ConfigError(f"devices.homodyne_coupler: {exc}") from None

    def qpm_section(self) -> dict[str, Any]:
        return self.resolved["devices"]["qpm"]


def parse_config(path, strict: bool = False) -> Config:
    """Load, merge with defaults, and validate a configuration file.

    Raises :class:`ConfigError` for syntax errors (with line number),
    invariant violations (with the field path), and unknown keys in strict
    mode.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
        user = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"{path}: YAML syntax error{line}: {exc}") from None
    if not isinstance(user, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")

    unknown: list[str] = []
    _walk_unknown(user, _SCHEMA, "", unknown)
    if unknown:
        message = f"{path}: unknown configuration keys: " + ", ".join(sorted(unknown))
        if strict:
            raise ConfigError(message)
        log.warning("%s", message)

    # Normalize temperature-keyed maps before merging so that a user "30"
    # and the default "30.0" land on the same key and deep-merge properly.
    user = copy.deepcopy(dict(user))
    _normalize_temperature_maps(user)
    resolved = _deep_merge(DEFAULT_CONFIG, user)
    _normalize_temperature_maps(resolved)

    config = Config(resolved=resolved, source_path=str(path))
    _validate(config)
    return config


def _validate(config: Config) -> None:
    """Construct every configured domain object so invariants are enforced."""
    config.material()
    for t in config.photorefraction_temperatures():
        config.photorefraction(t)
    config.fpi_cavity()
    config.squeezer_cavity()
    coupler_temps = config.resolved["devices"]["coupler"]["coupling_constant_per_mm"]
    for key in coupler_temps:
        config.coupler_geometry(float(key))
    homodyne_temps = config.resolved["devices"]["homodyne_coupler"][
        "coupling_constant_per_mm"
    ]
    for key in homodyne_temps:
        config.homodyne_geometry(float(key))
    qpm = config.qpm_section()
    if float(qpm["length_mm"]) <= 0:
        raise ConfigError("devices.qpm.length_mm must be > 0")
    if "poling_period_um" in qpm and qpm["poling_period_um"] is not None:
        if float(qpm["poling_period_um"]) <= 0:
            raise ConfigError("devices.qpm.poling_period_um must be > 0")
