"""Command-line interface tying the simulation and fitting pipelines together.

Every subcommand reads one configuration file, writes its data products
(CSV/JSON) into the output directory, and finishes by writing a
``run_manifest.json`` recording the config hash, seed, package versions,
wall time, and the produced files.  Exit codes: 0 success, 1 validation
error, 2 numerical failure.  A fit that does not converge is not a
failure; it is reported through the ``converged`` flag.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .cavity import (
    finesse,
    fpi_characteristics,
    opo_optimal_levels,
    opo_spectrum_matrix,
    pump_parameter_for_squeezing_db,
    simulate_fpi_trace,
)
from .config import Config, ConfigError, parse_config
from .coupler import (
    HomodyneConfig,
    homodyne_noise,
    measured_squeezing_vs_residual_pump,
    reflectivity_vs_pump,
    squeezing_parameter_from_db,
)
from .data import (
    SweepData,
    read_sweep_csv,
    read_trace_csv,
    write_columns_csv,
    write_sweep_csv,
    write_trace_csv,
)
from .fit import FitError, fit_delta_n_from_reflectivity, fit_fpi_trace
from .material import PumpSchedule, PumpSegment, delta_n_steady, refractive_index
from .spdc import (
    QpmDevice,
    SpdcOperatingPoint,
    calibrate_poling_period,
    effective_squeezing_vs_power,
    spdc_spectrum,
)

log = logging.getLogger(__name__)

SUBCOMMANDS = (
    "fpi-trace",
    "fpi-char",
    "coupler-sweep",
    "homodyne",
    "opo-spectrum",
    "spdc-spectrum",
    "squeeze-budget",
    "fit-dn",
    "fit-fpi",
)


def _fmt(value: float) -> str:
    """Compact float for filenames (no trailing zeros, no scientific surprises)."""
    return f"{value:g}"


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


class _Runner:
    """Shared context for one subcommand invocation."""

    def __init__(self, config: Config, out_dir: Path, seed: int, quiet: bool):
        self.config = config
        self.out_dir = out_dir
        self.seed = seed
        self.quiet = quiet
        self.outputs: list[str] = []
        self.warnings: list[str] = []
        self.comments = [
            f"photoref {__version__}",
            f"config_hash {config.config_hash()}",
            f"seed {seed}",
        ]
        self.provenance = {
            "photoref": __version__,
            "config_hash": config.config_hash(),
            "seed": seed,
        }

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out_dir / name

    def write_sweep(self, name: str, sweep: SweepData) -> None:
        write_sweep_csv(self.path(name), sweep, self.comments)

    def write_json(self, name: str, payload: dict) -> None:
        payload = dict(payload)
        payload["provenance"] = self.provenance
        _write_json(self.path(name), payload)

    def note(self, message: str) -> None:
        self.warnings.append(message)
        if not self.quiet:
            log.warning("%s", message)


def _qpm_device(runner: _Runner) -> QpmDevice:
    config = runner.config
    material = config.material()
    section = config.qpm_section()
    period = section.get("poling_period_um")
    if period is None:
        cal = section["calibration"]
        params = config.photorefraction(float(cal["temperature_c"]))
        shift = delta_n_steady(params, float(cal["reference_pump_power_mw"]))
        period = calibrate_poling_period(
            material,
            float(cal["temperature_c"]),
            float(cal["pump_wavelength_nm"]),
            float(cal["degeneracy_wavelength_nm"]),
            pump_index_shift=shift,
        )
    return QpmDevice(
        poling_period_um=float(period),
        length_mm=float(section["length_mm"]),
        material=material,
        telecom_shift_fraction=float(section.get("telecom_shift_fraction", 0.0)),
    )


def _run_fpi_trace(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("fpi_trace")
    temperature = float(section["temperature_c"])
    schedule = PumpSchedule(
        [
            PumpSegment(
                start_s=float(seg["start_s"]),
                end_s=float(seg["end_s"]),
                pump_power_mw=float(seg["pump_power_mw"]),
                erasing_light=bool(seg.get("erasing_light", False)),
            )
            for seg in section["schedule"]
        ]
    )
    trace = simulate_fpi_trace(
        config.fpi_cavity(),
        schedule,
        config.photorefraction(temperature),
        probe_wavelength_nm=float(section["probe_wavelength_nm"]),
        temperature_c=temperature,
        sample_period_s=float(section["sample_period_s"]),
        duration_s=float(section["duration_s"]),
    )
    write_trace_csv(runner.path("fpi_trace.csv"), trace, runner.comments)


def _run_fpi_char(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("fpi_char")
    cavity = config.fpi_cavity()
    temperature = float(section["temperature_c"])
    report = {}
    for lam in section["wavelengths_nm"]:
        lam = float(lam)
        fsr_pm, fwhm_pm = fpi_characteristics(cavity, lam, temperature)
        r = cavity.reflectivity_at(lam)
        coefficient, conventional = finesse(r, r)
        report[_fmt(lam)] = {
            "wavelength_nm": lam,
            "n_eff": refractive_index(
                cavity.material, lam, temperature, cavity.mode_for(lam)
            ),
            "facet_reflectivity": r,
            "fsr_pm": fsr_pm,
            "fwhm_pm": fwhm_pm,
            "coefficient_of_finesse": coefficient,
            "conventional_finesse": conventional,
        }
    runner.write_json("fpi_characteristics.json", report)


def _run_coupler_sweep(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("coupler_sweep")
    probe = float(section["probe_wavelength_nm"])
    powers = [float(p) for p in section["pump_powers_mw"]]
    noise = float(section.get("noise_fraction", 0.0))
    rng = np.random.default_rng(runner.seed)
    for temperature in [float(t) for t in section["temperatures_c"]]:
        geometry = config.coupler_geometry(temperature)
        params = config.photorefraction(temperature)
        sweep = reflectivity_vs_pump(geometry, params, probe, powers)
        sigma = None
        values = sweep.value
        if noise > 0:
            sigma = noise * np.abs(values)
            values = values * (1.0 + noise * rng.standard_normal(len(values)))
            sweep = SweepData(sweep.abscissa, values, sigma)
        name = f"coupler_sweep_T{_fmt(temperature)}"
        runner.write_sweep(f"{name}.csv", sweep)
        runner.write_json(
            f"{name}.json",
            {
                "temperature_c": temperature,
                "probe_wavelength_nm": probe,
                "coupling_constant_per_mm": geometry.coupling_constant_per_mm,
                "interaction_length_mm": geometry.interaction_length_mm,
                "waveguide_separation_um": geometry.waveguide_separation_um,
                "noise_fraction": noise,
                "pump_power_mW": [float(x) for x in sweep.abscissa],
                "value": [float(x) for x in sweep.value],
                "sigma": None if sigma is None else [float(x) for x in sigma],
            },
        )


def _run_homodyne(runner: _Runner) -> None:
    section = runner.config.run_section("homodyne")
    reflectivity = float(section["reflectivity"])
    s = squeezing_parameter_from_db(float(section["squeezing_db"]))
    lo = float(section["lo_amplitude_sq"])
    phases = np.asarray([float(p) for p in section["phases_rad"]])
    levels = []
    for phi in phases:
        noise = homodyne_noise(
            HomodyneConfig(
                reflectivity=reflectivity,
                lo_amplitude_sq=lo,
                squeezing_parameter=s,
                phase_rad=float(phi),
            )
        )
        levels.append(10.0 * math.log10(noise / lo))
    write_columns_csv(
        runner.path("homodyne.csv"),
        ["phase_rad", "value"],
        [phases, np.asarray(levels)],
        runner.comments,
    )


def _run_opo_spectrum(runner: _Runner) -> None:
    section = runner.config.run_section("opo_spectrum")
    sigma = pump_parameter_for_squeezing_db(float(section["initial_squeezing_db"]))
    eta = float(section["detection_efficiency"])
    omega = np.arange(
        0.0,
        float(section["omega_max"]) + float(section["omega_step"]) / 2,
        float(section["omega_step"]),
    )
    detunings = [float(d) for d in section["detunings"]]
    best_rows = []
    for delta in detunings:
        s_xx, s_yy, s_xy = opo_spectrum_matrix(sigma, delta, omega)
        mean = 0.5 * (s_xx + s_yy)
        radius = np.sqrt((0.5 * (s_xx - s_yy)) ** 2 + s_xy**2)
        squeezed = eta * (mean - radius) + (1.0 - eta)
        antisqueezed = eta * (mean + radius) + (1.0 - eta)
        write_columns_csv(
            runner.path(f"opo_spectrum_delta{_fmt(delta)}.csv"),
            ["omega", "squeezed_db", "antisqueezed_db"],
            [omega, 10 * np.log10(squeezed), 10 * np.log10(antisqueezed)],
            runner.comments,
        )
        best_rows.append(opo_optimal_levels(sigma, delta, eta))
    write_columns_csv(
        runner.path("opo_optimal_levels.csv"),
        ["delta", "best_squeezing_db", "best_antisqueezing_db"],
        [
            np.asarray(detunings),
            np.asarray([row[0] for row in best_rows]),
            np.asarray([row[1] for row in best_rows]),
        ],
        runner.comments,
    )


def _run_spdc_spectrum(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("spdc_spectrum")
    device = _qpm_device(runner)
    pump_map = section["pump_wavelength_nm"]
    span = float(section["wavelength_span_nm"])
    points = int(section["points"])
    background = float(section.get("background", 0.0))
    for temperature in [float(t) for t in section["temperatures_c"]]:
        lam_p = float(pump_map[repr(temperature)])
        params = config.photorefraction(temperature)
        grid = np.linspace(2 * lam_p - span / 2, 2 * lam_p + span / 2, points)
        for power in [float(p) for p in section["pump_powers_mw"]]:
            point = SpdcOperatingPoint(lam_p, temperature, power)
            density = spdc_spectrum(device, point, params, grid, background)
            write_columns_csv(
                runner.path(
                    f"spdc_spectrum_T{_fmt(temperature)}_P{_fmt(power)}.csv"
                ),
                ["wavelength_nm", "normalized_density"],
                [grid, density],
                runner.comments,
            )


def _run_squeeze_budget(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("squeeze_budget")
    temperature = float(section["temperature_c"])
    probe = float(section["probe_wavelength_nm"])
    params = config.photorefraction(temperature)
    geometry = config.homodyne_geometry(temperature)
    powers = [float(p) for p in section["pump_powers_mw"]]
    for level in [float(x) for x in section["initial_levels_db"]]:
        sweep = measured_squeezing_vs_residual_pump(
            geometry, params, probe, level, powers
        )
        runner.write_sweep(f"homodyne_budget_{_fmt(abs(level))}dB.csv", sweep)
    device = _qpm_device(runner)
    ideal, degraded = effective_squeezing_vs_power(
        device,
        temperature,
        float(section["spdc_pump_wavelength_nm"]),
        params,
        float(section["mu0_per_sqrt_mw"]),
        [float(p) for p in section["spdc_pump_powers_mw"]],
    )
    runner.write_sweep("squeeze_ideal.csv", ideal)
    runner.write_sweep("squeeze_photorefractive.csv", degraded)


def _run_fit_dn(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("fit_dn")
    if not section["inputs"]:
        raise ConfigError("run.fit_dn.inputs: no input sweeps configured")
    sweeps, geometries = {}, {}
    for entry in section["inputs"]:
        temperature = float(entry["temperature_c"])
        sweeps[temperature] = read_sweep_csv(entry["path"])
        geometries[temperature] = config.coupler_geometry(temperature)
    outcomes = fit_delta_n_from_reflectivity(
        sweeps, geometries, float(section["probe_wavelength_nm"])
    )
    for temperature, outcome in sorted(outcomes.items()):
        tag = f"T{_fmt(temperature)}"
        runner.write_sweep(f"delta_n_points_{tag}.csv", outcome.delta_n_points)
        payload = outcome.result.to_json_dict()
        payload["model"] = "delta_n = -a*P/(b + c*P)"
        payload["fitted"] = {
            "a": outcome.params.a,
            "b": outcome.params.b,
            "c": outcome.params.c,
            "temperature_c": temperature,
            "initial_slope_per_mw": outcome.params.a / outcome.params.b,
        }
        payload["excluded_indices"] = outcome.excluded_indices
        runner.write_json(f"fit_dn_{tag}.json", payload)
        for message in outcome.warnings:
            runner.note(f"{tag}: {message}")


def _run_fit_fpi(runner: _Runner) -> None:
    config = runner.config
    section = config.run_section("fit_fpi")
    if not section["input"]:
        raise ConfigError("run.fit_fpi.input: no input trace configured")
    trace = read_trace_csv(section["input"])
    for interval in section.get("mask_intervals_s") or []:
        trace = trace.with_masked_interval(float(interval[0]), float(interval[1]))
    pump_on = section.get("pump_on_time_s")
    fit = fit_fpi_trace(
        trace,
        config.fpi_cavity(),
        probe_wavelength_nm=float(section["probe_wavelength_nm"]),
        temperature_c=float(section["temperature_c"]),
        pump_on_time_s=None if pump_on is None else float(pump_on),
    )
    payload = fit.result.to_json_dict()
    payload["model"] = (
        "Airy transmission driven by dn(t) = dn_total*(1 - exp(-(t - t0)/tau))"
    )
    payload["fitted"] = {
        "delta_n_total": fit.delta_n_total,
        "tau_build_s": fit.tau_build_s,
        "phase_offset_rad": fit.phase_offset_rad,
    }
    runner.write_json("fit_fpi.json", payload)
    for message in fit.result.warnings:
        runner.note(message)


_HANDLERS = {
    "fpi-trace": _run_fpi_trace,
    "fpi-char": _run_fpi_char,
    "coupler-sweep": _run_coupler_sweep,
    "homodyne": _run_homodyne,
    "opo-spectrum": _run_opo_spectrum,
    "spdc-spectrum": _run_spdc_spectrum,
    "squeeze-budget": _run_squeeze_budget,
    "fit-dn": _run_fit_dn,
    "fit-fpi": _run_fit_fpi,
}


def _write_manifest(
    runner: _Runner, subcommand: str, status: str, wall_time_s: float,
    error: str | None,
) -> None:
    manifest = {
        "subcommand": subcommand,
        "status": status,
        "error": error,
        "config_path": runner.config.source_path,
        "config_hash": runner.config.config_hash(),
        "seed": runner.seed,
        "versions": {
            "photoref": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pyyaml": yaml.__version__,
        },
        "wall_time_s": wall_time_s,
        "outputs": runner.outputs,
        "warnings": runner.warnings,
        "resolved_config": runner.config.resolved,
    }
    _write_json(runner.out_dir / "run_manifest.json", manifest)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photoref",
        description=(
            "Simulate and fit photorefractive effects in LiNbO3 integrated "
            "photonic circuits"
        ),
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="YAML configuration file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (u64)")
    parser.add_argument(
        "--strict", action="store_true", help="reject unknown configuration keys"
    )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress informational logging"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = parse_config(args.config, strict=args.strict)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1

    out_dir = Path(args.out if args.out is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else config.seed
    runner = _Runner(config, out_dir, seed, args.quiet)

    start = time.perf_counter()
    try:
        _HANDLERS[args.subcommand](runner)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        _write_manifest(
            runner, args.subcommand, "failed", time.perf_counter() - start, str(exc)
        )
        log.error("validation error: %s", exc)
        return 1
    except (FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _write_manifest(
            runner, args.subcommand, "failed", time.perf_counter() - start, str(exc)
        )
        log.error("numerical failure: %s", exc)
        return 2
    _write_manifest(runner, args.subcommand, "ok", time.perf_counter() - start, None)
    if not args.quiet:
        log.info("wrote %d file(s) to %s", len(runner.outputs), out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
