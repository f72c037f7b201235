"""Quasi-phase-matched SPDC spectra under pump-induced index shifts.

Energy conservation fixes the idler for each signal wavelength; the
phase mismatch of the poled waveguide then shapes the emission as
sinc^2(dk*L/2).  The photorefractive shift is applied to the pump index
(the short-wavelength beam dominates the effect), moving the emission
toward or away from degeneracy as pump power changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import SweepData
from .material import MaterialModel, PhotorefractionParams, delta_n_steady, refractive_index

__all__ = [
    "QpmDevice",
    "SpdcOperatingPoint",
    "idler_wavelength",
    "qpm_mismatch",
    "calibrate_poling_period",
    "spdc_spectrum",
    "degeneracy_power",
    "effective_squeezing_vs_power",
    "DB_PER_NEPER",
]

DB_PER_NEPER = 20.0 * math.log10(math.e)


@dataclass(frozen=True)
class QpmDevice:
    """Periodically poled waveguide with mode assignments per beam.

    ``telecom_shift_fraction`` optionally applies that fraction of the pump
    index shift to the signal and idler indices as well, for sensitivity
    studies; the default models the shift on the pump only.
    """

    poling_period_um: float
    length_mm: float
    material: MaterialModel
    pump_mode: str = "fundamental-nir"
    signal_mode: str = "fundamental-telecom"
    idler_mode: str = "fundamental-telecom"
    telecom_shift_fraction: float = 0.0

    def __post_init__(self):
        if self.poling_period_um <= 0:
            raise ValueError("poling period must be > 0")
        if self.length_mm <= 0:
            raise ValueError("device length must be > 0")


@dataclass(frozen=True)
class SpdcOperatingPoint:
    """Pump wavelength, chip temperature, and coupled pump power."""

    pump_wavelength_nm: float
    temperature_c: float
    pump_power_mw: float = 0.0

    def __post_init__(self):
        if not 700.0 <= self.pump_wavelength_nm <= 800.0:
            raise ValueError("pump wavelength must lie in [700, 800] nm")
        if self.pump_power_mw < 0:
            raise ValueError("pump power must be >= 0")


def idler_wavelength(pump_wavelength_nm: float, signal_wavelength_nm):
    """Idler wavelength from energy conservation 1/lp = 1/ls + 1/li."""
    lam_s = np.asarray(signal_wavelength_nm, dtype=float)
    lam_i = 1.0 / (1.0 / pump_wavelength_nm - 1.0 / lam_s)
    return float(lam_i) if np.isscalar(signal_wavelength_nm) else lam_i


def _check_signal_range(pump_wavelength_nm: float, signal_wavelength_nm) -> None:
    lam_s = np.atleast_1d(np.asarray(signal_wavelength_nm, dtype=float))
    lo = 2.0 * pump_wavelength_nm * 0.7
    hi = 2.0 * pump_wavelength_nm * 1.5
    if np.any(lam_s <= lo) or np.any(lam_s >= hi):
        raise ValueError(
            f"signal wavelength outside the physical window ({lo:.1f}, {hi:.1f}) nm"
        )


def qpm_mismatch(
    device: QpmDevice,
    point: SpdcOperatingPoint,
    signal_wavelength_nm,
    photorefraction: PhotorefractionParams,
):
    """Phase mismatch dk (1/mm) including the grating and the pump index shift.

    dk = 2*pi*[(n_p + dn_p)/lam_p - n_s/lam_s - n_i/lam_i - 1/poling_period]
    with the idler fixed by energy conservation.
    """
    _check_signal_range(point.pump_wavelength_nm, signal_wavelength_nm)
    lam_s = np.asarray(signal_wavelength_nm, dtype=float)
    lam_i = idler_wavelength(point.pump_wavelength_nm, lam_s)
    t = point.temperature_c
    dn = delta_n_steady(photorefraction, point.pump_power_mw)
    n_p = refractive_index(
        device.material, point.pump_wavelength_nm, t, device.pump_mode
    ) + dn
    n_s = refractive_index(device.material, lam_s, t, device.signal_mode)
    n_i = refractive_index(device.material, lam_i, t, device.idler_mode)
    if device.telecom_shift_fraction:
        n_s = n_s + device.telecom_shift_fraction * dn
        n_i = n_i + device.telecom_shift_fraction * dn
    # All lengths in mm: wavelengths nm * 1e-6, poling period um * 1e-3.
    lam_p_mm = point.pump_wavelength_nm * 1e-6
    lam_s_mm = lam_s * 1e-6
    lam_i_mm = lam_i * 1e-6
    period_mm = device.poling_period_um * 1e-3
    dk = 2.0 * math.pi * (
        n_p / lam_p_mm - n_s / lam_s_mm - n_i / lam_i_mm - 1.0 / period_mm
    )
    return float(dk) if np.isscalar(signal_wavelength_nm) else dk


def calibrate_poling_period(
    material: MaterialModel,
    temperature_c: float,
    pump_wavelength_nm: float,
    degeneracy_wavelength_nm: float,
    pump_mode: str = "fundamental-nir",
    signal_mode: str = "fundamental-telecom",
    idler_mode: str = "fundamental-telecom",
    pump_index_shift: float = 0.0,
) -> float:
    """Poling period (um) nulling the mismatch at a chosen degeneracy point.

    Inverts the phase-matching condition at lam_s = lam_i = the degeneracy
    wavelength.  ``pump_index_shift`` lets the calibration absorb a
    photorefractive offset so that dk = 0 is hit at a reference pump power
    rather than at zero power.
    """
    n_p = refractive_index(material, pump_wavelength_nm, temperature_c, pump_mode)
    n_p += pump_index_shift
    n_s = refractive_index(material, degeneracy_wavelength_nm, temperature_c, signal_mode)
    n_i = refractive_index(material, degeneracy_wavelength_nm, temperature_c, idler_mode)
    lam_p_mm = pump_wavelength_nm * 1e-6
    lam_deg_mm = degeneracy_wavelength_nm * 1e-6
    inverse_period = n_p / lam_p_mm - (n_s + n_i) / lam_deg_mm  # 1/mm
    if inverse_period <= 0:
        raise ValueError(
            "dispersion insufficient for quasi-phase matching at these inputs "
            f"(non-positive inverse period {inverse_period!r} 1/mm)"
        )
    return 1.0 / inverse_period * 1e3


def spdc_spectrum(
    device: QpmDevice,
    point: SpdcOperatingPoint,
    photorefraction: PhotorefractionParams,
    wavelength_grid_nm,
    background: float = 0.0,
) -> np.ndarray:
    """Normalized SPDC spectral density over a signal-wavelength grid.

    Each grid wavelength collects its own sinc^2 phase-matching weight plus
    the twin contribution at the energy-conserving partner wavelength, so
    the plotted density covers both photons of each pair.  An optional
    constant background stands in for detector dark counts.  Normalized to
    unit maximum.
    """
    grid = np.asarray(wavelength_grid_nm, dtype=float)
    degeneracy = 2.0 * point.pump_wavelength_nm
    if not (grid.min() < degeneracy < grid.max()):
        raise ValueError("wavelength grid must bracket the degeneracy point")
    if background < 0:
        raise ValueError("background must be >= 0")
    half_phase = qpm_mismatch(device, point, grid, photorefraction) * device.length_mm / 2.0
    twin = idler_wavelength(point.pump_wavelength_nm, grid)
    half_phase_twin = (
        qpm_mismatch(device, point, twin, photorefraction) * device.length_mm / 2.0
    )
    density = np.sinc(half_phase / math.pi) ** 2 + np.sinc(half_phase_twin / math.pi) ** 2
    density = density + background
    return density / density.max()


def degeneracy_power(
    device: QpmDevice,
    pump_wavelength_nm: float,
    temperature_c: float,
    photorefraction: PhotorefractionParams,
    max_power_mw: float = 100.0,
    tol: float = 1e-9,
) -> float | None:
    """Pump power at which the mismatch at degeneracy crosses zero, by bisection.

    Returns None when no sign change exists on [0, max_power_mw].
    """
    def mismatch_at(p):
        pt = SpdcOperatingPoint(pump_wavelength_nm, temperature_c, p)
        return qpm_mismatch(device, pt, 2.0 * pump_wavelength_nm, photorefraction)

    lo, hi = 0.0, float(max_power_mw)
    f_lo, f_hi = mismatch_at(lo), mismatch_at(hi)
    if f_lo == 0.0:
        return 0.0
    if f_lo * f_hi > 0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = mismatch_at(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def effective_squeezing_vs_power(
    device: QpmDevice,
    temperature_c: float,
    pump_wavelength_nm: float,
    photorefraction: PhotorefractionParams,
    mu0_per_sqrt_mw: float,
    pump_powers_mw,
) -> tuple[SweepData, SweepData]:
    """Ideal and photorefraction-degraded squeezing versus pump power, in dB.

    The ideal curve assumes a constant nonlinear efficiency,
    s = mu0*sqrt(P); the degraded curve scales the efficiency by
    |sinc(dk(P)*L/2)| at the degenerate wavelength, where dk(P) includes
    the pump index shift.  Returns ``(ideal, photorefractive)`` sweeps.
    """
    if mu0_per_sqrt_mw <= 0:
        raise ValueError("nonlinear efficiency must be > 0")
    powers = np.asarray(pump_powers_mw, dtype=float)
    if np.any(powers < 0):
        raise ValueError("pump powers must be >= 0")
    s_ideal = mu0_per_sqrt_mw * np.sqrt(powers)
    ideal_db = -DB_PER_NEPER * s_ideal

    degraded_db = np.empty_like(ideal_db)
    degeneracy = 2.0 * pump_wavelength_nm
    for i, p in enumerate(powers):
        point = SpdcOperatingPoint(pump_wavelength_nm, temperature_c, float(p))
        half_phase = (
            qpm_mismatch(device, point, degeneracy, photorefraction)
            * device.length_mm
            / 2.0
        )
        degraded_db[i] = -DB_PER_NEPER * s_ideal[i] * abs(np.sinc(half_phase / math.pi))
    return SweepData(powers, ideal_db), SweepData(powers, degraded_db)
