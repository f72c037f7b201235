"""Waveguide Fabry-Perot cavities and detuned below-threshold squeezer spectra.

Covers the parasitic resonator formed by waveguide end-facets (Airy
transmission driven by the photorefractive index shift), the conversion of
an index shift into a normalized cavity detuning, and the quadrature noise
spectra of a degenerate parametric oscillator below threshold with a
detuned cavity, from the standard linearized input-output treatment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Trace
from .material import (
    MaterialModel,
    PhotorefractionParams,
    PumpSchedule,
    delta_n_temporal,
    refractive_index,
)

__all__ = [
    "SPEED_OF_LIGHT_M_S",
    "FpiCavity",
    "SqueezerCavity",
    "finesse",
    "fpi_transmission",
    "fpi_characteristics",
    "simulate_fpi_trace",
    "delta_n_to_detuning",
    "opo_spectrum_matrix",
    "opo_quadrature_spectrum",
    "opo_optimal_levels",
    "detuned_threshold",
    "pump_parameter_for_squeezing_db",
]

SPEED_OF_LIGHT_M_S = 299_792_458.0

# Wavelengths below this boundary use the pump-band facet reflectivity and
# mode; at or above it, the probe band applies.
_BAND_SPLIT_NM = 1000.0


@dataclass(frozen=True)
class FpiCavity:
    """Parasitic Fabry-Perot formed by the chip end-facets.

    Per-facet reflectivities are configuration inputs (one per wavelength
    band, so coated facets can be modelled).  Angle-polished facets suppress
    the cavity entirely: transmission is 1 independent of phase.
    """

    length_mm: float
    facet_reflectivity_probe: float
    facet_reflectivity_pump: float
    material: MaterialModel
    angled_facets: bool = False
    probe_mode: str = "fundamental-telecom"
    pump_mode: str = "fundamental-nir"

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ValueError("cavity length must be > 0")
        for r in (self.facet_reflectivity_probe, self.facet_reflectivity_pump):
            if not 0 <= r < 1:
                raise ValueError("facet reflectivities must lie in [0, 1)")

    def reflectivity_at(self, wavelength_nm: float) -> float:
        if wavelength_nm < _BAND_SPLIT_NM:
            return self.facet_reflectivity_pump
        return self.facet_reflectivity_probe

    def mode_for(self, wavelength_nm: float) -> str:
        return self.pump_mode if wavelength_nm < _BAND_SPLIT_NM else self.probe_mode


@dataclass(frozen=True)
class SqueezerCavity:
    """Intentional waveguide resonator with distinct mirror reflectivities."""

    length_mm: float
    mirror_r1: float
    mirror_r2: float
    material: MaterialModel
    mode: str = "fundamental-telecom"

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ValueError("cavity length must be > 0")
        for r in (self.mirror_r1, self.mirror_r2):
            if not 0 < r < 1:
                raise ValueError("mirror reflectivities must lie in (0, 1)")


def finesse(reflectivity_1: float, reflectivity_2: float) -> tuple[float, float]:
    """Both finesse definitions for a two-mirror cavity.

    Returns ``(coefficient_of_finesse, conventional_finesse)`` where the
    coefficient 4*sqrt(R1 R2)/(1 - sqrt(R1 R2))^2 is the contrast factor of
    the Airy transmission formula and the conventional finesse
    pi*(R1 R2)^(1/4)/(1 - sqrt(R1 R2)) is the FSR/FWHM ratio.  The two are
    deliberately kept apart: they differ by orders of magnitude at low
    reflectivity.
    """
    for r in (reflectivity_1, reflectivity_2):
        if not 0 <= r < 1:
            raise ValueError("reflectivities must lie in [0, 1)")
    g = math.sqrt(reflectivity_1 * reflectivity_2)
    if g == 0:
        return 0.0, 0.0
    coefficient = 4.0 * g / (1.0 - g) ** 2
    conventional = math.pi * math.sqrt(g) / (1.0 - g)
    return coefficient, conventional


def fpi_transmission(
    cavity: FpiCavity, wavelength_nm: float, temperature_c: float, delta_n
):
    """Airy transmission of the facet cavity at a given index shift.

    T = 1 / (1 + F*sin^2(2*pi*L*(n_eff + dn)/lam)) with F the coefficient
    of finesse.  Angle-polished facets (or F = 0) bypass the cavity term and
    return exactly 1.
    """
    dn = np.asarray(delta_n, dtype=float)
    if cavity.angled_facets:
        out = np.ones_like(dn)
        return float(out) if np.isscalar(delta_n) else out
    r = cavity.reflectivity_at(wavelength_nm)
    coefficient, _ = finesse(r, r)
    if coefficient == 0:
        out = np.ones_like(dn)
        return float(out) if np.isscalar(delta_n) else out
    n_eff = refractive_index(
        cavity.material, wavelength_nm, temperature_c, cavity.mode_for(wavelength_nm)
    )
    length_nm = cavity.length_mm * 1e6
    phase = 2.0 * math.pi * length_nm * (n_eff + dn) / wavelength_nm
    t = 1.0 / (1.0 + coefficient * np.sin(phase) ** 2)
    return float(t) if np.isscalar(delta_n) else t


def fpi_characteristics(
    cavity: FpiCavity, wavelength_nm: float, temperature_c: float
) -> tuple[float, float | None]:
    """Free spectral range and linewidth of the facet cavity, in picometres.

    Returns ``(fsr_pm, fwhm_pm)``.  The FWHM is only meaningful when the
    fringe contrast actually reaches half maximum, which requires a
    coefficient of finesse above 1; below that the FWHM is reported as
    ``None`` with the FSR still returned.
    """
    n_eff = refractive_index(
        cavity.material, wavelength_nm, temperature_c, cavity.mode_for(wavelength_nm)
    )
    length_nm = cavity.length_mm * 1e6
    fsr_pm = wavelength_nm**2 / (2.0 * n_eff * length_nm) * 1000.0
    r = cavity.reflectivity_at(wavelength_nm)
    coefficient, conventional = finesse(r, r)
    if cavity.angled_facets or coefficient <= 1.0:
        return fsr_pm, None
    return fsr_pm, fsr_pm / conventional


def simulate_fpi_trace(
    cavity: FpiCavity,
    schedule: PumpSchedule,
    params: PhotorefractionParams,
    probe_wavelength_nm: float,
    temperature_c: float,
    sample_period_s: float,
    duration_s: float | None = None,
) -> Trace:
    """Probe transmission versus time while the pump schedule drives dn(t).

    Samples the Airy transmission at the instantaneous index shift and
    normalizes to the pre-pump (dn = 0) transmission.  Mode hopping and
    input-coupling drift are outside the model.
    """
    if sample_period_s <= 0:
        raise ValueError("sample period must be > 0")
    if not schedule.segments:
        raise ValueError("pump schedule is empty")
    if duration_s is None:
        duration_s = schedule.horizon_s
    n_samples = int(math.floor(duration_s / sample_period_s)) + 1
    t = np.arange(n_samples) * sample_period_s
    dn = delta_n_temporal(params, schedule, t)
    values = fpi_transmission(cavity, probe_wavelength_nm, temperature_c, dn)
    reference = fpi_transmission(cavity, probe_wavelength_nm, temperature_c, 0.0)
    return Trace(time_s=t, value=values / reference)


def delta_n_to_detuning(
    cavity: SqueezerCavity, delta_n: float, wavelength_nm: float,
    temperature_c: float = 30.0,
) -> float:
    """Normalized cavity detuning produced by an index shift.

    The resonance shift d_omega = omega*|dn|/n_eff is divided by the cavity
    amplitude decay rate kappa = (1 - sqrt(r1*r2))/t_roundtrip, i.e. the
    half-linewidth in angular frequency.  Linear in |dn|.
    """
    if abs(delta_n) >= 1e-2:
        raise ValueError("index shift out of the perturbative range (|dn| < 1e-2)")
    n_eff = refractive_index(
        cavity.material, wavelength_nm, temperature_c, cavity.mode
    )
    omega = 2.0 * math.pi * SPEED_OF_LIGHT_M_S / (wavelength_nm * 1e-9)
    domega = omega * abs(delta_n) / n_eff
    t_roundtrip = 2.0 * n_eff * (cavity.length_mm * 1e-3) / SPEED_OF_LIGHT_M_S
    kappa = (1.0 - math.sqrt(cavity.mirror_r1 * cavity.mirror_r2)) / t_roundtrip
    return domega / kappa


def detuned_threshold(normalized_detuning: float) -> float:
    """Pump parameter at threshold for a detuned cavity: sqrt(1 + detuning^2)."""
    return math.sqrt(1.0 + normalized_detuning**2)


def pump_parameter_for_squeezing_db(squeezing_db: float) -> float:
    """Pump parameter whose zero-detuning squeezing floor is the given level.

    Inverts S = 1 - 4*sigma/(1 + sigma)^2 = 10^(dB/10) on the below-threshold
    branch; the floor sits at zero analysis frequency.
    """
    if squeezing_db >= 0:
        raise ValueError("squeezing level must be < 0 dB")
    s = 10.0 ** (squeezing_db / 10.0)
    b = 4.0 / (1.0 - s) - 2.0
    return (b - math.sqrt(b * b - 4.0)) / 2.0


def opo_spectrum_matrix(pump_parameter: float, normalized_detuning: float, omega):
    """Output quadrature spectral matrix of the detuned degenerate OPO.

    Linearized intracavity equations in units of the cavity amplitude decay
    rate (kappa = 1), pump parameter sigma below the detuned threshold,
    detuning Delta, analysis frequency omega.  With quadrature vector
    (X, Y), X squeezed at zero detuning, the input-output relations give a
    real symmetric spectral matrix; returns ``(S_xx, S_yy, S_xy)``,
    vacuum = 1.
    """
    sigma = float(pump_parameter)
    delta = float(normalized_detuning)
    if sigma < 0:
        raise ValueError("pump parameter must be >= 0")
    if sigma >= detuned_threshold(delta):
        raise ValueError(
            f"pump parameter {sigma} at or above the detuned threshold "
            f"{detuned_threshold(delta):.6f}"
        )
    w = np.asarray(omega, dtype=float)
    det2 = (1.0 - w**2 - sigma**2 + delta**2) ** 2 + 4.0 * w**2
    n1 = (1.0 - sigma) ** 2 + w**2 - delta**2
    n2 = (1.0 + sigma) ** 2 + w**2 - delta**2
    s_xx = (n1**2 + 4.0 * delta**2) / det2
    s_yy = (n2**2 + 4.0 * delta**2) / det2
    s_xy = 8.0 * sigma * delta / det2
    return s_xx, s_yy, s_xy


def opo_quadrature_spectrum(
    pump_parameter: float,
    normalized_detuning: float,
    omega,
    quadrature_angle,
    detection_efficiency: float = 1.0,
):
    """Vacuum-normalized noise of one output quadrature of the detuned OPO.

    At zero detuning and zero quadrature angle this reduces to
    S = 1 - 4*sigma/((1 + sigma)^2 + omega^2).  Detection efficiency mixes
    the spectrum with vacuum: eta*S + (1 - eta).
    """
    eta = float(detection_efficiency)
    if not 0.0 <= eta <= 1.0:
        raise ValueError("detection efficiency must lie in [0, 1]")
    s_xx, s_yy, s_xy = opo_spectrum_matrix(
        pump_parameter, normalized_detuning, omega
    )
    c = np.cos(quadrature_angle)
    s = np.sin(quadrature_angle)
    spec = c**2 * s_xx + s**2 * s_yy + 2.0 * c * s * s_xy
    out = eta * spec + (1.0 - eta)
    if np.isscalar(omega) and np.isscalar(quadrature_angle):
        return float(out)
    return out


def _eigen_extrema(s_xx, s_yy, s_xy):
    """Min/max over the quadrature angle of the spectral form at fixed omega."""
    mean = 0.5 * (s_xx + s_yy)
    radius = np.sqrt((0.5 * (s_xx - s_yy)) ** 2 + s_xy**2)
    return mean - radius, mean + radius


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section minimum of a unimodal scalar function on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def opo_optimal_levels(
    pump_parameter: float,
    normalized_detuning: float,
    detection_efficiency: float = 1.0,
    omega_max: float = 20.0,
    omega_step: float = 0.05,
) -> tuple[float, float]:
    """Best squeezing and antisqueezing of the detuned OPO, in dB.

    Optimizes over analysis frequency (grid scan on [0, omega_max] plus
    golden-section refinement) and quadrature angle (exact eigenvalue
    extrema of the spectral form at each frequency).  Returns
    ``(best_squeezing_db, best_antisqueezing_db)`` with
    dB = 10*log10(noise / vacuum), negative meaning below shot noise.
    """
    eta = float(detection_efficiency)
    omega = np.arange(0.0, omega_max + omega_step / 2, omega_step)
    lo, hi = _eigen_extrema(
        *opo_spectrum_matrix(pump_parameter, normalized_detuning, omega)
    )

    def lo_at(w):
        return _eigen_extrema(
            *opo_spectrum_matrix(pump_parameter, normalized_detuning, w)
        )[0]

    def neg_hi_at(w):
        return -_eigen_extrema(
            *opo_spectrum_matrix(pump_parameter, normalized_detuning, w)
        )[1]

    i = int(np.argmin(lo))
    w_lo = omega[max(i - 1, 0)]
    w_hi = omega[min(i + 1, len(omega) - 1)]
    _, best_min = _golden_min(lo_at, w_lo, w_hi)
    best_min = min(best_min, float(lo[i]))

    j = int(np.argmax(hi))
    w_lo = omega[max(j - 1, 0)]
    w_hi = omega[min(j + 1, len(omega) - 1)]
    _, neg_best_max = _golden_min(neg_hi_at, w_lo, w_hi)
    best_max = max(-neg_best_max, float(hi[j]))

    squeeze = eta * best_min + (1.0 - eta)
    antisqueeze = eta * best_max + (1.0 - eta)
    return 10.0 * math.log10(squeeze), 10.0 * math.log10(antisqueeze)
