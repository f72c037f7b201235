"""Damped nonlinear least squares and the prebuilt fitting pipelines.

The engine is a deterministic Levenberg-Marquardt loop (multiply/divide the
damping by 10 on reject/accept) with forward finite-difference Jacobians
and box constraints.  On top of it sit two pipelines: recovering the
saturable index-shift law from coupler reflectivity sweeps, and recovering
the total index excursion and build-up time from a cavity transmission
trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.signal import find_peaks

from .cavity import FpiCavity, finesse
from .coupler import CouplerGeometry, coupler_reflectivity
from .data import SweepData, Trace
from .material import PhotorefractionParams

__all__ = [
    "FitError",
    "FitProblem",
    "FitResult",
    "least_squares",
    "ReflectivityBranch",
    "first_monotone_branch",
    "invert_reflectivity",
    "DeltaNFit",
    "fit_delta_n_from_reflectivity",
    "OscillationEstimate",
    "estimate_delta_n_from_oscillations",
    "FpiTraceFit",
    "fit_fpi_trace",
]

_MAX_DAMPING = 1e14
_MIN_DAMPING = 1e-16
_FD_RELATIVE_STEP = 1e-6
_FD_ABSOLUTE_FLOOR = 1e-12


class FitError(RuntimeError):
    """Raised when a fit cannot proceed (singular Jacobian at maximal damping)."""


@dataclass
class FitProblem:
    """A weighted residual function with bounded parameters.

    ``residual`` maps a parameter vector to (predictions - observations).
    ``weights`` are per-point standard deviations; residuals are divided by
    them.  The initial guess must lie inside the bounds and the number of
    residuals must be at least the number of parameters.
    """

    residual: Callable[[np.ndarray], np.ndarray]
    initial_guess: np.ndarray
    lower_bounds: np.ndarray | None = None
    upper_bounds: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        p0 = np.atleast_1d(np.asarray(self.initial_guess, dtype=float))
        lo = (
            np.full(p0.shape, -np.inf)
            if self.lower_bounds is None
            else np.asarray(self.lower_bounds, dtype=float)
        )
        hi = (
            np.full(p0.shape, np.inf)
            if self.upper_bounds is None
            else np.asarray(self.upper_bounds, dtype=float)
        )
        if lo.shape != p0.shape or hi.shape != p0.shape:
            raise ValueError("bounds must match the parameter vector shape")
        if np.any(lo > hi):
            raise ValueError("lower bounds exceed upper bounds")
        if np.any(p0 < lo) or np.any(p0 > hi):
            raise ValueError("initial guess outside bounds")
        self.initial_guess = p0
        self.lower_bounds = lo
        self.upper_bounds = hi
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w <= 0):
                raise ValueError("weights (standard deviations) must be > 0")
            self.weights = w


@dataclass
class FitResult:
    """Outcome of a least-squares run.

    ``covariance`` is the Gauss-Newton estimate from the final Jacobian,
    scaled by the reduced chi-square; ``residual_history`` records the
    accepted residual norms, starting from the initial point.
    """

    parameters: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    warnings: list[str] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def to_json_dict(self) -> dict:
        return {
            "parameters": [float(x) for x in self.parameters],
            "one_sigma": [float(x) for x in self.uncertainties],
            "covariance": [[float(x) for x in row] for row in self.covariance],
            "residual_norm": float(self.residual_norm),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "warnings": list(self.warnings),
        }


def _weighted_residual(problem: FitProblem, params: np.ndarray) -> np.ndarray:
    r = np.atleast_1d(np.asarray(problem.residual(params), dtype=float))
    if problem.weights is not None:
        if len(problem.weights) != len(r):
            raise ValueError("weights length must match the residual vector")
        r = r / problem.weights
    return r


def _fd_jacobian(problem: FitProblem, params: np.ndarray, r0: np.ndarray) -> np.ndarray:
    """Forward finite differences; steps back off the upper bound when needed."""
    m = len(params)
    jac = np.empty((len(r0), m))
    for j in range(m):
        h = max(_FD_RELATIVE_STEP * abs(params[j]), _FD_ABSOLUTE_FLOOR)
        if params[j] + h > problem.upper_bounds[j]:
            h = -h
        stepped = params.copy()
        stepped[j] += h
        jac[:, j] = (_weighted_residual(problem, stepped) - r0) / h
    return jac


def least_squares(
    problem: FitProblem,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-10,
    max_iter: int = 200,
) -> FitResult:
    """Damped Gauss-Newton minimization of the weighted residual sum of squares.

    The damping is multiplied by 10 on a rejected step and divided by 10 on
    an accepted one; accepted steps never increase the residual norm.
    Convergence means the step or gradient tolerance was met; hitting the
    iteration limit returns the best point found with ``converged=False``.
    Deterministic given identical inputs.
    """
    params = problem.initial_guess.copy()
    r = _weighted_residual(problem, params)
    if len(r) < len(params):
        raise ValueError(
            f"need at least as many data points ({len(r)}) as parameters ({len(params)})"
        )
    cost = float(r @ r)
    history = [math.sqrt(cost)]
    warnings: list[str] = []
    damping: float | None = None
    jac = _fd_jacobian(problem, params, r)
    iterations = 0
    converged = False

    for _ in range(max_iter):
        gradient = jac.T @ r
        if np.max(np.abs(gradient)) < grad_tol:
            converged = True
            break
        hessian = jac.T @ jac
        diag = np.diag(hessian).copy()
        scale = np.where(diag > 0, diag, 1.0)
        if damping is None:
            damping = 1e-6 * float(np.max(scale))
        accepted = False
        while not accepted:
            try:
                step = np.linalg.solve(
                    hessian + damping * np.diag(scale), -gradient
                )
            except np.linalg.LinAlgError:
                step = None
            if step is None or not np.all(np.isfinite(step)):
                damping *= 10.0
                if damping > _MAX_DAMPING:
                    raise FitError("singular Jacobian at maximal damping")
                continue
            trial = np.clip(params + step, problem.lower_bounds, problem.upper_bounds)
            effective_step = trial - params
            r_trial = _weighted_residual(problem, trial)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial <= cost:
                accepted = True
                damping = max(damping / 10.0, _MIN_DAMPING)
            else:
                damping *= 10.0
                if damping > _MAX_DAMPING:
                    warnings.append(
                        "damping limit reached without residual decrease; "
                        "returning best point found"
                    )
                    break
        if not accepted:
            break
        params = trial
        r = r_trial
        cost = cost_trial
        iterations += 1
        history.append(math.sqrt(cost))
        jac = _fd_jacobian(problem, params, r)
        if np.max(np.abs(effective_step)) < step_tol * (1.0 + np.max(np.abs(params))):
            converged = True
            break
    else:
        warnings.append(f"iteration limit ({max_iter}) reached")

    covariance = _gauss_newton_covariance(jac, cost, len(r), len(params), warnings)
    return FitResult(
        parameters=params,
        covariance=covariance,
        residual_norm=math.sqrt(cost),
        iterations=iterations,
        converged=converged,
        warnings=warnings,
        residual_history=history,
    )


def _gauss_newton_covariance(jac, cost, n_points, n_params, warnings):
    hessian = jac.T @ jac
    dof = max(n_points - n_params, 1)
    try:
        inv = np.linalg.inv(hessian)
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(hessian)
        warnings.append("singular Jacobian at the solution; covariance is a pseudo-inverse")
    cov = inv * (cost / dof)
    return 0.5 * (cov + cov.T)


# ---------------------------------------------------------------------------
# Pipeline 1: saturable index-shift law from coupler reflectivity sweeps.


class ReflectivityBranch(NamedTuple):
    """First monotone interval of R(delta_beta) starting at delta_beta = 0."""

    delta_beta_max: float
    r_start: float
    r_end: float
    increasing: bool


def first_monotone_branch(geometry: CouplerGeometry) -> ReflectivityBranch:
    """Locate the first extremum of the reflectivity in |delta_beta|."""
    k = geometry.coupling_constant_per_mm
    grid = np.linspace(0.0, 8.0 * k + 4.0 * math.pi / geometry.interaction_length_mm, 8193)
    r = coupler_reflectivity(geometry, grid)
    diffs = np.diff(r)
    direction = np.sign(diffs[np.flatnonzero(diffs)[0]]) if np.any(diffs) else 1.0
    flips = np.flatnonzero(np.sign(diffs) == -direction)
    if len(flips) == 0:
        db_ext = float(grid[-1])
    else:
        # Refine the extremum inside the bracketing cells by golden section.
        i = int(flips[0])
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        sign = -1.0 if direction > 0 else 1.0

        def objective(db):
            return sign * coupler_reflectivity(geometry, db)

        inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - inv_phi * (b - a)
        d = a + inv_phi * (b - a)
        fc, fd = objective(c), objective(d)
        while b - a > 1e-12:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - inv_phi * (b - a)
                fc = objective(c)
            else:
                a, c, fc = c, d, fd
                d = a + inv_phi * (b - a)
                fd = objective(d)
        db_ext = 0.5 * (a + b)
    r0 = float(coupler_reflectivity(geometry, 0.0))
    r_ext = float(coupler_reflectivity(geometry, db_ext))
    return ReflectivityBranch(db_ext, r0, r_ext, bool(direction > 0))


def invert_reflectivity(
    geometry: CouplerGeometry,
    reflectivity: float,
    branch: ReflectivityBranch | None = None,
) -> float:
    """|delta_beta| whose reflectivity matches, on the first monotone branch.

    Bisection on the branch; raises when the requested value cannot be
    reached on it.
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity {reflectivity!r} outside [0, 1]")
    if branch is None:
        branch = first_monotone_branch(geometry)
    lo_val, hi_val = sorted((branch.r_start, branch.r_end))
    if not lo_val - 1e-12 <= reflectivity <= hi_val + 1e-12:
        raise ValueError(
            f"reflectivity {reflectivity!r} unreachable on the first monotone "
            f"branch [{lo_val:.6f}, {hi_val:.6f}]"
        )
    lo, hi = 0.0, branch.delta_beta_max
    f_lo = branch.r_start - reflectivity
    f_hi = branch.r_end - reflectivity
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    for _ in range(200):
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        f_mid = float(coupler_reflectivity(geometry, mid)) - reflectivity
        if f_mid == 0.0:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class DeltaNFit:
    """Per-temperature outcome of the reflectivity-sweep pipeline."""

    params: PhotorefractionParams
    delta_n_points: SweepData  # per-point |dn| inferred from the sweep
    result: FitResult
    excluded_indices: list[int]
    warnings: list[str]


def fit_delta_n_from_reflectivity(
    sweeps: Mapping[float, SweepData],
    geometries: Mapping[float, CouplerGeometry] | CouplerGeometry,
    probe_wavelength_nm: float = 1550.0,
    gauge_b_mw: float = 10.0,
) -> dict[float, DeltaNFit]:
    """Recover the saturable index-shift law from reflectivity sweeps.

    Two stages per temperature: (i) invert the coupled-mode reflectivity
    point by point for |delta_beta| on the branch continuous from zero
    mismatch, converting to |dn| = lambda*|delta_beta|/(2*pi); (ii) fit the
    (P, |dn|) cloud with the saturable law.

    The law a*P/(b + c*P) is invariant under common rescaling of (a, b, c),
    so ``b`` is pinned to ``gauge_b_mw`` and (a, c) are fitted; the physical
    content (initial slope a/b, saturation a/c) is gauge independent.
    Points whose reflectivity falls beyond the first monotone branch are
    excluded with a warning record.
    """
    lam_mm = probe_wavelength_nm * 1e-6
    outcomes: dict[float, DeltaNFit] = {}
    for temperature, sweep in sweeps.items():
        geometry = (
            geometries[temperature]
            if isinstance(geometries, Mapping)
            else geometries
        )
        if len(sweep) < 4:
            raise ValueError(
                f"{temperature} C sweep has {len(sweep)} points; need at least 4"
            )
        branch = first_monotone_branch(geometry)
        warnings: list[str] = []
        excluded: list[int] = []
        powers, dn_mags, sigmas = [], [], []
        for i, (p, r_obs) in enumerate(zip(sweep.abscissa, sweep.value)):
            if not 0.0 <= r_obs <= 1.0:
                raise ValueError(
                    f"{temperature} C sweep point {i}: reflectivity {r_obs!r} "
                    "outside the reachable range of the coupler model"
                )
            # Noise can push a point behind the zero-mismatch value, where no
            # |delta_beta| exists; such points are physically delta_beta ~ 0.
            behind_start = (
                r_obs < branch.r_start if branch.increasing else r_obs > branch.r_start
            )
            beyond_end = (
                r_obs > branch.r_end if branch.increasing else r_obs < branch.r_end
            )
            if behind_start:
                warnings.append(
                    f"point {i} (P = {p} mW, R = {r_obs:.6f}) behind the "
                    "zero-mismatch reflectivity; clamped to |dn| = 0"
                )
                r_obs = branch.r_start
            elif beyond_end:
                excluded.append(i)
                warnings.append(
                    f"point {i} (P = {p} mW, R = {r_obs:.6f}) beyond the first "
                    "monotone branch; excluded (branch ambiguity)"
                )
                continue
            db = invert_reflectivity(geometry, float(r_obs), branch)
            powers.append(float(p))
            dn_mags.append(db * lam_mm / (2.0 * math.pi))
            if sweep.sigma is not None:
                # Propagate the reflectivity uncertainty through the
                # inversion: sigma_dn = sigma_R / |dR/ddb| * lam/(2*pi).
                h = 1e-6
                slope = (
                    coupler_reflectivity(geometry, db + h)
                    - coupler_reflectivity(geometry, max(db - h, 0.0))
                ) / (db + h - max(db - h, 0.0))
                slope = max(abs(float(slope)), 1e-6)
                sigmas.append(float(sweep.sigma[i]) / slope * lam_mm / (2.0 * math.pi))
        powers_arr = np.asarray(powers)
        dn_arr = np.asarray(dn_mags)
        if len(powers_arr) < 4:
            raise ValueError(
                f"{temperature} C sweep: fewer than 4 usable points after branch checks"
            )

        # Non-dimensionalize: index shifts are ~1e-4 while the engine
        # tolerances are absolute, so fit a/scale against dn/scale.
        scale = float(np.max(dn_arr)) or 1.0

        def residual(params, p=powers_arr):
            a_scaled, c = params
            return a_scaled * p / (gauge_b_mw + c * p) - dn_arr / scale

        positive = powers_arr > 0
        slope0 = (
            float(np.sum(dn_arr[positive] * powers_arr[positive])
                  / np.sum(powers_arr[positive] ** 2))
            if np.any(positive)
            else 0.0
        )
        # Bounds keep the fit off the degenerate ridge a, c -> inf at fixed
        # a/c that opens up when the sweep carries no curvature information.
        problem = FitProblem(
            residual=residual,
            initial_guess=np.array([max(slope0 * gauge_b_mw / scale, 1e-9), 0.0]),
            lower_bounds=np.array([0.0, 0.0]),
            upper_bounds=np.array([1.0 / scale, 100.0]),
            weights=np.asarray(sigmas) / scale if sigmas else None,
        )
        result = least_squares(problem)
        a_fit = result.parameters[0] * scale
        c_fit = result.parameters[1]
        result.parameters = np.array([a_fit, c_fit])
        result.covariance = result.covariance * np.array(
            [[scale * scale, scale], [scale, 1.0]]
        )
        params = PhotorefractionParams(
            a=float(a_fit), b=gauge_b_mw, c=float(c_fit), temperature_c=temperature
        )
        result.warnings.extend(warnings)
        outcomes[temperature] = DeltaNFit(
            params=params,
            delta_n_points=SweepData(powers_arr, dn_arr),
            result=result,
            excluded_indices=excluded,
            warnings=warnings,
        )
    return outcomes


# ---------------------------------------------------------------------------
# Pipeline 2: index excursion and build-up time from a cavity trace.


class OscillationEstimate(NamedTuple):
    """Index excursion bound from counting transmission half-oscillations."""

    half_periods: int
    delta_n_magnitude: float


def estimate_delta_n_from_oscillations(
    trace: Trace, cavity: FpiCavity, probe_wavelength_nm: float
) -> OscillationEstimate:
    """Count interior extrema of the trace; each one is a half-oscillation.

    A half-oscillation of the cavity transmission corresponds to an index
    step of lambda/(4L), so the count gives |dn_total| to within one
    half-period quantum.  The trace is lightly smoothed first so that
    detector noise does not masquerade as oscillations.
    """
    _, values = trace.unmasked()
    window = max(len(values) // 64, 1)
    if window > 1:
        kernel = np.full(window, 1.0 / window)
        values = np.convolve(values, kernel, mode="valid")
    prominence = 0.15 * (values.max() - values.min())
    if prominence == 0:
        return OscillationEstimate(0, 0.0)
    peaks, _ = find_peaks(values, prominence=prominence)
    troughs, _ = find_peaks(-values, prominence=prominence)
    n_half = len(peaks) + len(troughs)
    quantum = probe_wavelength_nm / (4.0 * cavity.length_mm * 1e6)
    return OscillationEstimate(n_half, n_half * quantum)


@dataclass
class FpiTraceFit:
    """Recovered transient parameters of a pump-on cavity trace."""

    delta_n_total: float  # signed, <= 0 by convention
    tau_build_s: float
    phase_offset_rad: float
    result: FitResult


def fit_fpi_trace(
    trace: Trace,
    cavity: FpiCavity,
    probe_wavelength_nm: float,
    temperature_c: float,
    pump_on_time_s: float | None = None,
) -> FpiTraceFit:
    """Fit the pump-on transient of a normalized cavity transmission trace.

    The model is a first-order index relaxation driving the Airy
    transmission: dn(t) = dn_total*(1 - exp(-(t - t0)/tau)) inside
    T(phi0 + 2*pi*L*dn/lambda), normalized to the pre-pump value.  The
    cavity phase at pump-on is not known a priori, so several phase starts
    are tried and the best fit kept.  Masked trace samples are ignored.

    When the fitted excursion stays below lambda/(8L) no transmission
    oscillation is resolved; the returned magnitude is then only a bound
    and the fit is flagged unconverged.
    """
    reflectivity = cavity.reflectivity_at(probe_wavelength_nm)
    coefficient, _ = finesse(reflectivity, reflectivity)
    if coefficient == 0 or cavity.angled_facets:
        raise ValueError("trace fitting needs a resonant cavity (finite finesse)")
    t, y = trace.unmasked()
    if len(t) < 8:
        raise ValueError("trace too short to fit")
    t0 = float(t[0]) if pump_on_time_s is None else float(pump_on_time_s)
    span = float(t[-1] - t0)
    if span <= 0:
        raise ValueError("trace must extend beyond the pump-on time")
    phase_scale = 2.0 * math.pi * cavity.length_mm * 1e6 / probe_wavelength_nm

    def model(params):
        dn_total, tau, phi0 = params
        dn = dn_total * (1.0 - np.exp(-np.clip(t - t0, 0.0, None) / tau))
        transmission = 1.0 / (1.0 + coefficient * np.sin(phi0 + phase_scale * dn) ** 2)
        reference = 1.0 / (1.0 + coefficient * math.sin(phi0) ** 2)
        return transmission / reference

    def residual(params):
        return model(params) - y

    quantum = probe_wavelength_nm / (4.0 * cavity.length_mm * 1e6)
    estimate = estimate_delta_n_from_oscillations(trace, cavity, probe_wavelength_nm)
    dn_start = -(estimate.half_periods + 0.5) * quantum
    lower = np.array([-5e-3, span * 1e-4, -2.0 * math.pi])
    upper = np.array([0.0, span * 1e2, 2.0 * math.pi])

    best: FitResult | None = None
    for phi0 in np.linspace(0.0, math.pi, 8, endpoint=False):
        for tau0 in (span / 10.0, span / 3.0):
            guess = np.array([dn_start, tau0, phi0])
            problem = FitProblem(
                residual=residual,
                initial_guess=np.clip(guess, lower, upper),
                lower_bounds=lower,
                upper_bounds=upper,
            )
            candidate = least_squares(problem)
            if best is None or candidate.residual_norm < best.residual_norm:
                best = candidate

    dn_total, tau, phi0 = best.parameters
    if abs(dn_total) < quantum / 2.0:
        best.converged = False
        best.warnings.append(
            "no transmission oscillation detected: |dn_total| below lambda/(8L); "
            "the value is an upper-bound estimate"
        )
    return FpiTraceFit(
        delta_n_total=float(dn_total),
        tau_build_s=float(tau),
        phase_offset_rad=float(phi0),
        result=best,
    )
