import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photoref.material import (
    BULK_MODE,
    MaterialModel,
    PhotorefractionParams,
    PumpSchedule,
    PumpSegment,
    default_photorefraction,
    delta_n_steady,
    delta_n_temporal,
    refractive_index,
)


def hand_bulk_index(lam_um: float, t_c: float) -> float:
    """Independent step-by-step evaluation of the published dispersion formula."""
    f = (t_c - 24.5) * (t_c + 570.82)
    term1 = 5.35583 + 4.629e-7 * f
    term2 = (0.100473 + 3.862e-8 * f) / (lam_um**2 - (0.20692 - 0.89e-8 * f) ** 2)
    term3 = (100.0 + 2.657e-5 * f) / (lam_um**2 - 11.34927**2)
    term4 = -1.5334e-2 * lam_um**2
    return math.sqrt(term1 + term2 + term3 + term4)


class TestDispersion:
    def test_bulk_index_matches_hand_evaluation(self, material):
        got = refractive_index(material, 1550.0, 30.0, BULK_MODE)
        assert got == pytest.approx(hand_bulk_index(1.550, 30.0), abs=1e-12)
        got775 = refractive_index(material, 775.0, 30.0, BULK_MODE)
        assert got775 == pytest.approx(hand_bulk_index(0.775, 30.0), abs=1e-12)

    def test_calibrated_targets_are_exact(self, material):
        assert refractive_index(material, 1550.0, 30.0, "fundamental-telecom") == 2.13
        assert refractive_index(material, 775.0, 30.0, "fundamental-nir") == 2.18

    def test_unknown_mode_rejected(self, material):
        with pytest.raises(KeyError, match="unknown mode"):
            refractive_index(material, 1550.0, 30.0, "tm99")

    @pytest.mark.parametrize(
        "lam, t", [(300.0, 30.0), (2500.0, 30.0), (1550.0, 10.0), (1550.0, 250.0)]
    )
    def test_out_of_range_rejected(self, material, lam, t):
        with pytest.raises(ValueError, match="outside validated range"):
            refractive_index(material, lam, t, BULK_MODE)

    @pytest.mark.parametrize("t", [20.0, 30.0, 90.0, 200.0])
    def test_index_above_unity(self, material, t):
        lam = np.linspace(400.0, 2000.0, 801)
        n = material.bulk_index(lam, t)
        assert np.all(n > 1.0)

    @pytest.mark.parametrize("t", [20.0, 30.0, 90.0, 200.0])
    def test_monotone_decreasing_in_band(self, material, t):
        lam = np.linspace(700.0, 1600.0, 901)
        n = material.bulk_index(lam, t)
        assert np.all(np.diff(n) < 0)

    @given(offset=st.floats(-0.4, 0.4), lam=st.floats(900.0, 1900.0),
           t=st.floats(20.0, 200.0))
    @settings(max_examples=200, deadline=None)
    def test_calibration_round_trip_bit_exact(self, offset, lam, t):
        coeffs = MaterialModel().coefficients
        target = coeffs.index(lam, t) + offset
        model = MaterialModel.calibrated({"m": (lam, t, target)}, coeffs)
        assert refractive_index(model, lam, t, "m") == target


class TestSteadyState:
    def test_zero_power_gives_zero(self, params30):
        assert delta_n_steady(params30, 0.0) == 0.0

    def test_ten_milliwatt_anchor(self, params30):
        dn = delta_n_steady(params30, 10.0)
        assert dn < 0
        assert 0.8e-4 <= abs(dn) <= 1.2e-4

    def test_saturation_limit(self, params30):
        dn = delta_n_steady(params30, 1e12)
        assert abs(dn) == pytest.approx(params30.saturation_magnitude, rel=1e-9)

    @given(p1=st.floats(0.0, 1e3), p2=st.floats(0.0, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_monotone_non_increasing(self, params30, p1, p2):
        lo, hi = sorted((p1, p2))
        assert delta_n_steady(params30, lo) >= delta_n_steady(params30, hi)

    def test_linear_regime_against_exact_formula(self, params30):
        # Exact deviation from the initial slope is c*P/(b + c*P): below 2 %
        # for P <= 0.02*b/c and below 5 % out to P = 0.05*b/c.
        b_over_c = params30.b / params30.c
        slope = params30.a / params30.b
        for bound, tol in ((0.02 * b_over_c, 0.02), (0.05 * b_over_c, 0.05)):
            p = np.linspace(1e-6, bound, 50)
            exact = delta_n_steady(params30, p)
            linear = -slope * p
            assert np.all(np.abs(exact - linear) <= tol * np.abs(exact) * (1 + 1e-9))

    def test_negative_power_rejected(self, params30):
        with pytest.raises(ValueError):
            delta_n_steady(params30, -1.0)

    def test_invariant_violations_rejected(self):
        with pytest.raises(ValueError):
            PhotorefractionParams(a=-1e-4, b=10.0, c=0.02)
        with pytest.raises(ValueError, match="b and c cannot both be zero"):
            PhotorefractionParams(a=1e-4, b=0.0, c=0.0)
        with pytest.raises(ValueError, match="tau_erase"):
            PhotorefractionParams(a=1e-4, b=10.0, c=0.02, tau_erase_s=1e5)
        with pytest.raises(ValueError):
            PhotorefractionParams(a=1e-4, b=10.0, c=0.02, tau_build_s=0.0)


def fig2_like_schedule() -> PumpSchedule:
    return PumpSchedule(
        [
            PumpSegment(0.0, 140.0, 5.0),
            PumpSegment(140.0, 165.0, 0.0),
            PumpSegment(165.0, 300.0, 0.0, erasing_light=True),
        ]
    )


class TestTemporal:
    def test_initial_condition(self, params30):
        assert delta_n_temporal(params30, fig2_like_schedule(), 0.0) == 0.0

    def test_relaxes_to_steady_state(self, params30):
        schedule = PumpSchedule.single_pump(5.0, 0.0, 1e4)
        target = delta_n_steady(params30, 5.0)
        at_5tau = delta_n_temporal(params30, schedule, 5.0 * params30.tau_build_s)
        assert abs(at_5tau - target) <= 0.01 * abs(target)
        at_50tau = delta_n_temporal(params30, schedule, 50.0 * params30.tau_build_s)
        assert abs(at_50tau - target) < 1e-10

    def test_erasure_returns_to_zero(self, params30):
        schedule = PumpSchedule(
            [PumpSegment(0.0, 50.0, 5.0), PumpSegment(50.0, 1e4, 0.0, True)]
        )
        assert abs(
            delta_n_temporal(params30, schedule, 50.0 + 50.0 * params30.tau_erase_s)
        ) < 1e-10

    def test_fig2_phases_match_closed_form(self, params30):
        """Hand-chained exponentials reproduce the piecewise solution."""
        schedule = fig2_like_schedule()
        ss = delta_n_steady(params30, 5.0)
        state140 = ss * (1.0 - math.exp(-140.0 / params30.tau_build_s))
        state164 = state140 * math.exp(-24.0 / params30.tau_dark_s)
        state165 = state140 * math.exp(-25.0 / params30.tau_dark_s)
        state180 = state165 * math.exp(-15.0 / params30.tau_erase_s)
        assert delta_n_temporal(params30, schedule, 140.0) == pytest.approx(
            state140, rel=1e-12
        )
        assert delta_n_temporal(params30, schedule, 164.0) == pytest.approx(
            state164, rel=1e-12
        )
        assert delta_n_temporal(params30, schedule, 180.0) == pytest.approx(
            state180, rel=1e-12
        )
        # Dark retention and erase decay, as observed in the on/off/erase cycle.
        assert abs(state164) >= 0.9 * abs(state140)
        at_erased = delta_n_temporal(
            params30, schedule, 165.0 + 5.0 * params30.tau_erase_s
        )
        assert abs(at_erased) < 0.1 * abs(state140)

    def test_continuous_across_boundaries(self, params30):
        schedule = fig2_like_schedule()
        eps = 1e-9
        for boundary in (140.0, 165.0):
            left = delta_n_temporal(params30, schedule, boundary - eps)
            right = delta_n_temporal(params30, schedule, boundary + eps)
            assert left == pytest.approx(right, abs=1e-12)

    def test_extends_last_segment_beyond_horizon(self, params30):
        schedule = fig2_like_schedule()  # ends at 300 s in the erasing phase
        far = delta_n_temporal(params30, schedule, 5e3)
        assert abs(far) < 1e-30

    def test_vectorized_matches_scalar(self, params30):
        schedule = fig2_like_schedule()
        times = np.array([0.0, 3.0, 139.0, 150.0, 170.0, 400.0])
        vec = delta_n_temporal(params30, schedule, times)
        scalars = [delta_n_temporal(params30, schedule, float(t)) for t in times]
        np.testing.assert_allclose(vec, scalars, rtol=0, atol=0)

    def test_schedule_validation(self):
        with pytest.raises(ValueError, match="start < end"):
            PumpSegment(5.0, 5.0, 1.0)
        with pytest.raises(ValueError, match="overlap"):
            PumpSchedule([PumpSegment(0.0, 10.0, 1.0), PumpSegment(5.0, 20.0, 1.0)])


def test_default_photorefraction_lookup():
    assert default_photorefraction(60.0).temperature_c == 60.0
    with pytest.raises(KeyError, match="no default photorefraction"):
        default_photorefraction(45.0)
