"""Attenuation and turbulence statistics.

Frozen reference values come from an independent 30-digit evaluation
(mpmath Gauss-Legendre on split intervals for the path integrals), not from
the package's own quadrature.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linksim import atmosphere as atm
from linksim import tables
from linksim.errors import ModelDomainError, UnsupportedFrequencyError
from linksim.scenario import LINK_HAPS_GS, LINK_SAT_HAPS, scenario_from_layers

LAM = 1550e-9
U_SH = 81.0478870791830081  # RMS wind for a 65 m/s ground wind
L_SH = 1138142.96149635179
L_HG = 19368.0354590616010

# oracle values
RYTOV_SH = 0.00976076848865577989
RYTOV_HG = 0.0691737633465741540        # integral from sea level
RYTOV_HG_FROM_GS = 0.0482056641063975559  # integral from the 800 m ground station
SI_SH = 0.00977333626000836259
SI_HG = 0.0689480480185146846
SI_APERTURE_SH_015 = 0.00254737212120706096
SI_APERTURE_HG_015 = 0.0172113504352517958
SI_POINT_1 = 0.706438495919241899
CN2_10KM = 1.66570226081401900e-17
RF_RAIN_40GHZ_12_5 = 3.77107750497516448


class TestBeerLambert:
    def test_no_attenuation(self):
        assert atm.beer_lambert(0.0, 481.0) == 1.0

    def test_background_volcanic(self):
        assert atm.beer_lambert(1e-4, 1.1381e3) == pytest.approx(math.exp(-0.11381), rel=1e-15)
        assert atm.beer_lambert(1e-4, 1.1381e3) == pytest.approx(0.8924, abs=5e-5)

    def test_extreme_volcanic_ground_hop(self):
        assert atm.beer_lambert(0.2, 20.2) == pytest.approx(0.0175975, abs=1e-7)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            atm.beer_lambert(-1.0, 1.0)


class TestCn2:
    def test_ground(self):
        assert atm.cn2(0.0, 21.0, 1.7e-14) == pytest.approx(1.727e-14, rel=1e-12)

    def test_jet_stream_altitude(self):
        assert atm.cn2(10000.0, 21.0, 1.7e-14) == pytest.approx(CN2_10KM, rel=1e-12)

    def test_haps_altitude_dominated_by_wind_term(self):
        wind_term = 8.148e-56 * 65**2 * 19000.0**10 * math.exp(-19.0)
        assert atm.cn2(19000.0, 65.0, 1e-18) == pytest.approx(wind_term, rel=1e-2)

    def test_vectorised(self):
        h = np.array([0.0, 1e4])
        np.testing.assert_allclose(atm.cn2(h, 21.0, 1.7e-14), [1.727e-14, CN2_10KM], rtol=1e-12)


class TestRytov:
    def test_sat_haps(self):
        assert atm.rytov_variance(19e3, 500e3, 65.0, U_SH, 1e-18, LAM) == pytest.approx(RYTOV_SH, rel=1e-7)

    def test_haps_gs_from_sea_level(self):
        assert atm.rytov_variance(0.0, 19e3, 20.0, 21.0, 1.7e-14, LAM) == pytest.approx(RYTOV_HG, rel=1e-7)

    def test_haps_gs_from_ground_station(self):
        got = atm.rytov_variance(800.0, 19e3, 20.0, 21.0, 1.7e-14, LAM)
        assert got == pytest.approx(RYTOV_HG_FROM_GS, rel=1e-7)

    def test_zero_turbulence(self, monkeypatch):
        monkeypatch.setattr(atm, "cn2", lambda h, u, c0: 0.0 * np.asarray(h))
        assert atm.rytov_variance(0.0, 19e3, 20.0, 21.0, 1.7e-14) == 0.0

    @given(st.floats(0, 80), st.floats(0, 80))
    def test_secant_scaling(self, z1, z2):
        r1 = atm.rytov_variance(0.0, 19e3, z1, 21.0, 1.7e-14)
        r2 = atm.rytov_variance(0.0, 19e3, z2, 21.0, 1.7e-14)
        sec = lambda z: 1.0 / math.cos(math.radians(z))
        assert r2 / r1 == pytest.approx((sec(z2) / sec(z1)) ** (11.0 / 6.0), rel=1e-12)

    def test_bad_limits(self):
        with pytest.raises(ValueError):
            atm.rytov_variance(19e3, 800.0, 20.0, 21.0, 1.7e-14)


class TestScintillation:
    def test_zero(self):
        assert atm.scintillation_index_point(0.0) == 0.0

    def test_weak_limit(self):
        assert atm.scintillation_index_point(1e-4) == pytest.approx(1e-4, rel=1e-2)

    def test_unit_rytov(self):
        assert atm.scintillation_index_point(1.0) == pytest.approx(SI_POINT_1, rel=1e-13)

    def test_aperture_sat_haps(self):
        got = atm.scintillation_index_aperture(19e3, 500e3, 65.0, L_SH, 0.15, U_SH, 1e-18, LAM)
        assert got == pytest.approx(SI_APERTURE_SH_015, rel=1e-7)

    def test_aperture_haps_gs(self):
        got = atm.scintillation_index_aperture(0.0, 19e3, 20.0, L_HG, 0.15, 21.0, 1.7e-14, LAM)
        assert got == pytest.approx(SI_APERTURE_HG_015, rel=1e-7)

    def test_large_aperture_washes_out(self):
        got = atm.scintillation_index_aperture(0.0, 19e3, 20.0, L_HG, 10.0, 21.0, 1.7e-14, LAM)
        assert 0.0 <= got < 1e-3 * SI_HG

    def test_monotone_in_diameter(self):
        ds = np.linspace(0.01, 1.0, 25)
        vals = [atm.scintillation_index_aperture(0.0, 19e3, 20.0, L_HG, d, 21.0, 1.7e-14) for d in ds]
        assert np.all(np.diff(vals) <= 0)

    def test_ordering_of_figure_apertures(self):
        f = lambda d: atm.scintillation_index_aperture(19e3, 500e3, 65.0, L_SH, d, U_SH, 1e-18)
        assert f(0.2) < f(0.15) < f(0.05)

    def test_aperture_below_point_index(self):
        assert SI_APERTURE_HG_015 < SI_HG and SI_APERTURE_SH_015 < SI_SH


class TestMie:
    def test_coefficients(self):
        # evaluated from the polynomial coefficients at 1.55 um
        a, b, c, d = atm.mie_coefficients(1.55)
        assert (a, b, c, d) == pytest.approx((-0.0020093625, 0.0230277, -0.09072, 0.1320615), rel=1e-12)

    def test_extinction(self):
        assert atm.mie_extinction(1.55, 0.8) == pytest.approx(0.0731944344, rel=1e-10)

    def test_zenith_path(self):
        tau = atm.mie_extinction(1.55, 0.8)
        assert atm.mie_transmittance(1.55, 0.8, 90.0) == pytest.approx(math.exp(-tau), rel=1e-15)

    def test_low_elevation(self):
        tau = atm.mie_extinction(1.55, 0.8)
        assert atm.mie_transmittance(1.55, 0.8, 20.0) == pytest.approx(
            math.exp(-tau / math.sin(math.radians(20.0))), rel=1e-15)

    @pytest.mark.parametrize("h", [0.0, 5.0, -1.0, 7.0])
    def test_domain(self, h):
        with pytest.raises(ModelDomainError):
            atm.mie_extinction(1.55, h)


class TestFogCloudRain:
    @pytest.mark.parametrize("vis,db", [(0.05, 339.62), (0.20, 84.90), (0.50, 33.96),
                                        (0.77, 16.67), (1.90, 4.59)])
    def test_kim_rows(self, vis, db):
        assert atm.kim_attenuation(vis, 1550.0) * atm.DB_PER_NEPER == pytest.approx(db, rel=5e-3)

    def test_kim_coefficients(self):
        assert atm.kim_attenuation(0.05, 1550.0) == pytest.approx(78.2, rel=1e-12)
        assert atm.kim_attenuation(1.9, 1550.0) == pytest.approx(1.05594941726396308, rel=1e-12)

    @given(st.floats(0.01, 200.0))
    def test_kim_at_550nm(self, v):
        assert atm.kim_attenuation(v, 550.0) == pytest.approx(3.91 / v, rel=1e-14)

    @pytest.mark.parametrize("v,x", [(60.0, 1.6), (50.0, 1.3), (10.0, 1.3), (6.0, 1.3),
                                     (2.0, 0.66), (0.8, 0.3), (0.5, 0.0), (0.1, 0.0)])
    def test_kim_exponent(self, v, x):
        assert atm.kim_size_exponent(v) == pytest.approx(x, abs=1e-12)

    @pytest.mark.parametrize("n,lw,vis", [(250.0, 1.0, 0.0280983717413345366),
                                          (0.5, 3.128e-4, 291.298517295853888),
                                          (200.0, 0.65, 0.0429054231571897352)])
    def test_cloud_visibility(self, n, lw, vis):
        assert atm.cloud_visibility(n, lw) == pytest.approx(vis, rel=1e-12)

    @pytest.mark.parametrize("row", list(tables.CLOUD_ROWS))
    def test_cloud_rows_within_one_percent(self, row):
        n, lw, printed = tables.CLOUD_ROWS[row]
        assert atm.cloud_visibility(n, lw) == pytest.approx(printed, rel=1e-2)

    def test_fso_rain(self):
        assert atm.fso_rain_coeff(0.0) == 0.0
        assert atm.fso_rain_coeff(2.5) == pytest.approx(1.98807185529401387, rel=1e-12)
        assert atm.fso_rain_coeff(25.0) == pytest.approx(9.29891070125047819, rel=1e-12)

    def test_rf_rain_zero(self):
        assert atm.rf_rain_coeff(0.0, 40.0, 70.0, 45.0) == 0.0

    def test_rf_rain_value(self):
        assert atm.rf_rain_coeff(12.5, 40.0, 70.0, 45.0) == pytest.approx(RF_RAIN_40GHZ_12_5, rel=1e-12)

    def test_tilt_symmetry(self):
        k_h, k_v, _, _ = atm.rain_constants(40.0)
        k, _ = atm.rf_rain_parameters(40.0, 70.0, 45.0)
        assert k == pytest.approx((k_h + k_v) / 2.0, rel=1e-15)

    def test_bundled_row(self):
        assert atm.rain_constants(40.0) == (0.44306, 0.42738, 0.86731, 0.84205)

    @pytest.mark.parametrize("f", [5.0, 150.0])
    def test_unsupported_frequency(self, f):
        with pytest.raises(UnsupportedFrequencyError):
            atm.rf_rain_coeff(10.0, f, 70.0, 45.0)


class TestRfBudget:
    def test_path_loss(self):
        assert atm.rf_path_loss(19368.0, 40.0, 45.0, 45.0, 0.1, 0.0) == pytest.approx(-62.16, abs=0.05)

    def test_free_space_form(self):
        lam = atm.SPEED_OF_LIGHT / 40e9
        assert atm.rf_path_loss(1e4, 40.0, 0.0, 0.0) == pytest.approx(
            -20 * math.log10(4 * math.pi * 1e4 / lam), rel=1e-15)

    def test_inverse_square(self):
        d = atm.rf_path_loss(1e4, 40.0, 45.0, 45.0) - atm.rf_path_loss(2e4, 40.0, 45.0, 45.0)
        assert d == pytest.approx(20 * math.log10(2.0), rel=1e-12)
        assert d == pytest.approx(6.02, abs=5e-3)

    def test_noise_examples(self):
        assert atm.noise_power_dbw(-55.0, 0.5e9, 1.0) == pytest.approx(-117.22, abs=5e-3)
        assert atm.noise_power_dbw(18.0, 0.5e9, 1.0) == pytest.approx(-115.97, abs=5e-3)

    def test_thermal_floor(self):
        assert atm.noise_power(18.0, 0.5e9, 0.0) == pytest.approx(10 ** -22.86 * 291.15 * 0.5e9, rel=1e-12)

    @given(st.floats(-200, 200), st.floats(-200, 200), st.floats(1e3, 1e11))
    def test_noise_increasing_in_temperature(self, t1, t2, b):
        lo, hi = sorted((t1, t2))
        assert atm.noise_power(lo, b, 1.0) <= atm.noise_power(hi, b, 1.0)

    @given(st.floats(1e3, 1e11), st.floats(1e3, 1e11))
    def test_noise_increasing_in_bandwidth(self, b1, b2):
        lo, hi = sorted((b1, b2))
        assert atm.noise_power(18.0, lo, 1.0) <= atm.noise_power(18.0, hi, 1.0)


class TestScenarioLevel:
    def test_fig2_turbulence(self, fig2_scenario):
        sh = atm.link_turbulence(fig2_scenario, LINK_SAT_HAPS)
        hg = atm.link_turbulence(fig2_scenario, LINK_HAPS_GS)
        assert sh.rytov_variance == pytest.approx(RYTOV_SH, rel=1e-7)
        assert sh.scintillation_index == pytest.approx(SI_SH, rel=1e-7)
        assert hg.rytov_variance == pytest.approx(RYTOV_HG, rel=1e-7)
        assert hg.scintillation_index == pytest.approx(SI_HG, rel=1e-7)
        assert not sh.aperture_averaged

    def test_aperture_flag(self):
        cfg = scenario_from_layers({"aperture_averaging_enabled": True})
        hg = atm.link_turbulence(cfg, LINK_HAPS_GS)
        assert hg.aperture_averaged
        assert hg.scintillation_index == pytest.approx(SI_APERTURE_HG_015, rel=1e-7)

    @given(st.sampled_from(["none", "thin", "light", "moderate", "dense"]),
           st.sampled_from(["none", "cumulus", "cirrus", "thin cirrus"]),
           st.floats(0, 50))
    def test_factors_in_unit_interval(self, fog, cloud, rain):
        att = atm.link_attenuation(scenario_from_layers({"fog": fog, "cloud": cloud,
                                                         "rain_rate_mm_per_h": rain}))
        for f in (att.stratospheric, att.mie, att.geometric, att.rain_fso):
            assert 0.0 <= f <= 1.0
        assert att.total_fso_gain == pytest.approx(att.mie * att.geometric * att.rain_fso, rel=1e-15)
        assert att.total_fso_gain <= min(att.mie, att.geometric, att.rain_fso)
        assert att.noise_power_sat_haps_W > 0 and att.noise_power_haps_gs_W > 0

    def test_fig2_budget_values(self, fig2_scenario):
        att = atm.link_attenuation(fig2_scenario)
        assert att.stratospheric == pytest.approx(math.exp(-0.215 * L_SH / 1e3), rel=1e-12)
        assert att.rf_path_loss_dB == pytest.approx(
            90.0 - 20 * math.log10(4 * math.pi * L_HG * 40e9 / atm.SPEED_OF_LIGHT) - 0.1 * L_HG / 1e3,
            rel=1e-12)
