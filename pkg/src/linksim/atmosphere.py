"""Deterministic attenuation and turbulence statistics.

Every multiplicative irradiance-loss factor for the optical hops, the RF
path-loss budget, receiver noise, and the scintillation indices that feed
the exponentiated Weibull fits.

Units: altitudes and lengths are metres unless the argument name says
otherwise (``*_km``); attenuation coefficients named ``coeff_per_km`` are
natural (nepers) per km, while ``*_db_per_km`` values are logarithmic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import integrate

from .errors import ModelDomainError, NumericalError, UnsupportedFrequencyError
from .scenario import LINK_HAPS_GS, LINK_SAT_HAPS, ScenarioConfig, slant_range

#: dB per neper of intensity, 10*log10(e)
DB_PER_NEPER = 10.0 * math.log10(math.e)
BOLTZMANN_DBW = -228.6
SPEED_OF_LIGHT = 299_792_458.0

QUAD_RTOL = 1e-8
QUAD_LIMIT = 400


def rms_wind_speed(ground_wind_mps: float) -> float:
    """RMS wind speed from the ground-level wind ``v``: sqrt(v^2 + 30.69 v + 348.91)."""
    v = float(ground_wind_mps)
    return math.sqrt(v * v + 30.69 * v + 348.91)


def db_per_km_to_coeff(db_per_km: float) -> float:
    """Convert an intensity attenuation in dB/km to a natural coefficient in 1/km."""
    return db_per_km / DB_PER_NEPER


def beer_lambert(coeff_per_km: float, length_km: float) -> float:
    """Transmittance exp(-coeff * length)."""
    if coeff_per_km < 0 or length_km < 0:
        raise ValueError("attenuation coefficient and length must be non-negative")
    return math.exp(-coeff_per_km * length_km)


def cn2(h_m, wind_rms_mps: float, c0: float):
    """Hufnagel-Valley refractive-index structure parameter in m^(-2/3).

    ``h_m`` may be a scalar or array of altitudes in metres.
    """
    h = np.asarray(h_m, dtype=float)
    out = (
        8.148e-56 * wind_rms_mps**2 * h**10 * np.exp(-h / 1000.0)
        + 2.7e-16 * np.exp(-h / 1500.0)
        + c0 * np.exp(-h / 100.0)
    )
    return float(out) if out.ndim == 0 else out


def _breakpoints(lo: float, hi: float) -> list[float]:
    # features of the profile: surface layer, the 10 km jet-stream peak, its tail
    cands = [lo + 100.0, lo + 1.0e3, 1.0e4, lo + 1.0e4, 3.0e4, lo + 5.0e4]
    return sorted({p for p in cands if lo < p < hi})


def _quad(func, lo: float, hi: float, what: str) -> float:
    res = integrate.quad(
        func, lo, hi,
        epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT,
        points=_breakpoints(lo, hi) or None, full_output=1,
    )
    value, abserr = res[0], res[1]
    scale = abs(value) if value != 0 else 1.0
    if len(res) > 3 and abserr > QUAD_RTOL * scale:
        raise NumericalError(f"{what}: quadrature did not converge", achieved=abserr / scale)
    return value


def _check_limits(h_low: float, h_high: float, zenith_deg: float) -> None:
    if not h_high > h_low >= 0:
        raise ValueError(f"need 0 <= h_low < h_high, got [{h_low}, {h_high}]")
    if not 0 <= zenith_deg < 90:
        raise ValueError(f"zenith angle must lie in [0, 90), got {zenith_deg}")


def rytov_variance(h_low_m: float, h_high_m: float, zenith_deg: float,
                   wind_rms_mps: float, c0: float, wavelength_m: float = 1550e-9) -> float:
    """Slant-path Rytov variance for a plane wave received at ``h_low_m``.

    2.25 k^(7/6) sec^(11/6)(zenith) * integral of Cn2(h) (h - h_low)^(5/6) dh
    over [h_low, h_high].
    """
    _check_limits(h_low_m, h_high_m, zenith_deg)
    k = 2.0 * math.pi / wavelength_m
    sec = 1.0 / math.cos(math.radians(zenith_deg))

    def integrand(h):
        return cn2(h, wind_rms_mps, c0) * (h - h_low_m) ** (5.0 / 6.0)

    integral = _quad(integrand, h_low_m, h_high_m, "Rytov integral")
    return 2.25 * k ** (7.0 / 6.0) * sec ** (11.0 / 6.0) * integral


def scintillation_index_point(rytov: float) -> float:
    """Point-receiver scintillation index valid from weak to strong turbulence."""
    if rytov < 0:
        raise ValueError("Rytov variance must be non-negative")
    s125 = rytov ** (6.0 / 5.0)  # sigma_R^(12/5) with rytov = sigma_R^2
    return math.expm1(
        0.49 * rytov / (1.0 + 1.11 * s125) ** (7.0 / 6.0)
        + 0.51 * rytov / (1.0 + 0.69 * s125) ** (5.0 / 6.0)
    )


def scintillation_index_aperture(h_low_m: float, h_high_m: float, zenith_deg: float,
                                 length_m: float, diameter_m: float,
                                 wind_rms_mps: float, c0: float,
                                 wavelength_m: float = 1550e-9) -> float:
    """Aperture-averaged scintillation index for a receiver of diameter ``diameter_m``.

    Real part of the complex-kernel path integral; tends to the Rytov
    variance as the aperture shrinks and to zero as it grows.
    """
    _check_limits(h_low_m, h_high_m, zenith_deg)
    if diameter_m <= 0:
        raise ValueError("aperture diameter must be positive")
    k = 2.0 * math.pi / wavelength_m
    sec = 1.0 / math.cos(math.radians(zenith_deg))
    span = h_high_m - h_low_m
    a = k * diameter_m**2 / (16.0 * length_m)
    a56 = a ** (5.0 / 6.0)

    def integrand(h):
        # Re[(a + i t)^(5/6)] - a^(5/6) in polar form, free of cancellation for large a
        x = (h - h_low_m) / span / a
        phi = math.atan(x)
        kernel = a56 * (math.expm1(5.0 / 12.0 * math.log1p(x * x)) * math.cos(5.0 * phi / 6.0)
                        - 2.0 * math.sin(5.0 * phi / 12.0) ** 2)
        return cn2(h, wind_rms_mps, c0) * kernel

    integral = _quad(integrand, h_low_m, h_high_m, "aperture-averaging integral")
    value = 8.7 * k ** (7.0 / 6.0) * span ** (5.0 / 6.0) * sec ** (11.0 / 6.0) * integral
    return max(value, 0.0)


def mie_coefficients(wavelength_um: float) -> tuple[float, float, float, float]:
    """Cubic-in-altitude extinction coefficients (a, b, c, d) for ``wavelength_um``."""
    lam = wavelength_um
    a = -0.000545 * lam**2 + 0.002 * lam - 0.0038
    b = 0.00628 * lam**2 - 0.0232 * lam + 0.0439
    c = -0.028 * lam**2 + 0.101 * lam - 0.18
    d = -0.228 * lam**3 + 0.922 * lam**2 - 1.26 * lam + 0.719
    return a, b, c, d


def mie_extinction(wavelength_um: float, h_e_km: float) -> float:
    """Extinction ratio tau for a ground station ``h_e_km`` above mean sea level."""
    if not 0 < h_e_km < 5:
        raise ModelDomainError(f"Mie model needs 0 < h_E < 5 km, got {h_e_km}")
    a, b, c, d = mie_coefficients(wavelength_um)
    h = h_e_km
    return a * h**3 + b * h**2 + c * h + d


def mie_transmittance(wavelength_um: float, h_e_km: float, elevation_deg: float) -> float:
    """Slant-path Mie transmittance exp(-tau / sin(elevation))."""
    if not 0 < elevation_deg <= 90:
        raise ValueError(f"elevation must lie in (0, 90], got {elevation_deg}")
    tau = mie_extinction(wavelength_um, h_e_km)
    return math.exp(-tau / math.sin(math.radians(elevation_deg)))


def kim_size_exponent(visibility_km: float) -> float:
    """Particle-size exponent of the Kim visibility model."""
    v = visibility_km
    if v > 50:
        return 1.6
    if v > 6:
        return 1.3
    if v > 1:
        return 0.16 * v + 0.34
    if v > 0.5:
        return v - 0.5
    return 0.0


def kim_attenuation(visibility_km: float, wavelength_nm: float = 1550.0) -> float:
    """Fog/cloud scattering coefficient in 1/km; multiply by DB_PER_NEPER for dB/km."""
    if visibility_km <= 0:
        raise ValueError("visibility must be positive")
    x = kim_size_exponent(visibility_km)
    return 3.91 / visibility_km * (wavelength_nm / 550.0) ** (-x)


def cloud_visibility(number_conc_cm3: float, liquid_water_g_m3: float) -> float:
    """Visibility in km inside a cloud from number concentration and liquid water content."""
    if number_conc_cm3 <= 0 or liquid_water_g_m3 <= 0:
        raise ValueError("cloud number concentration and liquid water content must be positive")
    return 1.002 / (liquid_water_g_m3 * number_conc_cm3) ** 0.6473


def fso_rain_coeff(rain_mm_h: float) -> float:
    """Optical rain attenuation in dB/km."""
    if rain_mm_h < 0:
        raise ValueError("rain rate must be non-negative")
    return 1.076 * rain_mm_h**0.67


@lru_cache(maxsize=1)
def _rain_table() -> np.ndarray:
    text = resources.files("linksim").joinpath("data/itu_p838_rain.txt").read_text("utf-8")
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    return np.array(rows, dtype=float)


def rain_constants(freq_GHz: float) -> tuple[float, float, float, float]:
    """(k_H, k_V, a_H, a_V) linearly interpolated from the bundled table."""
    table = _rain_table()
    freqs = table[:, 0]
    if not freqs[0] <= freq_GHz <= freqs[-1]:
        raise UnsupportedFrequencyError(
            f"{freq_GHz} GHz outside rain-coefficient table [{freqs[0]:g}, {freqs[-1]:g}] GHz"
        )
    return tuple(float(np.interp(freq_GHz, freqs, table[:, i])) for i in range(1, 5))


def rf_rain_parameters(freq_GHz: float, elevation_deg: float, tilt_deg: float) -> tuple[float, float]:
    """Combined (k, exponent) for the given path elevation and polarisation tilt."""
    k_h, k_v, a_h, a_v = rain_constants(freq_GHz)
    mix = math.cos(math.radians(elevation_deg)) ** 2 * math.cos(math.radians(2.0 * tilt_deg))
    k = (k_h + k_v + (k_h - k_v) * mix) / 2.0
    alpha = (k_h * a_h + k_v * a_v + (k_h * a_h - k_v * a_v) * mix) / (2.0 * k)
    return k, alpha


def rf_rain_coeff(rain_mm_h: float, freq_GHz: float, elevation_deg: float, tilt_deg: float) -> float:
    """RF rain attenuation in dB/km."""
    if rain_mm_h < 0:
        raise ValueError("rain rate must be non-negative")
    k, alpha = rf_rain_parameters(freq_GHz, elevation_deg, tilt_deg)
    if rain_mm_h == 0:
        return 0.0
    return k * rain_mm_h**alpha


def rf_path_loss(length_m: float, freq_GHz: float, tx_gain_dB: float, rx_gain_dB: float,
                 oxy_db_per_km: float = 0.0, rain_db_per_km: float = 0.0) -> float:
    """Net RF path gain in dB (negative for a loss): gains minus free-space and gaseous/rain losses."""
    if length_m <= 0:
        raise ValueError("link length must be positive")
    wavelength = SPEED_OF_LIGHT / (freq_GHz * 1e9)
    fspl = 20.0 * math.log10(4.0 * math.pi * length_m / wavelength)
    length_km = length_m / 1000.0
    return tx_gain_dB + rx_gain_dB - fspl - oxy_db_per_km * length_km - rain_db_per_km * length_km


def noise_power_dbw(temperature_C: float, bandwidth_Hz: float, noise_figure_dB: float) -> float:
    """Receiver noise N0 in dBW: k + T(dBK) + B(dBHz) + noise figure."""
    t_k = temperature_C + 273.15
    if t_k <= 0:
        raise ValueError("temperature must be above absolute zero")
    if bandwidth_Hz <= 0:
        raise ValueError("bandwidth must be positive")
    return BOLTZMANN_DBW + 10.0 * math.log10(t_k) + 10.0 * math.log10(bandwidth_Hz) + noise_figure_dB


def noise_power(temperature_C: float, bandwidth_Hz: float, noise_figure_dB: float) -> float:
    """Receiver noise N0 in W."""
    return 10.0 ** (noise_power_dbw(temperature_C, bandwidth_Hz, noise_figure_dB) / 10.0)


# ---------------------------------------------------------------------------
# scenario-level helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttenuationBreakdown:
    """Deterministic loss factors for one scenario.

    The FSO factors are irradiance transmittances; ``total_fso_gain`` is the
    product of the active ground-link factors (Mie, geometric, rain).
    """

    stratospheric: float
    mie: float
    geometric: float
    rain_fso: float
    total_fso_gain: float
    rf_path_loss_dB: float
    rf_rain_db_per_km: float
    noise_power_sat_haps_W: float
    noise_power_haps_gs_W: float


@dataclass(frozen=True)
class TurbulenceStats:
    link_id: str
    rytov_variance: float
    scintillation_index: float
    aperture_averaged: bool


def turbulence_limits(scenario: ScenarioConfig, link: str) -> tuple[float, float]:
    """Altitude limits of the Cn2 path integral for ``link``.

    The satellite hop integrates from the HAPS up to the satellite. The
    ground hop integrates from mean sea level (h = 0) up to the HAPS; this
    is the convention that reproduces the reference fading parameters.
    """
    g = scenario.geometry
    if link == LINK_SAT_HAPS:
        return g.haps_altitude_m, g.satellite_altitude_m
    if link == LINK_HAPS_GS:
        return 0.0, g.haps_altitude_m
    raise ValueError(f"unknown link {link!r}")


def link_turbulence(scenario: ScenarioConfig, link: str) -> TurbulenceStats:
    """Rytov variance and the scintillation index used for the fading fit on ``link``."""
    g, w, r = scenario.geometry, scenario.weather, scenario.radio
    lam = r.fso_wavelength_nm * 1e-9
    h_low, h_high = turbulence_limits(scenario, link)
    if link == LINK_SAT_HAPS:
        zenith, wind, c0 = g.zenith_sat_haps_deg, w.wind_rms_sat_haps_mps, w.cn2_nominal_sat_haps
        length = slant_range(g.satellite_altitude_m, g.haps_altitude_m, zenith)
    else:
        zenith, wind, c0 = g.zenith_haps_gs_deg, w.wind_rms_haps_gs_mps, w.cn2_nominal_haps_gs
        length = slant_range(g.haps_altitude_m, g.gs_elevation_m, zenith)

    rytov = rytov_variance(h_low, h_high, zenith, wind, c0, lam)
    if scenario.aperture_averaging_enabled:
        si = scintillation_index_aperture(h_low, h_high, zenith, length,
                                          g.receiver_aperture_diameter_m, wind, c0, lam)
    else:
        si = scintillation_index_point(rytov)
    return TurbulenceStats(link, rytov, si, scenario.aperture_averaging_enabled)


def link_attenuation(scenario: ScenarioConfig) -> AttenuationBreakdown:
    """Resolve every deterministic loss factor for ``scenario``."""
    g, r, w = scenario.geometry, scenario.radio, scenario.weather
    l_sh_km = slant_range(g.satellite_altitude_m, g.haps_altitude_m, g.zenith_sat_haps_deg) / 1e3
    l_hg_m = slant_range(g.haps_altitude_m, g.gs_elevation_m, g.zenith_haps_gs_deg)
    l_hg_km = l_hg_m / 1e3

    strat = beer_lambert(w.stratospheric_coeff_per_km, l_sh_km)
    mie = mie_transmittance(r.fso_wavelength_nm / 1000.0, g.gs_elevation_m / 1000.0, g.elevation_gs_deg)

    scatter_coeff = 0.0
    vis = w.fog_visibility()
    if vis is not None:
        scatter_coeff += kim_attenuation(vis, r.fso_wavelength_nm)
    cloud = w.cloud_microphysics()
    if cloud is not None:
        scatter_coeff += kim_attenuation(cloud_visibility(*cloud), r.fso_wavelength_nm)
    geometric = beer_lambert(scatter_coeff, l_hg_km)

    rain_fso = beer_lambert(db_per_km_to_coeff(fso_rain_coeff(w.rain_rate_mm_per_h)), l_hg_km)
    rain_rf = rf_rain_coeff(w.rain_rate_mm_per_h, r.rf_frequency_GHz, g.elevation_gs_deg,
                            r.polarization_tilt_deg)
    path_loss = rf_path_loss(l_hg_m, r.rf_frequency_GHz, r.tx_gain_dB, r.rx_gain_dB,
                             r.oxygen_atten_dB_per_km, rain_rf)

    nf = r.noise_figure_dB
    return AttenuationBreakdown(
        stratospheric=strat,
        mie=mie,
        geometric=geometric,
        rain_fso=rain_fso,
        total_fso_gain=mie * geometric * rain_fso,
        rf_path_loss_dB=path_loss,
        rf_rain_db_per_km=rain_rf,
        noise_power_sat_haps_W=noise_power(r.temperature_sat_haps_C, r.bandwidth_Hz, nf),
        noise_power_haps_gs_W=noise_power(r.temperature_haps_gs_C, r.bandwidth_Hz, nf),
    )
