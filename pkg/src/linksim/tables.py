"""Reference tables and named parameter bundles.

Plain data only; validation and typing live in :mod:`linksim.scenario`.
"""

from __future__ import annotations

# Stratospheric aerosol extinction at 1550 nm, 1/km.
VOLCANIC_LEVELS: dict[str, float] = {
    "extreme": 2e-1,
    "high": 5e-2,
    "moderate": 8e-3,
    "background": 1e-4,
    # value used throughout the link-parameter table; distinct from "extreme"
    "table5": 2.15e-1,
}

# Fog visibility (km) and the tabulated attenuation at 1550 nm (dB/km).
FOG_ROWS: dict[str, tuple[float, float]] = {
    "dense": (0.05, 339.62),
    "thick": (0.20, 84.90),
    "moderate": (0.50, 33.96),
    "light": (0.77, 16.67),
    "thin": (1.90, 4.59),
}

# Cloud number concentration (cm^-3), liquid water content (g/m^3), tabulated visibility (km).
CLOUD_ROWS: dict[str, tuple[float, float, float]] = {
    "cumulus": (250.0, 1.0, 0.0280),
    "stratus": (250.0, 0.29, 0.0626),
    "stratocumulus": (250.0, 0.15, 0.0959),
    "altostratus": (400.0, 0.41, 0.0369),
    "nimbostratus": (200.0, 0.65, 0.0429),
    "cirrus": (0.025, 0.06405, 64.66),
    "thin cirrus": (0.5, 3.128e-4, 290.69),
}

RAIN_LEVELS: dict[str, float] = {
    "none": 0.0,
    "light": 2.5,
    "moderate": 12.5,
    "heavy": 25.0,
}

# Shadowed-Rician (m, b, Omega).
SHADOWING_PRESETS: dict[str, tuple[int, float, float]] = {
    "heavy": (1, 0.063, 8.94e-4),
    "average": (10, 0.126, 0.835),
    "light": (19, 0.158, 1.29),
}

# Ground wind speed behind the satellite-HAPS RMS wind (m/s).
SAT_HAPS_GROUND_WIND_MPS = 65.0

# Flat scenario defaults.  ``wind_speed_sat_haps_mps`` is a ground wind
# converted through the RMS wind model when the scenario is built.
TABLE5_DEFAULTS: dict[str, object] = {
    "satellite_altitude_m": 500e3,
    "haps_altitude_m": 19e3,
    "gs_elevation_m": 800.0,
    "zenith_sat_haps_deg": 65.0,
    "zenith_haps_gs_deg": 20.0,
    "elevation_gs_deg": 70.0,
    "receiver_aperture_diameter_m": 0.15,
    "beam_divergence_rad": 0.2e-3,
    "jitter_stddev_m": 0.1,
    "boresight_m": 0.0,
    "fso_wavelength_nm": 1550.0,
    "rf_frequency_GHz": 40.0,
    "tx_gain_dB": 45.0,
    "rx_gain_dB": 45.0,
    "oxygen_atten_dB_per_km": 0.1,
    "polarization_tilt_deg": 45.0,
    "oe_conversion": 1.0,
    "noise_figure_dB": 1.0,
    "bandwidth_Hz": 0.5e9,
    "temperature_sat_haps_C": -55.0,
    "temperature_haps_gs_C": 18.0,
    "snr_threshold_dB": 7.0,
    "volcanic_level": "table5",
    "fog": "none",
    "cloud": "none",
    "rain_rate_mm_per_h": 0.0,
    "wind_speed_sat_haps_mps": SAT_HAPS_GROUND_WIND_MPS,
    "wind_rms_haps_gs_mps": 21.0,
    "cn2_nominal_sat_haps": 1e-18,
    "cn2_nominal_haps_gs": 1.7e-14,
    "shadowing": "average",
    "n_haps": 1,
    "pointing_errors_enabled": False,
    "aperture_averaging_enabled": False,
    "fso_enabled": True,
    "rf_enabled": True,
    "tx_power_sat_dBW": 10.0,
    "tx_power_haps_dBW": 10.0,
}

# Figure bundles: base overrides applied on top of TABLE5_DEFAULTS plus the
# curve families drawn in that figure (curve id -> extra overrides).
FIGURE_PRESETS: dict[str, dict[str, object]] = {
    "fig2-clear": {
        "description": "Clear weather, N=1; hybrid vs FSO-only vs RF-only second hop. "
                       "RF shadowing not stated: average shadowing assumed.",
        "overrides": {"n_haps": 1},
        "curves": {
            "hybrid": {},
            "fso-only": {"rf_enabled": False},
            "rf-only": {"fso_enabled": False},
        },
    },
    "fig3-diversity": {
        "description": "Clear weather, hybrid second hop, N in {1, 2, 5, 10}. "
                       "Intermediate N values are not stated: 2 and 5 assumed.",
        "overrides": {"n_haps": 1},
        "curves": {
            "N=1": {"n_haps": 1},
            "N=2": {"n_haps": 2},
            "N=5": {"n_haps": 5},
            "N=10": {"n_haps": 10},
        },
    },
    "fig4-rain": {
        "description": "Rain levels for N=1 with D_G=0.15 m aperture averaging; heavy rain also "
                       "under heavy and light shadowing. Fog-free sky assumed.",
        "overrides": {"n_haps": 1, "receiver_aperture_diameter_m": 0.15,
                      "aperture_averaging_enabled": True},
        "curves": {
            "no-rain": {"rain_rate_mm_per_h": 0.0},
            "light-rain": {"rain_rate_mm_per_h": 2.5},
            "moderate-rain": {"rain_rate_mm_per_h": 12.5},
            "heavy-rain": {"rain_rate_mm_per_h": 25.0},
            "heavy-rain-heavy-shadowing": {"rain_rate_mm_per_h": 25.0, "shadowing": "heavy"},
            "heavy-rain-light-shadowing": {"rain_rate_mm_per_h": 25.0, "shadowing": "light"},
        },
    },
    "fig5-fog-rain": {
        "description": "Light fog combined with each rain level, plus moderate fog, for N=2 "
                       "with D_G=0.15 m aperture averaging.",
        "overrides": {"n_haps": 2, "receiver_aperture_diameter_m": 0.15,
                      "aperture_averaging_enabled": True, "fog": "light"},
        "curves": {
            "light-fog": {},
            "light-fog-light-rain": {"rain_rate_mm_per_h": 2.5},
            "light-fog-moderate-rain": {"rain_rate_mm_per_h": 12.5},
            "light-fog-heavy-rain": {"rain_rate_mm_per_h": 25.0},
            "moderate-fog": {"fog": "moderate"},
        },
    },
    "fig6-aperture": {
        "description": "Aperture averaging for N=3, clear weather. Aperture sizes are not "
                       "stated: D_G in {0.05, 0.10, 0.15, 0.20} m assumed.",
        "overrides": {"n_haps": 3, "aperture_averaging_enabled": True},
        "curves": {
            "D_G=0.05": {"receiver_aperture_diameter_m": 0.05},
            "D_G=0.10": {"receiver_aperture_diameter_m": 0.10},
            "D_G=0.15": {"receiver_aperture_diameter_m": 0.15},
            "D_G=0.20": {"receiver_aperture_diameter_m": 0.20},
        },
    },
    "fig7-pointing": {
        "description": "Zero-boresight pointing errors on the satellite-HAPS hop, N=1, "
                       "theta=0.2 mrad, sigma_s=0.1 m, aperture averaging on.",
        "overrides": {"n_haps": 1, "aperture_averaging_enabled": True,
                      "beam_divergence_rad": 0.2e-3, "jitter_stddev_m": 0.1,
                      "pointing_errors_enabled": True},
        "curves": {
            "no-pointing-D_G=0.15": {"pointing_errors_enabled": False,
                                     "receiver_aperture_diameter_m": 0.15},
            "pointing-D_G=0.15": {"receiver_aperture_diameter_m": 0.15},
            "pointing-D_G=0.20": {"receiver_aperture_diameter_m": 0.20},
        },
    },
    "fig8-wind": {
        "description": "RMS wind speed on the HAPS-GS hop in {10, 21, 30} m/s, N=1, "
                       "no aperture averaging.",
        "overrides": {"n_haps": 1},
        "curves": {
            "u=10": {"wind_rms_haps_gs_mps": 10.0},
            "u=21": {"wind_rms_haps_gs_mps": 21.0},
            "u=30": {"wind_rms_haps_gs_mps": 30.0},
        },
    },
}
