"""Scenario configuration: typed config objects, geometry helpers, and the
flat key-value scenario file format.

Scenario files are a flat subset of TOML::

    # comments start with '#'
    preset = "fig2-clear"          # optional bundle, applied first
    n_haps = 3
    fog = "thin"
    rain_rate_mm_per_h = "light"   # named level or number

Only top-level ``key = scalar`` pairs are accepted; every key is one of the
field names in :data:`KEY_TYPES` (plus a handful of aliases documented in
:func:`canonicalize`). Anything else is rejected with its line number.
"""

from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, fields
from typing import Any, Mapping

from . import tables
from .errors import GeometryError, ScenarioError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LINK_SAT_HAPS = "sat-haps"
LINK_HAPS_GS = "haps-gs"


def slant_range(h_top_m: float, h_bottom_m: float, zenith_deg: float) -> float:
    """Flat-slab slant path length (h_top - h_bottom) / cos(zenith) in metres."""
    if not 0 <= zenith_deg < 90:
        raise GeometryError(f"zenith angle must lie in [0, 90) degrees, got {zenith_deg}")
    if not h_top_m > h_bottom_m:
        raise GeometryError(f"top altitude {h_top_m} m must exceed bottom altitude {h_bottom_m} m")
    return (h_top_m - h_bottom_m) / math.cos(math.radians(zenith_deg))


def _require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ScenarioError(message, field=field)


@dataclass(frozen=True)
class GeometryConfig:
    satellite_altitude_m: float
    haps_altitude_m: float
    gs_elevation_m: float
    zenith_sat_haps_deg: float
    zenith_haps_gs_deg: float
    elevation_gs_deg: float
    receiver_aperture_diameter_m: float
    beam_divergence_rad: float
    jitter_stddev_m: float
    boresight_m: float = 0.0

    def __post_init__(self):
        _require(0 <= self.gs_elevation_m < self.haps_altitude_m, "gs_elevation_m",
                 "need 0 <= GS elevation < HAPS altitude")
        _require(self.haps_altitude_m < self.satellite_altitude_m, "haps_altitude_m",
                 "HAPS altitude must be below the satellite altitude")
        for name in ("zenith_sat_haps_deg", "zenith_haps_gs_deg"):
            _require(0 <= getattr(self, name) < 90, name, "zenith angle must lie in [0, 90)")
        _require(abs(self.elevation_gs_deg - (90.0 - self.zenith_haps_gs_deg)) < 1e-9,
                 "elevation_gs_deg", "elevation must equal 90 - zenith_haps_gs_deg")
        _require(self.receiver_aperture_diameter_m > 0, "receiver_aperture_diameter_m",
                 "aperture diameter must be positive")
        _require(self.beam_divergence_rad > 0, "beam_divergence_rad", "divergence must be positive")
        _require(self.jitter_stddev_m >= 0, "jitter_stddev_m", "jitter must be non-negative")
        _require(self.boresight_m == 0, "boresight_m", "only zero boresight is supported")


@dataclass(frozen=True)
class RadioConfig:
    fso_wavelength_nm: float
    rf_frequency_GHz: float
    tx_gain_dB: float
    rx_gain_dB: float
    oxygen_atten_dB_per_km: float
    polarization_tilt_deg: float
    oe_conversion: float
    noise_figure_dB: float
    bandwidth_Hz: float
    temperature_sat_haps_C: float
    temperature_haps_gs_C: float
    snr_threshold_dB: float

    def __post_init__(self):
        for name in ("fso_wavelength_nm", "rf_frequency_GHz", "tx_gain_dB", "rx_gain_dB",
                     "noise_figure_dB", "bandwidth_Hz"):
            _require(getattr(self, name) > 0, name, "must be positive")
        _require(self.oxygen_atten_dB_per_km >= 0, "oxygen_atten_dB_per_km", "must be non-negative")
        _require(0 < self.oe_conversion <= 1, "oe_conversion", "must lie in (0, 1]")
        for name in ("temperature_sat_haps_C", "temperature_haps_gs_C"):
            _require(getattr(self, name) > -273.15, name, "must be above absolute zero")

    @property
    def snr_threshold(self) -> float:
        return 10.0 ** (self.snr_threshold_dB / 10.0)


@dataclass(frozen=True)
class WeatherConfig:
    volcanic_level: str
    stratospheric_coeff_per_km: float
    fog: str
    fog_visibility_km: float | None
    cloud: str
    rain_rate_mm_per_h: float
    wind_rms_sat_haps_mps: float
    wind_rms_haps_gs_mps: float
    cn2_nominal_sat_haps: float
    cn2_nominal_haps_gs: float

    def __post_init__(self):
        if self.volcanic_level != "custom":
            _require(self.volcanic_level in tables.VOLCANIC_LEVELS, "volcanic_level",
                     f"unknown level {self.volcanic_level!r}")
            _require(self.stratospheric_coeff_per_km == tables.VOLCANIC_LEVELS[self.volcanic_level],
                     "stratospheric_coeff_per_km", "does not match the named volcanic level")
        _require(self.stratospheric_coeff_per_km > 0, "stratospheric_coeff_per_km", "must be positive")
        _require(self.fog == "none" or self.fog in tables.FOG_ROWS, "fog", f"unknown fog {self.fog!r}")
        if self.fog_visibility_km is not None:
            _require(self.fog == "none", "fog_visibility_km",
                     "set either a named fog or a visibility override, not both")
            _require(self.fog_visibility_km > 0, "fog_visibility_km", "must be positive")
        _require(self.cloud == "none" or self.cloud in tables.CLOUD_ROWS, "cloud",
                 f"unknown cloud {self.cloud!r}")
        _require(self.rain_rate_mm_per_h >= 0, "rain_rate_mm_per_h", "must be non-negative")
        for name in ("wind_rms_sat_haps_mps", "wind_rms_haps_gs_mps"):
            _require(getattr(self, name) > 0, name, "wind speed must be positive")
        for name in ("cn2_nominal_sat_haps", "cn2_nominal_haps_gs"):
            _require(getattr(self, name) >= 0, name, "must be non-negative")

    def fog_visibility(self) -> float | None:
        """Visibility in km of the active fog, or None for a fog-free path."""
        if self.fog_visibility_km is not None:
            return self.fog_visibility_km
        if self.fog == "none":
            return None
        return tables.FOG_ROWS[self.fog][0]

    def cloud_microphysics(self) -> tuple[float, float] | None:
        """(number concentration cm^-3, liquid water g/m^3) of the active cloud."""
        if self.cloud == "none":
            return None
        n, lw, _ = tables.CLOUD_ROWS[self.cloud]
        return n, lw


@dataclass(frozen=True)
class ShadowingPreset:
    m: int
    b: float
    omega: float
    name: str = "custom"

    def __post_init__(self):
        _require(isinstance(self.m, int) and self.m >= 1, "shadowing_m", "m must be an integer >= 1")
        _require(self.b > 0, "shadowing_b", "b must be positive")
        _require(self.omega > 0, "shadowing_omega", "Omega must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: GeometryConfig
    radio: RadioConfig
    weather: WeatherConfig
    shadowing: ShadowingPreset
    n_haps: int = 1
    pointing_errors_enabled: bool = False
    aperture_averaging_enabled: bool = False
    tx_power_sat_dBW: float = 10.0
    tx_power_haps_dBW: float = 10.0
    fso_enabled: bool = True
    rf_enabled: bool = True

    def __post_init__(self):
        _require(isinstance(self.n_haps, int) and self.n_haps >= 1, "n_haps", "need at least one HAPS")
        _require(self.fso_enabled or self.rf_enabled, "fso_enabled",
                 "at least one second-hop branch must be enabled")

    def with_power(self, tx_power_dBW: float) -> ScenarioConfig:
        """Copy with the satellite at ``tx_power_dBW``; the HAPS keeps its configured offset."""
        offset = self.tx_power_haps_dBW - self.tx_power_sat_dBW
        return _replace(self, tx_power_sat_dBW=float(tx_power_dBW),
                        tx_power_haps_dBW=float(tx_power_dBW) + offset)

    def to_mapping(self) -> dict[str, Any]:
        return scenario_to_mapping(self)

    def digest(self) -> str:
        return hashlib.sha256(dump_scenario(self).encode()).hexdigest()[:12]


def _replace(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    from dataclasses import replace
    return replace(cfg, **changes)


# ---------------------------------------------------------------------------
# flat key registry
# ---------------------------------------------------------------------------

_SECTIONS = {
    "geometry": GeometryConfig,
    "radio": RadioConfig,
    "weather": WeatherConfig,
}

KEY_TYPES: dict[str, type] = {}
for _cls in _SECTIONS.values():
    for _f in fields(_cls):
        KEY_TYPES[_f.name] = {"int": int, "bool": bool, "str": str}.get(str(_f.type), float)
KEY_TYPES.update({
    "volcanic_level": str, "fog": str, "cloud": str,
    "shadowing": str, "shadowing_m": int, "shadowing_b": float, "shadowing_omega": float,
    "n_haps": int, "pointing_errors_enabled": bool, "aperture_averaging_enabled": bool,
    "tx_power_sat_dBW": float, "tx_power_haps_dBW": float,
    "fso_enabled": bool, "rf_enabled": bool,
})

ALIASES = {"wind_speed_sat_haps_mps", "wind_speed_haps_gs_mps", "preset"}
ACCEPTED_KEYS = set(KEY_TYPES) | ALIASES

_STRING_OR_NUMBER = {"rain_rate_mm_per_h"}
_OPTIONAL = {"fog_visibility_km"}


def canonicalize(layer: Mapping[str, Any]) -> dict[str, Any]:
    """Rewrite one layer of user keys into canonical keys.

    Aliases: ``wind_speed_*_mps`` is a ground wind passed through the RMS
    wind model; ``volcanic_level``/``shadowing`` names expand to their
    numbers; a named ``rain_rate_mm_per_h`` is looked up in the rain table.
    Setting ``zenith_haps_gs_deg`` alone derives the elevation and vice versa.
    """
    from .atmosphere import rms_wind_speed

    out = dict(layer)
    out.pop("preset", None)

    for link in ("sat_haps", "haps_gs"):
        alias, key = f"wind_speed_{link}_mps", f"wind_rms_{link}_mps"
        if alias in out:
            if key in out:
                raise ScenarioError(f"set either {alias} or {key}, not both", field=alias)
            v = _coerce(alias, out.pop(alias), float)
            _require(v >= 0, alias, "wind speed must be non-negative")
            out[key] = rms_wind_speed(v)

    if "volcanic_level" in out:
        level = out["volcanic_level"]
        if level != "custom":
            if level not in tables.VOLCANIC_LEVELS:
                raise ScenarioError(f"unknown volcanic level {level!r}", field="volcanic_level")
            if "stratospheric_coeff_per_km" in out:
                raise ScenarioError("a named volcanic level fixes the coefficient; use "
                                    "volcanic_level = \"custom\"", field="stratospheric_coeff_per_km")
            out["stratospheric_coeff_per_km"] = tables.VOLCANIC_LEVELS[level]
    elif "stratospheric_coeff_per_km" in out:
        out["volcanic_level"] = "custom"

    if "fog_visibility_km" in out:
        if out.get("fog", "none") != "none":
            raise ScenarioError("set either a named fog or a visibility override, not both",
                                field="fog_visibility_km")
        out["fog"] = "none"
    elif "fog" in out:
        out["fog_visibility_km"] = None

    comps = {"shadowing_m", "shadowing_b", "shadowing_omega"} & out.keys()
    if "shadowing" in out and out["shadowing"] != "custom":
        if comps:
            raise ScenarioError("a named shadowing preset fixes m, b, Omega", field="shadowing")
        name = out["shadowing"]
        if name not in tables.SHADOWING_PRESETS:
            raise ScenarioError(f"unknown shadowing preset {name!r}", field="shadowing")
        m, b, om = tables.SHADOWING_PRESETS[name]
        out.update(shadowing_m=m, shadowing_b=b, shadowing_omega=om)
    elif comps:
        out["shadowing"] = "custom"

    rain = out.get("rain_rate_mm_per_h")
    if isinstance(rain, str):
        if rain not in tables.RAIN_LEVELS:
            raise ScenarioError(f"unknown rain level {rain!r}", field="rain_rate_mm_per_h")
        out["rain_rate_mm_per_h"] = tables.RAIN_LEVELS[rain]

    if "zenith_haps_gs_deg" in out and "elevation_gs_deg" not in out:
        out["elevation_gs_deg"] = 90.0 - _coerce("zenith_haps_gs_deg", out["zenith_haps_gs_deg"], float)
    elif "elevation_gs_deg" in out and "zenith_haps_gs_deg" not in out:
        out["zenith_haps_gs_deg"] = 90.0 - _coerce("elevation_gs_deg", out["elevation_gs_deg"], float)
    return out


def _coerce(key: str, value: Any, typ: type) -> Any:
    if key in _OPTIONAL and value is None:
        return None
    if typ is bool:
        if isinstance(value, bool):
            return value
    elif typ is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif typ is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif typ is str:
        if isinstance(value, str):
            return value
    raise ScenarioError(f"expected {typ.__name__}, got {value!r}", field=key)


def _defaults() -> dict[str, Any]:
    return canonicalize(tables.TABLE5_DEFAULTS)


def figure_bundle(name: str) -> dict[str, Any]:
    """Base overrides for a named preset (``table5-default`` or a figure preset)."""
    if name == "table5-default":
        return {}
    if name not in tables.FIGURE_PRESETS:
        known = ", ".join(["table5-default", *tables.FIGURE_PRESETS])
        raise ScenarioError(f"unknown preset {name!r} (known: {known})", field="preset")
    return dict(tables.FIGURE_PRESETS[name]["overrides"])


def scenario_from_layers(*layers: Mapping[str, Any]) -> ScenarioConfig:
    """Build a validated scenario from the default parameter set overlaid with ``layers`` in order."""
    merged = _defaults()
    for layer in layers:
        unknown = set(layer) - ACCEPTED_KEYS
        if unknown:
            key = sorted(unknown)[0]
            raise ScenarioError("unknown key", field=key)
        if "preset" in layer:
            merged.update(canonicalize(figure_bundle(_coerce("preset", layer["preset"], str))))
        merged.update(canonicalize(layer))
    return _build(merged)


def _build(m: Mapping[str, Any]) -> ScenarioConfig:
    def typed(key):
        if key not in m:
            raise ScenarioError("missing value", field=key)
        return _coerce(key, m[key], KEY_TYPES[key])

    sections = {}
    for sec, cls in _SECTIONS.items():
        kwargs = {f.name: (m.get(f.name) if f.name in _OPTIONAL else typed(f.name))
                  for f in fields(cls)}
        for key in _OPTIONAL & kwargs.keys():
            kwargs[key] = _coerce(key, kwargs[key], float)
        sections[sec] = cls(**kwargs)
    shadow = ShadowingPreset(typed("shadowing_m"), typed("shadowing_b"), typed("shadowing_omega"),
                             typed("shadowing"))
    return ScenarioConfig(
        shadowing=shadow,
        n_haps=typed("n_haps"),
        pointing_errors_enabled=typed("pointing_errors_enabled"),
        aperture_averaging_enabled=typed("aperture_averaging_enabled"),
        tx_power_sat_dBW=typed("tx_power_sat_dBW"),
        tx_power_haps_dBW=typed("tx_power_haps_dBW"),
        fso_enabled=typed("fso_enabled"),
        rf_enabled=typed("rf_enabled"),
        **sections,
    )


def scenario_to_mapping(cfg: ScenarioConfig) -> dict[str, Any]:
    """Canonical flat mapping; feeding it back through :func:`scenario_from_layers` is lossless."""
    out: dict[str, Any] = {}
    for sec in ("geometry", "radio", "weather"):
        obj = getattr(cfg, sec)
        for f in fields(obj):
            out[f.name] = getattr(obj, f.name)
    if out["fog_visibility_km"] is None:
        del out["fog_visibility_km"]
    if out["volcanic_level"] != "custom":
        del out["stratospheric_coeff_per_km"]
    if cfg.shadowing.name != "custom":
        out["shadowing"] = cfg.shadowing.name
    else:
        out.update(shadowing_m=cfg.shadowing.m, shadowing_b=cfg.shadowing.b,
                   shadowing_omega=cfg.shadowing.omega)
    for key in ("n_haps", "pointing_errors_enabled", "aperture_averaging_enabled",
                "tx_power_sat_dBW", "tx_power_haps_dBW", "fso_enabled", "rf_enabled"):
        out[key] = getattr(cfg, key)
    return out


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_scenario(cfg: ScenarioConfig) -> str:
    """Serialise to the scenario file format (every key explicit, no preset)."""
    return "".join(f"{k} = {format_value(v)}\n" for k, v in scenario_to_mapping(cfg).items())


_LINE_RE = re.compile(r"at line (\d+)")


def _key_line(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate scenario text.

    Raises :class:`ScenarioError` carrying the line number for syntax
    problems and unknown keys, and the field name for invariant violations.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = _LINE_RE.search(str(exc))
        raise ScenarioError(f"parse error: {exc}", line=int(m.group(1)) if m else None) from None
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ScenarioError("only flat scalar values are allowed", field=key, line=_key_line(text, key))
        if key not in ACCEPTED_KEYS:
            raise ScenarioError("unknown key", field=key, line=_key_line(text, key))
    try:
        return scenario_from_layers(data)
    except ScenarioError as exc:
        if exc.line is None and exc.field is not None and exc.field in data:
            raise ScenarioError(str(exc).split(": ", 1)[-1], field=exc.field,
                                line=_key_line(text, exc.field)) from None
        raise


def apply_overrides(cfg: ScenarioConfig, overrides: Mapping[str, Any]) -> ScenarioConfig:
    """Return ``cfg`` with flat ``overrides`` applied (same keys as scenario files)."""
    return scenario_from_layers(scenario_to_mapping(cfg), overrides)


def preset_scenario(name: str) -> ScenarioConfig:
    return scenario_from_layers({"preset": name})


def preset_tables() -> dict[str, dict[str, Any]]:
    """Catalog of every transcribed table row and named preset."""
    return {
        "volcanic": {f"{k} volcanic" if k != "table5" else "table5-default": v
                     for k, v in tables.VOLCANIC_LEVELS.items()},
        "fog": {k: {"visibility_km": v, "attenuation_dB_per_km": a}
                for k, (v, a) in tables.FOG_ROWS.items()},
        "cloud": {k: {"number_conc_cm3": n, "liquid_water_g_m3": lw, "visibility_km": v}
                  for k, (n, lw, v) in tables.CLOUD_ROWS.items()},
        "rain": {k: v for k, v in tables.RAIN_LEVELS.items() if k != "none"},
        "shadowing": {f"{k} shadowing": {"m": m, "b": b, "omega": om}
                      for k, (m, b, om) in tables.SHADOWING_PRESETS.items()},
        "figures": {k: v["description"] for k, v in tables.FIGURE_PRESETS.items()},
    }


def lookup(name: str) -> Any:
    """Find a catalog entry by its display name, e.g. ``"cumulus"`` or ``"extreme volcanic"``."""
    for group in preset_tables().values():
        if name in group:
            return group[name]
    raise KeyError(name)
