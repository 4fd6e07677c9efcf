"""Experiment configuration: TOML loading, dotted overrides, validation.

Validation collects every problem before failing and reports each one with
its dotted location; unknown keys are errors.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .counting import DetectionChain
from .errors import ConfigError
from .modes import WaveguideSpec
from .spectra import FilterSpec

__all__ = [
    "CONFIG_ENV",
    "ExperimentConfig",
    "PumpConfig",
    "FringeSettings",
    "MonteCarloSettings",
    "default_config_text",
    "load_raw_config",
    "apply_overrides",
    "validate_config",
    "load_config",
    "config_fingerprint",
]

CONFIG_ENV = "SPDCWG_CONFIG"


@dataclass(frozen=True)
class PumpConfig:
    wavelength_nm: float
    power_incident_uw: float = 53.0
    coupling: float = 0.55
    search_interval_nm: tuple = (400.45, 400.8)

    @property
    def power_incident_mw(self) -> float:
        return 1e-3 * self.power_incident_uw


@dataclass(frozen=True)
class FringeSettings:
    mode_overlap: float = 1.0
    visibility_polarization: float = 0.94
    compensator_phase_rad: float = 0.0


@dataclass(frozen=True)
class MonteCarloSettings:
    interval_s: float = 5.0
    n_intervals: int = 1
    seed: int = 2013
    noiseless: bool = False

    @property
    def integration_s(self) -> float:
        """Counting time per scan point; counts from n_intervals are summed."""
        return self.interval_s * self.n_intervals


@dataclass
class ExperimentConfig:
    waveguide: WaveguideSpec
    calibration_wavelength_nm: float
    pump: PumpConfig
    filters: dict
    brightness: dict
    chains: tuple
    window_s: float
    dark_counts: tuple
    fringe: FringeSettings
    monte_carlo: MonteCarloSettings
    n_points: int
    window_nm: float | None
    scenarios: dict
    raw: dict

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(self.raw)

    @property
    def model_fingerprint(self) -> str:
        """Hash of everything except the Monte Carlo settings."""
        return config_fingerprint(self.raw, exclude=("monte_carlo",))


# --- loading ------------------------------------------------------------------------

def default_config_text() -> str:
    return resources.files("spdcwg").joinpath("data/default.toml").read_text(encoding="utf-8")


def load_raw_config(path=None) -> dict:
    """Parse ``path``; fall back to $SPDCWG_CONFIG, then the packaged default."""
    path = path or os.environ.get(CONFIG_ENV)
    if path is None:
        return tomllib.loads(default_config_text())
    with open(Path(path), "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: not valid TOML ({exc})"]) from exc


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as TOML literals."""
    out = copy.deepcopy(raw)
    problems = []
    for item in overrides or ():
        if "=" not in item:
            problems.append(f"override {item!r}: expected dotted.key=value")
            continue
        key, value = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            problems.append(f"override {item!r}: empty key")
            continue
        node = out
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                problems.append(f"override {key}: {p} is not a table")
                break
            node = nxt
        else:
            node[parts[-1]] = _parse_value(value.strip())
    if problems:
        raise ConfigError(problems)
    return out


def config_fingerprint(raw: dict, exclude=()) -> str:
    """Short sha256 of the canonical JSON form, optionally without some top-level tables."""
    raw = {k: v for k, v in raw.items() if k not in exclude}
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# --- validation helpers -----------------------------------------------------------------

class _Checker:
    def __init__(self):
        self.problems = []

    def fail(self, where, msg):
        self.problems.append(f"{where}: {msg}")

    def table(self, raw, where, allowed, required=()):
        if not isinstance(raw, dict):
            self.fail(where, "expected a table")
            return {}
        for key in raw:
            if key not in allowed:
                self.fail(f"{where}.{key}", f"unknown key (allowed: {', '.join(sorted(allowed))})")
        for key in required:
            if key not in raw:
                self.fail(f"{where}.{key}", "missing required key")
        return raw

    def number(self, table, key, where, default=None, lo=None, hi=None, lo_open=False,
               hi_open=False, integer=False):
        loc = f"{where}.{key}"
        if key not in table:
            if default is None:
                self.fail(loc, "missing required key")
            return default
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(loc, f"expected a finite number, got {v!r}")
            return default
        if integer and int(v) != v:
            self.fail(loc, f"expected an integer, got {v!r}")
            return default
        if lo is not None and (v <= lo if lo_open else v < lo):
            self.fail(loc, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
            return default
        if hi is not None and (v >= hi if hi_open else v > hi):
            self.fail(loc, f"must be {'<' if hi_open else '<='} {hi}, got {v}")
            return default
        return int(v) if integer else float(v)

    def pair(self, table, key, where, default=None, increasing=True):
        loc = f"{where}.{key}"
        v = table.get(key, default)
        if v is None:
            self.fail(loc, "missing required key")
            return default
        if (not isinstance(v, (list, tuple)) or len(v) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            self.fail(loc, f"expected a two-element numeric list, got {v!r}")
            return default
        if increasing and not v[0] < v[1]:
            self.fail(loc, f"expected increasing bounds, got {v!r}")
            return default
        return float(v[0]), float(v[1])

    def name_ref(self, table, key, where, names, default=None):
        v = table.get(key, default)
        if v is None:
            return None
        if v not in names:
            self.fail(f"{where}.{key}",
                      f"undefined filter {v!r}; defined filters: {', '.join(sorted(names)) or 'none'}")
            return None
        return v


_SCENARIO_KEYS = {
    "bands": {"lambda_h_nm", "lambda_v_nm", "grid_n"},
    "islands": {"lambda_h_nm", "n_points", "filter"},
    "heralded": {"centers_nm", "n_centers", "scan_filter", "herald_filter", "brightness"},
    "hom": {"filter", "delays_ps", "n_delays"},
    "fringes": {"filter", "thetas_deg", "n_thetas"},
    "summary": {"filters"},
}


def validate_config(raw: dict) -> ExperimentConfig:
    """Check every invariant; raise :class:`ConfigError` listing all problems."""
    ck = _Checker()
    top = ck.table(raw, "config", {"waveguide", "pump", "filters", "brightness", "chains",
                                    "counting", "fringe", "monte_carlo", "spectrum", "scenarios"},
                   required=("pump",))

    # waveguide
    wg = ck.table(top.get("waveguide", {}), "waveguide",
                  {"width_um", "depth_um", "length_mm", "index_step", "superstrate_index",
                   "poling_period_um", "calibration_wavelength_nm", "temperature_c", "axis_map",
                   "sellmeier_file"})
    w_kw = dict(
        width_um=ck.number(wg, "width_um", "waveguide", 2.0, lo=0, lo_open=True),
        depth_um=ck.number(wg, "depth_um", "waveguide", 5.0, lo=0, lo_open=True),
        length_mm=ck.number(wg, "length_mm", "waveguide", 1.0, lo=0, lo_open=True),
        index_step=ck.number(wg, "index_step", "waveguide", 0.02, lo=0, hi=0.2,
                             lo_open=True, hi_open=True),
        superstrate_index=ck.number(wg, "superstrate_index", "waveguide", 1.0, lo=1.0),
        temperature_c=ck.number(wg, "temperature_c", "waveguide", 19.0, lo=-273.15),
    )
    cal_wl = ck.number(wg, "calibration_wavelength_nm", "waveguide", 801.26, lo=0, lo_open=True)
    poling = wg.get("poling_period_um", "auto")
    if poling != "auto":
        poling = ck.number(wg, "poling_period_um", "waveguide", None, lo=0, lo_open=True)
    amap = ck.table(wg.get("axis_map", {"H": "z", "V": "y", "P": "y"}), "waveguide.axis_map",
                    {"H", "V", "P"}, required=("H", "V", "P"))
    for pol, axis in amap.items():
        if axis not in ("x", "y", "z"):
            ck.fail(f"waveguide.axis_map.{pol}", f"expected one of x, y, z, got {axis!r}")
    sellmeier = wg.get("sellmeier_file")
    if sellmeier is not None and not isinstance(sellmeier, str):
        ck.fail("waveguide.sellmeier_file", "expected a path string")

    # pump
    pump = ck.table(top.get("pump", {}), "pump",
                    {"wavelength_nm", "power_incident_uw", "coupling", "search_interval_nm"},
                    required=("wavelength_nm",))
    pump_cfg = PumpConfig(
        ck.number(pump, "wavelength_nm", "pump", 400.63, lo=0, lo_open=True),
        ck.number(pump, "power_incident_uw", "pump", 53.0, lo=0),
        ck.number(pump, "coupling", "pump", 0.55, lo=0, hi=1, lo_open=True),
        ck.pair(pump, "search_interval_nm", "pump", (400.45, 400.8)),
    )

    # filters
    filters = {}
    for name, spec in ck.table(top.get("filters", {}), "filters", set(top.get("filters", {}))).items():
        loc = f"filters.{name}"
        t = ck.table(spec, loc, {"center_nm", "fwhm_nm", "shape_order", "peak_transmission"},
                     required=("center_nm", "fwhm_nm"))
        c = ck.number(t, "center_nm", loc, None, lo=0, lo_open=True)
        fw = ck.number(t, "fwhm_nm", loc, None, lo=0, lo_open=True)
        order = ck.number(t, "shape_order", loc, 1, lo=1, integer=True)
        peak = ck.number(t, "peak_transmission", loc, 1.0, lo=0, hi=1, lo_open=True)
        if None not in (c, fw, order, peak):
            filters[name] = FilterSpec(c, fw, order, peak)
    defined = set(top.get("filters", {}))

    brightness = {}
    for name in ck.table(top.get("brightness", {}), "brightness", set(top.get("brightness", {}))):
        if name not in defined:
            ck.fail(f"brightness.{name}",
                    f"undefined filter {name!r}; defined filters: {', '.join(sorted(defined))}")
        b = ck.number(top["brightness"], name, "brightness", None, lo=0)
        if b is not None:
            brightness[name] = b

    # detection chains
    chains_raw = ck.table(top.get("chains", {}), "chains", {"arm1", "arm2"})
    chains = []
    for arm in ("arm1", "arm2"):
        loc = f"chains.{arm}"
        t = ck.table(chains_raw.get(arm, {}), loc,
                     {"transmissions", "detector_efficiency", "excess_loss"})
        trans = []
        tr = ck.table(t.get("transmissions", {}), f"{loc}.transmissions", set(t.get("transmissions", {})))
        for label in tr:
            v = ck.number(tr, label, f"{loc}.transmissions", None, lo=0, hi=1)
            if v is not None:
                trans.append((label, v))
        det = ck.number(t, "detector_efficiency", loc, 1.0, lo=0, hi=1)
        exc = ck.number(t, "excess_loss", loc, 1.0, lo=0, hi=1)
        if det is not None and exc is not None:
            chains.append(DetectionChain(tuple(trans), det, exc))

    counting = ck.table(top.get("counting", {}), "counting", {"window_ns", "dark_counts_per_s"})
    window_ns = ck.number(counting, "window_ns", "counting", 3.0, lo=0, lo_open=True)
    dark = ck.pair(counting, "dark_counts_per_s", "counting", (300.0, 300.0), increasing=False)
    if dark and min(dark) < 0:
        ck.fail("counting.dark_counts_per_s", "dark counts must be non-negative")

    fr = ck.table(top.get("fringe", {}), "fringe",
                  {"mode_overlap", "visibility_polarization", "compensator_phase_rad"})
    fringe = FringeSettings(
        ck.number(fr, "mode_overlap", "fringe", 1.0, lo=0, hi=1),
        ck.number(fr, "visibility_polarization", "fringe", 0.94, lo=0, hi=1),
        ck.number(fr, "compensator_phase_rad", "fringe", 0.0),
    )

    mc = ck.table(top.get("monte_carlo", {}), "monte_carlo", {"interval_s", "n_intervals", "seed", "noiseless"})
    noiseless = mc.get("noiseless", False)
    if not isinstance(noiseless, bool):
        ck.fail("monte_carlo.noiseless", f"expected true or false, got {noiseless!r}")
        noiseless = False
    monte = MonteCarloSettings(
        ck.number(mc, "interval_s", "monte_carlo", 5.0, lo=0, lo_open=True),
        ck.number(mc, "n_intervals", "monte_carlo", 1, lo=1, integer=True),
        ck.number(mc, "seed", "monte_carlo", 2013, lo=0, integer=True),
        noiseless,
    )

    sp = ck.table(top.get("spectrum", {}), "spectrum", {"n_points", "window_nm"})
    n_points = ck.number(sp, "n_points", "spectrum", 4097, lo=3, integer=True)
    if n_points is not None and n_points % 2 == 0:
        ck.fail("spectrum.n_points", f"must be odd, got {n_points}")
    window_nm = ck.number(sp, "window_nm", "spectrum", 0.0, lo=0)

    scenarios = {}
    sc_raw = ck.table(top.get("scenarios", {}), "scenarios", set(_SCENARIO_KEYS))
    for name, keys in _SCENARIO_KEYS.items():
        loc = f"scenarios.{name}"
        t = ck.table(sc_raw.get(name, {}), loc, keys)
        s = {}
        if name == "bands":
            s["lambda_h_nm"] = ck.pair(t, "lambda_h_nm", loc, (780.0, 820.0))
            s["lambda_v_nm"] = ck.pair(t, "lambda_v_nm", loc, (780.0, 820.0))
            s["grid_n"] = ck.number(t, "grid_n", loc, 101, lo=2, integer=True)
        elif name == "islands":
            s["lambda_h_nm"] = ck.pair(t, "lambda_h_nm", loc, (700.0, 900.0))
            s["n_points"] = ck.number(t, "n_points", loc, 2001, lo=2, integer=True)
            s["filter"] = ck.name_ref(t, "filter", loc, defined)
        elif name == "heralded":
            s["centers_nm"] = ck.pair(t, "centers_nm", loc, (795.0, 807.5))
            s["n_centers"] = ck.number(t, "n_centers", loc, 51, lo=6, integer=True)
            s["scan_filter"] = ck.name_ref(t, "scan_filter", loc, defined)
            s["herald_filter"] = ck.name_ref(t, "herald_filter", loc, defined)
            s["brightness"] = ck.name_ref(t, "brightness", loc, set(brightness) or defined)
        elif name == "hom":
            s["filter"] = ck.name_ref(t, "filter", loc, defined)
            s["delays_ps"] = ck.pair(t, "delays_ps", loc, (-0.7, 0.35))
            s["n_delays"] = ck.number(t, "n_delays", loc, 43, lo=6, integer=True)
        elif name == "fringes":
            s["filter"] = ck.name_ref(t, "filter", loc, defined)
            s["thetas_deg"] = ck.pair(t, "thetas_deg", loc, (-90.0, 90.0))
            s["n_thetas"] = ck.number(t, "n_thetas", loc, 19, lo=8, integer=True)
        elif name == "summary":
            names = t.get("filters", sorted(brightness))
            if not isinstance(names, list):
                ck.fail(f"{loc}.filters", "expected a list of filter names")
                names = []
            for n in names:
                if n not in defined:
                    ck.fail(f"{loc}.filters", f"undefined filter {n!r}; defined filters: "
                                             f"{', '.join(sorted(defined))}")
                elif n not in brightness:
                    ck.fail(f"{loc}.filters", f"filter {n!r} has no brightness entry")
            s["filters"] = list(names)
        scenarios[name] = s
    for scen in ("hom", "fringes"):
        f = scenarios[scen].get("filter")
        if f is not None and f not in brightness:
            ck.fail(f"scenarios.{scen}.filter", f"filter {f!r} has no brightness entry")

    spec = None
    if not ck.problems:
        try:
            spec = WaveguideSpec(**w_kw, poling_period_um=None if poling == "auto" else poling,
                                 axis_map=tuple(sorted(amap.items())), sellmeier_file=sellmeier)
        except ValueError as exc:
            ck.fail("waveguide", str(exc))
    if ck.problems:
        raise ConfigError(ck.problems)

    if spec.poling_period_um is None:
        from .phasematch import calibrated
        spec = calibrated(spec, None, cal_wl)

    return ExperimentConfig(
        waveguide=spec, calibration_wavelength_nm=cal_wl, pump=pump_cfg, filters=filters,
        brightness=brightness, chains=tuple(chains), window_s=window_ns * 1e-9,
        dark_counts=tuple(dark), fringe=fringe, monte_carlo=monte, n_points=n_points,
        window_nm=window_nm or None, scenarios=scenarios, raw=copy.deepcopy(raw))


def load_config(path=None, overrides=(), seed=None) -> ExperimentConfig:
    raw = apply_overrides(load_raw_config(path), overrides)
    if seed is not None:
        raw.setdefault("monte_carlo", {})["seed"] = int(seed)
    return validate_config(raw)
