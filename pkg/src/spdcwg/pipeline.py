"""End-to-end scenarios: config in, deterministic files out.

Every scenario writes ``<out_dir>/<scenario>/data.csv`` (gnuplot/CSV data
with ``#`` comments), ``fit.txt`` (flat ``key = value`` results) and
``meta.txt`` (config hash, seed, versions, assumptions).  Data files carry no
config hash or timestamp, so analytic outputs do not depend on the seed.
"""
from __future__ import annotations

import contextlib
import math
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig
from .counting import (Rates, arm_efficiency, sample_counts, simulate_fringe_experiment,
                       simulate_hom_experiment)
from .errors import StageError
from .fitting import fit_dip, fit_gaussian, fit_sinusoid
from .interference import BASES, FringeModel, walkoff_delay
from .modes import effective_index, list_guided_modes, mode_group_index
from .phasematch import (ModeTriplet, band_map, fixed_pump_line, guided_triplets, island_center,
                         pm_amplitude, ridge_slope)
from .results import format_value, write_scans_csv
from .spectra import (apply_filters, build_jsa, compensated_overlap, filter_transmission,
                      heralded_scan, marginal_spectrum, tune_pump)

__all__ = ["SCENARIOS", "run_scenario", "run_modes", "run_spectra", "run_tune_pump",
           "spectral_visibility"]

SCENARIOS = ("bands", "islands", "heralded", "hom", "fringes", "summary")

SIGMA_TO_FWHM = 2.0 * math.sqrt(2.0 * math.log(2.0))

ASSUMPTIONS = (
    "brightness = detected pairs / s / mW of pump incident on the waveguide",
    "excess_loss is fitted to the coincidence/singles ratio, not measured",
    "dark counts are an assumed detector specification, not a measured value",
    "the fringe interference visibility is mode_overlap times the delay-compensated spectral overlap",
)


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name attached
        raise StageError(name, exc) from exc


def _versions():
    return {"spdcwg": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _write_kv(path: Path, items) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items:
            fh.write(f"{key} = {format_value(value)}\n")
    return path


def _write_meta(folder: Path, config: ExperimentConfig, scenario: str, uses_seed: bool,
                extra=()) -> Path:
    mc = config.monte_carlo
    items = [("scenario", scenario), ("config_sha256", config.fingerprint)]
    if uses_seed and not mc.noiseless:
        items.append(("seed", mc.seed))
    else:
        items.append(("seed", "unused"))
    items += [("noiseless", mc.noiseless), ("poling_period_um", config.waveguide.poling_period_um),
              ("pump_wavelength_nm", config.pump.wavelength_nm)]
    items += [(f"version.{k}", v) for k, v in _versions().items()]
    items += list(extra)
    items += [(f"assumption.{i + 1}", text) for i, text in enumerate(ASSUMPTIONS)]
    return _write_kv(folder / "meta.txt", items)


def _fit_lines(prefix, fit):
    out = []
    for line in fit.to_text().splitlines():
        key, value = line.split(" = ", 1)
        out.append((f"{prefix}.{key}" if prefix else key, value))
    return out


def _jsa(config: ExperimentConfig, pump_wavelength=None):
    return build_jsa(config.waveguide, ModeTriplet.fundamental(),
                     pump_wavelength or config.pump.wavelength_nm,
                     window=config.window_nm, n_points=config.n_points)


def spectral_visibility(config: ExperimentConfig, filter_name: str | None,
                        pump_wavelength=None) -> float:
    """Delay-compensated Re O of the fundamental triplet behind a filter on both arms."""
    flt = config.filters[filter_name] if filter_name else None
    f = apply_filters(_jsa(config, pump_wavelength), flt, flt)
    return float(compensated_overlap(f)[0].real)


def _counts_or_expected(scan):
    """Sampled counts, or expected counts per integration in noiseless mode."""
    if scan.counts is not None:
        return scan.x, scan.counts.astype(float)
    return scan.x, scan.expected * scan.interval_s


# --- scenarios --------------------------------------------------------------------

def _bands(config, folder):
    sc = config.scenarios["bands"]
    spec = config.waveguide
    with _stage("bands/modes"):
        triplets = guided_triplets(spec, config.calibration_wavelength_nm)
    with _stage("bands/map"):
        bm = band_map(spec, triplets, sc["lambda_h_nm"], sc["lambda_v_nm"], sc["grid_n"])
    with _stage("bands/write"):
        bm.write_csv(folder / "data.csv", [
            "phase-matching intensity |Phi|^2 per mode triplet",
            f"poling_period_um = {format_value(spec.poling_period_um)}"])
    with _stage("bands/islands"):
        items = _island_report(config, triplets, sc["lambda_h_nm"])
    _write_kv(folder / "fit.txt", items)


def _island_report(config, triplets, lambda_h_range):
    spec = config.waveguide
    lp = config.pump.wavelength_nm
    fund = ModeTriplet.fundamental()
    c0 = island_center(spec, fund, lp, lambda_h_range)
    items = [("pump_wavelength_nm", lp), ("lambda_h_range_nm", f"{lambda_h_range[0]} {lambda_h_range[1]}")]
    if c0 is None:
        items.append((f"{fund.id}.center", "none"))
        return items
    items.append(("fundamental_ridge_slope", ridge_slope(spec, fund, *c0)))
    min_sep = math.inf
    for trip in triplets:
        c = island_center(spec, trip, lp, lambda_h_range)
        if c is None:
            items.append((f"{trip.id}.center", "none"))
            continue
        items.append((f"{trip.id}.lambda_h_nm", c[0]))
        items.append((f"{trip.id}.lambda_v_nm", c[1]))
        if trip != fund:
            sep = max(abs(c[0] - c0[0]), abs(c[1] - c0[1]))
            items.append((f"{trip.id}.separation_nm", sep))
            min_sep = min(min_sep, sep)
    items.append(("min_separation_nm", min_sep if math.isfinite(min_sep) else "none"))
    return items


def _islands(config, folder):
    sc = config.scenarios["islands"]
    spec = config.waveguide
    lp = config.pump.wavelength_nm
    flt = config.filters[sc["filter"]] if sc["filter"] else None
    with _stage("islands/modes"):
        triplets = guided_triplets(spec, config.calibration_wavelength_nm)
    with _stage("islands/line"):
        line = fixed_pump_line(lp, sc["lambda_h_nm"], sc["n_points"])
        cols = [np.abs(pm_amplitude(spec, t, line[:, 0], line[:, 1], strict=False)) ** 2
                for t in triplets]
        cols = [np.nan_to_num(c, nan=0.0) for c in cols]
        th = filter_transmission(flt, line[:, 0])
        tv = filter_transmission(flt, line[:, 1])
    with _stage("islands/write"):
        with open(folder / "data.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# |Phi|^2 along the fixed-pump line, pump {format_value(lp)} nm\n")
            fh.write(f"# filter = {sc['filter'] or 'none'}\n")
            fh.write(",".join(["lambda_h_nm", "lambda_v_nm"] + [t.id for t in triplets]
                              + ["filter_h", "filter_v"]) + "\n")
            for i in range(line.shape[0]):
                row = [f"{line[i, 0]:.6f}", f"{line[i, 1]:.6f}"]
                row += [f"{c[i]:.9e}" for c in cols]
                row += [f"{th[i]:.9e}", f"{tv[i]:.9e}"]
                fh.write(",".join(row) + "\n")
    with _stage("islands/centers"):
        items = _island_report(config, triplets, sc["lambda_h_nm"])
        if flt is not None:
            items.append(("filter_half_width_nm", 0.5 * flt.fwhm))
    _write_kv(folder / "fit.txt", items)


def _heralded(config, folder):
    sc = config.scenarios["heralded"]
    mc = config.monte_carlo
    scan_f = config.filters[sc["scan_filter"]]
    herald = config.filters[sc["herald_filter"]] if sc["herald_filter"] else None
    brightness = config.brightness.get(sc["brightness"], 0.0)
    centers = np.linspace(*sc["centers_nm"], sc["n_centers"])
    with _stage("heralded/spectrum"):
        f = _jsa(config)
    eta = [arm_efficiency(c) for c in config.chains]
    detected = brightness * config.pump.power_incident_mw
    generated = detected / (eta[0] * eta[1]) if detected > 0 else 0.0
    rng = np.random.default_rng(mc.seed)
    scans, items = {}, []
    dens = np.abs(f.values) ** 2
    for which in ("H", "V"):
        with _stage(f"heralded/scan_{which}"):
            rel = heralded_scan(f, centers, scan_f.fwhm, herald, which, scan_f.shape_order)
            alone = heralded_scan(f, centers, scan_f.fwhm, None, which, scan_f.shape_order)
            lam_herald = f.lambda_v if which == "H" else f.lambda_h
            t_herald = float(np.sum(dens * filter_transmission(herald, lam_herald)) / np.sum(dens))
            true = detected * rel.expected
            expected = np.empty_like(true)
            counts = None if mc.noiseless else np.empty(true.size, dtype=np.int64)
            for i, t in enumerate(true):
                s_scan = generated * eta[0] * alone.expected[i] + config.dark_counts[0]
                s_herald = generated * eta[1] * t_herald + config.dark_counts[1]
                acc = s_scan * s_herald * config.window_s
                expected[i] = t + acc
                if counts is not None:
                    rates = Rates(s_scan, s_herald, float(t), acc)
                    counts[i] = sample_counts(rates, mc.integration_s, 1, rng=rng)[0].coincidences
            rel.expected = expected
            rel.counts = counts
            rel.interval_s = mc.integration_s
            rel.seed = None if mc.noiseless else mc.seed
            scans[which] = rel
        with _stage(f"heralded/fit_{which}"):
            fit = fit_gaussian(*_counts_or_expected(rel))
            items += _fit_lines(which, fit)
            items.append((f"{which}.fwhm_nm", SIGMA_TO_FWHM * fit["sigma"]))
            items.append((f"{which}.fwhm_nm_err", SIGMA_TO_FWHM * fit.error("sigma")))
    with _stage("heralded/write"):
        write_scans_csv(folder / "data.csv", scans, [
            "heralded single-photon spectra: coincidences vs scan-filter centre (nm)",
            f"scan_filter = {sc['scan_filter']}, herald_filter = {sc['herald_filter'] or 'none'}"])
    _write_kv(folder / "fit.txt", items)


def _hom(config, folder):
    sc = config.scenarios["hom"]
    mc = config.monte_carlo
    flt = config.filters[sc["filter"]] if sc["filter"] else None
    delays = np.linspace(*sc["delays_ps"], sc["n_delays"])
    with _stage("hom/spectrum"):
        f = apply_filters(_jsa(config), flt, flt)
    with _stage("hom/simulate"):
        scan = simulate_hom_experiment(
            f, config.chains[0], config.chains[1], delays, mc.integration_s,
            config.pump.power_incident_mw, config.brightness.get(sc["filter"], 0.0),
            None if mc.noiseless else mc.seed, config.dark_counts, config.window_s, mc.noiseless)
    with _stage("hom/fit"):
        fit = fit_dip(*_counts_or_expected(scan))
        scan.fits["dip"] = fit
    with _stage("hom/walkoff"):
        walk = walkoff_delay(config.waveguide, ModeTriplet.fundamental(), 2 * config.pump.wavelength_nm)
    with _stage("hom/write"):
        scan.write_csv(folder / "data.csv", [
            "HOM coincidences vs compensator delay (ps)", f"filter = {sc['filter'] or 'none'}"])
    items = _fit_lines("", fit) + [
        ("model_visibility", scan.meta["visibility_model"]),
        ("model_optimal_delay_ps", scan.meta["optimal_delay_ps"]),
        ("walkoff_delay_ps", walk),
        ("accidentals_per_s", scan.meta["accidentals_per_s"]),
    ]
    _write_kv(folder / "fit.txt", items)


def _fringe_model(config, filter_name):
    v_spec = spectral_visibility(config, filter_name)
    v_int = min(max(config.fringe.mode_overlap * v_spec, 0.0), 1.0)
    return FringeModel(v_int, config.fringe.visibility_polarization,
                       config.fringe.compensator_phase_rad), v_spec


def _fringe_scans(config, filter_name, thetas, rng):
    mc = config.monte_carlo
    model, v_spec = _fringe_model(config, filter_name)
    scans = {}
    for basis in BASES:
        scans[basis] = simulate_fringe_experiment(
            model, basis, thetas, config.chains[0], config.chains[1], mc.integration_s,
            config.pump.power_incident_mw, config.brightness.get(filter_name, 0.0),
            None if mc.noiseless else mc.seed, rng, config.dark_counts, config.window_s,
            mc.noiseless)
    return model, v_spec, scans


def _fringes(config, folder):
    sc = config.scenarios["fringes"]
    mc = config.monte_carlo
    thetas = np.linspace(*sc["thetas_deg"], sc["n_thetas"])
    rng = np.random.default_rng(mc.seed)
    with _stage("fringes/simulate"):
        model, v_spec, scans = _fringe_scans(config, sc["filter"], thetas, rng)
    items = [("spectral_visibility", v_spec), ("model_visibility_interference",
                                               model.visibility_interference)]
    for basis, scan in scans.items():
        with _stage(f"fringes/fit_{basis}"):
            items += _fit_lines(basis, fit_sinusoid(*_counts_or_expected(scan)))
    with _stage("fringes/write"):
        write_scans_csv(folder / "data.csv", scans, [
            "coincidences vs analyser angle (deg); series = conjugate basis",
            f"filter = {sc['filter'] or 'none'}"])
    _write_kv(folder / "fit.txt", items)


def _summary(config, folder):
    sc = config.scenarios["summary"]
    mc = config.monte_carlo
    thetas = np.linspace(-90.0, 90.0, 19)
    rng = np.random.default_rng(mc.seed)
    power = config.pump.power_incident_mw
    rows, items = [], []
    for name in sc["filters"]:
        with _stage(f"summary/{name}/simulate"):
            model, v_spec, scans = _fringe_scans(config, name, thetas, rng)
        row = {"filter": name}
        levels = []
        for basis, scan in scans.items():
            with _stage(f"summary/{name}/fit_{basis}"):
                fit = fit_sinusoid(*_counts_or_expected(scan))
            row[basis] = (fit["visibility"], fit.error("visibility"))
            levels.append((fit["mean_level"], fit.error("mean_level")))
            items += _fit_lines(f"{name}.{basis}", fit)
        # fitted mean level per basis = detected/2 + accidentals (per integration)
        acc = scans["D"].meta["accidentals_per_s"]
        mean = sum(v for v, _ in levels) / len(levels)
        err = math.sqrt(sum(e * e for _, e in levels)) / len(levels)
        if power > 0:
            b = 2.0 * (mean / mc.integration_s - acc) / power
            b_err = 2.0 * err / mc.integration_s / power
        else:
            b, b_err = float("nan"), float("nan")
        row["brightness"] = (b, b_err)
        items += [(f"{name}.spectral_visibility", v_spec),
                  (f"{name}.model_visibility_interference", model.visibility_interference)]
        rows.append(row)
    with _stage("summary/write"):
        with open(folder / "data.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# fitted fringe visibilities per conjugate basis and estimated brightness\n")
            fh.write("# brightness in detected pairs / s / mW incident\n")
            head = ["filter"]
            for basis in BASES:
                head += [f"V_{basis}", f"V_{basis}_err"]
            fh.write(",".join(head + ["brightness", "brightness_err"]) + "\n")
            for row in rows:
                cols = [row["filter"]]
                for basis in BASES:
                    cols += [f"{row[basis][0]:.10g}", f"{row[basis][1]:.10g}"]
                cols += [f"{row['brightness'][0]:.10g}", f"{row['brightness'][1]:.10g}"]
                fh.write(",".join(cols) + "\n")
    _write_kv(folder / "fit.txt", items)
    return rows


_RUNNERS = {"bands": (_bands, False), "islands": (_islands, False),
            "heralded": (_heralded, True), "hom": (_hom, True),
            "fringes": (_fringes, True), "summary": (_summary, True)}


def run_scenario(config: ExperimentConfig, scenario: str, out_dir) -> Path:
    """Run one scenario and return the folder holding its files."""
    if scenario not in _RUNNERS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
    runner, uses_seed = _RUNNERS[scenario]
    folder = Path(out_dir) / scenario
    folder.mkdir(parents=True, exist_ok=True)
    runner(config, folder)
    _write_meta(folder, config, scenario, uses_seed)
    return folder


# --- single operations exposed by the command line ---------------------------------------------

def run_modes(config: ExperimentConfig, out_dir, wavelength_nm: float = 801.0) -> Path:
    """Guided-mode table (effective and group indices) for H, V and P."""
    folder = Path(out_dir) / "modes"
    folder.mkdir(parents=True, exist_ok=True)
    spec = config.waveguide
    rows = []
    with _stage("modes/solve"):
        for pol, lam in (("H", wavelength_nm), ("V", wavelength_nm), ("P", 0.5 * wavelength_nm)):
            for mode in list_guided_modes(spec, lam, pol):
                rows.append((str(mode), lam, effective_index(spec, mode, lam),
                             mode_group_index(spec, mode, lam)))
    with _stage("modes/write"):
        with open(folder / "data.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# guided modes; index_step = {format_value(spec.index_step)}\n")
            fh.write("mode,wavelength_nm,n_eff,n_group\n")
            for label, lam, neff, ng in rows:
                fh.write(f"{label},{format_value(lam)},{neff:.10f},{ng:.8f}\n")
    counts = {p: sum(1 for r in rows if r[0].endswith(p)) for p in ("H", "V", "P")}
    _write_kv(folder / "fit.txt", [(f"n_modes_{p}", n) for p, n in counts.items()])
    _write_meta(folder, config, "modes", False, [("wavelength_nm", wavelength_nm)])
    return folder


def run_tune_pump(config: ExperimentConfig, out_dir, filter_name: str | None = None,
                  n_scan: int = 41) -> Path:
    """Overlap versus pump wavelength over the search interval, plus the optimum."""
    folder = Path(out_dir) / "tune-pump"
    folder.mkdir(parents=True, exist_ok=True)
    flt = config.filters[filter_name] if filter_name else None
    lo, hi = config.pump.search_interval_nm
    with _stage("tune-pump/optimize"):
        best = tune_pump(config.waveguide, ModeTriplet.fundamental(), (lo, hi), flt, flt,
                         n_points=config.n_points)
    with _stage("tune-pump/scan"):
        grid = np.linspace(lo, hi, n_scan)
        vis = [spectral_visibility(config, filter_name, lp) for lp in grid]
    with _stage("tune-pump/write"):
        with open(folder / "data.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# delay-compensated overlap vs pump wavelength; filter = {filter_name or 'none'}\n")
            fh.write("pump_wavelength_nm,overlap\n")
            for lp, v in zip(grid, vis):
                fh.write(f"{lp:.6f},{v:.12g}\n")
    _write_kv(folder / "fit.txt", [("optimal_pump_wavelength_nm", best),
                                   ("overlap_at_optimum", spectral_visibility(config, filter_name, best))])
    _write_meta(folder, config, "tune-pump", False, [("filter", filter_name or "none")])
    return folder


def _half_max_width(x, y):
    """Full width at half maximum of a sampled single peak (linear interpolation)."""
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    i = k
    while i > 0 and y[i] > half:
        i -= 1
    j = k
    while j < y.size - 1 and y[j] > half:
        j += 1
    left = np.interp(half, [y[i], y[i + 1]], [x[i], x[i + 1]])
    right = np.interp(half, [y[j], y[j - 1]], [x[j], x[j - 1]])
    return float(right - left)


def run_spectra(config: ExperimentConfig, out_dir, n_bins: int = 801) -> Path:
    """Marginal spectra and expected heralded scans; analytic, no sampling."""
    folder = Path(out_dir) / "spectra"
    folder.mkdir(parents=True, exist_ok=True)
    sc = config.scenarios["heralded"]
    scan_f = config.filters[sc["scan_filter"]]
    herald = config.filters[sc["herald_filter"]] if sc["herald_filter"] else None
    centers = np.linspace(*sc["centers_nm"], sc["n_centers"])
    with _stage("spectra/spectrum"):
        f = _jsa(config)
    items = []
    series = {}
    with _stage("spectra/marginal"):
        for which in ("H", "V"):
            lam, inten = marginal_spectrum(f, which, n_bins)
            series[f"marginal_{which}"] = (lam, inten)
            items += [(f"marginal_{which}.peak_nm", float(lam[np.argmax(inten)])),
                      (f"marginal_{which}.fwhm_nm", _half_max_width(lam, inten))]
    with _stage("spectra/heralded"):
        for which in ("H", "V"):
            scan = heralded_scan(f, centers, scan_f.fwhm, herald, which, scan_f.shape_order)
            rel = scan.expected / scan.expected.max()
            series[f"heralded_{which}"] = (centers, rel)
            items += [(f"heralded_{which}.peak_nm", float(centers[np.argmax(rel)])),
                      (f"heralded_{which}.fwhm_nm", _half_max_width(centers, rel))]
    with _stage("spectra/write"):
        with open(folder / "data.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# single-photon spectra, unit peak; heralded_* use the scan and herald filters\n")
            fh.write(f"# model_sha256 = {config.model_fingerprint}\n")
            fh.write("series,lambda_nm,intensity\n")
            for name, (lam, inten) in series.items():
                for a, b in zip(lam, inten):
                    fh.write(f"{name},{a:.6f},{b:.10e}\n")
    _write_kv(folder / "fit.txt", items)
    _write_meta(folder, config, "spectra", False)
    return folder
