"""Quasi-phase-matching mismatch, sinc amplitude and band maps.

The pump wavelength is never independent: it follows from energy
conservation, ``1/lambda_P = 1/lambda_H + 1/lambda_V``.  Wavelengths are in
nm, propagation constants and mismatches in rad/um.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import UnpolableError
from .modes import ModeLabel, Polarization, WaveguideSpec, list_guided_modes, propagation_constant

__all__ = [
    "ModeTriplet",
    "BandMap",
    "pump_wavelength_of",
    "delta_beta",
    "pm_amplitude",
    "calibrate_poling",
    "calibrated",
    "fixed_pump_line",
    "guided_triplets",
    "band_map",
    "island_center",
    "ridge_slope",
    "require_guided",
    "DEGENERATE_WAVELENGTH_NM",
]

# the H/V spectral match reported for a 400.63 nm pump
DEGENERATE_WAVELENGTH_NM = 801.26


@dataclass(frozen=True)
class ModeTriplet:
    pump: ModeLabel
    h: ModeLabel
    v: ModeLabel

    def __post_init__(self):
        for label, pol in ((self.pump, Polarization.P), (self.h, Polarization.H), (self.v, Polarization.V)):
            if label.polarization is not pol:
                raise ValueError(f"{label} used where a {pol.value} mode is required")

    @classmethod
    def of(cls, pump=(0, 0), h=(0, 0), v=(0, 0)) -> "ModeTriplet":
        return cls(ModeLabel(*pump, "P"), ModeLabel(*h, "H"), ModeLabel(*v, "V"))

    @classmethod
    def fundamental(cls) -> "ModeTriplet":
        return cls.of()

    @property
    def id(self) -> str:
        return f"P{self.pump.m}{self.pump.n}-H{self.h.m}{self.h.n}-V{self.v.m}{self.v.n}"

    def __str__(self) -> str:
        return self.id


def pump_wavelength_of(lambda_h, lambda_v):
    """Pump wavelength fixed by energy conservation."""
    lh = np.asarray(lambda_h, dtype=float)
    lv = np.asarray(lambda_v, dtype=float)
    lp = lh * lv / (lh + lv)
    return float(lp) if lp.ndim == 0 else lp


def _grating(spec: WaveguideSpec) -> float:
    if spec.poling_period_um is None:
        raise ValueError("waveguide has no poling period; run calibrate_poling first")
    return 2.0 * np.pi / spec.poling_period_um


def _betas(spec, triplet, lambda_h, lambda_v, strict=True):
    lp = pump_wavelength_of(lambda_h, lambda_v)
    return (propagation_constant(spec, triplet.pump, lp, strict),
            propagation_constant(spec, triplet.h, lambda_h, strict),
            propagation_constant(spec, triplet.v, lambda_v, strict))


def delta_beta(spec: WaveguideSpec, triplet: ModeTriplet, lambda_h, lambda_v, strict: bool = True):
    """beta_P - beta_H - beta_V - 2 pi / Lambda, rad/um."""
    bp, bh, bv = _betas(spec, triplet, lambda_h, lambda_v, strict)
    return bp - bh - bv - _grating(spec)


def pm_amplitude(spec: WaveguideSpec, triplet: ModeTriplet, lambda_h, lambda_v,
                 strict: bool = True, keep_phase: bool = True):
    """Phase-matching amplitude sinc(x) exp(i x), x = delta_beta L / 2.

    sinc is the unnormalized sin(x)/x.  ``keep_phase=False`` drops the
    exp(i x) factor.
    """
    x = 0.5 * delta_beta(spec, triplet, lambda_h, lambda_v, strict) * spec.length_um
    amp = np.sinc(np.asarray(x) / np.pi).astype(complex)
    if keep_phase:
        amp = amp * np.exp(1j * np.asarray(x))
    return complex(amp) if amp.ndim == 0 else amp


def calibrate_poling(spec: WaveguideSpec, triplet: ModeTriplet | None = None,
                     degenerate_wavelength: float = DEGENERATE_WAVELENGTH_NM) -> float:
    """Poling period (um) that zeroes the mismatch at spectral degeneracy."""
    triplet = triplet or ModeTriplet.fundamental()
    bp, bh, bv = _betas(spec, triplet, degenerate_wavelength, degenerate_wavelength)
    k = bp - bh - bv
    if not k > 0:
        raise UnpolableError(
            f"beta_P - beta_H - beta_V = {k:.6g} rad/um <= 0 for {triplet} at "
            f"{degenerate_wavelength} nm; check the dispersion model and axis map")
    return 2.0 * np.pi / k


def calibrated(spec: WaveguideSpec, triplet: ModeTriplet | None = None,
               degenerate_wavelength: float = DEGENERATE_WAVELENGTH_NM) -> WaveguideSpec:
    return spec.with_poling(calibrate_poling(spec, triplet, degenerate_wavelength))


def fixed_pump_line(lambda_p: float, lambda_h_range, n: int = 201) -> np.ndarray:
    """(lambda_H, lambda_V) pairs on the cw energy-conservation locus.

    ``lambda_h_range`` is either a ``(start, stop)`` pair sampled at ``n``
    points or an explicit array of lambda_H values.  Returns shape (N, 2).
    """
    lh = np.asarray(lambda_h_range, dtype=float)
    if lh.shape == (2,) and n != 2:
        lh = np.linspace(lh[0], lh[1], n)
    if np.any(lh <= lambda_p):
        raise ValueError(f"lambda_H must exceed the pump wavelength {lambda_p} nm")
    lv = 1.0 / (1.0 / lambda_p - 1.0 / lh)
    return np.column_stack([lh, lv])


def guided_triplets(spec: WaveguideSpec, wavelength_nm: float = DEGENERATE_WAVELENGTH_NM,
                    pump_modes=((0, 0),)) -> list[ModeTriplet]:
    """All (pump, H, V) combinations guided around ``wavelength_nm``.

    Only the listed pump modes are used; the fundamental H/V pair comes first.
    """
    hs = list_guided_modes(spec, wavelength_nm, "H")
    vs = list_guided_modes(spec, wavelength_nm, "V")
    out = []
    for pm in pump_modes:
        pump = ModeLabel(*pm, "P")
        for h, v in itertools.product(hs, vs):
            out.append(ModeTriplet(pump, h, v))
    return out


@dataclass
class BandMap:
    lambda_h_grid: np.ndarray
    lambda_v_grid: np.ndarray
    triplets: list
    intensity: np.ndarray  # (n_triplets, n_v, n_h)
    cutoff: np.ndarray     # same shape, True where a mode is not guided

    def __post_init__(self):
        for grid in (self.lambda_h_grid, self.lambda_v_grid):
            if np.any(np.diff(grid) <= 0):
                raise ValueError("band-map grids must be strictly increasing")

    def index_of(self, triplet: ModeTriplet) -> int:
        return self.triplets.index(triplet)

    def write_csv(self, path, header_lines=()):
        path = Path(path)
        lh, lv = np.meshgrid(self.lambda_h_grid, self.lambda_v_grid)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("lambda_h_nm,lambda_v_nm,triplet_id,intensity,cutoff_flag\n")
            for k, trip in enumerate(self.triplets):
                tid = trip.id
                for a, b, i, c in zip(lh.ravel(), lv.ravel(), self.intensity[k].ravel(),
                                      self.cutoff[k].ravel()):
                    fh.write(f"{a:.6f},{b:.6f},{tid},{i:.9e},{int(c)}\n")

    def write_matrix(self, path, k: int):
        """gnuplot ``matrix nonuniform`` file for triplet ``k``."""
        n_v, n_h = self.intensity[k].shape
        block = np.empty((n_v + 1, n_h + 1))
        block[0, 0] = n_h
        block[0, 1:] = self.lambda_h_grid
        block[1:, 0] = self.lambda_v_grid
        block[1:, 1:] = self.intensity[k]
        np.savetxt(path, block, fmt="%.9e", header=f"triplet {self.triplets[k].id}")


def band_map(spec: WaveguideSpec, triplets, lambda_h_range, lambda_v_range, grid_n: int) -> BandMap:
    """|Phi|^2 for each triplet over a (lambda_H, lambda_V) grid.

    Grid nodes where any of the three modes is cut off carry intensity 0 and
    a set cutoff flag.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    lh = np.linspace(*lambda_h_range, grid_n)
    lv = np.linspace(*lambda_v_range, grid_n)
    LH, LV = np.meshgrid(lh, lv)
    LP = pump_wavelength_of(LH, LV)
    grating = _grating(spec)
    half_l = 0.5 * spec.length_um

    cache = {}

    def beta(mode, lam):
        key = (mode, lam.shape)
        if key not in cache:
            cache[key] = propagation_constant(spec, mode, lam, strict=False)
        return cache[key]

    triplets = list(triplets)
    intensity = np.zeros((len(triplets), grid_n, grid_n))
    cutoff = np.zeros_like(intensity, dtype=bool)
    for k, trip in enumerate(triplets):
        bp = beta(trip.pump, LP)
        bh = beta(trip.h, lh)[None, :]
        bv = beta(trip.v, lv)[:, None]
        x = half_l * (bp - bh - bv - grating)
        bad = ~np.isfinite(x)
        vals = np.sinc(np.where(bad, 0.0, x) / np.pi) ** 2
        intensity[k] = np.where(bad, 0.0, np.clip(vals, 0.0, 1.0))
        cutoff[k] = bad
    return BandMap(lh, lv, triplets, intensity, cutoff)


def island_center(spec: WaveguideSpec, triplet: ModeTriplet, lambda_p: float, lambda_h_range,
                  n_scan: int = 401):
    """Where the triplet's phase-matching ridge crosses the fixed-pump line.

    Returns ``(lambda_H, lambda_V)`` of the zero of delta_beta along the
    energy-conservation locus, or ``None`` when the ridge does not cross it
    inside ``lambda_h_range`` (or a mode is cut off there).
    """
    line = fixed_pump_line(lambda_p, lambda_h_range, n_scan)
    db = delta_beta(spec, triplet, line[:, 0], line[:, 1], strict=False)
    ok = np.isfinite(db)
    sign_change = np.nonzero(ok[:-1] & ok[1:] & (np.sign(db[:-1]) != np.sign(db[1:])))[0]
    if sign_change.size == 0:
        return None
    i = sign_change[np.argmin(np.abs(db[sign_change]))]

    def g(lh):
        return delta_beta(spec, triplet, lh, 1.0 / (1.0 / lambda_p - 1.0 / lh))

    lh0 = brentq(g, line[i, 0], line[i + 1, 0], xtol=1e-10)
    return lh0, 1.0 / (1.0 / lambda_p - 1.0 / lh0)


def ridge_slope(spec: WaveguideSpec, triplet: ModeTriplet, lambda_h: float, lambda_v: float,
                step_nm: float = 0.01) -> float:
    """d lambda_V / d lambda_H along delta_beta = 0 (implicit differentiation)."""
    dh = (delta_beta(spec, triplet, lambda_h + step_nm, lambda_v)
          - delta_beta(spec, triplet, lambda_h - step_nm, lambda_v)) / (2 * step_nm)
    dv = (delta_beta(spec, triplet, lambda_h, lambda_v + step_nm)
          - delta_beta(spec, triplet, lambda_h, lambda_v - step_nm)) / (2 * step_nm)
    return -dh / dv


def require_guided(spec: WaveguideSpec, triplet: ModeTriplet, lambda_h: float, lambda_v: float):
    """Raise :class:`ModeCutoffError` naming the first mode that is not guided."""
    lp = pump_wavelength_of(lambda_h, lambda_v)
    for mode, lam in ((triplet.pump, lp), (triplet.h, lambda_h), (triplet.v, lambda_v)):
        propagation_constant(spec, mode, lam)
    return True

