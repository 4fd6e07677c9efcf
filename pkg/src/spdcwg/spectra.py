"""cw-pump biphoton amplitude on a detuning grid, filters and overlaps.

Frequencies follow omega_H = omega_0 + nu and omega_V = omega_0 - nu with
omega_0 half the pump angular frequency; nu is in rad/s.  Delays are in ps.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .errors import ConstructionError, OptimizationError
from .modes import WaveguideSpec, mode_group_index
from .phasematch import ModeTriplet, pm_amplitude, require_guided
from .results import ScanResult

__all__ = [
    "FilterSpec",
    "SpectralAmplitude",
    "symmetric_grid",
    "natural_halfwidth",
    "build_jsa",
    "filter_transmission",
    "apply_filters",
    "marginal_spectrum",
    "heralded_scan",
    "spectral_exchange_overlap",
    "exchange_overlap_curve",
    "compensated_overlap",
    "tune_pump",
]

PS = 1e-12


@dataclass(frozen=True)
class FilterSpec:
    center: float
    fwhm: float
    shape_order: int = 1
    peak_transmission: float = 1.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("filter fwhm must be > 0")
        if not 0 < self.peak_transmission <= 1:
            raise ValueError("filter peak_transmission must lie in (0, 1]")
        if int(self.shape_order) != self.shape_order or self.shape_order < 1:
            raise ValueError("filter shape_order must be a positive integer")


def filter_transmission(flt: FilterSpec | None, wavelength_nm):
    """Power transmission, peak * exp(-ln2 (2 (lambda - center) / fwhm)^(2 order))."""
    lam = np.asarray(wavelength_nm, dtype=float)
    if flt is None:
        return np.ones_like(lam)
    u = 2.0 * (lam - flt.center) / flt.fwhm
    return flt.peak_transmission * np.exp(-math.log(2.0) * u ** (2 * int(flt.shape_order)))


def symmetric_grid(nu_max: float, n_points: int) -> np.ndarray:
    """Uniform grid on [-nu_max, nu_max] with exact mirror symmetry."""
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("n_points must be an odd integer >= 3")
    half = n_points // 2
    pos = np.arange(1, half + 1) * (nu_max / half)
    return np.concatenate([-pos[::-1], [0.0], pos])


@dataclass
class SpectralAmplitude:
    pump_wavelength: float      # nm
    nu: np.ndarray              # rad/s, symmetric, odd length
    values: np.ndarray          # complex amplitude per node
    triplet: ModeTriplet | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.nu.ndim != 1 or self.nu.size % 2 == 0 or self.nu.size < 3:
            raise ValueError("detuning grid must be 1-D with an odd number of nodes")
        if not np.array_equal(self.nu, -self.nu[::-1]):
            raise ValueError("detuning grid must be symmetric about zero")
        if np.any(np.diff(self.nu) <= 0):
            raise ValueError("detuning grid must be increasing")
        if self.values.shape != self.nu.shape:
            raise ValueError("values and detuning grid differ in length")

    @property
    def omega0(self) -> float:
        return math.pi * C_LIGHT / (self.pump_wavelength * 1e-9)

    @property
    def dnu(self) -> float:
        return float(self.nu[1] - self.nu[0])

    @property
    def lambda_h(self) -> np.ndarray:
        return 2e9 * math.pi * C_LIGHT / (self.omega0 + self.nu)

    @property
    def lambda_v(self) -> np.ndarray:
        return 2e9 * math.pi * C_LIGHT / (self.omega0 - self.nu)

    def norm(self) -> float:
        return float(trapezoid(np.abs(self.values) ** 2, self.nu))

    def with_values(self, values) -> "SpectralAmplitude":
        return replace(self, values=np.asarray(values, dtype=complex), meta=dict(self.meta))


def _nu_per_nm(lambda0_nm: float) -> float:
    """|d omega / d lambda| at lambda0 in (rad/s)/nm."""
    return 2.0 * math.pi * C_LIGHT / (lambda0_nm * 1e-9) ** 2 * 1e-9


def natural_halfwidth(spec: WaveguideSpec, triplet: ModeTriplet, pump_wavelength: float) -> float:
    """Detuning (rad/s) of the first zero of the sinc island.

    delta_beta changes with nu at rate (N_gV - N_gH)/c, so the zero sits at
    2 pi c / (L |N_gH - N_gV|).
    """
    lam0 = 2.0 * pump_wavelength
    dng = mode_group_index(spec, triplet.h, lam0) - mode_group_index(spec, triplet.v, lam0)
    if dng == 0:
        raise ConstructionError("H and V group indices coincide; no natural sinc width")
    return 2.0 * math.pi * C_LIGHT / (spec.length_um * 1e-6 * abs(dng))


def build_jsa(spec: WaveguideSpec, triplet: ModeTriplet | None, pump_wavelength: float,
              window: float | None = None, n_points: int = 4097,
              keep_phase: bool = True) -> SpectralAmplitude:
    """Phase-matching amplitude along the cw energy-conservation line.

    ``window`` is the half-width in nm of lambda_H around 2 lambda_P; the
    default spans eight natural sinc half-widths.
    """
    triplet = triplet or ModeTriplet.fundamental()
    lam0 = 2.0 * pump_wavelength
    require_guided(spec, triplet, lam0, lam0)
    if window is None:
        nu_max = 8.0 * natural_halfwidth(spec, triplet, pump_wavelength)
    else:
        nu_max = window * _nu_per_nm(lam0)
    nu = symmetric_grid(nu_max, n_points)
    f = SpectralAmplitude(pump_wavelength, nu, np.zeros_like(nu, dtype=complex), triplet)
    values = pm_amplitude(spec, triplet, f.lambda_h, f.lambda_v, keep_phase=keep_phase)
    peak = float(np.max(np.abs(values)))
    if not peak > 0:
        raise ConstructionError("window misses phase-matching island: amplitude is zero")
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > 0.05 * peak:
        warnings.warn(f"amplitude at window edge is {edge / peak:.3f} of peak; widen the window",
                      RuntimeWarning, stacklevel=2)
    return f.with_values(values)


def apply_filters(f: SpectralAmplitude, filter_h: FilterSpec | None = None,
                  filter_v: FilterSpec | None = None) -> SpectralAmplitude:
    """Multiply by amplitude transmissions sqrt(T_H(lambda_H)) sqrt(T_V(lambda_V))."""
    if filter_h is None and filter_v is None:
        return f
    t = np.sqrt(filter_transmission(filter_h, f.lambda_h) * filter_transmission(filter_v, f.lambda_v))
    return f.with_values(f.values * t)


def marginal_spectrum(f: SpectralAmplitude, which: str = "H", n_bins: int = 401):
    """Single-photon spectrum on a uniform wavelength grid, unit peak.

    Returns ``(wavelength_nm, intensity)``.  The density includes the
    Jacobian |d nu / d lambda| = 2 pi c / lambda^2.
    """
    which = which.upper()
    if which not in ("H", "V"):
        raise ValueError("which must be 'H' or 'V'")
    lam_nodes = f.lambda_h if which == "H" else f.lambda_v
    lam = np.linspace(lam_nodes.min(), lam_nodes.max(), n_bins)
    # detuning seen by the chosen photon
    nu_of_lam = 2e9 * math.pi * C_LIGHT / lam - f.omega0
    if which == "V":
        nu_of_lam = -nu_of_lam
    dens = np.interp(nu_of_lam, f.nu, np.abs(f.values) ** 2) / lam ** 2
    peak = dens.max()
    return lam, (dens / peak if peak > 0 else dens)


def heralded_scan(f: SpectralAmplitude, centers, scan_filter_fwhm: float = 0.7,
                  herald_filter: FilterSpec | None = None, which: str = "H",
                  scan_shape_order: int = 1) -> ScanResult:
    """Relative coincidence rate as a narrow filter is tuned across one photon.

    The rate at each centre is the fraction of pairs passing both the scan
    filter (on ``which``) and the optional herald filter (on the partner).
    """
    which = which.upper()
    centers = np.asarray(centers, dtype=float)
    dens = np.abs(f.values) ** 2
    total = trapezoid(dens, f.nu)
    if not total > 0:
        raise ConstructionError("spectral amplitude has zero norm")
    lam_scan, lam_herald = (f.lambda_h, f.lambda_v) if which == "H" else (f.lambda_v, f.lambda_h)
    herald = filter_transmission(herald_filter, lam_herald)
    rates = np.empty_like(centers)
    for i, c in enumerate(centers):
        t = filter_transmission(FilterSpec(c, scan_filter_fwhm, scan_shape_order), lam_scan)
        rates[i] = trapezoid(dens * t * herald, f.nu) / total
    return ScanResult("center_nm", centers, rates, meta={"scanned": which,
                                                          "scan_fwhm_nm": scan_filter_fwhm})


# --- exchange overlap -------------------------------------------------------------

def _trap_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def _exchange_product(f: SpectralAmplitude):
    g = f.values * np.conj(f.values[::-1])
    denom = float(np.sum(_trap_weights(f.nu.size) * np.abs(f.values) ** 2))
    if not denom > 0:
        raise ValueError("spectral amplitude has zero norm")
    return g * _trap_weights(f.nu.size), denom


def exchange_overlap_curve(f: SpectralAmplitude, delays_ps) -> np.ndarray:
    """O(tau) = int f(nu) f*(-nu) exp(-2 i nu tau) dnu / int |f|^2 dnu."""
    gw, denom = _exchange_product(f)
    tau = np.atleast_1d(np.asarray(delays_ps, dtype=float)) * PS
    out = np.empty(tau.size, dtype=complex)
    for start in range(0, tau.size, 256):
        chunk = tau[start:start + 256]
        out[start:start + 256] = np.exp(-2j * np.outer(chunk, f.nu)) @ gw / denom
    return out


def spectral_exchange_overlap(f: SpectralAmplitude, delay_ps: float = 0.0) -> complex:
    """Exchange overlap O at a fixed relative delay (default none)."""
    return complex(exchange_overlap_curve(f, [delay_ps])[0])


def _refine_max(f: SpectralAmplitude, lo_ps: float, hi_ps: float):
    res = minimize_scalar(lambda t: -exchange_overlap_curve(f, [t])[0].real,
                          bounds=(lo_ps, hi_ps), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(hi_ps - lo_ps))})
    return float(res.x)


def refine_overlap_peak(f: SpectralAmplitude, delays_ps, values) -> tuple[complex, float]:
    """Polish the grid maximum of Re O(tau) by bounded parabolic/golden search.

    Returns ``(O(tau*), tau*)``; ``values`` are O on ``delays_ps``.
    """
    delays_ps = np.asarray(delays_ps, dtype=float)
    k = int(np.argmax(np.real(values)))
    lo = delays_ps[max(k - 1, 0)]
    hi = delays_ps[min(k + 1, delays_ps.size - 1)]
    best_tau, best_val = float(delays_ps[k]), complex(values[k])
    if hi > lo:
        tau = _refine_max(f, lo, hi)
        val = spectral_exchange_overlap(f, tau)
        if val.real > best_val.real:
            best_tau, best_val = tau, val
    return best_val, best_tau


def overlap_search_grid(f: SpectralAmplitude, oversample: int = 4) -> np.ndarray:
    """Delay grid (ps) resolving O(tau) over one alias period, centred on 0."""
    m = oversample * f.nu.size
    step = math.pi / (m * f.dnu) / PS
    j = np.arange(m) - m // 2
    return j * step


def compensated_overlap(f: SpectralAmplitude) -> tuple[complex, float]:
    """Exchange overlap at the delay that maximizes Re O (the HOM-minimizing delay).

    Searches a dense FFT grid over a full alias period, then polishes the
    best node.  Returns ``(O(tau*), tau*)`` with tau* in ps.
    """
    gw, denom = _exchange_product(f)
    n = f.nu.size
    m = 4 * n
    half = n // 2
    # O(tau_j), tau_j = pi j / (m dnu): sum_k gw_k exp(-2 pi i (k - half) j / m)
    spectrum = np.fft.fft(gw, m) * np.exp(2j * math.pi * half * np.arange(m) / m) / denom
    # j >= m/2 aliases to j - m; fftshift aligns with overlap_search_grid
    delays = overlap_search_grid(f)
    values = np.fft.fftshift(spectrum)
    return refine_overlap_peak(f, delays, values)


def tune_pump(spec: WaveguideSpec, triplet: ModeTriplet | None, search_interval,
              filter_h: FilterSpec | None = None, filter_v: FilterSpec | None = None,
              window: float | None = None, n_points: int = 4097, n_coarse: int = 20,
              xtol_nm: float = 1e-4) -> float:
    """Pump wavelength (nm) maximizing the delay-compensated exchange overlap.

    Coarse scan of ``n_coarse`` points, then golden-section search on the
    bracket around the best interior node.
    """
    lo, hi = map(float, search_interval)
    if not hi > lo:
        raise ValueError("search interval must have positive width")
    triplet = triplet or ModeTriplet.fundamental()
    if window is None:
        center = 0.5 * (lo + hi)
        window = 8.0 * natural_halfwidth(spec, triplet, center) / _nu_per_nm(2 * center)
        # cover the island wherever the pump puts it inside the interval
        window += 4.0 * (hi - lo)

    def score(lp):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            f = build_jsa(spec, triplet, lp, window=window, n_points=n_points)
        return compensated_overlap(apply_filters(f, filter_h, filter_v))[0].real

    grid = np.linspace(lo, hi, n_coarse)
    scores = np.array([score(x) for x in grid])
    k = int(np.argmax(scores))
    if k == 0 or k == n_coarse - 1:
        raise OptimizationError(
            f"overlap maximum at interval edge {grid[k]:.4f} nm; widen the search interval")
    a, b = grid[k - 1], grid[k + 1]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - invphi * (b - a), a + invphi * (b - a)
    f1, f2 = score(x1), score(x2)
    while b - a > xtol_nm:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = score(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = score(x2)
    return 0.5 * (a + b)
