"""Hong-Ou-Mandel dips and Shih-Alley polarization fringes.

The HOM coincidence probability at relative delay tau is

    p(tau) = 1/2 [1 - Re O(tau)],

with O the exchange overlap of :mod:`spdcwg.spectra`.  The delay enters the
kernel as exp(-2 i nu tau); under that convention the dip of a walked-off
pair sits at tau* = -(L / 2c) (N_gH - N_gV).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT

from .modes import WaveguideSpec, mode_group_index
from .phasematch import DEGENERATE_WAVELENGTH_NM, ModeTriplet
from .spectra import (SpectralAmplitude, compensated_overlap, exchange_overlap_curve,
                      refine_overlap_peak)

__all__ = [
    "HomCurve",
    "FringeModel",
    "hom_curve",
    "walkoff_delay",
    "hom_minimum_matches_walkoff",
    "fringe_curve",
    "fringe_visibility_from_overlap",
    "BASES",
]

BASES = ("H", "V", "D", "A")


@dataclass
class HomCurve:
    delays: np.ndarray
    coincidence_probability: np.ndarray
    visibility: float
    optimal_delay: float


def hom_curve(f: SpectralAmplitude, delays) -> HomCurve:
    """Coincidence probability behind a balanced beam splitter versus delay (ps).

    The visibility is 1 - 2 min p, with the grid minimum polished by bounded
    parabolic search between its neighbours.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or delays.size == 0 or not np.all(np.isfinite(delays)):
        raise ValueError("delays must be a non-empty 1-D sequence of finite values")
    order = np.argsort(delays)
    o = exchange_overlap_curve(f, delays[order])
    p_sorted = np.clip(0.5 * (1.0 - o.real), 0.0, 1.0)
    best, tau = refine_overlap_peak(f, delays[order], o)
    p = np.empty_like(p_sorted)
    p[order] = p_sorted
    p_min = max(0.0, 0.5 * (1.0 - best.real))
    return HomCurve(delays, p, 1.0 - 2.0 * p_min, tau)


def walkoff_delay(spec: WaveguideSpec, triplet: ModeTriplet | None = None,
                  degenerate_wavelength: float = DEGENERATE_WAVELENGTH_NM) -> float:
    """Delay (ps) that compensates the H/V group walk-off of an average pair.

    Pairs are born uniformly along the guide, so the mean group-delay
    difference is (L/2)(1/v_gH - 1/v_gV); the compensating setting in the
    hom_curve delay convention is its negative.  Group indices come from a
    +-0.5 nm central difference of the mode effective indices.
    """
    triplet = triplet or ModeTriplet.fundamental()
    ng_h = mode_group_index(spec, triplet.h, degenerate_wavelength)
    ng_v = mode_group_index(spec, triplet.v, degenerate_wavelength)
    lag = 0.5 * spec.length_um * 1e-6 * (ng_h - ng_v) / C_LIGHT
    return -lag * 1e12


def hom_minimum_matches_walkoff(f: SpectralAmplitude, spec: WaveguideSpec,
                                triplet: ModeTriplet | None = None) -> tuple[float, float]:
    """(delay of the HOM minimum, walk-off prediction), both in ps."""
    triplet = triplet or f.triplet or ModeTriplet.fundamental()
    _, tau = compensated_overlap(f)
    return tau, walkoff_delay(spec, triplet, 2.0 * f.pump_wavelength)


@dataclass(frozen=True)
class FringeModel:
    visibility_interference: float
    visibility_polarization: float = 1.0
    compensator_phase: float = 0.0

    def __post_init__(self):
        for name in ("visibility_interference", "visibility_polarization"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def fringe_curve(model: FringeModel, conjugate_basis: str, thetas_deg) -> np.ndarray:
    """Relative coincidence rate versus analyser angle theta (degrees).

    ``conjugate_basis`` is the polarization the partner photon is projected on.
    """
    two_theta = 2.0 * np.deg2rad(np.asarray(thetas_deg, dtype=float))
    v_int = model.visibility_interference * math.cos(model.compensator_phase)
    v_pol = model.visibility_polarization
    basis = conjugate_basis.upper()
    if basis == "D":
        return 0.25 * (1.0 + v_int * np.sin(two_theta))
    if basis == "A":
        return 0.25 * (1.0 - v_int * np.sin(two_theta))
    if basis == "H":
        return 0.25 * (1.0 - v_pol * np.cos(two_theta))
    if basis == "V":
        return 0.25 * (1.0 + v_pol * np.cos(two_theta))
    raise ValueError(f"unknown conjugate basis {conjugate_basis!r}; expected one of {BASES}")


def fringe_visibility_from_overlap(f: SpectralAmplitude, compensator_phase: float = 0.0,
                                   delays=None) -> float:
    """Diagonal-basis fringe visibility Re(exp(i phi) O(tau*)).

    tau* is the compensator delay that minimizes HOM coincidences: found on
    ``delays`` when given (as an experimenter scanning the compensator
    would), otherwise by a global search over the resolvable delay range.
    """
    if delays is None:
        o, _ = compensated_overlap(f)
    else:
        delays = np.sort(np.asarray(delays, dtype=float))
        o, _ = refine_overlap_peak(f, delays, exchange_overlap_curve(f, delays))
    return float((np.exp(1j * compensator_phase) * o).real)
