"""Guided modes of a rectangular step-index channel via the effective-index method.

The channel is a core of index ``n_bulk + index_step`` (width x depth) sitting
under the crystal surface: air (or ``superstrate_index``) above, bulk crystal
below and to either side.  The vertical slab is solved first for vertical
order ``n``; its effective index then serves as the core of a symmetric
lateral slab (bulk cladding) solved for lateral order ``m``.

Wavelengths are vacuum nanometres, geometry is in micrometres, propagation
constants are in rad/um.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .dispersion import CrystalAxis, bulk_index, model_for
from .errors import ModeCutoffError

__all__ = [
    "Polarization",
    "ModeLabel",
    "WaveguideSpec",
    "slab_modes",
    "effective_index",
    "propagation_constant",
    "mode_group_index",
    "list_guided_modes",
    "calibrate_index_step",
]

N_EFF_TOL = 1e-10
DEFAULT_AXIS_MAP = (("H", "z"), ("V", "y"), ("P", "y"))


class Polarization(str, enum.Enum):
    H = "H"
    V = "V"
    P = "P"


@dataclass(frozen=True, order=True)
class ModeLabel:
    m: int = 0
    n: int = 0
    polarization: Polarization = Polarization.H

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError(f"mode orders must be non-negative, got ({self.m}, {self.n})")
        object.__setattr__(self, "polarization", Polarization(self.polarization))

    @property
    def is_fundamental(self) -> bool:
        return self.m == 0 and self.n == 0

    def __str__(self) -> str:
        return f"{self.m}{self.n}_{self.polarization.value}"


@dataclass(frozen=True)
class WaveguideSpec:
    width_um: float = 2.0
    depth_um: float = 5.0
    length_mm: float = 1.0
    index_step: float = 0.02
    superstrate_index: float = 1.0
    poling_period_um: float | None = None
    temperature_c: float = 19.0
    axis_map: tuple[tuple[str, str], ...] = field(default=DEFAULT_AXIS_MAP)
    sellmeier_file: str | None = None

    def __post_init__(self):
        if isinstance(self.axis_map, dict):
            object.__setattr__(self, "axis_map", tuple(sorted(self.axis_map.items())))
        problems = []
        for name in ("width_um", "depth_um", "length_mm"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if self.poling_period_um is not None and not self.poling_period_um > 0:
            problems.append("poling_period_um must be > 0")
        if not 0 < self.index_step < 0.2:
            problems.append("index_step must lie in (0, 0.2)")
        if not self.superstrate_index >= 1.0:
            problems.append("superstrate_index must be >= 1")
        amap = dict(self.axis_map)
        for pol in Polarization:
            if pol.value not in amap:
                problems.append(f"axis_map lacks an entry for {pol.value}")
            else:
                try:
                    CrystalAxis(amap[pol.value])
                except ValueError:
                    problems.append(f"axis_map[{pol.value}] = {amap[pol.value]!r} is not x, y or z")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def length_um(self) -> float:
        return 1e3 * self.length_mm

    def axis(self, polarization) -> CrystalAxis:
        return CrystalAxis(dict(self.axis_map)[Polarization(polarization).value])

    def horizontal_field(self, polarization) -> bool:
        """True when the mode's electric field lies along the lateral direction.

        H is horizontal and V vertical by definition; the pump follows
        whichever down-converted photon shares its crystal axis.
        """
        pol = Polarization(polarization)
        if pol is Polarization.H:
            return True
        if pol is Polarization.V:
            return False
        axis = self.axis(pol)
        return axis is self.axis(Polarization.H) and axis is not self.axis(Polarization.V)

    def with_poling(self, period_um: float) -> "WaveguideSpec":
        return replace(self, poling_period_um=period_um)


# --- slab solver ---------------------------------------------------------------

def _slab_order(n_core, n_sub, n_cover, thickness_um, wavelength_nm, order, tm):
    """Effective index of slab mode ``order``; NaN where it is not guided.

    Bisection in N on the dispersion relation

        V sqrt(1-b) = m pi + atan(r_s sqrt(b/(1-b))) + atan(r_c sqrt((b+a)/(1-b)))

    whose left minus right side decreases monotonically on (n_sub, n_core).
    """
    n_core, n_sub, n_cover, lam = np.broadcast_arrays(
        np.asarray(n_core, float), np.asarray(n_sub, float),
        np.asarray(n_cover, float), np.asarray(wavelength_nm, float) * 1e-3)
    # the higher of the two claddings acts as the substrate
    ns = np.maximum(n_sub, n_cover)
    nc = np.minimum(n_sub, n_cover)
    nf = n_core
    span = nf * nf - ns * ns
    valid = span > 0
    span = np.where(valid, span, 1.0)
    v = 2.0 * np.pi / lam * thickness_um * np.sqrt(span)
    a = (ns * ns - nc * nc) / span
    if tm:
        rs, rc = (nf / ns) ** 2, (nf / nc) ** 2
    else:
        rs = rc = np.ones_like(nf)

    def f(neff):
        b = np.clip((neff * neff - ns * ns) / span, 0.0, 1.0 - 1e-16)
        return (v * np.sqrt(1.0 - b) - np.arctan(rs * np.sqrt(b / (1.0 - b)))
                - np.arctan(rc * np.sqrt((b + a) / (1.0 - b))) - order * np.pi)

    guided = valid & (v - np.arctan(rc * np.sqrt(a)) - order * np.pi > 0)
    lo = ns.copy()
    hi = np.where(valid, nf, ns)
    width = float(np.max(hi - lo)) if hi.size else 0.0
    n_iter = max(1, math.ceil(math.log2(max(width, N_EFF_TOL) / N_EFF_TOL)) + 2)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        up = f(mid) > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    out = np.where(guided, 0.5 * (lo + hi), np.nan)
    return out


def slab_modes(n_core, n_substrate, n_cover, thickness_um, wavelength_nm, polarization_class="TE"):
    """All guided modes of a three-layer slab, effective indices sorted descending.

    ``polarization_class`` is ``"TE"`` (field parallel to the layers) or
    ``"TM"``.  An empty list means nothing is guided.
    """
    cls = str(polarization_class).upper().replace("-LIKE", "")
    if cls not in ("TE", "TM"):
        raise ValueError(f"polarization_class must be TE or TM, got {polarization_class!r}")
    if not n_core > max(n_substrate, n_cover):
        raise ValueError("slab core index must exceed both cladding indices")
    out = []
    order = 0
    while True:
        neff = float(_slab_order(n_core, n_substrate, n_cover, thickness_um,
                                 wavelength_nm, order, cls == "TM"))
        if math.isnan(neff):
            break
        out.append(neff)
        order += 1
    return out


# --- channel waveguide ----------------------------------------------------------

def _mode_neff(spec: WaveguideSpec, mode: ModeLabel, wavelength_nm):
    """Vectorized effective index, NaN at cutoff."""
    model = model_for(spec.sellmeier_file)
    lam = np.asarray(wavelength_nm, dtype=float)
    nb = bulk_index(spec.axis(mode.polarization), lam, model)
    horizontal = spec.horizontal_field(mode.polarization)
    # vertical slab: TE when E is horizontal (parallel to the surface)
    n_vert = _slab_order(nb + spec.index_step, nb, spec.superstrate_index,
                         spec.depth_um, lam, mode.n, tm=not horizontal)
    ok = np.isfinite(n_vert) & (n_vert > nb)
    n_vert_safe = np.where(ok, n_vert, nb + 0.5 * spec.index_step)
    n_eff = _slab_order(n_vert_safe, nb, nb, spec.width_um, lam, mode.m, tm=horizontal)
    n_eff = np.where(ok, n_eff, np.nan)
    guided = np.isfinite(n_eff)
    if np.any(guided & ~((n_eff > nb) & (n_eff < nb + spec.index_step))):
        raise AssertionError("effective index escaped the guidance bounds")
    return n_eff


@lru_cache(maxsize=65536)
def _scalar_neff(spec: WaveguideSpec, mode: ModeLabel, wavelength_nm: float) -> float:
    return float(_mode_neff(spec, mode, wavelength_nm))


def effective_index(spec: WaveguideSpec, mode: ModeLabel, wavelength_nm, strict: bool = True):
    """Effective index of ``mode`` at ``wavelength_nm`` (scalar or array).

    With ``strict`` a cutoff anywhere raises :class:`ModeCutoffError`;
    otherwise cut-off samples come back as NaN.
    """
    if np.ndim(wavelength_nm) == 0:
        n = _scalar_neff(spec, mode, float(wavelength_nm))
    else:
        n = _mode_neff(spec, mode, wavelength_nm)
    if strict and np.any(np.isnan(n)):
        lam = np.asarray(wavelength_nm, dtype=float)
        where = float(lam) if lam.ndim == 0 else float(lam[np.isnan(n)][0])
        raise ModeCutoffError(f"mode {mode} is cut off at {where:.3f} nm")
    return n


def propagation_constant(spec: WaveguideSpec, mode: ModeLabel, wavelength_nm, strict: bool = True):
    """beta = 2 pi N_eff / lambda in rad/um."""
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    beta = 2.0 * np.pi * effective_index(spec, mode, wavelength_nm, strict) / lam_um
    return float(beta) if np.ndim(beta) == 0 else beta


def mode_group_index(spec: WaveguideSpec, mode: ModeLabel, wavelength_nm: float,
                     step_nm: float = 0.5) -> float:
    """Group effective index N - lambda dN/dlambda from a central difference."""
    lam = float(wavelength_nm)
    lo, mid, hi = (effective_index(spec, mode, x) for x in (lam - step_nm, lam, lam + step_nm))
    return mid - lam * (hi - lo) / (2.0 * step_nm)


def list_guided_modes(spec: WaveguideSpec, wavelength_nm: float, polarization) -> list[ModeLabel]:
    """Every guided (m, n) for one polarization, ordered by descending N_eff."""
    pol = Polarization(polarization)
    model = model_for(spec.sellmeier_file)
    nb = bulk_index(spec.axis(pol), wavelength_nm, model)
    horizontal = spec.horizontal_field(pol)
    found = []
    n = 0
    while True:
        n_vert = float(_slab_order(nb + spec.index_step, nb, spec.superstrate_index,
                                   spec.depth_um, wavelength_nm, n, tm=not horizontal))
        if math.isnan(n_vert) or n_vert <= nb:
            break
        m = 0
        while True:
            neff = float(_slab_order(n_vert, nb, nb, spec.width_um, wavelength_nm, m, tm=horizontal))
            if math.isnan(neff):
                break
            found.append((neff, ModeLabel(m, n, pol)))
            m += 1
        n += 1
    found.sort(key=lambda t: (-t[0], t[1].m, t[1].n))
    return [label for _, label in found]


def calibrate_index_step(spec: WaveguideSpec, wavelength_nm: float = 801.0, min_modes: int = 4,
                         polarizations=("H", "V"), step: float = 0.001) -> float:
    """Smallest index step on a ``step`` grid giving ``min_modes`` per polarization."""
    delta = step
    while delta < 0.2:
        trial = replace(spec, index_step=delta)
        if all(len(list_guided_modes(trial, wavelength_nm, p)) >= min_modes for p in polarizations):
            return round(delta, 10)
        delta += step
    raise ValueError(f"no index step below 0.2 guides {min_modes} modes at {wavelength_nm} nm")
