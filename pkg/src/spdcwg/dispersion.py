"""Bulk KTP refractive and group indices.

Coefficients are read from a plain-text file (``data/ktp_sellmeier.ini`` by
default) holding one section per crystal axis for the two-pole form

    n^2 = A + B / (lambda^2 - C) + D / (lambda^2 - E),    lambda in um.

All public functions take vacuum wavelengths in nanometres and accept scalars
or numpy arrays.
"""
from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DispersionDomainError

__all__ = [
    "CrystalAxis",
    "AxisCoefficients",
    "SellmeierModel",
    "load_sellmeier",
    "default_model",
    "bulk_index",
    "bulk_index_derivative",
    "group_index",
]

_COEFF_KEYS = ("A", "B", "C", "D", "E")


class CrystalAxis(str, enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"


@dataclass(frozen=True)
class AxisCoefficients:
    A: float
    B: float
    C: float
    D: float
    E: float
    lambda_min_um: float
    lambda_max_um: float


@dataclass(frozen=True)
class SellmeierModel:
    axes: tuple[tuple[CrystalAxis, AxisCoefficients], ...]
    source: str = ""

    def coefficients(self, axis) -> AxisCoefficients:
        axis = CrystalAxis(axis)
        for key, coeffs in self.axes:
            if key is axis:
                return coeffs
        raise KeyError(f"no dispersion data for axis {axis.value!r}")

    def valid_interval_nm(self, axis) -> tuple[float, float]:
        c = self.coefficients(axis)
        return 1e3 * c.lambda_min_um, 1e3 * c.lambda_max_um


def load_sellmeier(path=None) -> SellmeierModel:
    """Parse a Sellmeier data file; ``None`` loads the packaged KTP set."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if path is None:
        text = resources.files("spdcwg").joinpath("data/ktp_sellmeier.ini").read_text()
        parser.read_string(text)
    else:
        with open(Path(path), encoding="utf-8") as fh:
            parser.read_file(fh)

    axes = []
    for axis in CrystalAxis:
        if not parser.has_section(axis.value):
            continue
        sec = parser[axis.value]
        try:
            values = {k: float(sec[k]) for k in _COEFF_KEYS}
            lo = float(sec["lambda_min_um"])
            hi = float(sec["lambda_max_um"])
        except KeyError as exc:
            raise ValueError(f"section [{axis.value}] is missing key {exc}") from None
        if not 0 < lo < hi:
            raise ValueError(f"section [{axis.value}]: bad validity interval {lo}..{hi} um")
        axes.append((axis, AxisCoefficients(**values, lambda_min_um=lo, lambda_max_um=hi)))
    if not axes:
        raise ValueError("dispersion file defines no crystal axes")
    source = ""
    for name in ("meta", *(a.value for a, _ in axes)):
        if parser.has_option(name, "source"):
            source = parser.get(name, "source")
            break
    return SellmeierModel(tuple(axes), source)


@lru_cache(maxsize=None)
def _cached_model(path: str | None) -> SellmeierModel:
    return load_sellmeier(path)


def default_model() -> SellmeierModel:
    return _cached_model(None)


def model_for(path: str | None) -> SellmeierModel:
    """Memoized loader keyed by file path (``None`` = packaged data)."""
    return _cached_model(None if path is None else str(path))


def _check_range(coeffs: AxisCoefficients, axis, lam_um, strict: bool):
    lam = np.asarray(lam_um, dtype=float)
    lo, hi = coeffs.lambda_min_um, coeffs.lambda_max_um
    bad = ~((lam > lo) & (lam < hi)) if strict else ~((lam >= lo) & (lam <= hi))
    if np.any(bad):
        worst = lam[bad].flat[0] if lam.ndim else float(lam)
        raise DispersionDomainError(
            f"wavelength {1e3 * worst:.3f} nm outside the valid interval "
            f"[{1e3 * lo:.1f}, {1e3 * hi:.1f}] nm for axis {CrystalAxis(axis).value}"
        )
    return lam


def _n_squared(c: AxisCoefficients, lam_um):
    l2 = lam_um * lam_um
    return c.A + c.B / (l2 - c.C) + c.D / (l2 - c.E)


def bulk_index(axis, wavelength_nm, model: SellmeierModel | None = None):
    """Principal refractive index along ``axis`` at vacuum wavelength (nm)."""
    model = model or default_model()
    c = model.coefficients(axis)
    lam = _check_range(c, axis, np.asarray(wavelength_nm, dtype=float) * 1e-3, strict=False)
    n = np.sqrt(_n_squared(c, lam))
    return float(n) if n.ndim == 0 else n


def bulk_index_derivative(axis, wavelength_nm, model: SellmeierModel | None = None):
    """Analytic dn/dlambda in 1/nm."""
    model = model or default_model()
    c = model.coefficients(axis)
    lam = _check_range(c, axis, np.asarray(wavelength_nm, dtype=float) * 1e-3, strict=True)
    l2 = lam * lam
    dn2 = -2.0 * lam * (c.B / (l2 - c.C) ** 2 + c.D / (l2 - c.E) ** 2)
    dn = dn2 / (2.0 * np.sqrt(_n_squared(c, lam))) * 1e-3
    return float(dn) if dn.ndim == 0 else dn


def group_index(axis, wavelength_nm, model: SellmeierModel | None = None):
    """Group index n - lambda dn/dlambda."""
    lam = np.asarray(wavelength_nm, dtype=float)
    ng = bulk_index(axis, lam, model) - lam * bulk_index_derivative(axis, lam, model)
    return float(ng) if np.ndim(ng) == 0 else ng
