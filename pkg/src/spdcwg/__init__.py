"""Type-II down-conversion in multimode PPKTP waveguides.

Phase-matching bands, biphoton spectra, HOM dips, polarization fringes and
the photon-counting and fitting chain that turns them into simulated data.
"""
from .dispersion import CrystalAxis, bulk_index, group_index
from .errors import (ConfigError, ConstructionError, DispersionDomainError, FitError,
                     ModeCutoffError, OptimizationError, SpdcError, UnpolableError)
from .modes import ModeLabel, Polarization, WaveguideSpec, effective_index, list_guided_modes
from .phasematch import ModeTriplet, band_map, calibrate_poling, delta_beta, pm_amplitude
from .spectra import (FilterSpec, SpectralAmplitude, build_jsa, compensated_overlap,
                      spectral_exchange_overlap, tune_pump)
from .interference import FringeModel, fringe_curve, hom_curve, walkoff_delay
from .counting import DetectionChain, arm_efficiency, expected_rates, sample_counts
from .fitting import FitResult, fit_dip, fit_gaussian, fit_sinusoid

__version__ = "0.1.0"

__all__ = [
    "CrystalAxis", "bulk_index", "group_index",
    "ConfigError", "ConstructionError", "DispersionDomainError", "FitError",
    "ModeCutoffError", "OptimizationError", "SpdcError", "UnpolableError",
    "ModeLabel", "Polarization", "WaveguideSpec", "effective_index", "list_guided_modes",
    "ModeTriplet", "band_map", "calibrate_poling", "delta_beta", "pm_amplitude",
    "FilterSpec", "SpectralAmplitude", "build_jsa", "compensated_overlap",
    "spectral_exchange_overlap", "tune_pump",
    "FringeModel", "fringe_curve", "hom_curve", "walkoff_delay",
    "DetectionChain", "arm_efficiency", "expected_rates", "sample_counts",
    "FitResult", "fit_dip", "fit_gaussian", "fit_sinusoid",
    "__version__",
]
