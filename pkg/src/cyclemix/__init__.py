"""Exact mixing analysis of symmetric random walks on Z/pZ and their lattice models."""

from .cyclic_walk import (
    CyclicMeasure,
    GenSet,
    MixingReport,
    SpectralProfile,
    chebyshev_diagnostic,
    distribution_at,
    fourier_profile,
    l2_to_uniform,
    mixing_time,
    relaxation_time,
    spectral_gap,
    tv_to_uniform,
    window_report,
)
from .errors import CapacityError, ValidationError

__version__ = "0.1.0"
