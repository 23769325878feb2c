"""Bloch spectra of Schrodinger operators with PT-symmetric matrix potentials."""
from .potential import PotentialSpec, PotentialError, RealityError, validate_pt, averaged_matrix, mean_matrix
from .averaged import jordan_analyze
from .bloch import solve_bloch, monodromy
from .sweep import run_sweep
from .localization import estimate_constants
from .classify import classify

__all__ = [
    "PotentialSpec", "PotentialError", "RealityError", "validate_pt", "averaged_matrix",
    "mean_matrix", "jordan_analyze", "solve_bloch", "monodromy", "run_sweep",
    "estimate_constants", "classify",
]
