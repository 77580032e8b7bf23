"""Spectra of the quantum Rabi and Jaynes-Cummings models, level-crossing
census, and a Feynman-Kac Monte Carlo estimator of the Rabi ground state."""

from .feynman_kac import fk_ground_energy, fk_matrix_element, positivity_probe
from .jc import jc_crossing, jc_energy, jc_envelope
from .params import FockTruncation, ModelParams, ParameterError, ParitySector
from .spectra import check_c1, converge_truncation, detect_crossings, rabi_spectrum, sweep

__version__ = "0.1.0"

__all__ = [
    "FockTruncation",
    "ModelParams",
    "ParameterError",
    "ParitySector",
    "__version__",
    "check_c1",
    "converge_truncation",
    "detect_crossings",
    "fk_ground_energy",
    "fk_matrix_element",
    "jc_crossing",
    "jc_energy",
    "jc_envelope",
    "positivity_probe",
    "rabi_spectrum",
    "sweep",
]
