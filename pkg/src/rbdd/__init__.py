"""Randomized benchmarking of robust single-qubit gates under dephasing noise."""
from .analysis import epg_from_fit, epg_limit, fit_exponential, fit_quadratic, fit_stretched
from .clifford import CLIFFORD_GROUP, RBSequence, sample_rb_sequence
from .engine import SimConfig, run_coherence, run_interleaved, run_rb
from .errors import CalibrationError, FitError, InvalidInputError
from .noise import AmplitudeErrorModel, OUParams, RelaxationParams, calibrate
from .pulses import SchemeId, SchemeParams, bb1, compile_gate, dd_cycle, kdd5, rectangular
from .su2 import QubitState, Rotation

__version__ = "0.1.0"

__all__ = [
    "AmplitudeErrorModel", "CLIFFORD_GROUP", "CalibrationError", "FitError", "InvalidInputError", "OUParams",
    "QubitState", "RBSequence", "RelaxationParams", "Rotation", "SchemeId", "SchemeParams", "SimConfig", "bb1",
    "calibrate", "compile_gate", "dd_cycle", "epg_from_fit", "epg_limit", "fit_exponential", "fit_quadratic",
    "fit_stretched", "kdd5", "rectangular", "run_coherence", "run_interleaved", "run_rb", "sample_rb_sequence",
]
