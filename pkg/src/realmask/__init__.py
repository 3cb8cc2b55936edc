"""Masking a real ququart into path/polarization correlations.

Subpackages: `qcore` (states and exact algebra), `masker` (the masking
isometry), `walk` (the coined-walk realization), `optics` (the Jones-calculus
table), `measure` (finite-shot sampling), `estimate` (fidelity verification,
tomography, correlation decoding), `experiments`/`cli` (figure pipelines).
"""
from .estimate import agresti_coull, decode_real_state, qsv_run, tomography_1q
from .masker import build_hr_d4, mask_pure, mask_state, masker_matrix, u_of_c
from .measure import CountsTable, PauliSetting, derive_seed, generator, sample_counts
from .qcore import (
    DensityMatrix,
    StateVector,
    concurrence_pure,
    fidelity_with_pure,
    partial_trace,
    purity,
    robustness_of_imaginarity,
)
from .walk import encode_input, extract_two_qubit, masking_schedule, run_schedule

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "StateVector",
    "CountsTable",
    "PauliSetting",
    "agresti_coull",
    "build_hr_d4",
    "concurrence_pure",
    "decode_real_state",
    "derive_seed",
    "encode_input",
    "extract_two_qubit",
    "fidelity_with_pure",
    "generator",
    "mask_pure",
    "mask_state",
    "masker_matrix",
    "masking_schedule",
    "partial_trace",
    "purity",
    "qsv_run",
    "robustness_of_imaginarity",
    "run_schedule",
    "sample_counts",
    "tomography_1q",
    "u_of_c",
    "__version__",
]
