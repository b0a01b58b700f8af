"""Soft-output multiple-symbol differential detection for impulse-radio UWB.

A single-tree-search sphere decoder turns the outputs of an L-branch
autocorrelation receiver into max-log bit reliabilities for a whole block
of differentially encoded symbols, with tunable reliability clipping and a
packing-radius early-termination rule. Around it: the discrete-time UWB
front end, a rate-1/2 convolutionally coded chain with soft-input Viterbi
decoding, and a Monte-Carlo engine for BER and search-complexity studies.
"""

__version__ = "0.1.0"

from ._backend import kernel_backend
from .core import AcrMatrix, DetectorConfig, SoftDecision
from .detect import dd_hard, dd_soft, hosd, msdd_exhaustive, sosd

__all__ = [
    "__version__",
    "kernel_backend",
    "AcrMatrix",
    "DetectorConfig",
    "SoftDecision",
    "dd_hard",
    "dd_soft",
    "hosd",
    "msdd_exhaustive",
    "sosd",
]
