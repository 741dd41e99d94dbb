"""Numerical toolkit for full Bell locality of noisy multipartite states.

Source-operator dilations, tensor-positivity certificates, exact noise
thresholds and finite Bell-functional checks.
"""

from . import bellcheck, bounds, dilation, io, states, tensor, tpcert

__all__ = ["bellcheck", "bounds", "dilation", "io", "states", "tensor", "tpcert"]
__version__ = "0.1.0"
