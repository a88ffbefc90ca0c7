"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment sets ``NVLAB_PURE_PYTHON=1``, the numpy fallback is used.  Both
expose the same functions with the same results.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if not os.environ.get("NVLAB_PURE_PYTHON"):
    try:
        from . import _speedups as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback

conv_weighted = _impl.conv_weighted
hyperbola_count = _impl.hyperbola_count
hyperbola_count_brute = _impl.hyperbola_count_brute
cubic_count = _impl.cubic_count
cubic_count_brute = _impl.cubic_count_brute
disc_phase_count = _impl.disc_phase_count
sigma3_brute = _impl.sigma3_brute

WEIGHT_PLAIN = _fallback.WEIGHT_PLAIN
WEIGHT_Q = _fallback.WEIGHT_Q
WEIGHT_M = _fallback.WEIGHT_M

__all__ = [
    "BACKEND", "conv_weighted", "hyperbola_count", "hyperbola_count_brute",
    "cubic_count", "cubic_count_brute", "disc_phase_count", "sigma3_brute",
    "WEIGHT_PLAIN", "WEIGHT_Q", "WEIGHT_M",
]
