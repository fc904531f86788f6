"""Kernel backend selection.

The compiled core is preferred when it imported cleanly; otherwise the numpy
fallback is used.  Setting FWMQKD_PURE_PYTHON=1 forces the fallback, which is
handy for benchmarking and for verifying that both backends agree.
"""

from __future__ import annotations

import os

from . import _purepy

if os.environ.get("FWMQKD_PURE_PYTHON"):
    _impl = _purepy
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _purepy

BACKEND = _impl.BACKEND_NAME
philox4x32 = _impl.philox4x32
pulse_randoms = _impl.pulse_randoms
poisson_counts = _impl.poisson_counts
se_argmin = _impl.se_argmin

# Stream identifiers keep independent uses of the same seed uncorrelated.
STREAM_GENERIC = 0
STREAM_SESSION = 1
STREAM_DETECTOR = 2

__all__ = [
    "BACKEND",
    "philox4x32",
    "pulse_randoms",
    "poisson_counts",
    "se_argmin",
    "STREAM_GENERIC",
    "STREAM_SESSION",
    "STREAM_DETECTOR",
]
