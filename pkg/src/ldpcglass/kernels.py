"""Backend selection for the message-passing kernels.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. Set ``LDPCGLASS_BACKEND=python`` to force the fallback.
"""

import os

import numpy as np

from ldpcglass import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("LDPCGLASS_BACKEND", "").lower() != "python":
    try:
        from ldpcglass import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from ldpcglass import _kernels

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _ptr(ptr):
    return np.ascontiguousarray(ptr, dtype=np.int64)


def check_extrinsic(msgs, ptr, clamp, backend=None):
    """Per edge: atanh of the clamped product of tanh over the other edges of its segment."""
    p = _pick(backend).extrinsic_product(_f64(np.tanh(msgs)), _ptr(ptr), float(clamp))
    return np.arctanh(p)


def segment_combine(values, ptr, clamp, backend=None):
    """Per segment: atanh of the clamped product of tanh over all its values."""
    p = _pick(backend).segment_product(_f64(np.tanh(values)), _ptr(ptr), float(clamp))
    return np.arctanh(p)


def variable_extrinsic(msgs, ptr, h, clip, backend=None):
    """Per edge: ``h`` plus the other incoming messages of its segment, clipped; also the totals."""
    return _pick(backend).extrinsic_sum(_f64(msgs), _ptr(ptr), _f64(h), float(clip))
