"""Backend selection for the hot kernels.

The compiled extension (``_fast``) and the numpy reference implement the same
contract; whichever is available is picked once at import time. Set
WINOSPARSE_BACKEND=reference or =fast to force a choice (forcing ``fast``
raises if the extension was not built).
"""

import os

import numpy as np

from . import reference

_requested = os.environ.get("WINOSPARSE_BACKEND", "").strip().lower()

if _requested == "reference":
    _impl = reference
    BACKEND = "reference"
elif _requested in ("", "fast"):
    try:
        from . import _fast as _impl

        BACKEND = "fast"
    except ImportError:
        if _requested == "fast":
            raise
        _impl = reference
        BACKEND = "reference"
else:
    raise ValueError(f"unknown WINOSPARSE_BACKEND {_requested!r}; use 'fast' or 'reference'")

def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def conv2d(x, w):
    return _impl.conv2d(_c64(x), _c64(w))


def conv2d_input_grad(gy, w):
    return _impl.conv2d_input_grad(_c64(gy), _c64(w))


def conv2d_weight_grad(x, gy):
    return _impl.conv2d_weight_grad(_c64(x), _c64(gy))


def winograd_domain_product(xt, wt):
    return _impl.winograd_domain_product(_c64(xt), _c64(wt))


def sparse_conv2d(x, out_ch, in_ch, row, col, val, num_filters, r):
    coords = [np.ascontiguousarray(a, dtype=np.int64) for a in (out_ch, in_ch, row, col)]
    return _impl.sparse_conv2d(_c64(x), *coords, _c64(val), int(num_filters), int(r))
