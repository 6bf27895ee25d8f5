"""Numpy reference backend for the convolution inner loops.

Every function here has a compiled twin in ``_fast``; the two must agree to
float round-off. All arrays are float64, batch-first, channels-second.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Valid stride-1 cross-correlation: (B,C,H,W) x (D,C,r,r) -> (B,D,H',W')."""
    windows = sliding_window_view(x, w.shape[-2:], axis=(2, 3))
    return np.einsum("bchwuv,dcuv->bdhw", windows, w, optimize=True)


def conv2d_input_grad(gy: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient of conv2d w.r.t. its input: full correlation with the
    spatially flipped filters. (B,D,H',W') x (D,C,r,r) -> (B,C,H,W)."""
    r, s = w.shape[2], w.shape[3]
    padded = np.pad(gy, ((0, 0), (0, 0), (r - 1, r - 1), (s - 1, s - 1)))
    flipped = np.ascontiguousarray(w[:, :, ::-1, ::-1])
    windows = sliding_window_view(padded, (r, s), axis=(2, 3))
    return np.einsum("bdhwuv,dcuv->bchw", windows, flipped, optimize=True)


def conv2d_weight_grad(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient of conv2d w.r.t. the filters: (B,C,H,W) x (B,D,H',W') -> (D,C,r,r)."""
    out_h, out_w = gy.shape[2], gy.shape[3]
    windows = sliding_window_view(x, (out_h, out_w), axis=(2, 3))
    return np.einsum("bcuvpq,bdpq->dcuv", windows, gy, optimize=True)


def winograd_domain_product(xt: np.ndarray, wt: np.ndarray) -> np.ndarray:
    """Channel-summed element-wise product, the multiply stage of tiled
    Winograd convolution: (B,T,C,n,n) x (D,C,n,n) -> (B,T,D,n,n)."""
    return np.einsum("btcij,dcij->btdij", xt, wt, optimize=True)


def sparse_conv2d(
    x: np.ndarray,
    out_ch: np.ndarray,
    in_ch: np.ndarray,
    row: np.ndarray,
    col: np.ndarray,
    val: np.ndarray,
    num_filters: int,
    r: int,
) -> np.ndarray:
    """Valid stride-1 correlation from a coordinate list of filter nonzeros.

    Each entry (out_ch, in_ch, row, col, val) contributes val times a shifted
    window of the input channel; zero filter taps cost nothing.
    """
    b, _, h, w = x.shape
    out_h, out_w = h - r + 1, w - r + 1
    out = np.zeros((b, num_filters, out_h, out_w), dtype=np.float64)
    for d, c, u, v, a in zip(out_ch, in_ch, row, col, val):
        out[:, d] += a * x[:, c, u : u + out_h, v : v + out_w]
    return out
