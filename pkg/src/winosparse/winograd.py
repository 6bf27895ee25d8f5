"""Minimal-multiplication convolution via per-tile transforms.

A basis for filter side ``r`` and tile side ``n`` rewrites valid 2-D
cross-correlation as an element-wise product: for an r x r filter ``w`` and an
n x n input tile ``x``,

    y = S^T ((G w G^T) * (F x F^T)) S

produces the m x m output tile, m = n - r + 1. The transforms come from a
Cook-Toom evaluation/interpolation scheme built over exact rationals (one
evaluation point per multiply, plus the point at infinity) and are converted
to float64 once, so round-off enters only through the convolution arithmetic
itself.

Convolution throughout means cross-correlation (no filter flip), the CNN
convention.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, gcd

import numpy as np

from . import kernels
from .tensor_core import DimensionError, as_tensor


class WinogradError(Exception):
    pass


class BasisConstructionError(WinogradError):
    """The supplied interpolation points cannot produce a valid basis."""


class UnsupportedBasisError(WinogradError):
    """No built-in point set for this (r, n) pair."""


class UnsupportedStrideError(WinogradError):
    """The tiled engine only supports stride 1."""


#: Built-in evaluation points per (filter side, tile side).
DEFAULT_POINTS = {
    (3, 4): (Fraction(0), Fraction(1), Fraction(-1)),
    (3, 6): (Fraction(0), Fraction(1), Fraction(-1), Fraction(2), Fraction(-2)),
    (5, 8): (
        Fraction(0),
        Fraction(1),
        Fraction(-1),
        Fraction(2),
        Fraction(-2),
        Fraction(1, 2),
        Fraction(-1, 2),
    ),
}


@dataclass(frozen=True)
class WinogradBasis:
    r: int
    n: int
    m: int
    F: np.ndarray  # n x n input transform
    G: np.ndarray  # n x r filter transform
    S: np.ndarray  # n x m inverse transform
    points: tuple

    def __repr__(self):  # ndarray fields make the default repr unreadable
        return f"WinogradBasis(r={self.r}, n={self.n}, m={self.m})"


def _invert_rational(rows):
    """Invert a square matrix of Fractions by Gauss-Jordan elimination."""
    size = len(rows)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(size)] for i, row in enumerate(rows)]
    for col in range(size):
        pivot = next((k for k in range(col, size) if aug[k][col] != 0), None)
        if pivot is None:
            raise BasisConstructionError("interpolation matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for k in range(size):
            if k != col and aug[k][col] != 0:
                factor = aug[k][col]
                aug[k] = [a - factor * b for a, b in zip(aug[k], aug[col])]
    return [row[size:] for row in aug]


def _evaluation_rows(points, width):
    """Power-basis evaluation rows [1, p, ..., p^(width-1)], plus the
    infinity row [0, ..., 0, 1] that picks the leading coefficient."""
    rows = [[p**j for j in range(width)] for p in points]
    rows.append([Fraction(int(j == width - 1)) for j in range(width)])
    return rows


def _verify_exact(f_rows, g_rows, s_rows, r, n, m):
    """Check the 1-D algorithm reproduces valid cross-correlation exactly.

    By linearity it suffices to check every (unit filter, unit input) pair;
    done over rationals this is a proof, not a sample.
    """
    for u in range(r):
        for k in range(n):
            prods = [g_rows[i][u] * f_rows[i][k] for i in range(n)]
            for p in range(m):
                got = sum(s_rows[i][p] * prods[i] for i in range(n))
                want = Fraction(int(p + u == k))
                if got != want:
                    raise BasisConstructionError(
                        f"construction failed self-check at filter tap {u}, input {k}, output {p}"
                    )


def build_basis(r: int, n: int, points=None) -> WinogradBasis:
    """Construct the (r, n) transform triple F, G, S.

    ``points`` may supply the n - 1 finite evaluation points as rationals
    (ints, Fractions, or (num, den) pairs); the point at infinity is always
    implied. Without ``points``, only the built-in (r, n) pairs are accepted.
    """
    if r < 1 or n < r:
        raise BasisConstructionError(f"need n >= r >= 1, got r={r}, n={n}")
    m = n - r + 1
    if points is None:
        if (r, n) not in DEFAULT_POINTS:
            raise UnsupportedBasisError(
                f"no built-in point set for (r={r}, n={n}); supply interpolation points"
            )
        points = DEFAULT_POINTS[(r, n)]
    points = tuple(Fraction(*p) if isinstance(p, tuple) else Fraction(p) for p in points)
    if len(points) != n - 1:
        raise BasisConstructionError(f"(r={r}, n={n}) needs {n - 1} finite points, got {len(points)}")
    if len(set(points)) != len(points):
        raise BasisConstructionError(f"interpolation points must be distinct, got {points}")

    g_rows = _evaluation_rows(points, r)  # filter evaluation, n x r
    s_rows = _evaluation_rows(points, m)  # output interpolation transpose, n x m
    vand = _evaluation_rows(points, n)  # full interpolation system, n x n
    inverse = _invert_rational(vand)
    # Row i of the input transform is column i of the inverse system, scaled
    # integral; the reciprocal scale moves into the matching filter row so the
    # multiply channel is unchanged.
    f_rows = []
    for i in range(n):
        column = [inverse[k][i] for k in range(n)]
        scale = 1
        for value in column:
            scale = scale * value.denominator // gcd(scale, value.denominator)
        f_rows.append([v * scale for v in column])
        g_rows[i] = [v / scale for v in g_rows[i]]

    _verify_exact(f_rows, g_rows, s_rows, r, n, m)

    to_f64 = lambda rows: np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    return WinogradBasis(r=r, n=n, m=m, F=to_f64(f_rows), G=to_f64(g_rows), S=to_f64(s_rows), points=points)


def transform_filter(basis: WinogradBasis, w) -> np.ndarray:
    """Filter into the Winograd domain: G w G^T."""
    w = as_tensor(w)
    if w.shape != (basis.r, basis.r):
        raise DimensionError(f"filter must be {basis.r}x{basis.r}, got {w.shape}")
    return basis.G @ w @ basis.G.T


def transform_input(basis: WinogradBasis, x) -> np.ndarray:
    """Input tile into the Winograd domain: F x F^T."""
    x = as_tensor(x)
    if x.shape != (basis.n, basis.n):
        raise DimensionError(f"input tile must be {basis.n}x{basis.n}, got {x.shape}")
    return basis.F @ x @ basis.F.T


def inverse_transform(basis: WinogradBasis, prod) -> np.ndarray:
    """Winograd-domain product back to the spatial output tile: S^T M S."""
    prod = as_tensor(prod)
    if prod.shape != (basis.n, basis.n):
        raise DimensionError(f"product must be {basis.n}x{basis.n}, got {prod.shape}")
    return basis.S.T @ prod @ basis.S


def transform_filters(basis: WinogradBasis, filters) -> np.ndarray:
    """Vectorized G w G^T over a (D, C, r, r) filter bank -> (D, C, n, n)."""
    filters = as_tensor(filters)
    return np.einsum("ij,dcjk,lk->dcil", basis.G, filters, basis.G, optimize=True)


@dataclass(frozen=True)
class TileGrid:
    """Tiling plan: tiles of side n advance with stride m so each valid
    output pixel is produced by exactly one tile."""

    h: int
    w: int
    n: int
    m: int
    out_h: int
    out_w: int
    tiles_y: int
    tiles_x: int
    pad_h: int
    pad_w: int


def plan_tiles(basis: WinogradBasis, h: int, w: int) -> TileGrid:
    if h < basis.r or w < basis.r:
        raise DimensionError(f"input {h}x{w} smaller than filter side {basis.r}")
    out_h, out_w = h - basis.r + 1, w - basis.r + 1
    tiles_y = ceil(out_h / basis.m)
    tiles_x = ceil(out_w / basis.m)
    pad_h = (tiles_y - 1) * basis.m + basis.n - h
    pad_w = (tiles_x - 1) * basis.m + basis.n - w
    return TileGrid(
        h=h, w=w, n=basis.n, m=basis.m, out_h=out_h, out_w=out_w,
        tiles_y=tiles_y, tiles_x=tiles_x, pad_h=pad_h, pad_w=pad_w,
    )


def extract_tiles(x: np.ndarray, grid: TileGrid) -> np.ndarray:
    """(B, C, H, W) -> (B, T, C, n, n) tile stack, zero-padding right/bottom."""
    padded = np.pad(x, ((0, 0), (0, 0), (0, grid.pad_h), (0, grid.pad_w)))
    view = np.lib.stride_tricks.sliding_window_view(padded, (grid.n, grid.n), axis=(2, 3))
    view = view[:, :, :: grid.m, :: grid.m]  # B, C, tiles_y, tiles_x, n, n
    b, c = x.shape[:2]
    return np.ascontiguousarray(
        view.transpose(0, 2, 3, 1, 4, 5).reshape(b, grid.tiles_y * grid.tiles_x, c, grid.n, grid.n)
    )


def assemble_tiles(out_tiles: np.ndarray, grid: TileGrid) -> np.ndarray:
    """(B, T, D, m, m) output tiles -> (B, D, out_h, out_w), cropping padding."""
    b, _, d = out_tiles.shape[:3]
    canvas = out_tiles.reshape(b, grid.tiles_y, grid.tiles_x, d, grid.m, grid.m)
    canvas = canvas.transpose(0, 3, 1, 4, 2, 5).reshape(b, d, grid.tiles_y * grid.m, grid.tiles_x * grid.m)
    return np.ascontiguousarray(canvas[:, :, : grid.out_h, : grid.out_w])


def winograd_conv2d_batch(basis: WinogradBasis, x: np.ndarray, filters: np.ndarray, *, domain_filters=None) -> np.ndarray:
    """Batched tiled Winograd convolution.

    x: (B, C, H, W); filters: (D, C, r, r). ``domain_filters`` may supply the
    already-transformed (and possibly pruned) (D, C, n, n) bank, in which case
    ``filters`` is ignored.
    """
    grid = plan_tiles(basis, x.shape[2], x.shape[3])
    tiles = extract_tiles(x, grid)
    xt = np.einsum("ij,btcjk,lk->btcil", basis.F, tiles, basis.F, optimize=True)
    wt = domain_filters if domain_filters is not None else transform_filters(basis, filters)
    prod = kernels.winograd_domain_product(xt, wt)
    out_tiles = np.einsum("ji,btdjk,kl->btdil", basis.S, prod, basis.S, optimize=True)
    return assemble_tiles(out_tiles, grid)


def winograd_conv2d(basis: WinogradBasis, x, filters, stride: int = 1) -> np.ndarray:
    """Valid multi-channel convolution of (C, H, W) with (D, C, r, r) filters."""
    if stride != 1:
        raise UnsupportedStrideError(f"tiled engine requires stride 1, got {stride}")
    x = as_tensor(x)
    filters = as_tensor(filters)
    if x.ndim != 3 or filters.ndim != 4:
        raise DimensionError(f"expected (C,H,W) input and (D,C,r,r) filters, got {x.shape}, {filters.shape}")
    if filters.shape[1] != x.shape[0]:
        raise DimensionError(f"channel mismatch: input {x.shape[0]}, filters {filters.shape[1]}")
    if filters.shape[2] != basis.r or filters.shape[3] != basis.r:
        raise DimensionError(f"filters must be {basis.r}x{basis.r} for this basis, got {filters.shape}")
    return winograd_conv2d_batch(basis, x[None], filters)[0]


def direct_conv2d(x, filters) -> np.ndarray:
    """Valid cross-correlation of (C, H, W) with (D, C, r, r), stride 1."""
    x = as_tensor(x)
    filters = as_tensor(filters)
    if x.ndim != 3 or filters.ndim != 4:
        raise DimensionError(f"expected (C,H,W) input and (D,C,r,r) filters, got {x.shape}, {filters.shape}")
    if filters.shape[1] != x.shape[0]:
        raise DimensionError(f"channel mismatch: input {x.shape[0]}, filters {filters.shape[1]}")
    if x.shape[1] < filters.shape[2] or x.shape[2] < filters.shape[3]:
        raise DimensionError(f"input {x.shape} smaller than filter {filters.shape}")
    return kernels.conv2d(x[None], filters)[0]
