"""Double-precision array primitives the rest of the pipeline builds on.

Tensors are numpy float64 arrays in row-major (C) order; numpy supplies the
arithmetic while this module pins dtype discipline and the shape checks that
turn silent broadcasting surprises into loud errors.
"""

import numpy as np


class DimensionError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


def as_tensor(values) -> np.ndarray:
    """Coerce input to a contiguous float64 array."""
    return np.ascontiguousarray(values, dtype=np.float64)


def matmul(a, b) -> np.ndarray:
    """Matrix product of two rank-2 tensors."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects rank-2 operands, got {a.ndim} and {b.ndim}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    return a @ b


def transpose(a) -> np.ndarray:
    a = as_tensor(a)
    if a.ndim != 2:
        raise DimensionError(f"transpose expects a rank-2 tensor, got rank {a.ndim}")
    return np.ascontiguousarray(a.T)


def hadamard(a, b) -> np.ndarray:
    """Element-wise product of two same-shape tensors."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard shapes differ: {a.shape} vs {b.shape}")
    return a * b


def masked_sq_norm(a, mask) -> float:
    """Sum of squares of the elements of ``a`` selected by a 0/1 mask."""
    a = as_tensor(a)
    mask = as_tensor(mask)
    if a.shape != mask.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match tensor shape {a.shape}")
    return float(np.sum((a * mask) ** 2))
