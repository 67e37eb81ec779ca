"""The binary polar transform (Arikan kernel, natural index order)."""

import numpy as np


def polar_transform(u):
    """Apply the length-N binary polar transform along the last axis.

    Uses the kernel [[1, 0], [1, 1]] with the butterfly recursion
    x = (T(u_even XOR u_odd), T(u_odd)), which is its own inverse.
    Leading axes are treated as a batch.
    """
    u = np.asarray(u)
    size = u.shape[-1]
    if size == 0 or size & (size - 1):
        raise ValueError(f"length must be a power of two, got {size}")
    v = u.astype(np.uint8) & 1
    lead = v.shape[:-1]
    width = size
    while width > 1:
        blocks = v.reshape(*lead, size // width, width)
        even, odd = blocks[..., 0::2], blocks[..., 1::2]
        v = np.concatenate([even ^ odd, odd], axis=-1).reshape(*lead, size)
        width //= 2
    return v
