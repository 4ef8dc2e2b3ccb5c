"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures and arithmetic order match the extension so the two backends
can be swapped without changing results beyond rounding.
"""

import numpy as np


def _stencil_once(src, n_x, d, stay, up, down):
    arr = src.reshape((n_x,) * d)
    out = stay * arr
    for axis in range(d):
        out += up * np.roll(arr, -1, axis=axis) + down * np.roll(arr, 1, axis=axis)
    return out.reshape(-1)


def apply_stencil(src, dst, n_x, d, stay, up, down):
    """One application of the periodic step operator, ``dst = L src``."""
    dst[:] = _stencil_once(np.asarray(src), n_x, d, stay, up, down)


def evolve(src, n_steps, n_x, d, stay, up, down, traj=None):
    """Apply the stencil ``n_steps`` times; optionally record every step."""
    a = np.array(src, dtype=np.float64, copy=True)
    for k in range(n_steps):
        a = _stencil_once(a, n_x, d, stay, up, down)
        if traj is not None:
            traj[k] = a
    return a


def walk(start, uniforms, thresholds, n_x, d):
    """Advance independent walkers, one column of ``uniforms`` per step."""
    pos = np.array(start, dtype=np.int64, copy=True)
    strides = np.array([n_x ** (d - 1 - j) for j in range(d)], dtype=np.int64)
    thresholds = np.asarray(thresholds)
    n_moves = 2 * d
    for s in range(uniforms.shape[1]):
        u = uniforms[:, s]
        # number of cut points <= u, capped at 2d
        m = np.searchsorted(thresholds, u, side="right")
        m = np.minimum(m, n_moves)
        moving = m > 0
        if not moving.any():
            continue
        mv = m[moving]
        axis = (mv - 1) // 2
        stride = strides[axis]
        p = pos[moving]
        coord = (p // stride) % n_x
        down_step = (mv - 1) % 2 == 0
        delta = np.where(
            down_step,
            np.where(coord == 0, (n_x - 1) * stride, -stride),
            np.where(coord == n_x - 1, -(n_x - 1) * stride, stride),
        )
        pos[moving] = p + delta
    return pos


def fft_axis(buf, bitrev, twiddle):
    """In-place iterative radix-2 transform along the middle axis of ``buf``."""
    n = buf.shape[1]
    a = buf[:, bitrev, :]
    m = 2
    while m <= n:
        half = m // 2
        step = n // m
        w = twiddle[::step][:half]
        blocks = a.reshape(a.shape[0], n // m, m, a.shape[2])
        even = blocks[:, :, :half, :].copy()
        odd = blocks[:, :, half:, :] * w[None, None, :, None]
        blocks[:, :, :half, :] = even + odd
        blocks[:, :, half:, :] = even - odd
        a = blocks.reshape(a.shape)
        m *= 2
    buf[...] = a
