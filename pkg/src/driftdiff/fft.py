"""Multidimensional discrete Fourier transforms over a flat grid vector.

Convention: the forward transform is ``X[k] = sum_x x[x] exp(-2 pi i k x / n)``
per axis, so Fourier index ``k`` pairs with eigenvalue ``l_k`` of the step
operator. Power-of-two lengths use the radix-2 kernel; other lengths fall
back to a dense DFT matrix, permitted only below the dense cap.
"""

from functools import lru_cache

import numpy as np

from . import kernels
from .config import dense_cap


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=64)
def _plan(n, sign):
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    twiddle = np.exp(sign * 2j * np.pi * np.arange(max(n // 2, 1)) / n)
    rev.setflags(write=False)
    twiddle.setflags(write=False)
    return rev, twiddle


@lru_cache(maxsize=16)
def dft_matrix(n, sign=-1):
    """Dense n x n DFT matrix with entries ``exp(sign 2 pi i j k / n)``."""
    j = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(j, j) / n)


def _transform(values, n_x, d, sign, backend=None):
    if values.size != n_x ** d:
        raise ValueError(f"vector of length {values.size} does not match n_x^d = {n_x ** d}")
    buf = np.array(values, dtype=np.complex128, copy=True).reshape((n_x,) * d)
    if is_power_of_two(n_x):
        impl = kernels.get_backend(backend)
        rev, tw = _plan(n_x, sign)
        for axis in range(d):
            view = np.ascontiguousarray(buf.reshape(n_x ** axis, n_x, n_x ** (d - 1 - axis)))
            impl.fft_axis(view, rev, tw)
            buf = view.reshape((n_x,) * d)
        return buf.reshape(-1)
    if n_x ** d > dense_cap():
        raise ValueError(
            f"n_x={n_x} is not a power of two and n_x^d={n_x ** d} exceeds the dense cap"
        )
    mat = dft_matrix(n_x, sign)
    for axis in range(d):
        buf = np.moveaxis(np.tensordot(mat, buf, axes=([1], [axis])), 0, axis)
    return np.ascontiguousarray(buf).reshape(-1)


def fftn(values, n_x, d, backend=None):
    """Unnormalised forward transform along every axis."""
    return _transform(values, n_x, d, -1, backend)


def ifftn(values, n_x, d, backend=None):
    """Inverse of :func:`fftn` (includes the 1/n_x^d factor)."""
    return _transform(values, n_x, d, +1, backend) / (n_x ** d)


def unitary_fftn(values, n_x, d, inverse=False, backend=None):
    """Norm-preserving transform, scaled by n_x^(-d/2)."""
    sign = +1 if inverse else -1
    return _transform(values, n_x, d, sign, backend) / np.sqrt(float(n_x) ** d)
