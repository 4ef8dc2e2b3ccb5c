# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: periodic stencil sweeps, lattice walks, radix-2 FFT.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and the same arithmetic order; ``kernels`` picks one at import.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _stencil_once(const double[::1] src, double[::1] dst, Py_ssize_t n,
                        int d, double stay, double up, double down) noexcept nogil:
    cdef Py_ssize_t total = src.shape[0]
    cdef Py_ssize_t idx, o, c, i, inner, outer, base, cp, cm
    cdef int axis
    for idx in range(total):
        dst[idx] = stay * src[idx]
    inner = total
    outer = 1
    for axis in range(d):
        inner = inner // n
        for o in range(outer):
            for c in range(n):
                cp = c + 1
                if cp == n:
                    cp = 0
                cm = c - 1
                if cm < 0:
                    cm = n - 1
                base = o * n * inner
                for i in range(inner):
                    dst[base + c * inner + i] += (up * src[base + cp * inner + i]
                                                  + down * src[base + cm * inner + i])
        outer = outer * n


def apply_stencil(const double[::1] src, double[::1] dst, Py_ssize_t n_x, int d,
                  double stay, double up, double down):
    """One application of the periodic step operator, ``dst = L src``."""
    with nogil:
        _stencil_once(src, dst, n_x, d, stay, up, down)


def evolve(const double[::1] src, Py_ssize_t n_steps, Py_ssize_t n_x, int d,
           double stay, double up, double down, traj=None):
    """Apply the stencil ``n_steps`` times; optionally record every step.

    ``traj`` must be a C-contiguous float64 array of shape (n_steps, N).
    Returns the final vector as a new array.
    """
    cdef Py_ssize_t total = src.shape[0]
    cdef double[::1] a = np.array(src, dtype=np.float64, copy=True)
    cdef double[::1] b = np.empty(total, dtype=np.float64)
    cdef double[::1] tmp
    cdef double[:, ::1] rec
    cdef bint keep = traj is not None
    cdef Py_ssize_t k, i
    if keep:
        rec = traj
    for k in range(n_steps):
        with nogil:
            _stencil_once(a, b, n_x, d, stay, up, down)
            if keep:
                for i in range(total):
                    rec[k, i] = b[i]
        tmp = a
        a = b
        b = tmp
    return np.asarray(a)


def walk(const cnp.int64_t[::1] start, const double[:, ::1] uniforms,
         const double[::1] thresholds, Py_ssize_t n_x, int d):
    """Advance independent walkers, one column of ``uniforms`` per step.

    ``thresholds`` holds the 2d cumulative cut points
    [stay, stay+up_0, stay+up_0+down_0, ...]; a uniform below the first
    keeps the walker in place, the m-th interval selects move m.
    Odd moves step -1 along their axis, even moves step +1.
    """
    cdef Py_ssize_t n_walk = start.shape[0]
    cdef Py_ssize_t n_steps = uniforms.shape[1]
    cdef int n_moves = 2 * d
    cdef cnp.int64_t[::1] pos = np.array(start, dtype=np.int64, copy=True)
    cdef cnp.int64_t[::1] strides = np.empty(d, dtype=np.int64)
    cdef Py_ssize_t w, s, stride, coord
    cdef int m, axis, j
    cdef double u
    cdef cnp.int64_t p
    stride = 1
    for j in range(d - 1, -1, -1):
        strides[j] = stride
        stride *= n_x
    with nogil:
        for w in range(n_walk):
            p = pos[w]
            for s in range(n_steps):
                u = uniforms[w, s]
                if u < thresholds[0]:
                    continue
                m = 1
                while m < n_moves and u >= thresholds[m]:
                    m += 1
                axis = (m - 1) // 2
                stride = strides[axis]
                coord = (p // stride) % n_x
                if (m - 1) % 2 == 0:
                    if coord == 0:
                        p += (n_x - 1) * stride
                    else:
                        p -= stride
                else:
                    if coord == n_x - 1:
                        p -= (n_x - 1) * stride
                    else:
                        p += stride
            pos[w] = p
    return np.asarray(pos)


def fft_axis(cnp.complex128_t[:, :, ::1] buf, const cnp.int64_t[::1] bitrev,
             const cnp.complex128_t[::1] twiddle):
    """In-place iterative radix-2 transform along the middle axis of ``buf``.

    ``twiddle[k] = exp(sign * 2 pi i k / n)`` for ``k < n/2`` fixes the
    direction; no normalisation is applied.
    """
    cdef Py_ssize_t outer = buf.shape[0]
    cdef Py_ssize_t n = buf.shape[1]
    cdef Py_ssize_t inner = buf.shape[2]
    cdef Py_ssize_t o, i, k, r, half, m, start, step
    cdef cnp.complex128_t t, w, x
    with nogil:
        for o in range(outer):
            for k in range(n):
                r = bitrev[k]
                if r > k:
                    for i in range(inner):
                        x = buf[o, k, i]
                        buf[o, k, i] = buf[o, r, i]
                        buf[o, r, i] = x
        m = 2
        while m <= n:
            half = m // 2
            step = n // m
            for o in range(outer):
                start = 0
                while start < n:
                    for k in range(half):
                        w = twiddle[k * step]
                        for i in range(inner):
                            t = w * buf[o, start + k + half, i]
                            x = buf[o, start + k, i]
                            buf[o, start + k, i] = x + t
                            buf[o, start + k + half, i] = x - t
                    start += m
            m *= 2
