# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling and search kernels.

Same contracts as the numpy fallback in _purepy.py; see that module for the
semantics.  Loops run without the GIL so chunked calls can be threaded.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t

cnp.import_array()

BACKEND_NAME = "compiled"

cdef uint32_t M0 = 0xD2511F53u
cdef uint32_t M1 = 0xCD9E8D57u
cdef uint32_t W0 = 0x9E3779B9u
cdef uint32_t W1 = 0xBB67AE85u
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline void _block(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                        uint32_t k0, uint32_t k1, uint32_t* out) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t hi0, lo0, hi1, lo1, t0, t1, t2, t3
    cdef int r
    t0 = c0; t1 = c1; t2 = c2; t3 = c3
    for r in range(10):
        p0 = (<uint64_t>M0) * t0
        p1 = (<uint64_t>M1) * t2
        hi0 = <uint32_t>(p0 >> 32); lo0 = <uint32_t>p0
        hi1 = <uint32_t>(p1 >> 32); lo1 = <uint32_t>p1
        t0 = hi1 ^ t1 ^ k0
        t1 = lo1
        t2 = hi0 ^ t3 ^ k1
        t3 = lo0
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = t0; out[1] = t1; out[2] = t2; out[3] = t3


cdef inline double _u01(uint32_t lo, uint32_t hi) noexcept nogil:
    cdef uint64_t word = (<uint64_t>lo) | ((<uint64_t>hi) << 32)
    return <double>(word >> 11) * INV53


def philox4x32(ctr, key):
    """Run 10 Philox4x32 rounds on an (n, 4) uint32 counter block."""
    cdef cnp.ndarray[cnp.uint32_t, ndim=2] c = np.ascontiguousarray(ctr, dtype=np.uint32)
    cdef uint32_t k0 = <uint32_t>int(key[0])
    cdef uint32_t k1 = <uint32_t>int(key[1])
    cdef Py_ssize_t n = c.shape[0], i
    cdef cnp.ndarray[cnp.uint32_t, ndim=2] out = np.empty((n, 4), dtype=np.uint32)
    cdef uint32_t buf[4]
    with nogil:
        for i in range(n):
            _block(c[i, 0], c[i, 1], c[i, 2], c[i, 3], k0, k1, buf)
            out[i, 0] = buf[0]; out[i, 1] = buf[1]
            out[i, 2] = buf[2]; out[i, 3] = buf[3]
    return out


def pulse_randoms(seed, stream, start, count):
    """Positional per-pulse randoms; see _purepy.pulse_randoms."""
    cdef uint64_t seed64 = <uint64_t>int(seed)
    cdef uint32_t k0 = <uint32_t>(seed64 & 0xFFFFFFFFu)
    cdef uint32_t k1 = <uint32_t>(seed64 >> 32)
    cdef uint32_t strm = <uint32_t>int(stream)
    cdef uint64_t first = <uint64_t>int(start)
    cdef Py_ssize_t n = int(count), i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_gain = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_h = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u_v = np.empty(n)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] delay_bit = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] basis_bit = np.empty(n, dtype=np.uint8)
    cdef uint64_t idx
    cdef uint32_t lo, hi
    cdef uint32_t a[4]
    cdef uint32_t b[4]
    with nogil:
        for i in range(n):
            idx = first + <uint64_t>i
            lo = <uint32_t>(idx & 0xFFFFFFFFu)
            hi = <uint32_t>(idx >> 32)
            _block(lo, hi, strm, 0u, k0, k1, a)
            _block(lo, hi, strm, 1u, k0, k1, b)
            u_gain[i] = _u01(a[0], a[1])
            u_h[i] = _u01(a[2], a[3])
            u_v[i] = _u01(b[0], b[1])
            delay_bit[i] = <uint8_t>(b[2] >> 31)
            basis_bit[i] = <uint8_t>(b[3] >> 31)
    return u_gain, u_h, u_v, delay_bit, basis_bit


def poisson_counts(u, lam, max_photons):
    """Clamped Poisson inverse-CDF search; see _purepy.poisson_counts."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ll = np.ascontiguousarray(lam, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], i
    cdef int kmax = int(max_photons), k
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] clamped = np.empty(n, dtype=np.uint8)
    cdef double p, cdf, ui, li
    cdef int64_t c
    with nogil:
        for i in range(n):
            ui = uu[i]
            li = ll[i]
            p = exp(-li)
            cdf = p
            c = 0
            for k in range(1, kmax + 1):
                if ui > cdf:
                    c += 1
                p = p * (li / k)
                cdf = cdf + p
            counts[i] = c
            clamped[i] = 1u if ui > cdf else 0u
    return counts, clamped.view(np.bool_)


def se_argmin(tab0, tab45, g0, g45, tie_eps):
    """Row-major squared-error argmin; see _purepy.se_argmin."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] t0 = np.ascontiguousarray(tab0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] t45 = np.ascontiguousarray(tab45, dtype=np.float64)
    cdef double a = float(g0), b = float(g45), eps = float(tie_eps)
    cdef Py_ssize_t ni = t0.shape[0], nj = t0.shape[1], i, j
    cdef Py_ssize_t bi = 0, bj = 0
    cdef double se, d0, d45, se_min
    cdef long n_ties = 0
    with nogil:
        d0 = t0[0, 0] - a
        d45 = t45[0, 0] - b
        se_min = d0 * d0 + d45 * d45
        for i in range(ni):
            for j in range(nj):
                d0 = t0[i, j] - a
                d45 = t45[i, j] - b
                se = d0 * d0 + d45 * d45
                if se < se_min:
                    se_min = se
                    bi = i
                    bj = j
        for i in range(ni):
            for j in range(nj):
                d0 = t0[i, j] - a
                d45 = t45[i, j] - b
                se = d0 * d0 + d45 * d45
                if se <= se_min + eps:
                    n_ties += 1
    return bi, bj, se_min, n_ties
