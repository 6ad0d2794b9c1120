# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: counter-based sampling and Jones projection."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int8_t

cnp.import_array()

NAME = "cython"

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _UNIT = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def stream_key(uint64_t seed):
    return _mix64(seed)


def uniforms(uint64_t seed, uint64_t start, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t key = _mix64(seed)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = <double>(_mix64(key + (start + <uint64_t>i + 1) * _GOLDEN) >> 11) * _UNIT
    return out


def categorical(uint64_t seed, uint64_t start, Py_ssize_t n, cdf):
    cdef const double[::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef Py_ssize_t m = c.shape[0]
    cdef cnp.ndarray[cnp.int8_t, ndim=1] out = np.empty(n, dtype=np.int8)
    cdef int8_t[::1] o = out
    cdef uint64_t key = _mix64(seed)
    cdef Py_ssize_t i, j, k
    cdef double u
    with nogil:
        for i in range(n):
            u = <double>(_mix64(key + (start + <uint64_t>i + 1) * _GOLDEN) >> 11) * _UNIT
            # branchless count of cdf entries <= u; cdf is sorted
            k = 0
            for j in range(m):
                k += c[j] <= u
            o[i] = <int8_t>k
    return out


def projected_intensity(e_h, e_v, a, b):
    cdef const double complex[::1] h = np.ascontiguousarray(e_h, dtype=np.complex128)
    cdef const double complex[::1] v = np.ascontiguousarray(e_v, dtype=np.complex128)
    cdef Py_ssize_t n = h.shape[0], i
    if v.shape[0] != n:
        raise ValueError("e_h and e_v differ in length")
    cdef double complex ca = a, cb = b
    cdef double ar = ca.real, ai = -ca.imag, br = cb.real, bi = -cb.imag
    cdef double pr, pi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            pr = ar * h[i].real - ai * h[i].imag + br * v[i].real - bi * v[i].imag
            pi = ar * h[i].imag + ai * h[i].real + br * v[i].imag + bi * v[i].real
            o[i] = pr * pr + pi * pi
    return out
