# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of genmatte._kernels_py; see that module for the
stream layout and constant documentation.  Compiled with
-ffp-contract=off so elementwise arithmetic rounds exactly like the
numpy fallback."""

import numpy as np

from libc.math cimport cos, log, sqrt
from libc.stdint cimport uint64_t

GOLDEN = 0x9E3779B97F4A7C15

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _MIX2 = 0x94D049BB133111EBULL
cdef double _TWO_NEG53 = 2.0 ** -53
cdef double _TWO_PI = 6.283185307179586476925286766559


cdef inline uint64_t _mix64(uint64_t x) nogil:
    x ^= x >> 30
    x *= _MIX1
    x ^= x >> 27
    x *= _MIX2
    x ^= x >> 31
    return x


def raw_uint64(seed, start, n):
    cdef uint64_t s = <uint64_t> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t i0 = <uint64_t> start
    cdef Py_ssize_t i, m = n
    out = np.empty(m, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = _mix64(s + (i0 + <uint64_t> i) * _GOLDEN)
    return out


def uniform_fill(seed, start, n):
    cdef uint64_t s = <uint64_t> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t k0 = <uint64_t> start
    cdef Py_ssize_t i, m = n
    cdef uint64_t x
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            x = _mix64(s + ((k0 + <uint64_t> i) * 2ULL) * _GOLDEN)
            o[i] = <double> (x >> 11) * _TWO_NEG53
    return out


def normal_fill(seed, start, n):
    cdef uint64_t s = <uint64_t> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t k0 = <uint64_t> start
    cdef Py_ssize_t i, m = n
    cdef uint64_t x1, x2, k
    cdef double u1, u2
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            k = k0 + <uint64_t> i
            x1 = _mix64(s + (k * 2ULL) * _GOLDEN)
            x2 = _mix64(s + (k * 2ULL + 1ULL) * _GOLDEN)
            u1 = (<double> (x1 >> 11) + 1.0) * _TWO_NEG53
            u2 = <double> (x2 >> 11) * _TWO_NEG53
            o[i] = sqrt(-2.0 * log(u1)) * cos(_TWO_PI * u2)
    return out


def lincomb(double a, x, double b, y):
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] yv = y.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = a * xv[i] + b * yv[i]
    return out.reshape(x.shape)


def lincomb3(double a, x, double b, y, double c, w):
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] yv = y.reshape(-1)
    cdef double[::1] wv = w.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = a * xv[i] + b * yv[i] + c * wv[i]
    return out.reshape(x.shape)
