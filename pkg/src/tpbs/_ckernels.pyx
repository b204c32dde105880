# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels; same contract as tpbs._pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, ceil, floor, sqrt, M_PI

cnp.import_array()

DEF BLOCK = 512
DEF MAX_TRIES = 1000000
BACKEND = "cython"


from tpbs._pykernels import SamplerFailure


cdef class _Uniforms:
    cdef object rng
    cdef cnp.ndarray buf_arr
    cdef double* buf
    cdef int pos

    def __init__(self, rng):
        self.rng = rng
        self._refill()

    cdef void _refill(self):
        self.buf_arr = np.ascontiguousarray(self.rng.random(BLOCK), dtype=np.float64)
        self.buf = <double*> cnp.PyArray_DATA(self.buf_arr)
        self.pos = 0

    cdef inline double next(self):
        if self.pos == BLOCK:
            self._refill()
        self.pos += 1
        return self.buf[self.pos - 1]


cdef long long _one(double width, double center, double tail, _Uniforms uni) except? -9223372036854775807:
    cdef long long lo, hi, span, off, x
    cdef double scale, d
    cdef long tries
    if width <= 0.0:
        return <long long> floor(center + 0.5)
    lo = <long long> ceil(center - tail)
    hi = <long long> floor(center + tail)
    if hi < lo:
        return <long long> floor(center + 0.5)
    span = hi - lo + 1
    scale = M_PI / (width * width)
    for tries in range(MAX_TRIES):
        off = <long long> (uni.next() * span)
        if off >= span:
            off = span - 1
        x = lo + off
        d = <double> x - center
        if uni.next() < exp(-scale * d * d):
            return x
    raise SamplerFailure(f"no sample accepted after {MAX_TRIES} tries (s={width}, c={center})")


def sample_z_batch(widths, centers, tails, rng):
    cdef const double[::1] w = np.ascontiguousarray(widths, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(tails, dtype=np.float64)
    cdef Py_ssize_t i, count = w.shape[0]
    out = np.empty(count, dtype=np.int64)
    cdef long long[::1] o = out
    cdef _Uniforms uni = _Uniforms(rng)
    for i in range(count):
        o[i] = _one(w[i], c[i], t[i], uni)
    return out


def klein(basis_rows, gs_rows, gs_sq, double s, center, double tail_factor, rng):
    cdef const long long[:, ::1] S = np.ascontiguousarray(basis_rows, dtype=np.int64)
    cdef const double[:, ::1] G = np.ascontiguousarray(gs_rows, dtype=np.float64)
    cdef const double[::1] nsq = np.ascontiguousarray(gs_sq, dtype=np.float64)
    cdef Py_ssize_t dim = S.shape[0], width = S.shape[1], i, j
    cvec = np.array(center, dtype=np.float64)
    cdef double[::1] c = cvec
    out = np.zeros(width, dtype=np.int64)
    cdef long long[::1] v = out
    cdef _Uniforms uni = _Uniforms(rng)
    cdef double acc, ci, si
    cdef long long z
    for i in range(dim - 1, -1, -1):
        acc = 0.0
        for j in range(width):
            acc += c[j] * G[i, j]
        ci = acc / nsq[i]
        si = s / sqrt(nsq[i])
        z = _one(si, ci, tail_factor * si, uni)
        if z != 0:
            for j in range(width):
                c[j] -= z * S[i, j]
                v[j] += z * S[i, j]
    return out
