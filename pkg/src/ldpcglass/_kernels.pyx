# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled segment kernels for message passing.

Kernels work on flat edge arrays grouped into contiguous segments given by a
pointer array ``ptr`` (segment ``a`` is ``ptr[a]:ptr[a+1]``). Inputs are
already-``tanh``-ed messages; ``tanh``/``atanh`` stay in numpy, whose SIMD
versions beat scalar libm calls. Multiplication order matches
``_pykernels`` so the two backends agree bit for bit.
"""
import numpy as np


def extrinsic_product(const double[::1] t, const long long[::1] ptr, double clamp):
    cdef Py_ssize_t n_seg = ptr.shape[0] - 1
    out_arr = np.empty(t.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t a, j, s, e
    cdef double acc, p
    for a in range(n_seg):
        s = ptr[a]
        e = ptr[a + 1]
        acc = 1.0
        for j in range(s, e):
            out[j] = acc
            acc = acc * t[j]
        acc = 1.0
        for j in range(e - 1, s - 1, -1):
            p = out[j] * acc
            acc = acc * t[j]
            if p > clamp:
                p = clamp
            elif p < -clamp:
                p = -clamp
            out[j] = p
    return out_arr


def segment_product(const double[::1] t, const long long[::1] ptr, double clamp):
    cdef Py_ssize_t n_seg = ptr.shape[0] - 1
    out_arr = np.empty(n_seg, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t a, j
    cdef double acc
    for a in range(n_seg):
        acc = 1.0
        for j in range(ptr[a], ptr[a + 1]):
            acc = acc * t[j]
        if acc > clamp:
            acc = clamp
        elif acc < -clamp:
            acc = -clamp
        out[a] = acc
    return out_arr


def extrinsic_sum(const double[::1] msgs, const long long[::1] ptr,
                  const double[::1] h, double clip):
    cdef Py_ssize_t n_seg = ptr.shape[0] - 1
    out_arr = np.empty(msgs.shape[0], dtype=np.float64)
    total_arr = np.empty(n_seg, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] total = total_arr
    cdef Py_ssize_t i, j
    cdef double acc, v
    for i in range(n_seg):
        acc = 0.0
        for j in range(ptr[i], ptr[i + 1]):
            acc = acc + msgs[j]
        acc = acc + h[i]
        total[i] = acc
        for j in range(ptr[i], ptr[i + 1]):
            v = acc - msgs[j]
            if v > clip:
                v = clip
            elif v < -clip:
                v = -clip
            out[j] = v
    return out_arr, total_arr
