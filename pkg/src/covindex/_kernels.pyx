# Hot loops shared by the whole package: weighted block norms of point
# batches and membership margins for cylinder pieces.  Mirrors
# _kernels_py.py; keep the two implementations in sync.

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, pow

cnp.import_array()

COMPILED = True


cdef inline double _block_norm(const double* row, Py_ssize_t off,
                               Py_ssize_t length, double p) noexcept nogil:
    cdef double acc = 0.0
    cdef double v
    cdef Py_ssize_t i
    if length == 1:
        return fabs(row[off])
    if p == INFINITY:
        for i in range(length):
            v = fabs(row[off + i])
            if v > acc:
                acc = v
        return acc
    if p == 1.0:
        for i in range(length):
            acc += fabs(row[off + i])
        return acc
    if p == 2.0:
        for i in range(length):
            v = row[off + i]
            acc += v * v
        return acc ** 0.5
    for i in range(length):
        acc += pow(fabs(row[off + i]), p)
    return pow(acc, 1.0 / p)


cdef inline double _combine(const double* vals, Py_ssize_t n, double q) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    if q == INFINITY:
        for i in range(n):
            if vals[i] > acc:
                acc = vals[i]
        return acc
    if q == 1.0:
        for i in range(n):
            acc += vals[i]
        return acc
    if q == 2.0:
        for i in range(n):
            acc += vals[i] * vals[i]
        return acc ** 0.5
    for i in range(n):
        acc += pow(vals[i], q)
    return pow(acc, 1.0 / q)


def block_norms(double[:, ::1] pts, long[::1] offsets, long[::1] lengths,
                double[::1] weights, double inner_p):
    """Weighted inner-p norm of every block of every point: (n, B) array."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t nb = offsets.shape[0]
    out = np.empty((n, nb), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, b
    with nogil:
        for i in range(n):
            for b in range(nb):
                ov[i, b] = weights[b] * _block_norm(&pts[i, 0], offsets[b],
                                                    lengths[b], inner_p)
    return out


def norms(double[:, ::1] pts, long[::1] offsets, long[::1] lengths,
          double[::1] weights, double inner_p, double outer_q):
    """Space norm of every point: outer-q combination of block norms."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t nb = offsets.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] buf = np.empty(nb, dtype=np.float64)
    cdef Py_ssize_t i, b
    with nogil:
        for i in range(n):
            for b in range(nb):
                buf[b] = weights[b] * _block_norm(&pts[i, 0], offsets[b],
                                                  lengths[b], inner_p)
            ov[i] = _combine(&buf[0], nb, outer_q)
    return out


def qcyl_margins(double[:, ::1] pts, long[::1] offsets, long[::1] lengths,
                 double[::1] weights, double inner_p, double sign,
                 long[::1] residue_blocks, double beta, double qc,
                 double level):
    """Constraint margin sign*x0 + beta * sum_R bnorm^qc - level per point."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t m = residue_blocks.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef long b
    cdef double acc, bn
    with nogil:
        for i in range(n):
            acc = sign * pts[i, 0]
            for j in range(m):
                b = residue_blocks[j]
                bn = weights[b] * _block_norm(&pts[i, 0], offsets[b],
                                              lengths[b], inner_p)
                if qc == 1.0:
                    acc += beta * bn
                elif qc == 2.0:
                    acc += beta * bn * bn
                else:
                    acc += beta * pow(bn, qc)
            ov[i] = acc - level
    return out
