# cython: language_level=3
"""Compiled kernels: hot loops for classifier training and feature scoring.

Arithmetic mirrors _py_impl.py operation-for-operation so both backends
give bit-identical results (the build disables FP contraction).
"""

from libc.math cimport log2


def pegasos_epoch(double[:, ::1] X, double[::1] y, long long[::1] order,
                  double lam, double[::1] w, double[::1] wsum,
                  double b, double bsum, long long t):
    """One epoch of subgradient updates over a fixed visiting order."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t idx, i, j
    cdef double eta, dot, yi, margin, scale
    for idx in range(n):
        i = <Py_ssize_t> order[idx]
        t += 1
        eta = 1.0 / (lam * t)
        dot = 0.0
        for j in range(d):
            dot += w[j] * X[i, j]
        yi = y[i]
        margin = yi * (dot + b)
        scale = 1.0 - eta * lam
        for j in range(d):
            w[j] = w[j] * scale
        if margin < 1.0:
            for j in range(d):
                w[j] = w[j] + eta * yi * X[i, j]
            b = b + eta * yi
        for j in range(d):
            wsum[j] = wsum[j] + w[j]
        bsum = bsum + b
    return b, bsum, t


def hinge_objective(double[:, ::1] X, double[::1] y, double[::1] w,
                    double b, double lam):
    """L2-regularized mean hinge loss: lam/2*|w|^2 + mean(max(0, 1-y*f))."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j
    cdef double reg = 0.0
    cdef double total = 0.0
    cdef double dot, h
    for j in range(d):
        reg += w[j] * w[j]
    reg = 0.5 * lam * reg
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += w[j] * X[i, j]
        h = 1.0 - y[i] * (dot + b)
        if h > 0.0:
            total += h
    return reg + total / n


cdef double _h2(double a, double b):
    cdef double t, pa, pb
    if a <= 0.0 or b <= 0.0:
        return 0.0
    t = a + b
    pa = a / t
    pb = b / t
    return -(pa * log2(pa) + pb * log2(pb))


def entropy_losses(unsigned char[:, ::1] presence, unsigned char[::1] labels,
                   double[::1] out):
    """Expected entropy loss per feature column, written into out."""
    cdef Py_ssize_t n = presence.shape[0]
    cdef Py_ssize_t k = presence.shape[1]
    cdef Py_ssize_t i, j
    cdef long pos = 0, pp, pn, present, absent
    cdef double prior, wp, wn, hp, hn
    for i in range(n):
        if labels[i]:
            pos += 1
    cdef long neg = n - pos
    prior = _h2(<double> pos, <double> neg)
    for j in range(k):
        pp = 0
        pn = 0
        for i in range(n):
            if presence[i, j]:
                if labels[i]:
                    pp += 1
                else:
                    pn += 1
        present = pp + pn
        absent = n - present
        wp = (<double> present) / (<double> n)
        wn = (<double> absent) / (<double> n)
        hp = _h2(<double> pp, <double> pn)
        hn = _h2(<double> (pos - pp), <double> (neg - pn))
        out[j] = prior - (wp * hp + wn * hn)
