# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled raw-stream trial; mirrors ``_fallback.simulate_stream`` exactly."""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport ceil, expm1, floor, log, log1p, pow
from numpy.random cimport bitgen_t

cnp.import_array()

cdef enum:
    STATUS_OK = 0
    STATUS_CAP = 1
    STATUS_STALLED = 2


cdef inline double _sf(int kind, double g, double c, double x) noexcept nogil:
    if kind == 0:
        if x <= c:
            return 1.0
        return pow(x / c, -g)
    if x <= 0.0:
        return 1.0
    if kind == 1:
        return -expm1(-pow(x, -g))
    if kind == 2:
        return 1.0 / (1.0 + pow(x, g))
    if kind == 3:
        return pow(1.0 + pow(x, g / c), -c)
    return -expm1(-c * log1p(pow(x, -g)))


cdef inline double _isf(int kind, double g, double c, double s) noexcept nogil:
    if kind == 0:
        return c * pow(s, -1.0 / g)
    if kind == 1:
        return pow(-log1p(-s), -1.0 / g)
    if kind == 2:
        return pow((1.0 - s) / s, 1.0 / g)
    if kind == 3:
        return pow(expm1(-log(s) / c), c / g)
    return pow(expm1(-log1p(-s) / c), -1.0 / g)


cdef inline long long _index(double ratio, double log_a, long long upper) noexcept nogil:
    cdef double j = ceil(log(ratio) / log_a) - 1.0
    if j != j:
        return upper
    if j < 0.0:
        return 0
    if j > <double>upper:
        return upper
    return <long long>j


def sf(int kind, double gamma, double param, double x):
    return _sf(kind, gamma, param, x)


def isf(int kind, double gamma, double param, double s):
    return _isf(kind, gamma, param, s)


def simulate_stream(int kind, double gamma, double param, double A,
                    double[::1] deltas, int m, int n_records,
                    long long[::1] ks, long long cap, object bit_generator):
    cdef Py_ssize_t nd = deltas.shape[0]
    cdef Py_ssize_t nk = ks.shape[0]
    cdef Py_ssize_t keep = 0, i, j, g, n_top = 0, n_rec = 0
    cdef long long huge = (<long long>1) << 62
    cdef double dmin, tau, p, p_act, u, x, R, raw = 0.0, low
    cdef long long draws = 0
    cdef int status = STATUS_OK
    cdef bitgen_t *rng

    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator")
    rng = <bitgen_t *>PyCapsule_GetPointer(capsule, "BitGenerator")

    for i in range(nk):
        if ks[i] + 1 > keep:
            keep = ks[i] + 1
    log_a_arr = np.empty(nd, dtype=np.float64)
    cdef double[::1] log_a = log_a_arr
    dmin = deltas[0]
    for j in range(nd):
        log_a[j] = -log(deltas[j]) / m
        if deltas[j] < dmin:
            dmin = deltas[j]

    records_arr = np.zeros(n_records + 1, dtype=np.float64)
    top_arr = np.zeros(keep + 1, dtype=np.float64)
    sum_k_arr = np.zeros(nd, dtype=np.int64)
    sum_s_arr = np.zeros(nd, dtype=np.int64)
    sum_v_arr = np.zeros(nd, dtype=np.int64)
    ess_arr = np.zeros(nk, dtype=np.int64)
    cdef double[::1] records = records_arr
    cdef double[::1] top = top_arr
    cdef cnp.int64_t[::1] sum_k = sum_k_arr
    cdef cnp.int64_t[::1] sum_s = sum_s_arr
    cdef cnp.int64_t[::1] sum_v = sum_v_arr
    cdef cnp.int64_t[::1] ess = ess_arr

    with bit_generator.lock, nogil:
        p_act = _sf(kind, gamma, param, A) if A > 0.0 else 1.0
        if not p_act > 0.0:
            status = STATUS_STALLED
        else:
            while True:
                if draws >= cap:
                    status = STATUS_CAP
                    break
                u = rng.next_double(rng.state)
                draws += 1
                x = _isf(kind, gamma, param, (1.0 - u) * p_act)
                if x > A:
                    break
        if status == STATUS_OK:
            for j in range(nd):
                sum_k[j] = _index(x / A, log_a[j], huge) if A > 0.0 else 0
            records[0] = x
            n_rec = 1
            if keep:
                top[0] = x
                n_top = 1
                for i in range(nk):
                    ess[i] += 1
            raw = 1.0
            R = x

            while True:
                tau = dmin * R
                if keep:
                    if n_top < keep:
                        tau = 0.0
                    elif top[n_top - 1] < tau:
                        tau = top[n_top - 1]
                p = _sf(kind, gamma, param, tau)
                if not p > 0.0:
                    status = STATUS_STALLED
                    break
                if draws >= cap:
                    status = STATUS_CAP
                    break
                if p < 1.0:
                    u = rng.next_double(rng.state)
                    raw += floor(log(1.0 - u) / log1p(-p))
                u = rng.next_double(rng.state)
                draws += 1
                raw += 1.0
                x = _isf(kind, gamma, param, (1.0 - u) * p)

                if keep:
                    g = 0
                    while g < n_top and top[g] > x:
                        g += 1
                    for i in range(nk):
                        if g <= ks[i]:
                            ess[i] += 1
                    if g < keep:
                        i = n_top if n_top < keep else keep - 1
                        while i > g:
                            top[i] = top[i - 1]
                            i -= 1
                        top[g] = x
                        if n_top < keep:
                            n_top += 1

                if x > R:
                    records[n_rec] = x
                    n_rec += 1
                    if n_rec > n_records:
                        break
                    for j in range(nd):
                        sum_k[j] += _index(x / R, log_a[j], huge)
                    R = x
                else:
                    for j in range(nd):
                        low = deltas[j] * R
                        if x > low:
                            sum_s[j] += 1
                            sum_v[j] += _index(x / low, log_a[j], m - 1)

    return (
        status,
        records_arr[:n_rec].copy(),
        sum_k_arr,
        sum_s_arr,
        sum_v_arr,
        top_arr[:n_top].copy(),
        ess_arr,
        raw,
        int(draws),
    )
