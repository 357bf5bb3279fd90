# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; ``fpgas._fallback`` mirrors every function here."""
import numpy as np
cimport numpy as cnp
from libc.math cimport acosh, atanh, sinh, cosh, cos, asin, sqrt, log1p, ceil, pow, NAN

cnp.import_array()


def qubo_values(const double[:, ::1] Q, double offset):
    """All ``2^n`` values, MSB-first indexing.

    Bits split into a high half ``h`` and a low half ``l``:
    ``f = offset + f_h(h) + f_l(l) + 2 h^T Q_hl l``.  For each ``h`` the cross
    term over all ``l`` is a subset sum built by doubling, so every output row
    is written contiguously in ``O(2^nl)``.
    """
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t nh = n // 2
    cdef Py_ssize_t nl = n - nh
    cdef Py_ssize_t H = (<Py_ssize_t>1) << nh
    cdef Py_ssize_t L = (<Py_ssize_t>1) << nl
    out_arr = np.empty(H * L, dtype=np.float64)
    cdef double[::1] out = out_arr
    fl_arr = np.empty(L, dtype=np.float64)
    cdef double[::1] fl = fl_arr
    cross_arr = np.empty(L, dtype=np.float64)
    cdef double[::1] cross = cross_arr
    coef_arr = np.empty(nl, dtype=np.float64)
    cdef double[::1] coef = coef_arr
    cdef Py_ssize_t h, lo, a, b, k, size, base
    cdef double fh, v
    with nogil:
        # f_l by doubling: adding low bit a (qubit nh + nl - 1 - a) to every smaller pattern
        fl[0] = 0.0
        size = 1
        for a in range(nl):
            k = nh + nl - 1 - a
            for lo in range(size):
                v = Q[k, k]
                for b in range(a):
                    if (lo >> b) & 1:
                        v += 2.0 * Q[k, nh + nl - 1 - b]
                fl[size + lo] = fl[lo] + v
            size <<= 1
        for h in range(H):
            fh = offset
            for a in range(nh):
                if (h >> (nh - 1 - a)) & 1:
                    for b in range(nh):
                        if (h >> (nh - 1 - b)) & 1:
                            fh += Q[a, b]
            for a in range(nl):
                v = 0.0
                for b in range(nh):
                    if (h >> (nh - 1 - b)) & 1:
                        v += Q[b, nh + nl - 1 - a]
                coef[a] = 2.0 * v
            cross[0] = 0.0
            size = 1
            for a in range(nl):
                for lo in range(size):
                    cross[size + lo] = cross[lo] + coef[a]
                size <<= 1
            base = h * L
            for lo in range(L):
                out[base + lo] = fh + fl[lo] + cross[lo]
    return out_arr


cdef inline double _excess(double lam, double delta, double L) nogil:
    cdef double a, u, c
    if lam >= 1.0:
        return -1.0
    a = acosh(1.0 / delta)
    u = atanh(sqrt(lam))
    c = a / L
    return 2.0 * sinh(0.5 * (c + u)) * sinh(0.5 * (c - u)) / cosh(u)


cdef inline double _cheb_near_one(double L, double h) nogil:
    if h >= 0.0:
        return cosh(L * log1p(h + sqrt(h * (2.0 + h))))
    return cos(L * 2.0 * asin(sqrt(-0.5 * h)))


cdef inline double _p_fail(double lam, double delta, long l) nogil:
    cdef double L = 2.0 * l + 1.0
    cdef double t = _cheb_near_one(L, _excess(lam, delta, L))
    return delta * delta * t * t


cdef long _l_crit(double lam, double delta) nogil:
    cdef double a, u
    cdef long l
    if lam >= 1.0:
        return 1
    a = acosh(1.0 / delta)
    u = atanh(sqrt(lam))
    l = <long>ceil((a / u - 1.0) / 2.0)
    if l < 1:
        l = 1
    while _excess(lam, delta, 2.0 * l + 1.0) > 0.0:
        l += 1
    while l > 1 and _excess(lam, delta, 2.0 * l - 1.0) <= 0.0:
        l -= 1
    return l


cdef double _tau_bound(double delta, double alpha, double lam) nogil:
    cdef long lc, s0, s, ls
    cdef double head = 0.0, q = 1.0
    if not (delta > 0.0 and delta < 1.0 and alpha > 1.0) or alpha * delta * delta >= 1.0:
        return NAN
    lc = _l_crit(lam, delta)
    s0 = 1
    while <long>ceil(pow(alpha, s0 - 1)) < lc:
        s0 += 1
    for s in range(1, s0):
        ls = <long>ceil(pow(alpha, s - 1))
        head += ls * q
        q *= _p_fail(lam, delta, ls)
    return sqrt(lam) * (head + q * pow(alpha, s0 - 1) / (1.0 - alpha * delta * delta))


def schedule_bound_grid(const double[::1] deltas, const double[::1] alphas, double lam):
    cdef Py_ssize_t i, j
    out_arr = np.empty((deltas.shape[0], alphas.shape[0]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(deltas.shape[0]):
            for j in range(alphas.shape[0]):
                out[i, j] = _tau_bound(deltas[i], alphas[j], lam)
    return out_arr


def adaptive_model_classes(
    const int[::1] pos_class,
    const long long[::1] first_above,
    const double[:, ::1] success_table,
    const double[::1] u0,
    const double[:, ::1] u_succ,
    const double[:, ::1] u_pick,
):
    """Best-value class history of independent model-backend trials."""
    cdef Py_ssize_t N = pos_class.shape[0]
    cdef Py_ssize_t T = u0.shape[0]
    cdef Py_ssize_t R = success_table.shape[1]
    hist_arr = np.empty((T, R + 1), dtype=np.int32)
    cdef int[:, ::1] hist = hist_arr
    cdef Py_ssize_t t, r, pos, above
    cdef int c
    with nogil:
        for t in range(T):
            pos = <Py_ssize_t>(u0[t] * N)
            if pos >= N:
                pos = N - 1
            c = pos_class[pos]
            hist[t, 0] = c
            for r in range(R):
                above = N - first_above[c]
                if above > 0 and u_succ[t, r] < success_table[c, r]:
                    pos = first_above[c] + <Py_ssize_t>(u_pick[t, r] * above)
                    if pos >= N:
                        pos = N - 1
                    c = pos_class[pos]
                hist[t, r + 1] = c
    return hist_arr
