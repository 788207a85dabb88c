# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gibbs sweeps.  Must stay operation-for-operation identical to _sweep_py.py."""
from libc.math cimport exp, fabs, isfinite

ctypedef signed char int8


cdef inline int _draw(double a, double b, double c, double u, double* err) noexcept nogil:
    cdef double m = a
    if b > m:
        m = b
    if c > m:
        m = c
    if not isfinite(m):
        return -1
    cdef double w0 = exp(a - m)
    cdef double w1 = exp(b - m)
    cdef double w2 = exp(c - m)
    cdef double tot = w0 + w1 + w2
    cdef double p0 = w0 / tot
    cdef double p1 = w1 / tot
    cdef double p2 = w2 / tot
    err[0] = fabs((p0 + p1 + p2) - 1.0)
    if u < p0:
        return 0
    if u < p0 + p1:
        return 1
    return 2


def gibbs_sweep(int8[:, ::1] z, int8[::1] za,
                const double[:, ::1] y, const double[::1] ya,
                const double[:, ::1] mu, const double[::1] inv_sigma,
                const double[::1] mua, double inv_sigma_a,
                const long long[::1] nb_ptr, const long long[::1] nb_idx,
                const double[::1] c_edge, double D, bint spatial_on,
                double log_P, double log_1mP, bint temporal_on, double aimr_w,
                const double[:, :, ::1] log_node, const double[:, ::1] log_node_aimr,
                const long long[::1] order, const double[:, ::1] u, const signed char[::1] record,
                long long[:, :, ::1] counts, long long[:, ::1] counts_a):
    cdef double max_err
    with nogil:
        max_err = _run(z, za, y, ya, mu, inv_sigma, mua, inv_sigma_a, nb_ptr, nb_idx, c_edge, D,
                       spatial_on, log_P, log_1mP, temporal_on, aimr_w, log_node, log_node_aimr,
                       order, u, record, counts, counts_a)
    return max_err


cdef double _run(int8[:, ::1] z, int8[::1] za,
                 const double[:, ::1] y, const double[::1] ya,
                 const double[:, ::1] mu, const double[::1] inv_sigma,
                 const double[::1] mua, double inv_sigma_a,
                 const long long[::1] nb_ptr, const long long[::1] nb_idx,
                 const double[::1] c_edge, double D, bint spatial_on,
                 double log_P, double log_1mP, bint temporal_on, double aimr_w,
                 const double[:, :, ::1] log_node, const double[:, ::1] log_node_aimr,
                 const long long[::1] order, const double[:, ::1] u, const signed char[::1] record,
                 long long[:, :, ::1] counts, long long[:, ::1] counts_a) noexcept nogil:
    cdef double max_err = 0.0, err
    cdef Py_ssize_t i

    for i in range(u.shape[0]):
        err = _sweep_once(z, za, y, ya, mu, inv_sigma, mua, inv_sigma_a, nb_ptr, nb_idx, c_edge, D,
                          spatial_on, log_P, log_1mP, temporal_on, aimr_w, log_node, log_node_aimr,
                          order, u[i], record[i], counts, counts_a)
        if err < 0:
            return -1.0
        if err > max_err:
            max_err = err
    return max_err


cdef double _sweep_once(int8[:, ::1] z, int8[::1] za,
                        const double[:, ::1] y, const double[::1] ya,
                        const double[:, ::1] mu, const double[::1] inv_sigma,
                        const double[::1] mua, double inv_sigma_a,
                        const long long[::1] nb_ptr, const long long[::1] nb_idx,
                        const double[::1] c_edge, double D, bint spatial_on,
                        double log_P, double log_1mP, bint temporal_on, double aimr_w,
                        const double[:, :, ::1] log_node, const double[:, ::1] log_node_aimr,
                        const long long[::1] order, const double[::1] u, bint record,
                        long long[:, :, ::1] counts, long long[:, ::1] counts_a) noexcept nogil:
    cdef Py_ssize_t S = z.shape[0]
    cdef Py_ssize_t T = z.shape[1]
    cdef Py_ssize_t k, s, t, e, node, p, base
    cdef double max_err = 0.0, err = 0.0, w, d, ys, isg
    cdef double lw[3]
    cdef long long n[3]
    cdef int new

    for k in range(order.shape[0]):
        node = order[k]
        s = node // T
        t = node - s * T
        ys = y[s, t]
        isg = inv_sigma[s]
        for p in range(3):
            d = (ys - mu[s, p]) * isg
            w = log_node[s, t, p] - 0.5 * (d * d)
            if spatial_on:
                for e in range(nb_ptr[s], nb_ptr[s + 1]):
                    if z[nb_idx[e], t] == p:
                        w += c_edge[e]
                    else:
                        w += D
            if temporal_on:
                if t > 0:
                    if z[s, t - 1] == p:
                        w += log_P
                    else:
                        w += log_1mP
                if t < T - 1:
                    if z[s, t + 1] == p:
                        w += log_P
                    else:
                        w += log_1mP
            if za[t] == p:
                w += aimr_w
            lw[p] = w
        new = _draw(lw[0], lw[1], lw[2], u[k], &err)
        if new < 0:
            return -1.0
        if err > max_err:
            max_err = err
        z[s, t] = <int8>new

    base = order.shape[0]
    for t in range(T):
        n[0] = 0
        n[1] = 0
        n[2] = 0
        for s in range(S):
            n[z[s, t]] += 1
        for p in range(3):
            d = (ya[t] - mua[p]) * inv_sigma_a
            lw[p] = log_node_aimr[t, p] - 0.5 * (d * d) + aimr_w * n[p]
        new = _draw(lw[0], lw[1], lw[2], u[base + t], &err)
        if new < 0:
            return -1.0
        if err > max_err:
            max_err = err
        za[t] = <int8>new

    if record:
        for s in range(S):
            for t in range(T):
                counts[s, t, z[s, t]] += 1
        for t in range(T):
            counts_a[t, za[t]] += 1
    return max_err
