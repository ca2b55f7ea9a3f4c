# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for completion, Cholesky-space densities and the
single-site and two-graph Metropolis-Hastings chains.

Mirrors ``_pykernels`` operation for operation.
"""

from libc.math cimport log, sqrt
from scipy.special.cython_special cimport log_ndtr, ndtr, ndtri

import numpy as np

cdef double EPS = 1e-8
cdef double LOG_SQRT_2PI = 0.91893853320467274178

cdef enum:
    RJ = 0
    DRJ = 1


cdef int _complete(double[:, ::1] phi, const signed char[:, ::1] code,
                   const int[:, ::1] rep_i, const int[:, ::1] rep_j,
                   Py_ssize_t p, Py_ssize_t start) nogil:
    cdef Py_ssize_t i, j, j0, k, ri, rj
    cdef signed char c
    cdef double target, s, r
    for i in range(start // p, p):
        if i == start // p:
            j0 = start % p
            if j0 < i:
                j0 = i
        else:
            j0 = i
        for j in range(j0, p):
            c = code[i, j]
            if c == 0:
                continue
            if i == j:
                ri = rep_i[i, i]
                target = 0.0
                for k in range(ri + 1):
                    target += phi[k, ri] * phi[k, ri]
                s = 0.0
                for k in range(i):
                    s += phi[k, i] * phi[k, i]
                r = target - s
                if r <= EPS:
                    return 1
                phi[i, i] = sqrt(r)
            else:
                target = 0.0
                if c == 2:
                    ri = rep_i[i, j]
                    rj = rep_j[i, j]
                    for k in range(ri + 1):
                        target += phi[k, ri] * phi[k, rj]
                s = 0.0
                for k in range(i):
                    s += phi[k, i] * phi[k, j]
                phi[i, j] = (target - s) / phi[i, i]
    return 0


cdef double _log_density(double[:, ::1] phi, const double[::1] expo,
                         const double[:, ::1] M, Py_ssize_t p) nogil:
    cdef Py_ssize_t i, j, k, l
    cdef double val = 0.0, quad = 0.0, x, acc
    for i in range(p):
        val += expo[i] * log(phi[i, i])
    for k in range(p):
        for j in range(k, p):
            x = phi[k, j]
            if x == 0.0:
                continue
            acc = 0.5 * x * M[j, j]
            for l in range(j + 1, p):
                acc += phi[k, l] * M[j, l]
            quad += x * acc
    return val - quad


cdef inline void _copy(double[:, ::1] dst, double[:, ::1] src, Py_ssize_t p) nogil:
    cdef Py_ssize_t i, j
    for i in range(p):
        for j in range(i, p):
            dst[i, j] = src[i, j]


cdef Py_ssize_t _sweeps(double[:, ::1] phi, double[:, ::1] backup,
                        const signed char[:, ::1] code, const int[:, ::1] rep_i,
                        const int[:, ::1] rep_j, const int[::1] free_i,
                        const int[::1] free_j, const double[::1] expo,
                        const double[:, ::1] M, Py_ssize_t p, double sigma,
                        Py_ssize_t nsweeps, const double[::1] z, const double[::1] u,
                        Py_ssize_t slot, Py_ssize_t* accepted) nogil:
    cdef Py_ssize_t nfree = free_i.shape[0]
    cdef Py_ssize_t sw, f, a, b
    cdef double cur, new, mu, x, m, corr, zz, u1, u2
    _copy(backup, phi, p)
    cur = _log_density(phi, expo, M, p)
    for sw in range(nsweeps):
        for f in range(nfree):
            a = free_i[f]
            b = free_j[f]
            zz = z[slot]
            u1 = u[2 * slot]
            u2 = u[2 * slot + 1]
            slot += 1
            mu = phi[a, b]
            corr = 0.0
            if a == b:
                m = mu / sigma
                x = mu - sigma * ndtri(u1 * ndtr(m))
                if not x > EPS:
                    continue
                corr = log_ndtr(m) - log_ndtr(x / sigma)
            else:
                x = mu + sigma * zz
            phi[a, b] = x
            if _complete(phi, code, rep_i, rep_j, p, a * p + b + 1):
                _copy(phi, backup, p)
                continue
            new = _log_density(phi, expo, M, p)
            if log(u2) < new - cur + corr:
                cur = new
                accepted[0] += 1
                _copy(backup, phi, p)
            else:
                _copy(phi, backup, p)
    return slot


cdef inline double _log_q(double x, double mu, double sigma, bint diag) nogil:
    cdef double d = (x - mu) / sigma
    cdef double val = -0.5 * d * d - log(sigma) - LOG_SQRT_2PI
    if diag:
        val -= log_ndtr(mu / sigma)
    return val


cdef inline double _propose(double mu, double sigma, bint diag, double zz, double u1) nogil:
    if diag:
        return mu - sigma * ndtri(u1 * ndtr(mu / sigma))
    return mu + sigma * zz


def complete(double[:, ::1] phi, const signed char[:, ::1] code,
             const int[:, ::1] rep_i, const int[:, ::1] rep_j, Py_ssize_t start):
    return _complete(phi, code, rep_i, rep_j, phi.shape[0], start)


def log_density(double[:, ::1] phi, const double[::1] expo, const double[:, ::1] M):
    return _log_density(phi, expo, M, phi.shape[0])


def mh_sweeps(double[:, ::1] phi, const signed char[:, ::1] code,
              const int[:, ::1] rep_i, const int[:, ::1] rep_j,
              const int[::1] free_i, const int[::1] free_j,
              const double[::1] expo, const double[:, ::1] M, double sigma,
              Py_ssize_t nsweeps, const double[::1] z, const double[::1] u):
    cdef Py_ssize_t accepted = 0
    cdef double[:, ::1] backup = np.zeros_like(np.asarray(phi))
    with nogil:
        _sweeps(phi, backup, code, rep_i, rep_j, free_i, free_j, expo, M,
                phi.shape[0], sigma, nsweeps, z, u, 0, &accepted)
    return accepted


def pair_chain(int method, tuple lay_s, tuple lay_l, Py_ssize_t a, Py_ssize_t b,
               const double[::1] expo_post_s, const double[::1] expo_post_l,
               const double[::1] expo_prior_s, const double[::1] expo_prior_l,
               const double[:, ::1] M_post, const double[:, ::1] M_prior,
               double const_adj, double sigma, Py_ssize_t nsweeps,
               double[:, ::1] phi, double[:, ::1] omega, int[::1] state,
               long long[::1] counts, long long[::1] stats, Py_ssize_t skip,
               const double[::1] z, const double[::1] u, Py_ssize_t n_iter):
    cdef const signed char[:, ::1] code_s = lay_s[0]
    cdef const int[:, ::1] ri_s = lay_s[1]
    cdef const int[:, ::1] rj_s = lay_s[2]
    cdef const int[::1] fi_s = lay_s[3]
    cdef const int[::1] fj_s = lay_s[4]
    cdef const signed char[:, ::1] code_l = lay_l[0]
    cdef const int[:, ::1] ri_l = lay_l[1]
    cdef const int[:, ::1] rj_l = lay_l[2]
    cdef const int[::1] fi_l = lay_l[3]
    cdef const int[::1] fj_l = lay_l[4]
    cdef Py_ssize_t p = phi.shape[0]
    cdef Py_ssize_t nf_l = fi_l.shape[0]
    cdef Py_ssize_t block = 2 * nsweeps * nf_l + 1
    cdef Py_ssize_t t, base, js, start = a * p + b
    cdef Py_ssize_t dummy = 0
    cdef int cur = state[0]
    cdef bint diag = a == b
    cdef bint ok
    cdef double zz, u1, u2, mu, x, lr
    cdef double[:, ::1] backup = np.zeros((p, p))
    cdef double[:, ::1] new_ph = np.zeros((p, p))
    cdef double[:, ::1] new_om = np.zeros((p, p))
    with nogil:
        for t in range(n_iter):
            base = t * block
            if cur == 0:
                _sweeps(phi, backup, code_s, ri_s, rj_s, fi_s, fj_s, expo_post_s,
                        M_post, p, sigma, nsweeps, z, u, base, &dummy)
                if method == DRJ:
                    _sweeps(omega, backup, code_l, ri_l, rj_l, fi_l, fj_l, expo_prior_l,
                            M_prior, p, sigma, nsweeps, z, u, base + nsweeps * nf_l, &dummy)
            else:
                _sweeps(phi, backup, code_l, ri_l, rj_l, fi_l, fj_l, expo_post_l,
                        M_post, p, sigma, nsweeps, z, u, base, &dummy)
                if method == DRJ:
                    _sweeps(omega, backup, code_s, ri_s, rj_s, fi_s, fj_s, expo_prior_s,
                            M_prior, p, sigma, nsweeps, z, u, base + nsweeps * nf_l, &dummy)
            js = base + block - 1
            zz = z[js]
            u1 = u[2 * js]
            u2 = u[2 * js + 1]
            ok = True
            if cur == 0:
                stats[0] += 1
                mu = phi[a, b]
                x = _propose(mu, sigma, diag, zz, u1)
                if diag and not x > EPS:
                    ok = False
                if ok:
                    _copy(new_ph, phi, p)
                    new_ph[a, b] = x
                    if _complete(new_ph, code_l, ri_l, rj_l, p, start + 1):
                        ok = False
                if ok:
                    lr = (_log_density(new_ph, expo_post_l, M_post, p)
                          - _log_density(phi, expo_post_s, M_post, p)
                          - _log_q(x, mu, sigma, diag))
                    if method == DRJ:
                        _copy(new_om, omega, p)
                        if _complete(new_om, code_s, ri_s, rj_s, p, start):
                            ok = False
                        else:
                            lr += (_log_density(new_om, expo_prior_s, M_prior, p)
                                   - _log_density(omega, expo_prior_l, M_prior, p)
                                   + _log_q(omega[a, b], new_om[a, b], sigma, diag))
                    else:
                        lr += const_adj
                if ok and log(u2) < lr:
                    _copy(phi, new_ph, p)
                    if method == DRJ:
                        _copy(omega, new_om, p)
                    cur = 1
                    stats[1] += 1
            else:
                stats[2] += 1
                _copy(new_ph, phi, p)
                if _complete(new_ph, code_s, ri_s, rj_s, p, start):
                    ok = False
                if ok:
                    lr = (_log_density(new_ph, expo_post_s, M_post, p)
                          - _log_density(phi, expo_post_l, M_post, p)
                          + _log_q(phi[a, b], new_ph[a, b], sigma, diag))
                    if method == DRJ:
                        mu = omega[a, b]
                        x = _propose(mu, sigma, diag, zz, u1)
                        if diag and not x > EPS:
                            ok = False
                        else:
                            _copy(new_om, omega, p)
                            new_om[a, b] = x
                            if _complete(new_om, code_l, ri_l, rj_l, p, start + 1):
                                ok = False
                            else:
                                lr += (_log_density(new_om, expo_prior_l, M_prior, p)
                                       - _log_density(omega, expo_prior_s, M_prior, p)
                                       - _log_q(x, mu, sigma, diag))
                    else:
                        lr -= const_adj
                if ok and log(u2) < lr:
                    _copy(phi, new_ph, p)
                    if method == DRJ:
                        _copy(omega, new_om, p)
                    cur = 0
                    stats[3] += 1
            if t >= skip:
                counts[cur] += 1
    state[0] = cur
