"""Pure-Python kernels.

Reference implementation of the hot loops in ``_ckernels.pyx`` with the
same signatures and the same floating-point operation order, so a chain
driven by the same random inputs follows the same path under either
backend.  Matrices are converted to nested lists on entry and written back
on exit.
"""

from math import exp, log, pi, sqrt

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

EPS = 1e-8
_LOG_SQRT_2PI = 0.5 * log(2.0 * pi)

RJ = 0
DRJ = 1


def _complete(phi, code, rep_i, rep_j, p, start):
    for i in range(start // p, p):
        j0 = start % p if i == start // p else i
        if j0 < i:
            j0 = i
        row_code = code[i]
        for j in range(j0, p):
            c = row_code[j]
            if c == 0:
                continue
            if i == j:
                ri = rep_i[i][i]
                target = 0.0
                for k in range(ri + 1):
                    target += phi[k][ri] * phi[k][ri]
                s = 0.0
                for k in range(i):
                    s += phi[k][i] * phi[k][i]
                r = target - s
                if r <= EPS:
                    return 1
                phi[i][i] = sqrt(r)
            else:
                target = 0.0
                if c == 2:
                    ri = rep_i[i][j]
                    rj = rep_j[i][j]
                    for k in range(ri + 1):
                        target += phi[k][ri] * phi[k][rj]
                s = 0.0
                for k in range(i):
                    s += phi[k][i] * phi[k][j]
                phi[i][j] = (target - s) / phi[i][i]
    return 0


def _log_density(phi, expo, M, p):
    val = 0.0
    for i in range(p):
        val += expo[i] * log(phi[i][i])
    quad = 0.0
    for k in range(p):
        row = phi[k]
        for j in range(k, p):
            x = row[j]
            if x == 0.0:
                continue
            Mj = M[j]
            acc = 0.5 * x * Mj[j]
            for l in range(j + 1, p):
                acc += row[l] * Mj[l]
            quad += x * acc
    return val - quad


def _copy_into(dst, src, p):
    for i in range(p):
        dst[i][:] = src[i]


def _sweeps(phi, code, rep_i, rep_j, free_i, free_j, expo, M, p, sigma, nsweeps, z, u, slot):
    nfree = len(free_i)
    backup = [row[:] for row in phi]
    cur = _log_density(phi, expo, M, p)
    accepted = 0
    for _ in range(nsweeps):
        for f in range(nfree):
            a = free_i[f]
            b = free_j[f]
            zz = z[slot]
            u1 = u[2 * slot]
            u2 = u[2 * slot + 1]
            slot += 1
            mu = phi[a][b]
            corr = 0.0
            if a == b:
                m = mu / sigma
                x = mu - sigma * ndtri(u1 * ndtr(m))
                if not x > EPS:
                    continue
                corr = log_ndtr(m) - log_ndtr(x / sigma)
            else:
                x = mu + sigma * zz
            phi[a][b] = x
            if _complete(phi, code, rep_i, rep_j, p, a * p + b + 1):
                _copy_into(phi, backup, p)
                continue
            new = _log_density(phi, expo, M, p)
            if log(u2) < new - cur + corr:
                cur = new
                accepted += 1
                _copy_into(backup, phi, p)
            else:
                _copy_into(phi, backup, p)
    return accepted, slot


def _log_q(x, mu, sigma, diag):
    d = (x - mu) / sigma
    val = -0.5 * d * d - log(sigma) - _LOG_SQRT_2PI
    if diag:
        val -= log_ndtr(mu / sigma)
    return val


def _propose(mu, sigma, diag, zz, u1):
    if diag:
        return mu - sigma * ndtri(u1 * ndtr(mu / sigma))
    return mu + sigma * zz


def _lists(layout):
    code, rep_i, rep_j, free_i, free_j = layout
    return (
        np.asarray(code).tolist(),
        np.asarray(rep_i).tolist(),
        np.asarray(rep_j).tolist(),
        np.asarray(free_i).tolist(),
        np.asarray(free_j).tolist(),
    )


# -- public entry points ------------------------------------------------------


def complete(phi, code, rep_i, rep_j, start):
    p = phi.shape[0]
    ph = phi.tolist()
    status = _complete(ph, np.asarray(code).tolist(), np.asarray(rep_i).tolist(),
                       np.asarray(rep_j).tolist(), p, start)
    phi[:, :] = ph
    return status


def log_density(phi, expo, M):
    p = phi.shape[0]
    return _log_density(phi.tolist(), list(expo), np.asarray(M).tolist(), p)


def mh_sweeps(phi, code, rep_i, rep_j, free_i, free_j, expo, M, sigma, nsweeps, z, u):
    p = phi.shape[0]
    ph = phi.tolist()
    acc, _ = _sweeps(
        ph,
        np.asarray(code).tolist(),
        np.asarray(rep_i).tolist(),
        np.asarray(rep_j).tolist(),
        np.asarray(free_i).tolist(),
        np.asarray(free_j).tolist(),
        list(expo),
        np.asarray(M).tolist(),
        p,
        sigma,
        nsweeps,
        z,
        u,
        0,
    )
    phi[:, :] = ph
    return acc


def pair_chain(method, lay_s, lay_l, a, b, expo_post_s, expo_post_l, expo_prior_s,
               expo_prior_l, M_post, M_prior, const_adj, sigma, nsweeps, phi, omega,
               state, counts, stats, skip, z, u, n_iter):
    """Run ``n_iter`` iterations of the two-graph chain in place.

    ``state[0]`` is 0 while the chain sits on the smaller graph and 1 on the
    larger; ``phi`` is the data-side factor for that graph and ``omega`` the
    auxiliary factor for the other graph (DRJ only).  Iterations with index
    ``>= skip`` are tallied into ``counts``.  ``stats`` accumulates
    ``[forward tries, forward accepts, reverse tries, reverse accepts]``.
    """
    p = phi.shape[0]
    Ls = _lists(lay_s)
    Ll = _lists(lay_l)
    nf_s = len(Ls[3])
    nf_l = len(Ll[3])
    block = 2 * nsweeps * nf_l + 1
    Mp = np.asarray(M_post).tolist()
    Mq = np.asarray(M_prior).tolist()
    eps_s, eps_l = list(expo_post_s), list(expo_post_l)
    epr_s, epr_l = list(expo_prior_s), list(expo_prior_l)
    ph = phi.tolist()
    om = omega.tolist()
    cur = int(state[0])
    diag = a == b
    start = a * p + b
    for t in range(n_iter):
        base = t * block
        if cur == 0:
            lay_c, lay_o, ep_c, ep_o = Ls, Ll, eps_s, epr_l
        else:
            lay_c, lay_o, ep_c, ep_o = Ll, Ls, eps_l, epr_s
        _sweeps(ph, lay_c[0], lay_c[1], lay_c[2], lay_c[3], lay_c[4], ep_c, Mp, p,
                sigma, nsweeps, z, u, base)
        if method == DRJ:
            _sweeps(om, lay_o[0], lay_o[1], lay_o[2], lay_o[3], lay_o[4], ep_o, Mq, p,
                    sigma, nsweeps, z, u, base + nsweeps * nf_l)
        js = base + block - 1
        zz, u1, u2 = z[js], u[2 * js], u[2 * js + 1]
        if cur == 0:
            stats[0] += 1
            lr = _forward(method, ph, om, Ls, Ll, a, b, diag, start, eps_s, eps_l,
                          epr_s, epr_l, Mp, Mq, const_adj, sigma, zz, u1, p)
            if lr is not None and log(u2) < lr[0]:
                ph, om = lr[1], lr[2]
                cur = 1
                stats[1] += 1
        else:
            stats[2] += 1
            lr = _reverse(method, ph, om, Ls, Ll, a, b, diag, start, eps_s, eps_l,
                          epr_s, epr_l, Mp, Mq, const_adj, sigma, zz, u1, p)
            if lr is not None and log(u2) < lr[0]:
                ph, om = lr[1], lr[2]
                cur = 0
                stats[3] += 1
        if t >= skip:
            counts[cur] += 1
    phi[:, :] = ph
    omega[:, :] = om
    state[0] = cur


def _forward(method, ph, om, Ls, Ll, a, b, diag, start, eps_s, eps_l, epr_s, epr_l,
             Mp, Mq, const_adj, sigma, zz, u1, p):
    mu = ph[a][b]
    x = _propose(mu, sigma, diag, zz, u1)
    if diag and not x > EPS:
        return None
    new = [row[:] for row in ph]
    new[a][b] = x
    if _complete(new, Ll[0], Ll[1], Ll[2], p, start + 1):
        return None
    lr = (_log_density(new, eps_l, Mp, p) - _log_density(ph, eps_s, Mp, p)
          - _log_q(x, mu, sigma, diag))
    new_om = om
    if method == DRJ:
        new_om = [row[:] for row in om]
        if _complete(new_om, Ls[0], Ls[1], Ls[2], p, start):
            return None
        lr += (_log_density(new_om, epr_s, Mq, p) - _log_density(om, epr_l, Mq, p)
               + _log_q(om[a][b], new_om[a][b], sigma, diag))
    else:
        lr += const_adj
    return lr, new, new_om


def _reverse(method, ph, om, Ls, Ll, a, b, diag, start, eps_s, eps_l, epr_s, epr_l,
             Mp, Mq, const_adj, sigma, zz, u1, p):
    new = [row[:] for row in ph]
    if _complete(new, Ls[0], Ls[1], Ls[2], p, start):
        return None
    lr = (_log_density(new, eps_s, Mp, p) - _log_density(ph, eps_l, Mp, p)
          + _log_q(ph[a][b], new[a][b], sigma, diag))
    new_om = om
    if method == DRJ:
        mu = om[a][b]
        x = _propose(mu, sigma, diag, zz, u1)
        if diag and not x > EPS:
            return None
        new_om = [row[:] for row in om]
        new_om[a][b] = x
        if _complete(new_om, Ll[0], Ll[1], Ll[2], p, start + 1):
            return None
        lr += (_log_density(new_om, epr_l, Mq, p) - _log_density(om, epr_s, Mq, p)
               - _log_q(x, mu, sigma, diag))
    else:
        lr -= const_adj
    return lr, new, new_om
