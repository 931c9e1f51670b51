"""numba inner loops over int64 numerators.

Only valid when ``ModelParams.fits_int64``; callers fall back to the exact
Python-int routines otherwise. Arrays: ``pats`` is p x N int8, ``cols`` its
N x p transpose, ``x`` int8 spins, ``M`` int64 overlaps, ``coef`` int64 field
polynomial coefficients (index = power).
"""

import numpy as np
from numba import njit

from .rng import bounded, next_u64, partial_shuffle, shuffle_inplace, uniform

_TOP = np.uint64(63)


@njit(cache=True, nogil=True)
def fill_random(s, out):
    p, N = out.shape
    for mu in range(p):
        for i in range(N):
            out[mu, i] = 1 if (next_u64(s) >> _TOP) == np.uint64(1) else -1


@njit(cache=True, nogil=True)
def inject_copies(s, out, count, copy_prob):
    # rows 1..count-1 copy each coordinate of row 0 with probability copy_prob
    N = out.shape[1]
    for mu in range(1, count):
        for i in range(N):
            if uniform(s) < copy_prob:
                out[mu, i] = out[0, i]


@njit(cache=True, nogil=True)
def rebuild(pats, x, M):
    p, N = pats.shape
    for mu in range(p):
        acc = 0
        for i in range(N):
            acc += pats[mu, i] * x[i]
        M[mu] = acc


@njit(cache=True, nogil=True)
def phi_num(cols, M, x, i, coef):
    p = M.shape[0]
    n = coef.shape[0]
    xi = np.int64(x[i])
    c = cols[i]
    total = np.int64(0)
    # closed forms for common orders vectorize; Horner otherwise
    if n == 3:
        for mu in range(p):
            a = np.int64(c[mu])
            S = M[mu] - a * xi
            total += a * (3 * S * S + 1)
    elif n == 2:
        for mu in range(p):
            a = np.int64(c[mu])
            total += a * (2 * (M[mu] - a * xi))
    elif n == 4:
        for mu in range(p):
            a = np.int64(c[mu])
            S = M[mu] - a * xi
            total += a * (4 * S * (S * S + 1))
    else:
        for mu in range(p):
            a = np.int64(c[mu])
            S = M[mu] - a * xi
            poly = coef[n - 1]
            for j in range(n - 2, -1, -1):
                poly = poly * S + coef[j]
            total += a * poly
    return total


@njit(cache=True, nogil=True)
def flip(cols, M, x, i):
    delta = np.int64(-2 * x[i])
    for mu in range(M.shape[0]):
        M[mu] += cols[i, mu] * delta
    x[i] = -x[i]


@njit(cache=True, nogil=True)
def async_sweep(cols, M, x, coef, s, perm):
    N = x.shape[0]
    for i in range(N):
        perm[i] = i
    shuffle_inplace(s, perm)
    flips = 0
    for t in range(N):
        i = perm[t]
        f = phi_num(cols, M, x, i, coef)
        if (f > 0 and x[i] < 0) or (f < 0 and x[i] > 0):
            flip(cols, M, x, i)
            flips += 1
    return flips


@njit(cache=True, nogil=True)
def sync_sweep(pats, cols, M, x, coef):
    N = x.shape[0]
    new = x.copy()
    flips = 0
    for i in range(N):
        f = phi_num(cols, M, x, i, coef)
        if f > 0 and x[i] < 0:
            new[i] = 1
            flips += 1
        elif f < 0 and x[i] > 0:
            new[i] = -1
            flips += 1
    if flips > 0:
        for i in range(N):
            x[i] = new[i]
        rebuild(pats, x, M)
    return flips


@njit(cache=True, nogil=True)
def all_phi(cols, M, x, coef):
    N = x.shape[0]
    out = np.empty(N, dtype=np.int64)
    for i in range(N):
        out[i] = phi_num(cols, M, x, i, coef)
    return out


@njit(cache=True, nogil=True)
def strong_attack(pats, cols, M, x, coef, target, k):
    """Flip the k correct neurons with the smallest Phi_i * xi_i (index tie-break)."""
    N = x.shape[0]
    n_correct = 0
    for i in range(N):
        if x[i] == pats[target, i]:
            n_correct += 1
    idx = np.empty(n_correct, dtype=np.int64)
    align = np.empty(n_correct, dtype=np.int64)
    c = 0
    for i in range(N):
        if x[i] == pats[target, i]:
            idx[c] = i
            align[c] = phi_num(cols, M, x, i, coef) * pats[target, i]
            c += 1
    order = np.argsort(align, kind="mergesort")
    budget = min(k, n_correct)
    chosen = np.empty(budget, dtype=np.int64)
    for t in range(budget):
        chosen[t] = idx[order[t]]
    for t in range(budget):
        flip(cols, M, x, chosen[t])
    return budget


@njit(cache=True, nogil=True)
def weak_attack(pats, cols, M, x, coef, target, k, s):
    """Random correct neurons with opposing field first, then other correct ones."""
    N = x.shape[0]
    n_cand = 0
    n_rest = 0
    kind = np.zeros(N, dtype=np.int8)
    for i in range(N):
        if x[i] == pats[target, i]:
            if phi_num(cols, M, x, i, coef) * pats[target, i] < 0:
                kind[i] = 1
                n_cand += 1
            else:
                kind[i] = 2
                n_rest += 1
    cand = np.empty(n_cand, dtype=np.int64)
    rest = np.empty(n_rest, dtype=np.int64)
    a = 0
    b = 0
    for i in range(N):
        if kind[i] == 1:
            cand[a] = i
            a += 1
        elif kind[i] == 2:
            rest[b] = i
            b += 1
    take = min(k, n_cand)
    partial_shuffle(s, cand, take)
    extra = min(k - take, n_rest)
    if extra > 0:
        partial_shuffle(s, rest, extra)
    for t in range(take):
        flip(cols, M, x, cand[t])
    for t in range(extra):
        flip(cols, M, x, rest[t])
    return take + extra


@njit(cache=True, nogil=True)
def sample_indices(s, population, k):
    idx = np.arange(population)
    partial_shuffle(s, idx, k)
    return idx[:k].copy()


@njit(cache=True, nogil=True)
def bootstrap_means(values, resamples, s):
    n = values.shape[0]
    out = np.empty(resamples, dtype=np.float64)
    for r in range(resamples):
        acc = 0.0
        for t in range(n):
            acc += values[bounded(s, n)]
        out[r] = acc / n
    return out
