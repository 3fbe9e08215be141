"""Numba-compiled kernels; same contracts as _kernels_numpy.

Explicit loops over the block structure avoid the (R, P, B) temporaries of
the vectorized lane and keep each replication's working set in cache. The
module imports only when numba is installed; selection happens in _backend.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def xi_batch(pinv, F, p):
    R, P = F.shape
    K = pinv.shape[0]
    out = np.empty(R)
    for r in range(R):
        acc = 0.0
        for k in range(K):
            s = 0.0
            for i in range(P):
                s += pinv[k, i] * (F[r, i] - p[i])
            acc += s * s
        out[r] = acc
    return out


@njit(cache=True)
def moments_gaussian_batch(T, F, starts, sizes, N):
    R = F.shape[0]
    P = F.shape[1]
    B = starts.shape[0]
    mu = np.empty(R)
    V = np.empty(R)
    w = np.empty(P)
    for r in range(R):
        diag_acc = 0.0
        for i in range(P):
            diag_acc += T[i, i] * F[r, i]
        mu_sub = 0.0
        v_acc = 0.0
        for b in range(B):
            s0, n0 = starts[b], sizes[b]
            for b2 in range(B):
                s1, n1 = starts[b2], sizes[b2]
                # w = T[rows of b2, cols of b] @ f_b, plus the squared-entry sum
                term1 = 0.0
                for j in range(n1):
                    acc = 0.0
                    fj = F[r, s1 + j]
                    for i in range(n0):
                        t = T[s1 + j, s0 + i]
                        fi = F[r, s0 + i]
                        acc += t * fi
                        term1 += t * t * fj * fi
                    w[j] = acc
                term2 = 0.0
                dot = 0.0
                for j in range(n1):
                    fw = F[r, s1 + j] * w[j]
                    term2 += fw * w[j]
                    dot += fw
                v_acc += term1 - 2.0 * term2 + dot * dot
                if b == b2:
                    mu_sub += dot
        mu[r] = (diag_acc - mu_sub) / N
        V[r] = 2.0 * v_acc / (N * N)
    return mu, V


@njit(cache=True)
def moments_paper_batch(T, F, starts, sizes, N):
    R = F.shape[0]
    B = starts.shape[0]
    P = F.shape[1]
    mu = np.empty(R)
    V = np.empty(R)
    for r in range(R):
        macc = 0.0
        for i in range(P):
            macc += T[i, i] * F[r, i]
        vacc = 0.0
        for b in range(B):
            s0, n0 = starts[b], sizes[b]
            for i in range(n0):
                fi = F[r, s0 + i]
                for j in range(n0):
                    if i != j:
                        t = T[s0 + i, s0 + j]
                        vacc += t * t * fi * F[r, s0 + j]
        mu[r] = macc / N
        V[r] = vacc / (N * N)
    return mu, V
