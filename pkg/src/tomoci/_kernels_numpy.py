"""Vectorized numpy kernels for batched xi scoring and moment evaluation.

Shared semantics with _kernels_numba (results agree to rounding):

- F is an (R, P) stack of frequency rows sharing one block structure,
  given by starts/sizes over contiguous index ranges.
- GAUSSIAN moments: mu = tr(T Sigma), V = 2 tr((T Sigma)^2) with Sigma the
  block-diagonal multinomial covariance (diag(f_b) - f_b f_b^T) / N.
- PAPER moments: mu = sum_i T_ii f_i / N and V = sum over within-block
  pairs i != j of T_ij^2 f_i f_j / N^2.
"""

from __future__ import annotations

import numpy as np


def xi_batch(pinv: np.ndarray, F: np.ndarray, p: np.ndarray) -> np.ndarray:
    """||pinv (f_r - p)||^2 for every row f_r of F."""
    proj = (F - p[None, :]) @ pinv.T
    return np.einsum("rk,rk->r", proj, proj)


def moments_gaussian_batch(T, F, starts, sizes, N):
    """Exact mean and Gaussian quadratic-form variance of xi, per row.

    With D_b = diag(f_b) - f_b f_b^T and G = T_{b'b}:
      tr(T Sigma)   = (sum_i T_ii f_i - sum_b f_b^T T_bb f_b) / N
      tr((T S)^2)   = sum over ordered block pairs of
                      [sum_ji G_ji^2 f'_j f_i  - 2 sum_j f'_j (G f_b)_j^2
                       + (f'^T G f_b)^2] / N^2
    where the middle term uses that the two cross terms swap under pair
    transposition and the pair sum is over all ordered pairs.
    """
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    R, P = F.shape
    B = len(starts)
    diagT = np.ascontiguousarray(np.diag(T))
    T2 = T * T

    mu = np.empty(R)
    V = np.empty(R)
    # cap temporaries near 32 MB: W is (chunk, P, B) doubles
    chunk = max(1, int(4_000_000 // max(P * B, 1)))
    for r0 in range(0, R, chunk):
        Fc = F[r0 : r0 + chunk]
        C = Fc.shape[0]
        W = np.empty((C, P, B))
        for b in range(B):
            s, n = starts[b], sizes[b]
            W[:, :, b] = Fc[:, s : s + n] @ T[:, s : s + n].T
        fW = Fc[:, :, None] * W
        term2 = np.einsum("rjb,rjb->r", fW, W)
        # S[r, c, b] = sum_{j in block c} f_j W[j, b]
        S = np.add.reduceat(fW, starts, axis=1)
        term4 = np.einsum("rcb,rcb->r", S, S)
        term1 = np.einsum("rp,rp->r", Fc @ T2, Fc)
        trace_bb = np.einsum("rbb->r", S)
        mu[r0 : r0 + C] = (Fc @ diagT - trace_bb) / N
        V[r0 : r0 + C] = 2.0 * (term1 - 2.0 * term2 + term4) / (N * N)
    return mu, V


def moments_paper_batch(T, F, starts, sizes, N):
    """First-order moment formulas evaluated at the observed frequencies."""
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    R, P = F.shape
    diagT = np.ascontiguousarray(np.diag(T))
    mu = (F @ diagT) / N
    V = np.zeros(R)
    for b in range(len(starts)):
        s, n = starts[b], sizes[b]
        Fb = F[:, s : s + n]
        T2b = T[s : s + n, s : s + n] ** 2
        full = np.einsum("rp,rp->r", Fb @ T2b, Fb)
        diag = Fb**2 @ np.diag(T2b)
        V += full - diag
    return mu, V / (N * N)
