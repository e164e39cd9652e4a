"""Brute-force oracles, written independently of the library internals.

These recompute probabilities, indices and null spaces from the model
definition with naive loops (or arbitrary precision where float64
cannot certify a rank), and exist so the tests never compare the
library against itself.
"""

import itertools

import mpmath as mp
import numpy as np
from scipy.special import expit


def dyad_list(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def naive_index(spec, t, full, X, theta):
    """pi_t computed directly from the family definition; ``full`` is
    (y0..., y_1..y_{t-1}, ...) of length >= y0_len + t - 1."""
    val = 0.0
    if spec.family == "ar":
        gammas = theta[: spec.p]
        for r in range(1, spec.p + 1):
            val += gammas[r - 1] * full[spec.p + t - 1 - r]
        beta = theta[spec.p:]
    elif spec.family == "network":
        gamma, delta = theta[0], theta[1]
        ds = dyad_list(spec.n)
        D = len(ds)
        d = (t - 1) % D
        per = (t - 1) // D + 1
        prev = full[(per - 1) * D: per * D]
        i, j = ds[d]
        shared = 0
        for k in range(spec.n):
            if k in (i, j):
                continue
            a = ds.index((min(i, k), max(i, k)))
            b = ds.index((min(j, k), max(j, k)))
            shared += prev[a] * prev[b]
        val = gamma * prev[d] + delta * shared
        beta = theta[2:]
    else:
        beta = theta
    if spec.d_x:
        val += float(np.dot(beta, X[:, t - 1]))
    return val


def naive_path_prob(spec, y, y0, X, theta, A):
    """Per-period product of logistic terms, no log-space tricks."""
    full = list(y0 if y0 is not None else [])
    p = 1.0
    for t in range(1, spec.T + 1):
        eta = naive_index(spec, t, full, X, theta) + float(
            np.dot(spec.W[:, t - 1], A)
        )
        pr1 = expit(eta)
        p *= pr1 if y[t - 1] == 1 else 1.0 - pr1
        full.append(int(y[t - 1]))
    return p


def enumerate_paths(T):
    return [np.array(bits, dtype=np.int8)
            for bits in itertools.product((0, 1), repeat=T)]


def naive_distribution(spec, y0, X, theta, A):
    """Probability of every path, as a dict keyed by the bit tuple."""
    return {
        tuple(int(v) for v in y): naive_path_prob(spec, y, y0, X, theta, A)
        for y in enumerate_paths(spec.T)
    }


def naive_expectation(fn, spec, y0, X, theta, A):
    """E[fn(Y)] by exhaustive enumeration."""
    return sum(
        fn(np.array(y)) * p
        for y, p in naive_distribution(spec, y0, X, theta, A).items()
    )


def mp_probability_matrix(spec, y0, X, theta, A_rows, dps=40):
    """Path-probability rows [Pr(y|Y0,X,A_j)]_{j,y} in high precision.

    AR families only.  Inputs are float64 (exact binary rationals), so
    every entry is accurate to the working precision; this is what lets
    the sampled-probability null space certify ranks that float64
    cannot.
    """
    from felogit.model import all_paths

    with mp.workdps(dps):
        paths = all_paths(spec.T)
        gammas = theta[: spec.p]
        beta = theta[spec.p:]
        rows = []
        for A in A_rows:
            wA = [mp.fsum(mp.mpf(float(spec.W[k, t])) * mp.mpf(float(A[k]))
                          for k in range(spec.d_w)) for t in range(spec.T)]
            row = []
            for y in paths:
                full = [int(v) for v in y0] + [int(v) for v in y]
                p = mp.mpf(1)
                for t in range(1, spec.T + 1):
                    pi = mp.fsum(
                        mp.mpf(float(gammas[r - 1])) * full[spec.p + t - 1 - r]
                        for r in range(1, spec.p + 1)
                    )
                    if spec.d_x:
                        pi += mp.fsum(
                            mp.mpf(float(beta[d])) * mp.mpf(float(X[d, t - 1]))
                            for d in range(spec.d_x)
                        )
                    eta = pi + wA[t - 1]
                    pr1 = 1 / (1 + mp.e ** (-eta))
                    p *= pr1 if y[t - 1] == 1 else 1 - pr1
                row.append(p)
            rows.append(row)
        return mp.matrix(rows)


def mp_null_basis(P, rtol="1e-25", dps=40):
    """Null-space basis (rows) and rank of an mp matrix via mp SVD."""
    with mp.workdps(dps):
        _, S, V = mp.svd_r(P)
        smax = max(S[i] for i in range(len(S)))
        rank = sum(1 for i in range(len(S)) if S[i] > mp.mpf(rtol) * smax)
        n = P.cols
        basis = np.array(
            [[float(V[i, j]) for j in range(n)] for i in range(rank, n)]
        )
        return basis, rank


def subspace_residual(V1, V2):
    """max elementwise residual projecting each basis onto the other."""
    r12 = np.max(np.abs(V1 - (V1 @ V2.T) @ V2)) if V1.size else 0.0
    r21 = np.max(np.abs(V2 - (V2 @ V1.T) @ V1)) if V2.size else 0.0
    return max(r12, r21)
