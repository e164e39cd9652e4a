"""Fixed-effect designs and the search for differencing vectors.

A differencing vector w_perp in {-1,0,1}^T with W w_perp = 0 is the
difference of two binary outcome paths sharing the sufficient statistic
W Y; every such vector yields an identifying outcome pair for the
static logit model.  This module builds the standard design matrices
(panel intercepts, polynomial trends, overlapping effects, two-way
panels, dyadic and triadic networks), enumerates differencing vectors
by exhaustive depth-first search with branch-and-bound pruning, and
provides the rank diagnostic that turns a set of vectors into an
identification check for the covariate coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AR, STATIC, ModelSpec, dyads

PANEL_FE = "panel_fe"
POLY_TREND = "poly_trend"
OVERLAPPING = "overlapping"
TWO_WAY = "two_way"
DYADIC = "dyadic"
TRIADIC = "triadic"


def panel_fe_matrix(T):
    return np.ones((1, T))


def poly_trend_matrix(p, T):
    """Rows (t^0, t^1, ..., t^p) evaluated at t = 1..T."""
    t = np.arange(1, T + 1, dtype=float)
    return np.vstack([t**j for j in range(p + 1)])


def overlapping_matrix():
    return np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])


def two_way_matrix(n, tau):
    """Unit and time indicators; observations unit-major, t = (i, tau)."""
    T = n * tau
    W = np.zeros((n + tau, T))
    for i in range(n):
        for s in range(tau):
            t = i * tau + s
            W[i, t] = 1.0
            W[n + s, t] = 1.0
    return W

def dyadic_matrix(n):
    """Unit-selection columns w_ij over lexicographic dyads i < j."""
    ds = dyads(n)
    W = np.zeros((n, len(ds)))
    for t, (i, j) in enumerate(ds):
        W[i, t] = 1.0
        W[j, t] = 1.0
    return W


def triadic_matrix(n1, n2, n3):
    """Pairwise-effect rows A_ij, B_jk, C_ik over lexicographic triads."""
    T = n1 * n2 * n3
    W = np.zeros((n1 * n2 + n2 * n3 + n1 * n3, T))
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                t = (i * n2 + j) * n3 + k
                W[i * n2 + j, t] = 1.0
                W[n1 * n2 + j * n3 + k, t] = 1.0
                W[n1 * n2 + n2 * n3 + i * n3 + k, t] = 1.0
    return W


def build_design(family, d_x=1, **params):
    """Construct the ModelSpec of one of the catalogued static designs.

    family is one of ``panel_fe`` (T), ``poly_trend`` (p, T),
    ``overlapping`` (no parameters), ``two_way`` (n, tau), ``dyadic``
    (n), ``triadic`` (n1, n2, n3); keyword arguments carry the family
    parameters.
    """
    if family == PANEL_FE:
        W = panel_fe_matrix(params["T"])
    elif family == POLY_TREND:
        W = poly_trend_matrix(params["p"], params["T"])
    elif family == OVERLAPPING:
        W = overlapping_matrix()
    elif family == TWO_WAY:
        if params["n"] < 2 or params["tau"] < 2:
            raise ValueError("two_way design needs n >= 2 and tau >= 2")
        W = two_way_matrix(params["n"], params["tau"])
    elif family == DYADIC:
        if params["n"] < 2:
            raise ValueError("dyadic design needs n >= 2")
        W = dyadic_matrix(params["n"])
    elif family == TRIADIC:
        W = triadic_matrix(params["n1"], params["n2"], params["n3"])
    else:
        raise ValueError(f"unknown design family {family!r}")
    if W.shape[1] == 0:
        raise ValueError("design has no observations")
    return ModelSpec(STATIC, W.shape[1], W, d_x=d_x)


def panel_ar(p, T, d_x=0):
    """AR(p) panel model with a scalar fixed effect (w_t = 1)."""
    return ModelSpec(AR, T, np.ones((1, T)), d_x=d_x, p=p)


def quarterly_ar(p, T, d_x=0):
    """AR(p) with quarter-specific effects; period t falls in quarter
    ((t-1) mod 4) + 1."""
    W = np.zeros((4, T))
    for t in range(1, T + 1):
        W[(t - 1) % 4, t - 1] = 1.0
    return ModelSpec(AR, T, W, d_x=d_x, p=p)


def trend_ar(T, d_x=0):
    """AR(1) with heterogeneous linear trend, w_t = (1, t)'."""
    return ModelSpec(AR, T, poly_trend_matrix(1, T), d_x=d_x, p=1)


# -- differencing-vector search -------------------------------------------


def _as_exact(W):
    W = np.asarray(W, dtype=float)
    Wi = np.rint(W)
    if np.max(np.abs(W - Wi)) < 1e-9:
        return Wi.astype(np.int64), True
    return W, False


def _canonical_sign(v):
    for x in v:
        if x:
            return v if x > 0 else -v
    return v


def find_wperp(W, max_solutions=None, require_nonzero=True):
    """All w in {-1,0,1}^T with W w = 0, up to global sign.

    Exhaustive depth-first search over the 3^T assignments; a branch is
    cut as soon as some row's partial sum exceeds what the remaining
    positions can still cancel.  Positions are visited in decreasing
    order of their largest design entry, which makes the bound bite
    early on polynomial-trend rows.

    Returns canonical vectors (first nonzero entry +1) sorted
    lexicographically with -1 < 0 < 1.  ``max_solutions`` caps the
    search; the returned subset then depends on internal search order.
    """
    W = np.atleast_2d(W)
    d, T = W.shape
    if T > 40:
        raise ValueError("exhaustive search limited to T <= 40")
    Wx, exact = _as_exact(W)
    order = np.argsort(-np.abs(Wx).max(axis=0), kind="stable")
    Wo = np.ascontiguousarray(Wx[:, order])
    suffix = np.zeros((T + 1, d), dtype=Wo.dtype)
    for i in range(T - 1, -1, -1):
        suffix[i] = suffix[i + 1] + np.abs(Wo[:, i])
    tol = 0 if exact else 1e-9 * (1 + np.abs(Wx).sum())
    cols = [Wo[:, i] for i in range(T)]

    sols = []
    v = np.zeros(T, dtype=np.int64)
    s = np.zeros(d, dtype=Wo.dtype)

    def rec(i, any_nonzero):
        if i == T:
            if (any_nonzero or not require_nonzero) and np.all(np.abs(s) <= tol):
                out = np.zeros(T, dtype=np.int64)
                out[order] = v
                sols.append(_canonical_sign(out))
            return max_solutions is not None and len(sols) >= max_solutions
        if np.any(np.abs(s) > suffix[i] + tol):
            return False
        w = cols[i]
        # the first nonzero entry (in search order) is pinned to +1;
        # global sign is fixed once, halving the tree
        for val in (-1, 0, 1) if any_nonzero else (0, 1):
            v[i] = val
            if val:
                s[:] += val * w
            if rec(i + 1, any_nonzero or val != 0):
                return True
            if val:
                s[:] -= val * w
        v[i] = 0
        return False

    rec(0, False)
    uniq = {tuple(v_.tolist()) for v_ in sols}
    if not require_nonzero:
        uniq.add(tuple([0] * T))
    return [np.array(u, dtype=np.int64) for u in sorted(uniq)]


def minimal_T_polytrend(p, allow_long_run=False, T_max=40):
    """Smallest T admitting a differencing vector for the degree-p trend.

    Returns (T, w) with w the lexicographically least canonical
    solution.  Minimality is certified by exhausting the search tree at
    every shorter horizon.  p = 6 scans up to T = 31 and is gated
    behind ``allow_long_run``.
    """
    if p > 6:
        raise ValueError("polynomial trends supported up to p = 6")
    if p == 6 and not allow_long_run:
        raise ValueError("p = 6 is a long run; pass allow_long_run=True")
    for T in range(p + 2, T_max + 1):
        sols = find_wperp(poly_trend_matrix(p, T))
        if sols:
            return T, sols[0]
    raise RuntimeError(f"no solution up to T = {T_max}")


def trend_symmetry(w):
    """Classify a weight vector as 'symmetric', 'antisymmetric' or None."""
    w = np.asarray(w)
    r = w[::-1]
    if np.array_equal(w, r):
        return "symmetric"
    if np.array_equal(w, -r):
        return "antisymmetric"
    return None


def pair_from_wperp(wperp, fill=None):
    """Outcome pair (y1, y2) with y1 - y2 = wperp.

    Positions where wperp is zero receive the shared ``fill`` values
    (zeros by default).
    """
    wperp = np.asarray(wperp, dtype=np.int64)
    if not np.all(np.isin(wperp, (-1, 0, 1))):
        raise ValueError("wperp entries must lie in {-1,0,1}")
    zeros = np.flatnonzero(wperp == 0)
    if fill is None:
        fill = np.zeros(len(zeros), dtype=np.int8)
    fill = np.asarray(fill, dtype=np.int8)
    if fill.shape != (len(zeros),):
        raise ValueError(f"fill must cover the {len(zeros)} zero positions")
    y1 = (wperp == 1).astype(np.int8)
    y2 = (wperp == -1).astype(np.int8)
    y1[zeros] = fill
    y2[zeros] = fill
    return y1, y2


@dataclass
class RankDiagnostic:
    min_eigenvalue: float
    max_eigenvalue: float
    passed: bool


def rank_condition(X_samples, Wperp, tol=1e-8):
    """Check that X W_perp varies enough to identify every beta direction.

    Builds the sample second-moment matrix sum_c E[X w_c w_c' X'] over
    the columns of Wperp and passes when its smallest eigenvalue
    exceeds ``tol`` times the largest.
    """
    if len(X_samples) == 0:
        raise ValueError("need at least one covariate sample")
    Wperp = np.asarray(Wperp, dtype=float)
    if Wperp.ndim == 1:
        Wperp = Wperp[:, None]
    d_x = np.atleast_2d(X_samples[0]).shape[0]
    M = np.zeros((d_x, d_x))
    for X in X_samples:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        V = X @ Wperp  # d_x x d_perp
        M += V @ V.T
    M /= len(X_samples)
    eig = np.linalg.eigvalsh(M)
    lo, hi = float(eig[0]), float(eig[-1])
    return RankDiagnostic(lo, hi, bool(hi > 0 and lo > tol * hi))
