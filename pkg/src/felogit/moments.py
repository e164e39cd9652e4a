"""Fixed-effect-free moment functions for dynamic logit models.

Writing a_t = exp(w_t'A) and b_{t,q} = exp(pi_{t,q}) for the Q_t
distinct index values at period t, every path probability factors as

    Pr(Y=y | Y0, X, A) = kappa(a) * prod_t phi_t(y, a_t),

where phi_t is a polynomial in a_t of degree at most Q_t.  Grouping the
expanded product by the exponent vectors d = sum_t k_t w_t turns the
probability into kappa(a) * sum_{d in D} chat_d(y) exp(d'A), so any
vector orthogonal to every chat_d coefficient profile is a moment
function with conditional expectation zero at every fixed effect.  The
number of independent such functions is at least 2^T - |D|.

This module counts the Q_t, builds the exponent set D and the bound,
expands the phi polynomials, extracts the null space numerically, and
provides the closed-form moment libraries for the AR(2) three-period
model, the quarterly-effects six-period model, and the dyadic network
transition model, together with vectorized evaluators for GMM.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .model import (
    AR,
    NETWORK,
    STATIC,
    all_paths,
    path_distribution,
    path_index,
    shared_friends,
)

_VALUE_TOL = 1e-12


@dataclass
class PeriodTable:
    """Distinct index values at one period and the lag-pattern lookup."""

    values: np.ndarray            # sorted distinct pi values, length Q_t
    q_of: dict                    # exact lag-pattern key -> index into values

    @property
    def Q(self):
        return len(self.values)


def _collapse(vals):
    vals = np.sort(np.asarray(vals, dtype=float))
    kept = [vals[0]]
    for v in vals[1:]:
        if v - kept[-1] > _VALUE_TOL:
            kept.append(v)
    return np.array(kept)


def _nearest(values, v):
    return int(np.argmin(np.abs(values - v)))


def index_value_tables(spec, y0, X, theta):
    """Per-period tables of achievable index values.

    Lag patterns are enumerated with exact integer keys; values that
    coincide numerically (theta coincidences such as gamma1 = gamma2)
    are collapsed at absolute tolerance 1e-12, matching the convention
    that Q_t counts distinct values, not distinct histories.
    """
    dyn, beta = spec.split_theta(theta)
    y0 = np.zeros(0, dtype=np.int64) if y0 is None else np.asarray(y0, dtype=np.int64)
    xb = np.zeros(spec.T) if spec.d_x == 0 else beta @ np.asarray(X, dtype=float)
    tables = []
    for t in range(1, spec.T + 1):
        if spec.family == STATIC:
            tables.append(PeriodTable(np.array([xb[t - 1]]), {(): 0}))
            continue
        if spec.family == AR:
            free = min(spec.p, t - 1)
            # lags r > t-1 reach into the initial block: y_{t-r} = y0[p-1+t-r]
            pinned = [int(y0[spec.p - 1 + t - r]) for r in range(free + 1, spec.p + 1)]
            pats, vals = [], []
            for bits in product((0, 1), repeat=free):
                lagpat = list(bits) + pinned  # (y_{t-1}, ..., y_{t-p})
                pats.append(tuple(lagpat))
                vals.append(float(np.dot(dyn, lagpat)) + xb[t - 1])
            values = _collapse(vals)
            q_of = {pat: _nearest(values, v) for pat, v in zip(pats, vals)}
            tables.append(PeriodTable(values, q_of))
            continue
        # network: the index reads (lagged link, shared friends)
        gamma, delta = dyn
        d, per = spec.dyad_of_obs(t)
        if per == 1:
            link = int(y0[d])
            R = int(shared_friends(spec, y0)[0, d])
            keys, vals = [(link, R)], [gamma * link + delta * R + xb[t - 1]]
        else:
            keys, vals = [], []
            for link in (0, 1):
                for R in range(spec.n - 1):
                    keys.append((link, R))
                    vals.append(gamma * link + delta * R + xb[t - 1])
        values = _collapse(vals)
        q_of = {k: _nearest(values, v) for k, v in zip(keys, vals)}
        tables.append(PeriodTable(values, q_of))
    return tables


def qt_values(spec, y0, X, theta):
    """The counts Q_t of distinct index values across outcome histories."""
    return tuple(tab.Q for tab in index_value_tables(spec, y0, X, theta))


class DSetTooLarge(ValueError):
    pass


@dataclass
class DSet:
    """Exponent vectors d = sum_t k_t w_t with 0 <= k_t <= Q_t."""

    caps: tuple
    cardinality: int
    elements: frozenset | None = None  # None when only counted structurally

    def as_array(self):
        if self.elements is None:
            raise ValueError("element list was not materialized")
        return np.array(sorted(self.elements))


def _exact_cols(W):
    Wr = np.rint(W)
    if np.max(np.abs(W - Wr)) < 1e-9:
        return [tuple(int(v) for v in Wr[:, t]) for t in range(W.shape[1])]
    return [tuple(round(float(v), 9) for v in W[:, t]) for t in range(W.shape[1])]


def build_dset(spec, Q, element_limit=200_000):
    """Construct the exponent set D for caps Q = (Q_1..Q_T).

    Constant-column and indicator designs use exact counting formulas;
    other designs are enumerated by a running set-of-sums.  Sets whose
    enumeration cannot fit desk-scale memory are refused with a size
    estimate, and very large structured sets report the cardinality
    without materializing the elements.
    """
    Q = tuple(int(q) for q in Q)
    if len(Q) != spec.T:
        raise ValueError("need one cap per period")
    cols = _exact_cols(spec.W)
    d_w = spec.d_w

    if len(set(cols)) == 1:
        smax = sum(Q)
        w = np.array(cols[0])
        elems = frozenset(tuple((k * w).tolist()) for k in range(smax + 1))
        return DSet(Q, smax + 1, elems)

    if spec.binary_design:
        rows = [int(np.flatnonzero(np.rint(spec.W[:, t]))[0]) for t in range(spec.T)]
        rowcap = [0] * d_w
        for t, r in enumerate(rows):
            rowcap[r] += Q[t]
        card = 1
        for c in rowcap:
            card *= c + 1
        if card > element_limit:
            return DSet(Q, card, None)
        elems = frozenset(
            tuple(combo) for combo in product(*[range(c + 1) for c in rowcap])
        )
        return DSet(Q, card, elems)

    size = 1.0
    for q in Q:
        size *= q + 1
    if size > 1e8:
        raise DSetTooLarge(
            f"exact enumeration would scan ~{size:.3g} combinations"
        )
    current = {(0,) * d_w}
    for t in range(spec.T):
        w = cols[t]
        nxt = set()
        for d in current:
            for k in range(Q[t] + 1):
                nxt.add(tuple(d[i] + k * w[i] for i in range(d_w)))
        current = nxt
        if len(current) > 5_000_000:
            raise DSetTooLarge(
                f"running element set exceeded 5e6 entries at period {t + 1}"
            )
    return DSet(Q, len(current), frozenset(current))


def moment_bound(spec, y0, X, theta):
    """Lower bound 2^T - |D| on the number of independent moment functions.

    Nonpositive values signal 'no guarantee', not 'no moments exist'.
    """
    Q = qt_values(spec, y0, X, theta)
    return 2**spec.T - build_dset(spec, Q).cardinality


# -- phi polynomial expansion ----------------------------------------------


@dataclass
class PhiExpansion:
    """Per-period polynomial coefficients and their exponent grouping."""

    per_period: list                     # arrays c_{t,k}, k = 0..Q_t
    grouped: dict = field(repr=False)    # d tuple -> chat_d(y)


def _poly_cache(tables):
    # polynomial coefficients of phi_t for each (t, q(history), y_t)
    cache = []
    for tab in tables:
        b = np.exp(tab.values)
        per = {}
        for q in range(tab.Q):
            for yt in (0, 1):
                poly = np.array([1.0]) if yt == 0 else np.array([0.0, b[q]])
                for qq in range(tab.Q):
                    if qq != q:
                        poly = np.convolve(poly, np.array([1.0, b[qq]]))
                per[(q, yt)] = poly
        cache.append(per)
    return cache


def _q_sequence(spec, tables, y, y0):
    """q(y^{t-1}) indices along one path."""
    full = np.concatenate([y0, y]).astype(np.int64)
    L0 = spec.y0_len
    out = []
    for t in range(1, spec.T + 1):
        if spec.family == STATIC:
            out.append(0)
        elif spec.family == AR:
            pat = tuple(int(full[L0 + t - 1 - r]) for r in range(1, spec.p + 1))
            out.append(tables[t - 1].q_of[pat])
        else:
            d, per = spec.dyad_of_obs(t)
            D = spec.n_dyads
            prev = full[(per - 1) * D: per * D]
            key = (int(prev[d]), int(shared_friends(spec, prev)[0, d]))
            out.append(tables[t - 1].q_of[key])
    return out


def _group(spec, polys, qs, y, cols):
    acc = {(0,) * spec.d_w: 1.0}
    for t in range(spec.T):
        poly = polys[t][(qs[t], int(y[t]))]
        w = cols[t]
        nxt = {}
        for d, c in acc.items():
            for k, ck in enumerate(poly):
                if ck == 0.0:
                    continue
                nd = tuple(d[i] + k * w[i] for i in range(spec.d_w))
                nxt[nd] = nxt.get(nd, 0.0) + c * ck
        acc = nxt
    return acc


def phi_expand(spec, y, y0, X, theta):
    """Expand the path probability of y into exponent-grouped coefficients.

    Reconstruction: Pr(Y=y|Y0,X,A) = phi_kappa(tables, A) *
    sum_d grouped[d] * exp(d'A).
    """
    tables = index_value_tables(spec, y0, X, theta)
    y = np.asarray(y, dtype=np.int64)
    y0a = np.zeros(0, dtype=np.int64) if y0 is None else np.asarray(y0, dtype=np.int64)
    polys = _poly_cache(tables)
    qs = _q_sequence(spec, tables, y, y0a)
    per_period = [polys[t][(qs[t], int(y[t]))] for t in range(spec.T)]
    grouped = _group(spec, polys, qs, y, _exact_cols(spec.W))
    return PhiExpansion(per_period=per_period, grouped=grouped)


def phi_kappa(spec, tables, A):
    """The common factor kappa(a) = prod_t prod_q (1 + b_{t,q} a_t)^{-1}."""
    A = np.asarray(A, dtype=float)
    a = np.exp(spec.W.T @ A)
    out = 0.0
    for t, tab in enumerate(tables):
        out -= np.sum(np.log1p(np.exp(tab.values) * a[t]))
    return float(np.exp(out))


def coefficient_matrix(spec, y0, X, theta):
    """The |D| x 2^T matrix [chat_d(y)] over all outcome paths.

    Returns (C, ds, tables) where row i of C holds the coefficients of
    exp(ds[i]'A) and tables are the per-period index-value tables.
    """
    tables = index_value_tables(spec, y0, X, theta)
    y0a = np.zeros(0, dtype=np.int64) if y0 is None else np.asarray(y0, dtype=np.int64)
    polys = _poly_cache(tables)
    cols = _exact_cols(spec.W)
    paths = all_paths(spec.T)
    d_index = {}
    entries = []
    for j, y in enumerate(paths):
        qs = _q_sequence(spec, tables, y, y0a)
        for d, c in _group(spec, polys, qs, y, cols).items():
            i = d_index.setdefault(d, len(d_index))
            entries.append((i, j, c))
    C = np.zeros((len(d_index), paths.shape[0]))
    for i, j, c in entries:
        C[i, j] = c
    ds = [None] * len(d_index)
    for d, i in d_index.items():
        ds[i] = d
    return C, ds, tables


@dataclass
class MomentFunction:
    """A finite map from outcome paths to coefficients.

    ``values`` is aligned with the ``all_paths`` enumeration; the
    defining property is sum_y values[y] * Pr(Y=y|Y0,X,A) = 0 for every
    fixed effect A, at the (theta, X, Y0) the table was built for.
    """

    T: int
    values: np.ndarray
    provenance: str

    def __call__(self, y):
        return float(self.values[path_index(np.asarray(y))])

    @classmethod
    def from_table(cls, T, table, provenance):
        values = np.zeros(2**T)
        for y, v in table.items():
            values[path_index(np.asarray(y))] = v
        return cls(T=T, values=values, provenance=provenance)


@dataclass
class NullspaceReport:
    dimension: int
    moments: list
    rank: int
    singular_values: np.ndarray
    weak_separation: bool


def nullspace_moments(spec, y0, X, theta, rel_tol=1e-9):
    """Orthonormal basis of the fixed-effect-free moment space.

    The basis spans the null space of the coefficient matrix
    [chat_d(y)], determined by singular value decomposition with a
    relative threshold.  Rows are max-normalized first (row scaling
    leaves the null space unchanged).  ``weak_separation`` flags a
    retained/discarded singular-value gap below 10x.
    """
    if 2**spec.T > 16384:
        raise ValueError("null-space extraction limited to 2^T <= 16384")
    C, ds, _ = coefficient_matrix(spec, y0, X, theta)
    scale = np.abs(C).max(axis=1, keepdims=True)
    Cn = C / np.where(scale == 0, 1.0, scale)
    _, s, Vt = np.linalg.svd(Cn, full_matrices=True)
    rank = int(np.sum(s > rel_tol * s[0])) if s.size else 0
    weak = bool(rank > 0 and rank < s.size and s[rank - 1] / max(s[rank], 1e-300) < 10.0)
    basis = Vt[rank:]
    moments = [
        MomentFunction(spec.T, basis[i].copy(), "nullspace")
        for i in range(basis.shape[0])
    ]
    return NullspaceReport(
        dimension=basis.shape[0],
        moments=moments,
        rank=rank,
        singular_values=s,
        weak_separation=weak,
    )


def probability_matrix(spec, y0, X, theta, A_rows):
    """Rows Pr(y | Y0, X, A_j) over all paths, one per fixed-effect draw."""
    return np.vstack(
        [path_distribution(spec, y0, X, theta, A) for A in np.atleast_2d(A_rows)]
    )


def nullspace_from_probabilities(spec, y0, X, theta, A_rows, rel_tol=1e-9):
    """Null-space basis of the sampled-probability matrix.

    An independent construction of the same space as
    ``nullspace_moments``: each probability row is a positive mixture
    of the exp(d'A) profiles, so the two null spaces coincide for
    well-spread draws.
    """
    P = probability_matrix(spec, y0, X, theta, A_rows)
    scale = np.abs(P).max(axis=1, keepdims=True)
    Pn = P / np.where(scale == 0, 1.0, scale)
    _, s, Vt = np.linalg.svd(Pn, full_matrices=True)
    rank = int(np.sum(s > rel_tol * s[0])) if s.size else 0
    return Vt[rank:]


def verify_moment(m, spec, y0, X, theta, A_grid):
    """Exact max_A |sum_y m(y) Pr(y|Y0,X,A)| over a fixed-effect grid."""
    vec = m.values if isinstance(m, MomentFunction) else np.asarray(m, dtype=float)
    A_grid = np.atleast_2d(np.asarray(A_grid, dtype=float))
    worst = 0.0
    for A in A_grid:
        p = path_distribution(spec, y0, X, theta, A)
        worst = max(worst, abs(float(vec @ p)))
    return worst


# -- closed-form moment libraries -------------------------------------------


def _ar2_gammas(theta):
    theta = np.asarray(theta, dtype=float)
    return float(theta[0]), float(theta[1])


def ar2_t3_table(y0, theta):
    """Closed-form AR(2), T=3 moment table for initial block (y_{-1}, y_0).

    The two printed cases are (0,0) and (0,1); the remaining initial
    conditions follow from the outcome-flip symmetry Y -> 1-Y,
    A -> -A - gamma1 - gamma2, which maps the model onto itself.
    """
    g1, g2 = _ar2_gammas(theta)
    y0 = tuple(int(v) for v in y0)
    if y0 == (0, 0):
        return {
            (0, 1, 1): np.exp(-g1),
            (0, 1, 0): 1.0,
            (1, 0, 0): -1.0,
            (1, 0, 1): -1.0,
        }
    if y0 == (0, 1):
        return {
            (1, 0, 0): np.exp(g2 - g1),
            (1, 0, 1): np.exp(g2),
            (0, 1, 0): -1.0,
            (0, 1, 1): -1.0,
        }
    flipped = ar2_t3_table(tuple(1 - v for v in y0), theta)
    return {tuple(1 - v for v in y): c for y, c in flipped.items()}


def closed_form_ar2_T3(y0, theta, allow_symmetry=True):
    y0 = tuple(int(v) for v in y0)
    if y0 not in ((0, 0), (0, 1)) and not allow_symmetry:
        raise ValueError("printed cases cover y0 in {(0,0),(0,1)} only")
    return MomentFunction.from_table(
        3, ar2_t3_table(y0, theta), f"closed_form(ar2_t3,y0={y0})"
    )


def _quarterly_xdiff(X, t, s, beta):
    if X is None or beta.size == 0:
        return 0.0
    X = np.asarray(X, dtype=float)
    if X.ndim == 3:  # per-unit covariates (n, d_x, T)
        return (X[:, :, t - 1] - X[:, :, s - 1]) @ beta
    return (X[:, t - 1] - X[:, s - 1]) @ beta


def quarterly_m1_value(Y, y0, X, theta, flip=False):
    """Vectorized first quarterly moment; ``flip`` applies the symmetry
    transformation that yields the second one.

    X may be a single d_x x 6 block shared across rows of Y, or an
    (n, d_x, 6) array of per-unit covariates.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    gamma = float(np.asarray(theta, dtype=float)[0])
    beta = np.asarray(theta, dtype=float)[1:]
    if flip:
        Y = 1.0 - Y
        y0 = 1.0 - y0
    sgn = -1.0 if flip else 1.0
    y1, y2, y4, y5, y6 = (Y[:, k] for k in (0, 1, 3, 4, 5))
    x26 = sgn * _quarterly_xdiff(X, 2, 6, beta)
    x62 = -x26
    x51 = sgn * _quarterly_xdiff(X, 5, 1, beta)
    phi_a = (1 - y2) * (1 - y5) * np.exp(y6 * (gamma * y1 + x26))
    phi_b = y2 * (1 - y5) * np.exp((1 - y6) * (-gamma * y1 + x62))
    w = 1.0 - np.exp(-gamma * y0 + gamma * y4 + x51)
    return (phi_a + phi_b) * (1.0 - w * y1) - (1.0 - y1)


def closed_form_quarterly_T6(theta, y0, X):
    """The pair (m1, m2) of quarterly-effects moment functions at T=6."""
    paths = all_paths(6)
    y0v = np.full(paths.shape[0], int(y0))
    m1 = quarterly_m1_value(paths, y0v, X, theta)
    m2 = quarterly_m1_value(paths, y0v, X, theta, flip=True)
    return (
        MomentFunction(6, m1, "closed_form(quarterly_t6,m1)"),
        MomentFunction(6, m2, "closed_form(quarterly_t6,m2)"),
    )


def network_moment_value(spec, y_ref, Y, y0, X, theta):
    """Vectorized transition moment m_y for a reference network y_ref."""
    if spec.family != NETWORK or spec.tau != 3:
        raise ValueError("network transition moments require tau = 3")
    D = spec.n_dyads
    Y = np.atleast_2d(np.asarray(Y, dtype=np.int64))
    y_ref = np.asarray(y_ref, dtype=np.int64)
    y0 = np.asarray(y0, dtype=np.int64)
    (gamma, delta), beta = spec.split_theta(theta)
    r_ref = shared_friends(spec, y_ref)[0]
    R0 = shared_friends(spec, y0)[0]
    Y1, Y2, Y3 = Y[:, :D], Y[:, D: 2 * D], Y[:, 2 * D:]
    R1 = shared_friends(spec, Y1)
    if spec.d_x:
        X = np.asarray(X, dtype=float)
        x32 = beta @ (X[:, 2 * D: 3 * D] - X[:, D: 2 * D])
        x31 = beta @ (X[:, 2 * D: 3 * D] - X[:, :D])
    else:
        x32 = x31 = np.zeros(D)
    e1 = np.sum(
        (Y3 - y_ref) * (gamma * (Y1 - y_ref) + delta * (R1 - r_ref) - x32),
        axis=1,
    )
    e2 = -np.sum(
        (Y1 - y_ref) * (gamma * (y0 - y_ref) + delta * (R0 - r_ref) - x31),
        axis=1,
    )
    ind2 = np.all(Y2 == y_ref, axis=1)
    ind1 = np.all(Y1 == y_ref, axis=1)
    return ind2 * np.exp(e1 + e2) - ind1


def closed_form_network_transition(spec, y_ref, theta, y0, X=None):
    paths = all_paths(spec.T)
    vals = network_moment_value(spec, y_ref, paths, y0, X, theta)
    ref = tuple(int(v) for v in np.asarray(y_ref).ravel())
    return MomentFunction(spec.T, vals, f"closed_form(network_t3,y={ref})")


# -- vectorized evaluators for GMM -------------------------------------------


class CallableMoments:
    """Adapter turning fn(Y, Y0, X, theta) -> (n, k) into an evaluator."""

    def __init__(self, fn, k):
        self.fn = fn
        self.k = k

    def stacked(self, Y, Y0, X, theta):
        out = np.asarray(self.fn(Y, Y0, X, theta), dtype=float)
        return out.reshape(len(Y), self.k)


class Ar2T3Moments:
    """Stacked AR(2), T=3 closed-form moments, one slot per initial block."""

    cells = ((0, 0), (0, 1), (1, 0), (1, 1))
    k = 4

    def stacked(self, Y, Y0, X, theta):
        Y = np.asarray(Y, dtype=np.int64)
        Y0 = np.asarray(Y0, dtype=np.int64)
        out = np.zeros((Y.shape[0], self.k))
        idx = path_index(Y)
        for c, cell in enumerate(self.cells):
            hit = np.all(Y0 == np.array(cell), axis=1)
            if not np.any(hit):
                continue
            table = closed_form_ar2_T3(cell, theta)
            out[hit, c] = table.values[idx[hit]]
        return out


class QuarterlyT6Moments:
    """Stacked quarterly moments (m1, m2), evaluated per unit.

    With ``instruments=True`` (the default when covariates are
    present), each moment is also interacted with the covariate
    differences x_2 - x_6 and x_5 - x_1 entering its exponents; the
    interactions are valid moments because the originals have zero
    conditional expectation given (Y0, X, A), and they separate the
    weakly-identified near-roots of the plain just-identified system.
    """

    def __init__(self, d_x=0, instruments=True):
        self.d_x = int(d_x)
        self.instruments = bool(instruments) and self.d_x > 0
        self.k = 2 * (1 + 2 * self.d_x) if self.instruments else 2

    def stacked(self, Y, Y0, X, theta):
        y0 = np.asarray(Y0, dtype=float).reshape(-1)
        m1 = quarterly_m1_value(Y, y0, X, theta)
        m2 = quarterly_m1_value(Y, y0, X, theta, flip=True)
        cols = [m1, m2]
        if self.instruments:
            X = np.asarray(X, dtype=float)
            for d in range(self.d_x):
                x26 = X[:, d, 1] - X[:, d, 5]
                x51 = X[:, d, 4] - X[:, d, 0]
                cols += [m1 * x26, m2 * x26, m1 * x51, m2 * x51]
        return np.column_stack(cols)
