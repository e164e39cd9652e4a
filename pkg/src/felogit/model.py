"""Binary-choice logit models with general fixed-effect designs.

An observation sequence Y = (Y_1, ..., Y_T) in {0,1}^T follows

    Pr(Y_t = 1 | history, X, A) = expit( pi_t + w_t' A ),

where pi_t is a known index function of the outcome history and the
period-t covariates, w_t is the t-th column of a non-random design
matrix W (d_w x T), and A in R^{d_w} is an unobserved effect that may
depend arbitrarily on the covariates and the initial condition.

Three index families are supported:

* ``static``  : pi_t = x_t' beta (no history dependence),
* ``ar``      : pi_t = sum_{r=1..p} gamma_r y_{t-r} + x_t' beta,
* ``network`` : observations are dyad-period pairs of an n-agent graph,
  pi_t = gamma * y_{ij,tau-1} + delta * R_{ij,tau-1} + x_t' beta with
  R_{ij,tau-1} the number of shared neighbours of i and j in the
  previous period's network.

Network observations are ordered time-major with lexicographic dyads
(i < j) inside each period.  Initial conditions are stored in
chronological order, so ``y0[-1]`` is always the outcome immediately
preceding period 1.

All probability computations are exact and carried out in log space;
functions in this module are pure and safe to call concurrently.
"""

from __future__ import annotations

import json
from functools import lru_cache

import numpy as np
from scipy.special import expit

STATIC = "static"
AR = "ar"
NETWORK = "network"

_FAMILIES = (STATIC, AR, NETWORK)


def dyads(n):
    """Lexicographic list of 0-based dyads (i, j), i < j, of n agents."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


class ModelSpec:
    """Declarative description of a fixed-effects logit model.

    Parameters
    ----------
    family : str
        One of ``static``, ``ar``, ``network``.
    T : int
        Number of observations (for networks, C(n,2) * tau).
    W : array_like, shape (d_w, T)
        Fixed-effect design; column t loads the effect at observation t.
    d_x : int
        Covariate dimension (0 for covariate-free models).
    p : int
        Lag depth of the ``ar`` family.
    n, tau : int
        Number of agents / observed periods of the ``network`` family.
    """

    def __init__(self, family, T, W, d_x=0, p=0, n=0, tau=0):
        if family not in _FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[1] != T:
            raise ValueError(f"W must be d_w x T, got {W.shape} with T={T}")
        if not np.all(np.isfinite(W)):
            raise ValueError("W must have finite entries")
        if T < 1:
            raise ValueError("T must be positive")
        if family == AR and p < 1:
            raise ValueError("ar family needs lag depth p >= 1")
        if family == NETWORK:
            if n < 2 or tau < 1:
                raise ValueError("network family needs n >= 2 and tau >= 1")
            if T != (n * (n - 1) // 2) * tau:
                raise ValueError("network family requires T = C(n,2)*tau")
        self.family = family
        self.T = int(T)
        self.W = W
        self.d_x = int(d_x)
        self.p = int(p)
        self.n = int(n)
        self.tau = int(tau)

    @property
    def d_w(self):
        return self.W.shape[0]

    @property
    def n_dyads(self):
        return self.n * (self.n - 1) // 2

    @property
    def binary_design(self):
        """True when every column of W is a standard basis vector."""
        W = self.W
        return bool(
            np.all((W == 0) | (W == 1)) and np.all(W.sum(axis=0) == 1)
        )

    @property
    def y0_len(self):
        if self.family == AR:
            return self.p
        if self.family == NETWORK:
            return self.n_dyads
        return 0

    @property
    def theta_dim(self):
        if self.family == STATIC:
            return self.d_x
        if self.family == AR:
            return self.p + self.d_x
        return 2 + self.d_x

    def theta_names(self):
        if self.family == STATIC:
            dyn = []
        elif self.family == AR:
            dyn = [f"gamma{r}" for r in range(1, self.p + 1)]
        else:
            dyn = ["gamma", "delta"]
        return dyn + [f"beta{k}" for k in range(1, self.d_x + 1)]

    def split_theta(self, theta):
        """Split a parameter vector into (gamma-block, beta)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.theta_dim,):
            raise ValueError(
                f"theta must have length {self.theta_dim}, got {theta.shape}"
            )
        if self.family == STATIC:
            return np.empty(0), theta
        if self.family == AR:
            return theta[: self.p], theta[self.p:]
        return theta[:2], theta[2:]

    def dyad_of_obs(self, t):
        """Map a 1-based network observation index to (dyad, period)."""
        d = self.n_dyads
        return (t - 1) % d, (t - 1) // d + 1

    # -- serialization ----------------------------------------------------

    def to_json(self):
        doc = {
            "schema_version": 1,
            "family": self.family,
            "T": self.T,
            "d_x": self.d_x,
            "theta_layout": self.theta_names(),
            "W": [list(map(float, row)) for row in self.W],
        }
        if self.family == AR:
            doc["p"] = self.p
        if self.family == NETWORK:
            doc["n"] = self.n
            doc["tau"] = self.tau
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(
            family=doc["family"],
            T=doc["T"],
            W=np.asarray(doc["W"], dtype=float),
            d_x=doc.get("d_x", 0),
            p=doc.get("p", 0),
            n=doc.get("n", 0),
            tau=doc.get("tau", 0),
        )

    def __repr__(self):
        extra = ""
        if self.family == AR:
            extra = f", p={self.p}"
        if self.family == NETWORK:
            extra = f", n={self.n}, tau={self.tau}"
        return f"ModelSpec({self.family}, T={self.T}, d_w={self.d_w}, d_x={self.d_x}{extra})"


def network_design(n, tau, d_x=0):
    """NetworkTransition spec: dyad-indicator W, time-major observations."""
    D = n * (n - 1) // 2
    T = D * tau
    W = np.zeros((D, T))
    for t in range(T):
        W[t % D, t] = 1.0
    return ModelSpec(NETWORK, T, W, d_x=d_x, n=n, tau=tau)


def all_paths(T):
    """All binary outcome paths of length T as a (2^T, T) int8 array.

    Row i holds the binary digits of i with y_1 as the most significant
    bit, so rows are sorted lexicographically.
    """
    if T > 24:
        raise ValueError("path enumeration limited to T <= 24")
    idx = np.arange(2**T, dtype=np.int64)
    return ((idx[:, None] >> np.arange(T - 1, -1, -1)) & 1).astype(np.int8)


def path_index(y):
    """Row index of path y in the ``all_paths`` enumeration."""
    y = np.asarray(y).astype(np.int64)
    T = y.shape[-1]
    weights = 1 << np.arange(T - 1, -1, -1, dtype=np.int64)
    return y @ weights


def _check_y0(spec, y0):
    y0 = np.zeros(0, dtype=np.int8) if y0 is None else np.asarray(y0, dtype=np.int8)
    if y0.shape != (spec.y0_len,):
        raise ValueError(f"y0 must have length {spec.y0_len}, got {y0.shape}")
    return y0


def _check_X(spec, X):
    if spec.d_x == 0:
        return None
    X = np.asarray(X, dtype=float)
    if X.shape != (spec.d_x, spec.T):
        raise ValueError(f"X must be d_x x T = {(spec.d_x, spec.T)}, got {X.shape}")
    return X


@lru_cache(maxsize=None)
def _shared_friend_slots(n):
    # per dyad (i,j): pairs of dyad indices (i,k), (j,k) over k not in {i,j}
    index = {d: k for k, d in enumerate(dyads(n))}
    slots = []
    for (i, j) in dyads(n):
        pairs = []
        for k in range(n):
            if k in (i, j):
                continue
            a = index[(min(i, k), max(i, k))]
            b = index[(min(j, k), max(j, k))]
            pairs.append((a, b))
        slots.append(tuple(pairs))
    return tuple(slots)


def shared_friends(spec, nets):
    """Shared-neighbour counts R for a batch of networks.

    Parameters
    ----------
    nets : array, shape (m, n_dyads)
        Link indicators, dyads in lexicographic order.

    Returns
    -------
    array, shape (m, n_dyads) of integers.
    """
    nets = np.atleast_2d(np.asarray(nets)).astype(np.int64)
    R = np.zeros(nets.shape, dtype=np.int64)
    for d, pairs in enumerate(_shared_friend_slots(spec.n)):
        for a, b in pairs:
            R[:, d] += nets[:, a] * nets[:, b]
    return R


def index_matrix(spec, paths, y0, X, theta):
    """Index values pi_t for a batch of outcome paths.

    Parameters
    ----------
    paths : array, shape (m, T)
        Binary outcome paths.
    y0 : array or None
        Initial-condition block (chronological; empty for static).
    X : array or None
        Covariates, d_x x T.
    theta : array
        Parameter vector in the spec's layout.

    Returns
    -------
    array, shape (m, T) with pi_t excluding the w_t'A term.
    """
    paths = np.atleast_2d(np.asarray(paths))
    m, T = paths.shape
    if T != spec.T:
        raise ValueError(f"paths must have T={spec.T} columns")
    y0 = _check_y0(spec, y0)
    X = _check_X(spec, X)
    dyn, beta = spec.split_theta(theta)
    pi = np.zeros((m, T))
    if spec.family == AR:
        full = np.concatenate(
            [np.broadcast_to(y0, (m, spec.p)), paths], axis=1
        ).astype(np.int64)
        for r in range(1, spec.p + 1):
            pi += dyn[r - 1] * full[:, spec.p - r: spec.p - r + T]
    elif spec.family == NETWORK:
        gamma, delta = dyn
        D = spec.n_dyads
        full = np.concatenate([np.broadcast_to(y0, (m, D)), paths], axis=1)
        for per in range(1, spec.tau + 1):
            prev = full[:, (per - 1) * D: per * D]
            R = shared_friends(spec, prev)
            pi[:, (per - 1) * D: per * D] = gamma * prev + delta * R
    if spec.d_x:
        pi += beta @ X
    return pi


def index_pi(spec, t, history, x_t, theta):
    """Index pi_t at a single observation.

    ``history`` concatenates the initial-condition block with the
    outcomes of observations 1..t-1; it must supply every lag that the
    index reads (for networks, the complete previous-period graph).
    """
    if not 1 <= t <= spec.T:
        raise ValueError(f"t must lie in 1..{spec.T}")
    history = np.asarray(history)
    need = spec.y0_len + t - 1
    if history.shape != (need,):
        raise ValueError(f"history must have length {need}, got {history.shape}")
    dyn, beta = spec.split_theta(theta)
    val = 0.0
    if spec.family == AR:
        for r in range(1, spec.p + 1):
            val += dyn[r - 1] * history[need - r]
    elif spec.family == NETWORK:
        gamma, delta = dyn
        D = spec.n_dyads
        d, per = spec.dyad_of_obs(t)
        prev = history[(per - 1) * D: per * D]
        val = gamma * prev[d] + delta * float(shared_friends(spec, prev)[0, d])
    if spec.d_x:
        x_t = np.asarray(x_t, dtype=float)
        val += float(beta @ x_t)
    return float(val)


def log_path_distribution(spec, y0, X, theta, A, paths=None):
    """Log probability of each path in a batch (all 2^T paths by default)."""
    if paths is None:
        paths = all_paths(spec.T)
    paths = np.atleast_2d(np.asarray(paths))
    A = np.asarray(A, dtype=float)
    if A.shape != (spec.d_w,):
        raise ValueError(f"A must have length {spec.d_w}")
    if not np.all(np.isfinite(A)):
        raise ValueError("A must be finite")
    pi = index_matrix(spec, paths, y0, X, theta)
    eta = pi + spec.W.T @ A
    return np.sum(paths * eta - np.logaddexp(0.0, eta), axis=1)


def path_distribution(spec, y0, X, theta, A, paths=None):
    return np.exp(log_path_distribution(spec, y0, X, theta, A, paths))


def path_probability(spec, y, y0, X, theta, A):
    """Exact probability of a single outcome path, computed in log space."""
    return float(
        np.exp(log_path_distribution(spec, y0, X, theta, A, np.atleast_2d(y))[0])
    )


def step_probability(spec, t, history, x_t, theta, A):
    """One-step transition kernel Pr(Y_t = 1 | history, x_t, A)."""
    eta = index_pi(spec, t, history, x_t, theta) + float(spec.W[:, t - 1] @ A)
    return float(expit(eta))


def likelihood_ratio(spec, y1, y2, y0, X, theta, A):
    """Ratio Pr(Y = y1 | .) / Pr(Y = y2 | .) for a shared initial condition."""
    lp = log_path_distribution(spec, y0, X, theta, A, np.vstack([y1, y2]))
    return float(np.exp(lp[0] - lp[1]))
