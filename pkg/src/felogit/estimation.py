"""Conditional maximum likelihood and GMM estimators.

CMLE variants condition on the statistic that absorbs the fixed
effects: the static estimator sums conditional logits over the classes
S(W y), the pairwise estimator reduces to a logistic regression on the
differenced covariates X w_perp, and the dynamic AR estimator
conditions on the transition-count classes (for p >= 2 only the last
lag coefficient moves the objective).  The GMM estimator consumes any
stack of fixed-effect-free moment evaluators.

All objectives are evaluated unit by unit with deterministic
fixed-order reductions; standard errors are sandwich formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .model import AR, STATIC, all_paths, path_index
from .sufficiency import arp_statistic_key, canonicalize_design


class NoInformationError(RuntimeError):
    """Raised when a sample carries no identifying variation."""


@dataclass
class Sample:
    """Cross-section of units sharing one ModelSpec.

    Y is (n, T) binary, Y0 is (n, L0) with L0 the spec's
    initial-condition length, X is (n, d_x, T) or None.
    """

    spec: object
    Y: np.ndarray
    Y0: np.ndarray
    X: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.int8)
        n, T = self.Y.shape
        if T != self.spec.T:
            raise ValueError("Y must have spec.T columns")
        self.Y0 = np.asarray(self.Y0, dtype=np.int8).reshape(n, self.spec.y0_len)
        if self.spec.d_x:
            self.X = np.asarray(self.X, dtype=float).reshape(
                n, self.spec.d_x, T
            )
        else:
            self.X = None

    @property
    def n(self):
        return self.Y.shape[0]


@dataclass
class EstimateReport:
    theta: np.ndarray
    names: list
    std_errors: np.ndarray
    objective: float
    converged: bool
    iterations: int
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "theta": {k: float(v) for k, v in zip(self.names, self.theta)},
            "std_errors": {
                k: float(v) for k, v in zip(self.names, self.std_errors)
            },
            "objective": float(self.objective),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "diagnostics": {
                k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.diagnostics.items()
            },
        }


def _sandwich(H, S):
    # H, S are summed (not averaged) hessian and outer-score matrices
    Hinv = np.linalg.pinv(-H)
    V = Hinv @ S @ Hinv
    return np.sqrt(np.maximum(np.diag(V), 0.0))


def _newton(objective, start, tol=1e-8, max_iter=200):
    """Damped Newton ascent for concave objectives.

    ``objective`` returns (value, gradient, hessian); steps are halved
    until the value does not decrease.
    """
    x = np.asarray(start, dtype=float).copy()
    val, g, H = objective(x)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) < tol:
            break
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = g.copy()
        lam = 1.0
        for _ in range(50):
            cand = x + lam * step
            v2, g2, H2 = objective(cand)
            if np.isfinite(v2) and v2 >= val - 1e-12:
                x, val, g, H = cand, v2, g2, H2
                break
            lam *= 0.5
        else:
            break
    return x, val, g, H, it


def _static_blocks(sample):
    spec = sample.spec
    paths = all_paths(spec.T).astype(float)
    stats = paths @ spec.W.T
    keys = {}
    for idx in range(paths.shape[0]):
        keys.setdefault(tuple(np.round(stats[idx], 9)), []).append(idx)
    classes = {k: np.array(v) for k, v in keys.items()}

    unit_stats = sample.Y.astype(float) @ spec.W.T
    by_class = {}
    for i, s in enumerate(unit_stats):
        k = tuple(np.round(s, 9))
        if len(classes[k]) > 1:
            by_class.setdefault(k, []).append(i)
    n_info = sum(len(v) for v in by_class.values())
    # per class: G[u] = X_u P', the class profile of differenced indices
    blocks = []
    for k, unit_idx in by_class.items():
        P = paths[classes[k]]
        Xu = sample.X[unit_idx]
        G = np.einsum("udt,mt->udm", Xu, P)
        own = np.array(
            [int(np.flatnonzero(classes[k] == path_index(sample.Y[i]))[0])
             for i in unit_idx]
        )
        blocks.append((G, own, np.array(unit_idx)))
    return blocks, n_info


def _static_objective(sample):
    blocks, n_info = _static_blocks(sample)
    d_x = sample.spec.d_x

    def objective(beta):
        val = 0.0
        g = np.zeros(d_x)
        H = np.zeros((d_x, d_x))
        for G, own, _ in blocks:
            logits = np.einsum("udm,d->um", G, beta)
            lse = logsumexp(logits, axis=1)
            val += float(np.sum(logits[np.arange(len(own)), own] - lse))
            s = np.exp(logits - lse[:, None])
            mean = np.einsum("udm,um->ud", G, s)
            g += np.sum(G[np.arange(len(own)), :, own] - mean, axis=0)
            GS = G * s[:, None, :]
            H -= np.einsum("udm,uem->de", GS, G) - mean.T @ mean
        return val, g, H

    return objective, blocks, n_info


def cmle_static(sample, init=None, tol=1e-8, max_iter=100):
    """Conditional MLE of beta over the classes S(W y).

    Units whose class is a singleton carry no information and are
    skipped; a sample with no informative unit raises
    NoInformationError.
    """
    spec = sample.spec
    if spec.family != STATIC:
        raise ValueError("cmle_static requires a static spec")
    if spec.d_x == 0:
        raise ValueError("nothing to estimate without covariates")
    objective, blocks, n_info = _static_objective(sample)
    if n_info == 0:
        raise NoInformationError("every conditioning class is a singleton")
    d_x = spec.d_x
    start = np.zeros(d_x) if init is None else np.asarray(init, dtype=float)
    _, _, H0 = objective(start)
    xscale = float(np.max(np.abs(sample.X))) if sample.X is not None else 1.0
    if np.max(np.abs(H0)) <= 1e-12 * n_info * max(1.0, xscale) ** 2:
        raise NoInformationError(
            "differenced covariates vanish on every conditioning class"
        )
    beta, val, g, H, it = _newton(objective, start, tol=tol, max_iter=max_iter)

    S = np.zeros((d_x, d_x))
    for G, own, _ in blocks:
        logits = np.einsum("udm,d->um", G, beta)
        s = np.exp(logits - logsumexp(logits, axis=1)[:, None])
        mean = np.einsum("udm,um->ud", G, s)
        sc = G[np.arange(len(own)), :, own] - mean
        S += sc.T @ sc
    converged = bool(np.max(np.abs(g)) < tol and np.isfinite(val))
    return EstimateReport(
        theta=beta,
        names=spec.theta_names(),
        std_errors=_sandwich(H, S),
        objective=val,
        converged=converged,
        iterations=it,
        diagnostics={"n_informative": n_info, "n_units": sample.n,
                     "grad_norm": float(np.max(np.abs(g)))},
    )


def _pairwise_rows(sample, Wperp):
    Wperp = np.asarray(Wperp, dtype=np.int64)
    if Wperp.ndim == 1:
        Wperp = Wperp[:, None]
    rows_v, rows_z, rows_u = [], [], []
    for c in range(Wperp.shape[1]):
        w = Wperp[:, c]
        plus, minus = w == 1, w == -1
        up = np.all(sample.Y[:, plus] == 1, axis=1) & np.all(
            sample.Y[:, minus] == 0, axis=1
        )
        dn = np.all(sample.Y[:, plus] == 0, axis=1) & np.all(
            sample.Y[:, minus] == 1, axis=1
        )
        hit = np.flatnonzero(up | dn)
        if hit.size == 0:
            continue
        rows_v.append(sample.X[hit] @ w.astype(float))
        rows_z.append(up[hit].astype(float))
        rows_u.append(hit)
    if not rows_v:
        return (np.zeros((0, sample.spec.d_x)), np.zeros(0),
                np.zeros(0, dtype=int))
    return np.vstack(rows_v), np.concatenate(rows_z), np.concatenate(rows_u)


def _pairwise_objective(sample, Wperp):
    V, z, units = _pairwise_rows(sample, Wperp)

    def objective(beta):
        eta = V @ beta
        val = float(np.sum(z * eta - np.logaddexp(0.0, eta)))
        p = 1.0 / (1.0 + np.exp(-eta))
        g = V.T @ (z - p)
        H = -(V * (p * (1 - p))[:, None]).T @ V
        return val, g, H

    return objective, V, z, units


def cmle_pairwise(sample, Wperp, init=None, tol=1e-8, max_iter=100):
    """Pairwise conditional logit on the differenced covariates X w_perp.

    For each column w of Wperp, a unit contributes when its outcomes on
    the support of w match the +pattern (event 1) or the -pattern
    (event 0); the regressor is X w and the fills are the unit's own
    off-support outcomes.
    """
    spec = sample.spec
    if spec.d_x == 0:
        raise ValueError("nothing to estimate without covariates")
    objective, V, z, units = _pairwise_objective(sample, Wperp)
    if len(z) == 0:
        raise NoInformationError("no unit lands in any conditioning pair")
    d_x = spec.d_x
    start = np.zeros(d_x) if init is None else np.asarray(init, dtype=float)
    beta, val, g, H, it = _newton(objective, start, tol=tol, max_iter=max_iter)

    eta = V @ beta
    resid = (z - 1.0 / (1.0 + np.exp(-eta)))[:, None] * V
    S = np.zeros((d_x, d_x))
    for u in np.unique(units):  # cluster scores by unit
        sc = resid[units == u].sum(axis=0)
        S += np.outer(sc, sc)
    converged = bool(np.max(np.abs(g)) < tol and np.isfinite(val))
    return EstimateReport(
        theta=beta,
        names=spec.theta_names(),
        std_errors=_sandwich(H, S),
        objective=val,
        converged=converged,
        iterations=it,
        diagnostics={"n_rows": int(len(z)),
                     "n_contributing_units": int(len(np.unique(units))),
                     "grad_norm": float(np.max(np.abs(g)))},
    )


def _ar_transition_stats(spec, Y, Y0):
    """s_r(y) = sum_t y_t y_{t-r}, r = 1..p, with lags read from y0."""
    n, T = Y.shape
    full = np.concatenate([Y0, Y], axis=1).astype(np.int64)
    p = spec.p
    out = np.empty((n, p), dtype=np.int64)
    for r in range(1, p + 1):
        out[:, r - 1] = np.sum(full[:, p:] * full[:, p - r: p - r + T], axis=1)
    return out


def _dynamic_entries(sample):
    """Class profiles (transition statistics, member counts) per
    occupied multi-member sufficiency class."""
    spec = sample.spec
    work = spec
    if not spec.binary_design:
        W_star, _ = canonicalize_design(spec.W)
        from .model import ModelSpec

        work = ModelSpec(AR, spec.T, W_star, d_x=0, p=spec.p)

    # aggregate duplicated (y0, y) patterns; the objective only needs counts
    n, T = sample.Y.shape
    pat_counts = {}
    for i in range(n):
        key = (tuple(sample.Y0[i].tolist()), int(path_index(sample.Y[i])))
        pat_counts[key] = pat_counts.get(key, 0) + 1

    paths = all_paths(T)
    class_members = {}
    for (y0key, ipath), cnt in pat_counts.items():
        y0 = np.array(y0key, dtype=np.int64)
        skey = (y0key, arp_statistic_key(work, paths[ipath], y0))
        class_members.setdefault(skey, {})[ipath] = cnt

    # class profiles: all paths sharing the statistic, observed or not
    by_y0 = {}
    for (y0key, _skey) in class_members:
        by_y0.setdefault(y0key, None)
    for y0key in by_y0:
        y0 = np.array(y0key, dtype=np.int64)
        table = {}
        for ipath in range(paths.shape[0]):
            table.setdefault(
                arp_statistic_key(work, paths[ipath], y0), []
            ).append(ipath)
        by_y0[y0key] = table

    p = spec.p
    entries = []
    n_info = 0
    for (y0key, skey), members in class_members.items():
        ipaths = by_y0[y0key][skey]
        if len(ipaths) < 2:
            continue
        y0 = np.array(y0key, dtype=np.int64)
        Y0m = np.broadcast_to(y0, (len(ipaths), p))
        s = _ar_transition_stats(spec, paths[ipaths], Y0m)
        cvec = np.array([members.get(ip, 0) for ip in ipaths], dtype=float)
        entries.append((s.astype(float), cvec))
        n_info += int(cvec.sum())
    return entries, n_info


def _dynamic_loglik(sample):
    """The conditional log likelihood as a function of the full gamma
    vector (flat in every lag but the last one)."""
    entries, n_info = _dynamic_entries(sample)

    def loglik(gam):
        gam = np.asarray(gam, dtype=float)
        val = 0.0
        for s, cvec in entries:
            logits = s @ gam
            val += float(cvec @ (logits - logsumexp(logits)))
        return val

    return loglik, n_info


def cmle_dynamic_ar(sample, init=None, tol=1e-8, max_iter=100):
    """Conditional MLE of the AR coefficients over sufficiency classes.

    Paths are grouped by initial condition and the exact condition
    statistics; the within-class likelihood depends on gamma_p alone
    for p >= 2, so earlier lags are reported as not identified by this
    method and held at their initial values.
    """
    spec = sample.spec
    if spec.family != AR:
        raise ValueError("cmle_dynamic_ar requires an AR spec")
    if spec.d_x:
        raise ValueError("dynamic CMLE is covariate-free; use moments + GMM")
    entries, n_info = _dynamic_entries(sample)
    if n_info == 0:
        raise NoInformationError(
            "no conditioning class with multiple members is occupied"
        )
    p = spec.p
    start = np.zeros(p) if init is None else np.asarray(init, dtype=float).copy()

    def objective(gp):
        gam = start.copy()
        gam[p - 1] = gp[0]
        val, g, h = 0.0, 0.0, 0.0
        for s, cvec in entries:
            logits = s @ gam
            lse = logsumexp(logits)
            probs = np.exp(logits - lse)
            sp = s[:, p - 1]
            mean = float(probs @ sp)
            var = float(probs @ (sp - mean) ** 2)
            val += float(cvec @ (logits - lse))
            g += float(cvec @ (sp - mean))
            h -= float(cvec.sum()) * var
        return val, np.array([g]), np.array([[h]])

    gp, val, g, H, it = _newton(
        objective, np.array([start[p - 1]]), tol=tol, max_iter=max_iter
    )
    theta = start.copy()
    theta[p - 1] = gp[0]

    gam = theta
    S = 0.0
    for s, cvec in entries:
        logits = s @ gam
        probs = np.exp(logits - logsumexp(logits))
        sp = s[:, p - 1]
        mean = float(probs @ sp)
        S += float(cvec @ (sp - mean) ** 2)
    se_gp = _sandwich(H, np.array([[S]]))[0]
    ses = np.full(p, np.nan)
    ses[p - 1] = se_gp
    converged = bool(np.max(np.abs(g)) < tol and np.isfinite(val))
    names = spec.theta_names()
    return EstimateReport(
        theta=theta,
        names=names,
        std_errors=ses,
        objective=val,
        converged=converged,
        iterations=it,
        diagnostics={
            "n_informative": n_info,
            "n_units": sample.n,
            "not_identified": names[: p - 1],
            "grad_norm": float(np.max(np.abs(g))),
        },
    )


def _central_diff(fn, theta, base_step=1e-6):
    theta = np.asarray(theta, dtype=float)
    cols = []
    for j in range(theta.size):
        h = base_step * (1.0 + abs(theta[j]))
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        cols.append((fn(up) - fn(dn)) / (2 * h))
    return np.stack(cols, axis=-1)


def gmm(sample, moments, init, weighting="two-step", ridge=1e-10,
        restarts=2, tol=1e-9):
    """GMM on stacked fixed-effect-free moment evaluators.

    Minimizes n * gbar(theta)' W gbar(theta) by BFGS with central-
    difference gradients; ``two-step`` re-minimizes with the inverse
    sample covariance of the moments (ridge-regularized when needed).
    The rank of the moment Jacobian is reported as an identification
    diagnostic.
    """
    if weighting not in ("identity", "two-step"):
        raise ValueError("weighting must be 'identity' or 'two-step'")
    spec = sample.spec
    init = np.asarray(init, dtype=float)

    def gbar(theta):
        M = moments.stacked(sample.Y, sample.Y0, sample.X, theta)
        return M.mean(axis=0)

    def solve(Wmat, start):
        def obj(theta):
            g = gbar(theta)
            return float(sample.n * g @ Wmat @ g)

        def grad(theta):
            return _central_diff(obj, theta)

        best = None
        rng = np.random.default_rng(12345)
        for trial in range(restarts + 1):
            x0 = start if trial == 0 else start + rng.normal(
                scale=0.25, size=start.shape
            )
            res = minimize(obj, x0, jac=grad, method="BFGS",
                           options={"gtol": tol * sample.n, "maxiter": 500})
            if best is None or res.fun < best.fun:
                best = res
        return best

    k = _n_moments(moments, sample, init)
    Wmat = np.eye(k)
    res = solve(Wmat, init)
    flagged_singular = False
    if weighting == "two-step":
        M = moments.stacked(sample.Y, sample.Y0, sample.X, res.x)
        S = np.cov(M.T, bias=True).reshape(k, k)
        S_r = S + ridge * np.eye(k)
        try:
            Wmat = np.linalg.inv(S_r)
        except np.linalg.LinAlgError:
            flagged_singular = True
            Wmat = np.linalg.pinv(S_r)
        res = solve(Wmat, res.x)

    theta = res.x
    M = moments.stacked(sample.Y, sample.Y0, sample.X, theta)
    S = np.cov(M.T, bias=True).reshape(k, k)
    G = _central_diff(gbar, theta)
    sv = np.linalg.svd(G, compute_uv=False) if G.size else np.zeros(0)
    rank = int(np.sum(sv > 1e-8 * max(sv[0], 1e-300))) if sv.size else 0
    bread = np.linalg.pinv(G.T @ Wmat @ G)
    V = bread @ G.T @ Wmat @ S @ Wmat @ G @ bread / sample.n
    ses = np.sqrt(np.maximum(np.diag(V), 0.0))
    return EstimateReport(
        theta=theta,
        names=sample.spec.theta_names()[: theta.size]
        if theta.size <= len(spec.theta_names())
        else [f"theta{j}" for j in range(theta.size)],
        std_errors=ses,
        objective=float(res.fun),
        converged=bool(res.success),
        iterations=int(res.nit),
        diagnostics={
            "jacobian_rank": rank,
            "identified": bool(rank >= theta.size),
            "n_moments": k,
            "weighting": weighting,
            "singular_weighting": flagged_singular,
        },
    )


def _n_moments(moments, sample, theta):
    k = getattr(moments, "k", None)
    if k is not None:
        return int(k)
    probe = moments.stacked(sample.Y[:1], sample.Y0[:1],
                            None if sample.X is None else sample.X[:1], theta)
    return int(np.asarray(probe).shape[1])
