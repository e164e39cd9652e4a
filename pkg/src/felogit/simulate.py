"""Data-generating processes and a Monte Carlo harness.

The generator draws covariates, fixed effects (optionally correlated
with the covariates, which the estimators must tolerate), and initial
conditions, then rolls outcomes forward through the model's one-step
logistic kernel.  A config's seed fully determines the sample.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .estimation import Sample
from .model import AR, NETWORK, shared_friends


@dataclass
class DGPConfig:
    """Simulation design: model, truth, laws for (A, X, Y0), size, seed.

    Laws are dicts with a ``kind`` field:

    * a_law: ``normal`` (loc, scale), ``correlated`` (rho, scale; A_k =
      rho * mean_t x_1t + noise), ``two_point`` (lo, hi, p).
    * x_law: ``iid_normal`` (scale), ``ar`` (phi, scale), ``constant``
      (scale).
    * y0_law: ``fixed`` (value), ``stationary`` (burn_in, default 50).
    """

    spec: object
    theta: np.ndarray
    n: int
    seed: int
    a_law: dict = field(default_factory=lambda: {"kind": "normal", "scale": 1.0})
    x_law: dict = field(default_factory=lambda: {"kind": "iid_normal", "scale": 1.0})
    y0_law: dict = field(default_factory=lambda: {"kind": "fixed", "value": 0})


def _draw_X(cfg, rng):
    spec = cfg.spec
    n, d_x, T = cfg.n, spec.d_x, spec.T
    if d_x == 0:
        return None
    law = cfg.x_law
    scale = float(law.get("scale", 1.0))
    if law["kind"] == "iid_normal":
        return scale * rng.standard_normal((n, d_x, T))
    if law["kind"] == "ar":
        phi = float(law.get("phi", 0.5))
        X = np.empty((n, d_x, T))
        X[:, :, 0] = scale * rng.standard_normal((n, d_x))
        for t in range(1, T):
            X[:, :, t] = phi * X[:, :, t - 1] + scale * np.sqrt(
                1 - phi**2
            ) * rng.standard_normal((n, d_x))
        return X
    if law["kind"] == "constant":
        base = scale * rng.standard_normal((n, d_x, 1))
        return np.repeat(base, T, axis=2)
    raise ValueError(f"unknown x_law {law['kind']!r}")


def _draw_A(cfg, X, rng):
    spec = cfg.spec
    n, d_w = cfg.n, spec.d_w
    law = cfg.a_law
    kind = law["kind"]
    if kind == "normal":
        return float(law.get("loc", 0.0)) + float(
            law.get("scale", 1.0)
        ) * rng.standard_normal((n, d_w))
    if kind == "correlated":
        if X is None:
            raise ValueError("correlated a_law needs at least one covariate")
        rho = float(law.get("rho", 0.5))
        scale = float(law.get("scale", 1.0))
        base = rho * X[:, 0, :].mean(axis=1)
        return base[:, None] + scale * rng.standard_normal((n, d_w))
    if kind == "two_point":
        lo, hi = float(law.get("lo", -1.0)), float(law.get("hi", 1.0))
        p = float(law.get("p", 0.5))
        return np.where(rng.random((n, d_w)) < p, hi, lo)
    raise ValueError(f"unknown a_law {kind!r}")


def _draw_y0(cfg, X, A, rng):
    spec = cfg.spec
    n = cfg.n
    L0 = spec.y0_len
    law = cfg.y0_law
    if law["kind"] == "fixed":
        value = np.asarray(law.get("value", 0), dtype=np.int8)
        if value.ndim == 0:
            value = np.full(L0, int(value), dtype=np.int8)
        return np.broadcast_to(value, (n, L0)).copy()
    if law["kind"] != "stationary":
        raise ValueError(f"unknown y0_law {law['kind']!r}")
    burn = int(law.get("burn_in", 50))
    if spec.family == AR:
        state = np.zeros((n, spec.p), dtype=np.int8)
        for b in range(burn):
            t = b % spec.T + 1
            dyn, beta = spec.split_theta(cfg.theta)
            eta = state @ dyn[::-1] + A @ spec.W[:, t - 1]
            if spec.d_x:
                eta = eta + X[:, :, t - 1] @ beta
            y = (rng.random(n) < expit(eta)).astype(np.int8)
            state = np.concatenate([state[:, 1:], y[:, None]], axis=1)
        return state
    if spec.family == NETWORK:
        D = spec.n_dyads
        state = np.zeros((n, D), dtype=np.int8)
        dyn, _ = spec.split_theta(cfg.theta)
        gamma, delta = dyn
        for _ in range(burn):
            eta = gamma * state + delta * shared_friends(spec, state)
            Adyad = A  # one effect per dyad
            draw = rng.random((n, D)) < expit(eta + Adyad)
            state = draw.astype(np.int8)
        return state
    return np.zeros((n, 0), dtype=np.int8)


def generate(cfg):
    """Draw a Sample from the configured process; bit-reproducible."""
    spec = cfg.spec
    rng = np.random.default_rng(cfg.seed)
    theta = np.asarray(cfg.theta, dtype=float)
    if theta.shape != (spec.theta_dim,):
        raise ValueError(f"theta must have length {spec.theta_dim}")
    X = _draw_X(cfg, rng)
    A = _draw_A(cfg, X, rng)
    Y0 = _draw_y0(cfg, X, A, rng)
    n, T = cfg.n, spec.T
    Y = np.zeros((n, T), dtype=np.int8)

    if spec.family == AR:
        state = Y0.astype(np.int8).copy()
        dyn, beta = spec.split_theta(theta)
        for t in range(1, T + 1):
            eta = state @ dyn[::-1] + A @ spec.W[:, t - 1]
            if spec.d_x:
                eta = eta + X[:, :, t - 1] @ beta
            y = (rng.random(n) < expit(eta)).astype(np.int8)
            Y[:, t - 1] = y
            state = np.concatenate([state[:, 1:], y[:, None]], axis=1)
    elif spec.family == NETWORK:
        D = spec.n_dyads
        dyn, beta = spec.split_theta(theta)
        gamma, delta = dyn
        prev = Y0.astype(np.int8).copy()
        for per in range(1, spec.tau + 1):
            eta = gamma * prev + delta * shared_friends(spec, prev) + A
            if spec.d_x:
                cols = slice((per - 1) * D, per * D)
                eta = eta + np.einsum("ndk,d->nk", X[:, :, cols], beta)
            draw = (rng.random((n, D)) < expit(eta)).astype(np.int8)
            Y[:, (per - 1) * D: per * D] = draw
            prev = draw
    else:
        for t in range(1, T + 1):
            eta = A @ spec.W[:, t - 1]
            if spec.d_x:
                _, beta = spec.split_theta(theta)
                eta = eta + X[:, :, t - 1] @ beta
            Y[:, t - 1] = rng.random(n) < expit(eta)
    return Sample(spec=spec, Y=Y, Y0=Y0, X=X)


def _rep_seed(seed, rep):
    return int(np.random.SeedSequence([int(seed), int(rep)]).generate_state(1)[0])


def monte_carlo(cfg, estimator, replications, threads=1):
    """Replicate generate -> estimate and summarize bias, RMSE, coverage.

    ``estimator`` maps a Sample to an EstimateReport; failures are
    recorded per replication and excluded from the summary.  Each
    replication draws from an independently derived seed, so results do
    not depend on execution order.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    spec = cfg.spec
    truth = dict(zip(spec.theta_names(), np.asarray(cfg.theta, dtype=float)))

    def run(rep):
        sub = replace(cfg, seed=_rep_seed(cfg.seed, rep))
        row = {"rep": rep, "seed": sub.seed}
        try:
            report = estimator(generate(sub))
            for name, est, se in zip(
                report.names, report.theta, report.std_errors
            ):
                row[name] = float(est)
                row[f"se_{name}"] = float(se)
            row["converged"] = bool(report.converged)
        except Exception as exc:  # noqa: BLE001 - recorded, not fatal
            row["error"] = f"{type(exc).__name__}: {exc}"
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, range(replications)))
    else:
        rows = [run(r) for r in range(replications)]

    summary = {}
    for name, true_val in truth.items():
        ests = np.array(
            [r[name] for r in rows if name in r and np.isfinite(r[name])]
        )
        ses = np.array(
            [r[f"se_{name}"] for r in rows if name in r and np.isfinite(r[name])]
        )
        if ests.size == 0 or not np.all(np.isfinite(ses)):
            continue
        cover = np.abs(ests - true_val) <= 1.96 * ses
        summary[name] = {
            "truth": true_val,
            "bias": float(np.mean(ests) - true_val),
            "rmse": float(np.sqrt(np.mean((ests - true_val) ** 2))),
            "coverage": float(np.mean(cover)),
            "n_ok": int(ests.size),
        }
    summary["n_failed"] = sum("error" in r for r in rows)
    return rows, summary
