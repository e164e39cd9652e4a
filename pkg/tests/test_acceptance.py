"""Acceptance suite: one test per criterion, one PASS line per test.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
Criterion 1's degree-6 scan is gated behind FELOGIT_LONG_RUN=1.
"""

import itertools
import os
import time

import numpy as np
import pytest

import felogit as fl
from felogit import designs, estimation, model, moments, simulate, sufficiency
from oracles import (
    mp_null_basis,
    mp_probability_matrix,
    naive_path_prob,
    subspace_residual,
)

TABLE1 = {
    0: (2, (1, -1)),
    1: (4, (1, -1, -1, 1)),
    2: (7, (1, -1, -1, 0, 1, 1, -1)),
    3: (12, (1, -1, -1, 0, 1, 0, 0, 1, 0, -1, -1, 1)),
    4: (16, (1, -1, -1, 0, 0, 1, 1, 1, -1, -1, -1, 0, 0, 1, 1, -1)),
    5: (23, (1, -1, -1, 0, 0, 1, 1, 0, 0, 0, -1, 0, -1, 0, 0, 0,
             1, 1, 0, 0, -1, -1, 1)),
}


def _ok(msg):
    print(f"PASS {msg}")


def test_criterion_1_table1_reproduction():
    for p, (T_ref, w_ref) in TABLE1.items():
        t0 = time.time()
        T, w = fl.minimal_T_polytrend(p)
        elapsed = time.time() - t0
        assert T == T_ref
        assert tuple(w) == w_ref or tuple(-w) == w_ref
        if p == 4:
            assert elapsed < 60.0
    _ok("criterion 1: Table 1 reproduced for p = 0..5 "
        f"(p=4 in {elapsed:.1f}s)")


@pytest.mark.skipif(
    not os.environ.get("FELOGIT_LONG_RUN"),
    reason="degree-6 scan is a long run; set FELOGIT_LONG_RUN=1",
)
def test_criterion_1_long_run_p6():
    T, w = fl.minimal_T_polytrend(6, allow_long_run=True)
    assert T == 31
    assert np.all(designs.poly_trend_matrix(6, 31).astype(np.int64) @ w == 0)
    _ok("criterion 1 (long run): p=6 minimal T = 31")


def test_criterion_2_static_sufficiency_suite():
    cases = [
        ("PanelFE(4)", fl.build_design("panel_fe", T=4, d_x=2)),
        ("PolyTrend(1,4)", fl.build_design("poly_trend", p=1, T=4, d_x=2)),
        ("Overlapping", fl.build_design("overlapping", d_x=2)),
        ("TwoWay(3,3)", fl.build_design("two_way", n=3, tau=3, d_x=2)),
        ("Dyadic(4)", fl.build_design("dyadic", n=4, d_x=2)),
        ("Triadic(2,2,2)", fl.build_design("triadic", n1=2, n2=2, n3=2, d_x=2)),
    ]
    rng = np.random.default_rng(2024)
    checked = 0
    for name, spec in cases:
        sols = fl.find_wperp(spec.W, max_solutions=40)
        assert sols, name
        beta = rng.normal(size=2)
        X = rng.normal(size=(2, spec.T))
        A_grid = rng.normal(size=(100, spec.d_w)) * 1.5
        for w in sols:
            fills = [None]
            n_zero = int(np.sum(w == 0))
            if n_zero:
                fills.append(rng.integers(0, 2, n_zero))
            for fill in fills:
                y1, y2 = fl.pair_from_wperp(w, fill=fill)
                target = float(np.exp(beta @ X @ (y1 - y2)))
                vals = [
                    fl.likelihood_ratio(spec, y1, y2, None, X, beta, A)
                    for A in A_grid
                ]
                spread = (max(vals) - min(vals)) / abs(min(vals))
                assert spread < 1e-10, name
                for v in vals:
                    assert abs(v - target) / target < 1e-12, name
                checked += 1
    _ok(f"criterion 2: {checked} search-produced pairs across 6 designs "
        "have A-invariant ratios equal to exp(beta'X(y1-y2))")


def test_criterion_3_dynamic_sufficiency_oracle():
    rng = np.random.default_rng(33)
    gamma = [0.7]
    for T in range(2, 9):
        spec = fl.panel_ar(1, T)
        for y0v in (0, 1):
            y0 = np.array([y0v])
            groups = {}
            for y in model.all_paths(T):
                key = fl.ar1_sufficient_stat(spec, y, y0).key()
                groups.setdefault(key, []).append(y)
            reference = {}
            for A in rng.normal(size=(20, 1)) * 2:
                dist = {
                    tuple(y): naive_path_prob(spec, y, y0, None, gamma, A)
                    for y in model.all_paths(T)
                }
                for key, members in groups.items():
                    if len(members) < 2:
                        continue
                    tot = sum(dist[tuple(m)] for m in members)
                    cond = np.array([dist[tuple(m)] / tot for m in members])
                    base = reference.setdefault(key, cond)
                    assert np.max(np.abs(cond - base)) < 1e-10
    for T in range(2, 11):
        spec = fl.trend_ar(T)
        assert fl.enumerate_pairs_ar1(spec, np.array([0])) == []
    _ok("criterion 3: AR(1) conditional law is A-invariant for T <= 8; "
        "trend design has zero identifying pairs for T <= 10")


def test_criterion_4_ar2_gamma1_dropout():
    checked_pairs = 0
    for T in range(4, 8):
        spec = fl.panel_ar(2, T)
        paths = model.all_paths(T)
        for y0_bits in itertools.product((0, 1), repeat=2):
            y0 = np.array(y0_bits)
            groups = {}
            for i, y in enumerate(paths):
                groups.setdefault(
                    sufficiency.arp_statistic_key(spec, y, y0), []
                ).append(i)
            for key, members in groups.items():
                if len(members) < 2:
                    continue
                s1 = {
                    sufficiency.transition_count(paths[i], y0) for i in members
                }
                assert len(s1) == 1, (T, y0_bits)
                checked_pairs += len(members) * (len(members) - 1) // 2
    # flatness of the conditional log likelihood in gamma1
    for T in (4, 7):
        spec = fl.panel_ar(2, T)
        paths = model.all_paths(T)
        Y = np.tile(paths, (4, 1))
        Y0 = np.repeat(
            np.array(list(itertools.product((0, 1), repeat=2))), len(paths), 0
        )
        sample = estimation.Sample(spec=spec, Y=Y, Y0=Y0)
        loglik, n_info = estimation._dynamic_loglik(sample)
        assert n_info > 0
        vals = [loglik(np.array([g1, -0.4])) for g1 in np.linspace(-3, 3, 13)]
        assert max(vals) - min(vals) < 1e-10
    _ok(f"criterion 4: all {checked_pairs} qualifying AR(2) pairs (T <= 7) "
        "share the 1->1 transition count; conditional loglik flat in gamma1")


def _criterion5_cases(rng):
    cases = []
    for p, T in [(1, 3), (1, 4), (2, 4), (2, 5)]:
        spec = fl.panel_ar(p, T, d_x=1)
        theta = np.concatenate([rng.uniform(0.3, 1.0, p) * rng.choice([-1, 1], p),
                                rng.uniform(0.5, 1.0, 1)])
        X = rng.normal(size=(1, T))
        y0 = rng.integers(0, 2, p)
        cases.append((f"AR({p}) T={T}", spec, theta, X, y0,
                      2**T - 2**p * (T + 1 - p)))
    return cases


def test_criterion_5_moment_counts():
    rng = np.random.default_rng(55)
    for name, spec, theta, X, y0, expected in _criterion5_cases(rng):
        t0 = time.time()
        rep = fl.nullspace_moments(spec, y0, X, theta)
        assert rep.dimension == expected, name
        assert time.time() - t0 < 30.0
    rep = fl.nullspace_moments(fl.panel_ar(2, 3), np.array([0, 1]), None,
                               [0.5, -0.3])
    assert fl.moment_bound(fl.panel_ar(2, 3), np.array([0, 1]), None,
                           [0.5, -0.3]) == 0
    assert rep.dimension >= 1
    t0 = time.time()
    rep = fl.nullspace_moments(fl.trend_ar(8), np.array([0]), None, [0.7])
    assert rep.dimension >= 1 and time.time() - t0 < 30.0
    _ok("criterion 5: null-space dimensions match 2^T - 2^p(T+1-p) at "
        "generic X; AR(2) T=3 and trend T=8 exceed the bound")


def test_criterion_6_closed_form_validation():
    rng = np.random.default_rng(66)
    worst = {"ar2": 0.0, "quarterly": 0.0, "network": 0.0}

    spec = fl.panel_ar(2, 3)
    for cell in ((0, 0), (0, 1)):
        for _ in range(100):
            theta = rng.uniform(-1.5, 1.5, 2)
            A = rng.uniform(-5, 5, (1, 1))
            m = fl.closed_form_ar2_T3(cell, theta)
            worst["ar2"] = max(
                worst["ar2"],
                fl.verify_moment(m, spec, np.array(cell), None, theta, A),
            )

    qspec = fl.quarterly_ar(1, 6, d_x=1)
    for _ in range(200):
        theta = rng.uniform(-1, 1, 2)
        X = rng.normal(size=(1, 6))
        y0 = int(rng.integers(0, 2))
        A = rng.uniform(-3, 3, (1, 4))
        m1, m2 = fl.closed_form_quarterly_T6(theta, y0, X)
        worst["quarterly"] = max(
            worst["quarterly"],
            fl.verify_moment(m1, qspec, np.array([y0]), X, theta, A),
            fl.verify_moment(m2, qspec, np.array([y0]), X, theta, A),
        )

    nspec = fl.network_design(3, 3, d_x=1)
    for _ in range(200):
        theta = rng.uniform(-0.8, 0.8, 3)
        X = rng.normal(size=(1, 9))
        y0 = rng.integers(0, 2, 3)
        ref = rng.integers(0, 2, 3)
        A = rng.uniform(-2, 2, (1, 3))
        m = fl.closed_form_network_transition(nspec, ref, theta, y0, X)
        worst["network"] = max(
            worst["network"],
            fl.verify_moment(m, nspec, y0, X, theta, A),
        )

    assert all(v < 1e-8 for v in worst.values()), worst
    _ok("criterion 6: closed-form moments verified by exact enumeration "
        f"(worst residuals {worst['ar2']:.1e} / {worst['quarterly']:.1e} / "
        f"{worst['network']:.1e})")


def test_criterion_7_network_conditioning():
    spec3 = fl.network_design(3, 3)
    # the conditioning sets read only the outcome path, so coverage of
    # every initial network is implied; all 2^9 paths are checked
    assert sufficiency.network_star_equality_fraction(spec3) == 1.0
    for y in model.all_paths(9):
        assert sufficiency.network_star_equals_full(spec3, y)

    spec4 = fl.network_design(4, 3)
    frac = sufficiency.network_star_equality_fraction(spec4)
    assert frac > 0.95

    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(20):
        theta = rng.uniform(-1, 1, 2)
        y = rng.integers(0, 2, 9)
        y0 = rng.integers(0, 2, 3)
        A = rng.normal(size=3)
        cond = fl.network_cond_full(spec3, y)
        val = fl.network_cond_likelihood(spec3, theta, y, y0, cond)
        num = naive_path_prob(spec3, y, y0, None, theta, A)
        den = sum(
            naive_path_prob(spec3, m, y0, None, theta, A)
            for m in cond.members
        )
        worst = max(worst, abs(val - num / den))
    assert worst < 1e-10
    _ok(f"criterion 7: star = full on all 512 paths at n=3; exact equality "
        f"fraction {frac:.4f} > 0.95 at n=4; L_cond matches brute force "
        f"({worst:.1e})")


def _within(report, names, truth):
    got = dict(zip(report.names, zip(report.theta, report.std_errors)))
    for name, val in zip(names, truth):
        est, se = got[name]
        assert np.isfinite(se) and se > 0
        assert abs(est - val) < 4 * se, (name, est, se, val)


def test_criterion_8_estimation_recovery():
    t_all = time.time()
    # (a) pairwise CMLE, beta = 1, n = 5000
    spec = fl.build_design("panel_fe", T=2, d_x=1)
    for a_law in (
        {"kind": "normal", "scale": 1.0},
        {"kind": "correlated", "rho": 0.5, "scale": 1.0},
    ):
        cfg = simulate.DGPConfig(spec=spec, theta=np.array([1.0]), n=5000,
                                 seed=801, a_law=a_law)
        rep = estimation.cmle_pairwise(simulate.generate(cfg), np.array([1, -1]))
        _within(rep, ["beta1"], [1.0])

    # (b) dynamic CMLE, gamma = 0.8, n = 20000; initial conditions from a
    # burn-in depend on the effects, exercising the A-Y0 dependence
    for a_law in (
        {"kind": "normal", "scale": 1.0},
        {"kind": "two_point", "lo": -1.0, "hi": 1.0, "p": 0.4},
    ):
        cfg = simulate.DGPConfig(
            spec=fl.panel_ar(1, 3), theta=np.array([0.8]), n=20000, seed=802,
            a_law=a_law, y0_law={"kind": "stationary", "burn_in": 50},
        )
        rep = estimation.cmle_dynamic_ar(simulate.generate(cfg))
        _within(rep, ["gamma1"], [0.8])

    # (c) GMM with the AR(2), T=3 closed forms, n = 50000
    for a_law in (
        {"kind": "normal", "scale": 1.0},
        {"kind": "two_point", "lo": -1.0, "hi": 1.0, "p": 0.4},
    ):
        cfg = simulate.DGPConfig(
            spec=fl.panel_ar(2, 3), theta=np.array([0.5, -0.3]), n=50000,
            seed=803, a_law=a_law,
            y0_law={"kind": "stationary", "burn_in": 50},
        )
        rep = estimation.gmm(
            simulate.generate(cfg), moments.Ar2T3Moments(), np.zeros(2)
        )
        _within(rep, ["gamma1", "gamma2"], [0.5, -0.3])

    # (d) GMM with the quarterly moments, n = 50000
    qspec = designs.quarterly_ar(1, 6, d_x=1)
    for a_law in (
        {"kind": "normal", "scale": 0.7},
        {"kind": "correlated", "rho": 0.5, "scale": 0.7},
    ):
        cfg = simulate.DGPConfig(
            spec=qspec, theta=np.array([0.5, 1.0]), n=50000, seed=804,
            a_law=a_law, y0_law={"kind": "fixed", "value": 0},
        )
        rep = estimation.gmm(
            simulate.generate(cfg),
            moments.QuarterlyT6Moments(d_x=1), np.zeros(2),
        )
        _within(rep, ["gamma1", "beta1"], [0.5, 1.0])
    elapsed = time.time() - t_all
    assert elapsed < 300.0
    _ok(f"criterion 8: all four estimators recover the truth within 4 "
        f"sandwich SEs, with independent and correlated effects ({elapsed:.0f}s)")


def test_criterion_9_dual_construction_oracle():
    rng = np.random.default_rng(55)  # same specs as criterion 5
    for name, spec, theta, X, y0, _ in _criterion5_cases(rng):
        rep = fl.nullspace_moments(spec, y0, X, theta)
        card = fl.build_dset(spec, fl.qt_values(spec, y0, X, theta)).cardinality
        A = rng.uniform(-1.5, 1.5, (3 * card, spec.d_w))
        P = mp_probability_matrix(spec, y0, X, theta, A)
        V2, rank = mp_null_basis(P)
        V1 = np.vstack([m.values for m in rep.moments])
        assert V2.shape[0] == rep.dimension, name
        assert subspace_residual(V1, V2) < 1e-7, name
    _ok("criterion 9: coefficient-matrix and sampled-probability null "
        "spaces agree (equal dimension, residual < 1e-7)")
