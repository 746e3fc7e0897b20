"""Acceptance gate.

Each test checks one criterion at its stated tolerance and records a
PASS/FAIL line that is printed in the pytest terminal summary.
"""
import math

import numpy as np
import pytest

from brakeplan import PenaltyField, PlanParams, candidate_set, generate_brownian
from brakeplan import bench
from brakeplan.direct_solver import expected_penalty, plan_direct
from brakeplan.fast_solver import evaluate_all, plan, precompute
from brakeplan.kinematics import ValveTransition, sigma_B, sigma_C
from brakeplan.substitution import (dtau_ds_B, dtau_ds_C, moving_extremum,
                                    rest_singular_fail_time, rest_singularity_inside,
                                    sigma_B_approx, tau_B_moving, tau_B_rest, tau_C)

from conftest import record

GRID = dict(n_t=100, n_s=800, dt_grid=0.1, ds_grid=0.25)
# the direct oracle samples this many trajectories per arc-length cell
ORACLE_REFINE = 8


def _brownian(seed):
    return generate_brownian(seed, GRID["n_t"], GRID["n_s"], GRID["dt_grid"], GRID["ds_grid"])


def _cases(n=200, seed=7):
    rng = np.random.default_rng(seed)
    cands = candidate_set(PlanParams(v0=1.0, a_prev=-5.0))
    for k in range(n):
        v0 = (5.0, 15.0, 30.0)[k % 3]
        yield k, PlanParams(v0=v0, a_prev=float(rng.choice(cands)))


def _agreement(refine):
    same, worst, worst_case = 0, 0.0, None
    n = 0
    for seed, params in _cases():
        field = _brownian(seed)
        fast = plan(field, params)
        direct = plan_direct(field, params, refine=refine)
        n += 1
        same += fast.a_star == direct.a_star
        d, f = direct.totals, fast.totals
        mask = d > 1e-6
        if mask.any():
            rel = np.max(np.abs(f[mask] - d[mask]) / d[mask])
            if rel > worst:
                worst, worst_case = rel, (seed, params.v0, params.a_prev)
    return same, n, worst, worst_case


def test_c1_oracle_equivalence():
    same, n, worst, case = _agreement(ORACLE_REFINE)
    ok = same >= 0.99 * n and worst <= 0.01
    record("C1 oracle equivalence", ok,
           f"same a* {same}/{n}, max per-candidate rel dev {worst:.2e} "
           f"(direct oracle refine={ORACLE_REFINE}, worst case seed/v0/a_prev={case})")
    # informational: the coarsest direct grid (one trajectory per cell)
    same1, _, worst1, _ = _agreement(1)
    record("C1b oracle equivalence, coarse direct grid (info)", True,
           f"same a* {same1}/{n}, max rel dev {worst1:.2e} at refine=1")
    assert same >= 0.99 * n
    assert worst <= 0.01


def test_c2_speedup():
    rep = bench.run_speedup(bench.reference_fields(10), trials=10, warmup=2)
    ok = rep.ratio <= 0.25
    record("C2 speedup", ok,
           f"fast/direct worst-case {1e3 * rep.fast_worst:.2f}/{1e3 * rep.direct_worst:.2f} ms "
           f"= {rep.ratio:.3f} (median ratio {rep.median_ratio:.3f}, 10 fields x 10 trials)")
    assert rep.deterministic
    assert ok


def test_c3_complexity_separation():
    rows = bench.run_scaling(counts=(21, 41, 81, 161), ds_list=(0.5, 0.25, 0.125))

    def med(scenario, solver, stage, key):
        return {r[key]: r["median_s"] for r in rows
                if r["scenario"] == scenario and r["solver"] == solver and r["stage"] == stage}

    pre = med("scaling_candidates", "fast", "precompute", "n_candidates")
    direct = med("scaling_candidates", "direct", "total", "n_candidates")
    by_ds = med("scaling_ds", "fast", "precompute", "ds")
    counts = sorted(pre)
    pre_r = [pre[b] / pre[a] for a, b in zip(counts, counts[1:])]
    dir_r = [direct[b] / direct[a] for a, b in zip(counts, counts[1:])]
    dss = sorted(by_ds, reverse=True)
    ds_r = [by_ds[b] / by_ds[a] for a, b in zip(dss, dss[1:])]
    ok_pre = all(abs(r - 1.0) < 0.05 for r in pre_r)
    ok_dir = all(abs(r - 2.0) <= 0.4 for r in dir_r)
    ok_ds = all(abs(r - 2.0) <= 0.4 for r in ds_r)
    fmt = lambda xs: ", ".join(f"{x:.3f}" for x in xs)
    record("C3 complexity separation", ok_pre and ok_dir and ok_ds,
           f"|A| doubling: precompute x[{fmt(pre_r)}], direct x[{fmt(dir_r)}]; "
           f"ds halving: precompute x[{fmt(ds_r)}]")
    assert ok_pre
    assert ok_dir
    assert ok_ds


def test_c4_truncation():
    base = PlanParams(v0=40.0, a_prev=-9.0)
    p100, p200 = base.replace(s_cap=100.0), base.replace(s_cap=200.0)
    c100, c200 = candidate_set(p100), candidate_set(p200)
    field = _brownian(0)
    fast_t = bench.time_interleaved([lambda: plan(field, p100), lambda: plan(field, p200)],
                                    trials=41)
    dir_t = bench.time_interleaved([lambda: plan_direct(field, p100),
                                    lambda: plan_direct(field, p200)], trials=11)
    ok_set = c100.tolist() == [-9.0, -8.9]
    ok_fast = fast_t[0].median < fast_t[1].median
    ok_dir = dir_t[0].median < dir_t[1].median
    record("C4 truncation", ok_set and ok_fast and ok_dir,
           f"cap 100: {c100.tolist()} vs cap 200: {c200.size} candidates; fast median "
           f"{1e3 * fast_t[0].median:.2f} < {1e3 * fast_t[1].median:.2f} ms, direct median "
           f"{1e3 * dir_t[0].median:.1f} < {1e3 * dir_t[1].median:.1f} ms")
    assert ok_set
    assert c200.size > 2
    assert ok_fast
    assert ok_dir


def test_c5_cubic_drop_bound():
    kmag, t_valve = 100.0, 0.08
    worst = 0.0
    taus = np.arange(0, 81) * 1e-3
    times = np.arange(0, 101) * 0.1
    for a_prev, a_next in ((-1.0, -9.0), (-9.0, -1.0)):
        for v0 in (5.0, 15.0, 30.0, 40.0):
            params = PlanParams(v0=v0, a_prev=a_prev)
            vt = ValveTransition.build(a_prev, a_next, kmag)
            assert vt.t_valve == pytest.approx(t_valve)
            for tau in taus:
                acc = vt.alpha(tau)
                t_stop = tau - v0 / acc
                for t in times:
                    # the quadratic stands in for trajectories that are still braking
                    if not tau <= t < t_stop:
                        continue
                    exact = sigma_B(t, tau, params, vt)
                    approx = sigma_B_approx(t, tau, v0, a_prev, vt.kappa)
                    worst = max(worst, abs(exact - approx))
    ok = worst <= 0.026
    record("C5 cubic drop bound", ok, f"max |exact - quadratic| = {worst:.5f} m "
           f"(bound 0.026, |kappa|/2 t_valve^3 = {0.5 * kmag * t_valve ** 3:.5f})")
    assert ok


def _rest_b_distance(v0, a_prev, kappa, tau):
    return v0 * tau - v0 * v0 / (2.0 * (a_prev + kappa * tau))


# interior points stay this far (in s) from a 1/sqrt singular locus, where a
# central difference with step h is off by about h^2 / (8 gap^2)
MARGIN = 0.01


def _regime_points(rng, n=1000):
    """Yield (regime, t, s, tau, analytic density, numeric density, inverse error)."""
    h = 1e-4
    out = {"B moving": [], "B rest": [], "C moving": [], "C rest": []}
    while min(len(v) for v in out.values()) < n:
        v0 = rng.uniform(3.0, 40.0)
        a_prev = float(np.round(rng.uniform(-9.0, -1.0), 1))
        a_next = float(np.round(rng.uniform(-9.0, -1.0), 1))
        if abs(a_next - a_prev) < 0.5:
            continue
        vt = ValveTransition.build(a_prev, a_next, 100.0)
        kappa, tv = vt.kappa, vt.t_valve

        if len(out["B moving"]) < n:
            tau = rng.uniform(0.05, 0.95) * tv
            t = rng.uniform(0.1, 0.9) * (tau - v0 / vt.alpha(tau))
            ext = moving_extremum(t, a_prev, kappa)
            s = sigma_B_approx(t, tau, v0, a_prev, kappa)
            alpha_m = 0.5 * a_prev - kappa * t
            co_disc = ((0.5 * kappa * t * t - a_prev * t) ** 2
                       - 4 * alpha_m * (v0 * t + 0.5 * a_prev * t * t - s))
            if (t > tau and not (0.0 <= ext <= tv + 0.2 * tv)
                    and co_disc / (4 * abs(alpha_m)) >= MARGIN):
                try:
                    back = tau_B_moving(t, s, v0, a_prev, kappa, tv)
                    num = (tau_B_moving(t, s + h, v0, a_prev, kappa, tv)
                           - tau_B_moving(t, s - h, v0, a_prev, kappa, tv)) / (2 * h)
                except Exception:
                    back = None
                if back is not None:
                    out["B moving"].append((t, s, tau, dtau_ds_B(t, s, v0, a_prev, kappa, False),
                                            num, abs(sigma_B_approx(t, back, v0, a_prev,
                                                                    kappa) - s)))

        if len(out["B rest"]) < n:
            tau = rng.uniform(0.05, 0.95) * tv
            sing = rest_singular_fail_time(v0, a_prev, kappa)
            if sing is None or abs(sing - tau) > 0.1 * tv:
                s = _rest_b_distance(v0, a_prev, kappa, tau)
                t = tau - v0 / vt.alpha(tau) + 1.0
                try:
                    back = tau_B_rest(t, s, v0, a_prev, kappa, tv)
                    num = (tau_B_rest(t, s + h, v0, a_prev, kappa, tv)
                           - tau_B_rest(t, s - h, v0, a_prev, kappa, tv)) / (2 * h)
                except Exception:
                    back = None
                if back is not None:
                    out["B rest"].append((t, s, tau, dtau_ds_B(t, s, v0, a_prev, kappa, True),
                                          num, abs(_rest_b_distance(v0, a_prev, kappa, back)
                                                   - s)))

        params = PlanParams(v0=v0, a_prev=a_prev)
        tau = rng.uniform(tv, 0.25)
        t_stop = tau - v0 / a_next
        if len(out["C moving"]) < n:
            t = tau + rng.uniform(0.05, 0.95) * (t_stop - tau)
            s = sigma_C(t, tau, params, a_next)
            if v0 * t - s < MARGIN:
                continue
            back = tau_C(t, s, v0, a_next, False)
            num = (tau_C(t, s + h, v0, a_next, False)
                   - tau_C(t, s - h, v0, a_next, False)) / (2 * h)
            out["C moving"].append((t, s, tau, dtau_ds_C(t, s, v0, a_next, False), num,
                                    abs(sigma_C(t, back, params, a_next) - s)))
        if len(out["C rest"]) < n:
            t = t_stop + rng.uniform(0.1, 5.0)
            s = sigma_C(t, tau, params, a_next)
            back = tau_C(t, s, v0, a_next, True)
            num = (tau_C(t, s + h, v0, a_next, True)
                   - tau_C(t, s - h, v0, a_next, True)) / (2 * h)
            out["C rest"].append((t, s, tau, dtau_ds_C(t, s, v0, a_next, True), num,
                                  abs(sigma_C(t, back, params, a_next) - s)))
    return {k: v[:n] for k, v in out.items()}


def test_c6_substitution_suite():
    pts = _regime_points(np.random.default_rng(11))
    lines, ok = [], True
    for regime, rows in pts.items():
        arr = np.array([(r[3], r[4], r[5]) for r in rows])
        inv = arr[:, 2].max()
        rel = np.max(np.abs(arr[:, 0] - arr[:, 1]) / np.abs(arr[:, 0]))
        good = len(rows) == 1000 and inv <= 1e-9 and rel <= 1e-4
        ok &= good
        lines.append(f"{regime}: inverse {inv:.1e} m, derivative {rel:.1e}")
    record("C6 substitution suite", ok, "; ".join(lines) + f" (1000 points each, >= {MARGIN} m from singular loci)")
    assert ok


def test_c7_structural_invariants():
    checks = {}
    for seed in range(6):
        field = _brownian(100 + seed)
        params = PlanParams(v0=(5.0, 15.0, 30.0)[seed % 3], a_prev=(-2.0, -5.0, -8.3)[seed % 3])
        fast = plan(field, params)
        direct = plan_direct(field, params)
        k = int(np.flatnonzero(np.isclose(fast.candidates, params.a_prev))[0])
        checks.setdefault("p_b zero at a_prev", []).append(
            fast.evaluations[k].p_b == 0.0 and direct.evaluations[k].p_b == 0.0)
        pre = [expected_penalty(field, params, a)[0] for a in candidate_set(params)[::8]]
        checks.setdefault("pre-fail identical", []).append(
            max(pre) - min(pre) <= 1e-12 * max(1.0, abs(pre[0])))
        checks.setdefault("totals non-negative", []).append(
            bool((fast.totals >= 0).all() and (direct.totals >= 0).all()))
    zero = PenaltyField.zeros(100, 800, 0.1, 0.25)
    for a_prev in (-9.0, -4.0, -1.0):
        params = PlanParams(v0=15.0, a_prev=a_prev)
        checks.setdefault("zero field keeps a_prev", []).append(
            plan(zero, params).a_star == a_prev and plan_direct(zero, params).a_star == a_prev)
    ok = all(all(v) for v in checks.values())
    record("C7 structural invariants", ok,
           ", ".join(f"{k} {sum(v)}/{len(v)}" for k, v in checks.items()))
    assert ok


def _has_stationary_rest_point(v0, a_prev, a_next, kmag, n=20001):
    """Dense sampling of the rest-B stopping distance over the transition."""
    vt = ValveTransition.build(a_prev, a_next, kmag)
    tau = np.linspace(0.0, vt.t_valve, n)
    s = _rest_b_distance(v0, a_prev, vt.kappa, tau)
    d = np.diff(s)
    return bool(np.any(np.sign(d[1:]) != np.sign(d[:-1])))


def test_c8_singularity_threshold():
    a, kappa = -9.0, -100.0
    thr = -2.0 * a * a / kappa
    # a_prev close to zero keeps the lower end of the window near 0 m/s
    a_prev = -1.0
    below = thr - np.geomspace(1e-3, 0.5, 40)
    above = thr + np.geomspace(1e-3, 20.0, 40)
    bad = []
    for v0 in below:
        if not (rest_singularity_inside(v0, a_prev, a, -kappa)
                and _has_stationary_rest_point(v0, a_prev, a, -kappa)):
            bad.append(("below", v0))
    for v0 in above:
        if (rest_singularity_inside(v0, a_prev, a, -kappa)
                or _has_stationary_rest_point(v0, a_prev, a, -kappa)):
            bad.append(("above", v0))
    tau_at = rest_singular_fail_time(thr, a_prev, kappa)
    ok = math.isclose(thr, 1.62) and not bad and math.isclose(tau_at, 0.08)
    record("C8 singularity threshold", ok,
           f"threshold {thr:.4f} m/s; 40 speeds below inside, 40 above outside, "
           f"{len(bad)} mismatches; singular failure time at threshold {tau_at:.5f} s")
    assert ok
