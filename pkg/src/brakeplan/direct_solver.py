"""Brute-force reference solver.

Failure times are enumerated on a grid fine enough that consecutive
trajectories move by at most about one arc-length cell; each trajectory
is integrated over the time rows and the results are averaged with
trapezoid weights.  Slow by construction: cost grows with
candidates x rows x failure samples.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .field import PenaltyField
from .fast_solver import (CandidateEvaluation, PlanResult, candidate_set,
                          check_configuration, integrated_rows, select_optimum)
from .kinematics import PlanParams, ValveTransition

__all__ = ["FailTimeGrid", "build_fail_grid", "expected_penalty", "plan_direct"]


@dataclass
class FailTimeGrid:
    samples: np.ndarray
    weights: np.ndarray
    t_valve: float
    # trapezoid halves towards the previous / next sample
    w_left: np.ndarray
    w_right: np.ndarray
    # whether the segment towards the previous / next sample lies in the transition
    left_b: np.ndarray
    right_b: np.ndarray

    def __len__(self):
        return self.samples.size


def build_fail_grid(params: PlanParams, a_next, ds, breakpoints=()) -> FailTimeGrid:
    """Failure-time samples over ``[0, dt_plan]`` for one candidate.

    Inside the transition the step splits the total sweep of stopping
    distances into pieces of at most ``ds`` on average; the sweep is not
    uniform in the failure time, so single steps near the gentler end can
    cover a few cells (``refine`` in the callers shrinks them).  After the
    transition the step is ``ds / v0``.  ``t_valve`` and any
    ``breakpoints`` are always sampled.
    """
    v0, dt_plan = params.v0, params.dt_plan
    vt = ValveTransition.build(params.a_prev, a_next, params.kappa_mag)
    t_valve = vt.t_valve
    knots = {0.0, dt_plan}
    if 0.0 < t_valve < dt_plan:
        knots.add(t_valve)
    knots.update(b for b in breakpoints if 0.0 < b < dt_plan)
    knots = sorted(knots)
    if v0 == 0.0:
        pieces = [np.array(knots)]
    else:
        step_c = ds / v0
        step_b = step_c
        if t_valve > 0.0:
            span = abs(v0 * v0 / (2.0 * params.a_prev) - v0 * v0 / (2.0 * a_next))
            if span > 0.0:
                step_b = min(step_c, t_valve * ds / span)
        pieces = []
        for u, w in zip(knots[:-1], knots[1:]):
            step = step_b if w <= t_valve else step_c
            n = max(1, math.ceil((w - u) / step - 1e-9))
            seg = u + (w - u) * np.arange(n) / n
            pieces.append(seg)
        pieces.append(np.array([knots[-1]]))
    tau = np.concatenate(pieces)
    gaps = np.diff(tau)
    wl = np.concatenate(([0.0], 0.5 * gaps))
    wr = np.concatenate((0.5 * gaps, [0.0]))
    in_b = tau <= t_valve
    left_b = np.concatenate(([False], in_b[1:]))
    right_b = np.concatenate((in_b[1:], [False]))
    return FailTimeGrid(tau, wl + wr, t_valve, wl, wr, left_b, right_b)


def _row_breakpoints(field, params, n_rows):
    return [r * field.dt_grid for r in range(1, n_rows + 1) if r * field.dt_grid < params.dt_plan]


def _pre_fail(field, params, n_rows):
    # trajectories that have not failed sit at v0 t for every candidate
    total = 0.0
    for r in range(n_rows + 1):
        t = r * field.dt_grid
        if t >= params.dt_plan:
            break
        s = params.v0 * t
        row = field.values[r]
        x = s / field.ds_grid
        if s < 0 or x > field.n_s - 1:
            w = 0.0
        else:
            j = min(int(x), field.n_s - 2)
            w = (1 - (x - j)) * row[j] + (x - j) * row[j + 1]
        total += w * (params.dt_plan - t) * field.dt_grid
    return total / params.dt_plan


def _post_fail_parts(field, params, a_next, n_rows, kern, refine=1):
    grid = build_fail_grid(params, a_next, field.ds_grid / refine,
                           _row_breakpoints(field, params, n_rows))
    vt = ValveTransition.build(params.a_prev, a_next, params.kappa_mag)
    alpha = np.array([vt.alpha(x) for x in grid.samples])
    pb, pc = kern.direct_candidate(field.values, field.ds_grid, field.dt_grid, n_rows,
                                   params.v0, params.dt_plan, grid.samples, alpha,
                                   grid.w_left, grid.w_right, grid.left_b, grid.right_b)
    return pb / params.dt_plan, pc / params.dt_plan


def expected_penalty(field: PenaltyField, params: PlanParams, a_next, backend=None, refine=1):
    """(pre-failure, post-failure) expected penalty, normalized by dt_plan."""
    check_configuration(field, params)
    n_rows = integrated_rows(field, params)
    pb, pc = _post_fail_parts(field, params, a_next, n_rows, _backend.get(backend), refine)
    return _pre_fail(field, params, n_rows), pb + pc


def plan_direct(field: PenaltyField, params: PlanParams, backend=None,
                refine=1) -> PlanResult:
    """Exhaustive minimization of the post-failure expected penalty.

    ``refine`` divides every failure-time step, i.e. samples ``refine``
    trajectories per arc-length cell instead of one.
    """
    t0 = time.perf_counter()
    check_configuration(field, params)
    kern = _backend.get(backend)
    cands = candidate_set(params)
    n_rows = integrated_rows(field, params)
    evals = []
    for a in cands:
        pb, pc = _post_fail_parts(field, params, float(a), n_rows, kern, refine)
        evals.append(CandidateEvaluation(float(a), pb, pc,
                                         abs(a - params.a_prev) / params.kappa_mag))
    a_star, _, tie = select_optimum(cands, [e.total for e in evals], params.a_prev)
    pre = _pre_fail(field, params, n_rows)
    elapsed = time.perf_counter() - t0
    return PlanResult(a_star, evals, tie, 0.0, elapsed, solver="direct", pre_fail=pre,
                      extra={"backend": kern.NAME, "refine": refine})
