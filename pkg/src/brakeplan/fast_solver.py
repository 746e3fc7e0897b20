"""Prefix-sum solver for the preset braking deceleration.

Per time row, three antiderivatives over arc length are built once:

* ``ic_rest``: plain integral of W (failures that already stopped),
* ``ic_mov``: integral of W / sqrt(2 v0 t - 2 s) (failures still braking
  after the valve settled; the factor 1/sqrt(-a_next) is applied later),
* ``ib``: integral of W against the transition failure time, one array
  per valve direction because the intermediate decelerations differ.

Every candidate deceleration is then scored with a handful of O(1)
lookups per row.  The pre-failure part of the expectation does not
depend on the candidate and is left out.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _backend
from .errors import ConfigurationError, InfeasibleCapError
from .field import PenaltyField
from .kinematics import PlanParams, envelope

__all__ = [
    "CandidateEvaluation",
    "PlanResult",
    "RegionAntiderivatives",
    "candidate_set",
    "precompute",
    "evaluate_candidate",
    "evaluate_all",
    "plan",
    "select_optimum",
    "integrated_rows",
]

TIE_RTOL = 1e-12


@dataclass
class CandidateEvaluation:
    a_next: float
    p_b: float
    p_c: float
    t_valve: float

    @property
    def total(self):
        return self.p_b + self.p_c

    def to_dict(self):
        return {"a_next": self.a_next, "p_b": self.p_b, "p_c": self.p_c,
                "total": self.total, "t_valve": self.t_valve}


@dataclass
class PlanResult:
    a_star: float
    evaluations: list
    tie_break_applied: bool
    precompute_time: float = 0.0
    evaluate_time: float = 0.0
    solver: str = "fast"
    pre_fail: float | None = None
    extra: dict = dc_field(default_factory=dict)

    @property
    def totals(self):
        return np.array([e.total for e in self.evaluations])

    @property
    def candidates(self):
        return np.array([e.a_next for e in self.evaluations])

    def to_dict(self):
        out = {
            "a_star": self.a_star,
            "solver": self.solver,
            "candidates": [e.to_dict() for e in self.evaluations],
            "tie_break_applied": self.tie_break_applied,
            "timings": {"precompute_s": self.precompute_time, "evaluate_s": self.evaluate_time},
        }
        if self.pre_fail is not None:
            out["pre_fail"] = self.pre_fail
        out.update(self.extra)
        return out


def candidate_set(params: PlanParams) -> np.ndarray:
    """Evenly spaced decelerations from ``a_min`` to ``a_max``, minus capped ones."""
    span = params.a_max - params.a_min
    n = int(math.floor(span / params.da + 1e-9))
    cands = np.round(params.a_min + np.arange(n + 1) * params.da, 12)
    if params.a_max - cands[-1] > 1e-9:
        cands = np.append(cands, params.a_max)
    else:
        cands[-1] = params.a_max
    if params.s_cap is not None:
        v0 = params.v0
        worst = v0 * params.dt_plan + v0 * v0 / (2.0 * np.abs(cands))
        cands = cands[worst <= params.s_cap * (1 + 1e-12)]
        if cands.size == 0:
            raise InfeasibleCapError(
                f"no deceleration in [{params.a_min}, {params.a_max}] stops within "
                f"s_cap={params.s_cap} m at v0={v0} m/s")
    return cands


def integrated_rows(field: PenaltyField, params: PlanParams) -> int:
    """Index of the last row integrated (rows 1..n are used)."""
    n = int(math.floor(params.t_hzn / field.dt_grid + 1e-9))
    return min(n, field.n_t - 1)


def check_configuration(field: PenaltyField, params: PlanParams):
    if field.t0 != 0.0:
        raise ConfigurationError(f"field must start at the cycle origin, t0={field.t0}")
    if not field.dt_grid > params.t_valve_max:
        raise ConfigurationError(
            f"row spacing dt={field.dt_grid} must exceed the longest valve transition "
            f"{params.t_valve_max:.4g} s")


def select_optimum(candidates, totals, a_prev):
    """Argmin with ties broken by least valve motion, then stronger braking."""
    totals = np.asarray(totals, dtype=float)
    cands = np.asarray(candidates, dtype=float)
    best = totals.min()
    tied = np.flatnonzero(totals <= best + TIE_RTOL * max(abs(best), 1e-300))
    if tied.size == 1:
        return float(cands[tied[0]]), int(tied[0]), False
    order = sorted(tied, key=lambda i: (abs(cands[i] - a_prev), cands[i]))
    return float(cands[order[0]]), int(order[0]), True


@dataclass
class RegionAntiderivatives:
    """Per-row prefix arrays over the reachable arc-length window."""

    field: PenaltyField
    params: PlanParams
    candidates: np.ndarray
    n_rows: int
    c_lo: np.ndarray
    c_hi: np.ndarray
    offsets: np.ndarray
    ic_rest: np.ndarray
    ic_mov: np.ndarray
    tau_neg: np.ndarray
    ib_neg: np.ndarray
    tau_pos: np.ndarray
    ib_pos: np.ndarray
    ref_neg: np.ndarray
    ref_pos: np.ndarray
    img_neg: np.ndarray
    img_pos: np.ndarray
    backend: str

    def row_slice(self, r):
        off = self.offsets[r]
        return slice(off, off + self.c_hi[r] - self.c_lo[r] + 1)

    def row(self, name, r):
        """Prefix array ``name`` for row ``r`` as a column-aligned view."""
        return getattr(self, name)[self.row_slice(r)]


def precompute(field: PenaltyField, params: PlanParams, candidates=None, threads=1,
               backend=None) -> RegionAntiderivatives:
    check_configuration(field, params)
    kern = _backend.get(backend)
    cands = candidate_set(params) if candidates is None else np.asarray(candidates, dtype=float)
    n_rows = integrated_rows(field, params)
    dt, ds = field.dt_grid, field.ds_grid
    t = np.arange(n_rows + 1) * dt
    lower, upper = envelope(params, t, cands.min(), cands.max())
    last = field.n_s - 1
    c_lo = np.clip(np.floor(lower / ds).astype(np.int64) - 1, 0, last)
    c_hi = np.clip(np.ceil(upper / ds).astype(np.int64) + 1, 0, last)
    c_lo = np.minimum(c_lo, c_hi)
    lengths = c_hi - c_lo + 1
    lengths[0] = 0
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(lengths)[:-1]
    total = int(lengths.sum())
    # one block for all six prefix arrays; every entry is written by the kernel
    names = ("ic_rest", "ic_mov", "tau_neg", "ib_neg", "tau_pos", "ib_pos")
    block = np.empty((len(names), total))
    arrays = dict(zip(names, block))
    ref_neg = np.zeros(n_rows + 1)
    ref_pos = np.zeros(n_rows + 1)
    img_neg = np.zeros((n_rows + 1, 2))
    img_pos = np.zeros((n_rows + 1, 2))
    a_prev, kmag = params.a_prev, params.kappa_mag
    tau_max_neg = (a_prev - cands.min()) / kmag if cands.min() < a_prev else 0.0
    tau_max_pos = (cands.max() - a_prev) / kmag if cands.max() > a_prev else 0.0
    W = field.values

    def work(r0, r1):
        kern.precompute_rows(W, ds, dt, r0, r1, c_lo, c_hi, offsets, params.v0, a_prev,
                             kmag, tau_max_neg, tau_max_pos,
                             arrays["ic_rest"], arrays["ic_mov"], arrays["tau_neg"],
                             arrays["ib_neg"], arrays["tau_pos"], arrays["ib_pos"],
                             ref_neg, ref_pos, img_neg, img_pos)

    if threads > 1 and n_rows > 1:
        bounds = np.linspace(1, n_rows + 1, min(threads, n_rows) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda ab: work(*ab), zip(bounds[:-1], bounds[1:])))
    else:
        work(1, n_rows + 1)
    return RegionAntiderivatives(field, params, cands, n_rows, c_lo, c_hi, offsets,
                                 ref_neg=ref_neg, ref_pos=ref_pos, img_neg=img_neg,
                                 img_pos=img_pos, backend=kern.NAME, **arrays)


def evaluate_all(pre: RegionAntiderivatives, candidates=None):
    """Normalized (p_b, p_c) arrays for every candidate."""
    params = pre.params
    cands = pre.candidates if candidates is None else np.asarray(candidates, dtype=float)
    pb = np.zeros(cands.size)
    pc = np.zeros(cands.size)
    if params.v0 == 0.0:
        # vehicle never leaves s = 0: both parts reduce to W(t, 0) times the failure window
        t = np.arange(1, pre.n_rows + 1) * pre.field.dt_grid
        w0 = pre.field.values[1:pre.n_rows + 1, 0]
        hi = np.minimum(t, params.dt_plan)
        tv = np.abs(cands - params.a_prev) / params.kappa_mag
        pb = (w0[None, :] * tv[:, None]).sum(axis=1) * pre.field.dt_grid
        pc = (w0[None, :] * (hi[None, :] - tv[:, None])).sum(axis=1) * pre.field.dt_grid
    else:
        kern = _backend.get(pre.backend)
        kern.evaluate_candidates(pre.field.values, pre.field.ds_grid, pre.field.dt_grid,
                                 pre.n_rows, pre.c_lo, pre.c_hi, pre.offsets, params.v0,
                                 params.a_prev, params.kappa_mag, params.dt_plan,
                                 pre.ic_rest, pre.ic_mov, pre.tau_neg, pre.ib_neg,
                                 pre.tau_pos, pre.ib_pos, pre.ref_neg, pre.ref_pos,
                                 pre.img_neg, pre.img_pos, cands, pb, pc)
    return pb / params.dt_plan, pc / params.dt_plan


def evaluate_candidate(pre: RegionAntiderivatives, params: PlanParams,
                       a_next) -> CandidateEvaluation:
    """Score one deceleration against precomputed arrays built for ``params``."""
    p0 = pre.params
    if (params.v0, params.a_prev, params.kappa_mag, params.dt_plan) != (
            p0.v0, p0.a_prev, p0.kappa_mag, p0.dt_plan):
        raise ConfigurationError("precomputed arrays were built for different plan parameters")
    lo, hi = pre.candidates.min(), pre.candidates.max()
    if not lo - 1e-12 <= a_next <= hi + 1e-12:
        raise ConfigurationError(f"a_next={a_next} outside the precomputed range [{lo}, {hi}]")
    pb, pc = evaluate_all(pre, [a_next])
    return CandidateEvaluation(float(a_next), float(pb[0]), float(pc[0]),
                               abs(a_next - p0.a_prev) / p0.kappa_mag)


def plan(field: PenaltyField, params: PlanParams, threads=1, backend=None) -> PlanResult:
    """Score every candidate and return the expected-penalty minimizer."""
    t0 = time.perf_counter()
    pre = precompute(field, params, threads=threads, backend=backend)
    t1 = time.perf_counter()
    pb, pc = evaluate_all(pre)
    a_star, _, tie = select_optimum(pre.candidates, pb + pc, params.a_prev)
    t2 = time.perf_counter()
    evals = [CandidateEvaluation(float(a), float(b), float(c),
                                 abs(a - params.a_prev) / params.kappa_mag)
             for a, b, c in zip(pre.candidates, pb, pc)]
    return PlanResult(a_star, evals, tie, t1 - t0, t2 - t1, solver="fast",
                      extra={"backend": pre.backend})
