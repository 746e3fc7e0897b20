"""Wall-clock harness for the two solvers.

Times are taken with ``time.perf_counter`` after warmup runs.  Worst
case is the maximum over the timed trials, medians are reported next to
it because single worst-case samples are noisy on shared machines.
"""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .direct_solver import plan_direct
from .fast_solver import candidate_set, evaluate_all, precompute, select_optimum
from .errors import ParameterError
from .field import generate_brownian
from .kinematics import PlanParams

__all__ = [
    "BenchReport",
    "Timing",
    "REFERENCE",
    "reference_fields",
    "time_call",
    "time_interleaved",
    "fast_stages",
    "run_speedup",
    "run_v0_sweep",
    "run_scaling",
    "run_backends",
    "write_csv",
    "summary",
]

CSV_COLUMNS = ["scenario", "solver", "stage", "v0", "cap", "n_candidates", "ds",
               "worst_s", "median_s"]

# reference operating point for the speedup comparison
REFERENCE = PlanParams(v0=30.0, a_prev=-5.0)
REF_GRID = dict(n_t=100, n_s=800, dt_grid=0.1, ds_grid=0.25)


@dataclass
class Timing:
    samples: list

    @property
    def worst(self):
        return max(self.samples)

    @property
    def median(self):
        return statistics.median(self.samples)


@dataclass
class BenchReport:
    scenario: str
    fast_worst: float
    direct_worst: float
    fast_median: float
    direct_median: float
    trials: int
    params: dict
    a_star: list = dc_field(default_factory=list)
    deterministic: bool = True

    def __post_init__(self):
        if self.trials < 10:
            raise ParameterError("a speedup report needs at least 10 timed trials")

    @property
    def ratio(self):
        return self.fast_worst / self.direct_worst

    @property
    def median_ratio(self):
        return self.fast_median / self.direct_median

    def rows(self):
        v0 = self.params.get("v0")
        cap = self.params.get("s_cap")
        n = self.params.get("n_candidates")
        ds = self.params.get("ds")
        return [
            dict(scenario=self.scenario, solver="fast", stage="total", v0=v0, cap=cap,
                 n_candidates=n, ds=ds, worst_s=self.fast_worst, median_s=self.fast_median),
            dict(scenario=self.scenario, solver="direct", stage="total", v0=v0, cap=cap,
                 n_candidates=n, ds=ds, worst_s=self.direct_worst, median_s=self.direct_median),
        ]


def reference_fields(n=10, seed0=0, **grid):
    g = dict(REF_GRID, **grid)
    return [generate_brownian(seed0 + k, g["n_t"], g["n_s"], g["dt_grid"], g["ds_grid"])
            for k in range(n)]


def time_call(fn, *args, trials=10, warmup=2, **kwargs):
    """Run ``fn`` ``warmup`` times untimed, then ``trials`` timed runs."""
    out = None
    for _ in range(warmup):
        out = fn(*args, **kwargs)
    samples = []
    for _ in range(trials):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        samples.append(time.perf_counter() - t0)
    return Timing(samples), out


def _fast_cycle(field, params, threads=1, backend=None):
    # precompute + evaluation + argmin, the per-cycle cost of the method
    pre = precompute(field, params, threads=threads, backend=backend)
    pb, pc = evaluate_all(pre)
    return select_optimum(pre.candidates, pb + pc, params.a_prev)[0]


def time_interleaved(calls, trials=10, warmup=2):
    """Time several zero-argument callables round-robin.

    The starting call rotates every round so slow drifts of the machine
    spread evenly over all of them.  Returns one Timing per callable.
    """
    for _ in range(warmup):
        for fn in calls:
            fn()
    samples = [[] for _ in calls]
    n = len(calls)
    for k in range(trials):
        for j in range(n):
            i = (j + k) % n
            t0 = time.perf_counter()
            calls[i]()
            samples[i].append(time.perf_counter() - t0)
    return [Timing(s) for s in samples]


def fast_stages(field, params, trials=10, warmup=2, threads=1, backend=None):
    """(precompute Timing, evaluate Timing) for the fast solver."""
    cands = candidate_set(params)
    pre_t, pre = time_call(precompute, field, params, candidates=cands, threads=threads,
                           backend=backend, trials=trials, warmup=warmup)
    ev_t, _ = time_call(evaluate_all, pre, trials=trials, warmup=warmup)
    return pre_t, ev_t


def run_speedup(fields, params=REFERENCE, trials=10, warmup=2, threads=1,
                backend=None, scenario="speedup"):
    """Worst-case and median times of both solvers over ``fields``."""
    fast_all, direct_all, stars = [], [], []
    deterministic = True
    for f in fields:
        tf, a_fast = time_call(_fast_cycle, f, params, threads=threads, backend=backend,
                               trials=trials, warmup=warmup)
        td, res = time_call(plan_direct, f, params, backend=backend,
                            trials=trials, warmup=warmup)
        again = _fast_cycle(f, params, threads=threads, backend=backend)
        deterministic &= again == a_fast
        fast_all.append(tf)
        direct_all.append(td)
        stars.append((a_fast, res.a_star))
    # per-field medians; worst case is the slowest field's worst trial
    fw = max(t.worst for t in fast_all)
    dw = max(t.worst for t in direct_all)
    fm = max(t.median for t in fast_all)
    dm = max(t.median for t in direct_all)
    snap = dict(params.to_dict(), n_candidates=int(candidate_set(params).size),
                ds=fields[0].ds_grid, n_fields=len(fields))
    return BenchReport(scenario, fw, dw, fm, dm, trials, snap, stars, deterministic)


def run_v0_sweep(params=REFERENCE, v0_list=(2.0, 10.0, 20.0, 30.0, 40.0),
                 s_caps=(100.0, 200.0), fields=None, trials=10, warmup=2, backend=None):
    """Timings of both solvers over speeds and stopping-distance caps."""
    fields = fields or reference_fields(1)
    f = fields[0]
    rows = []
    for cap in s_caps:
        for v0 in v0_list:
            p = params.replace(v0=v0, s_cap=cap)
            n = int(candidate_set(p).size)
            tf, _ = time_call(_fast_cycle, f, p, backend=backend, trials=trials, warmup=warmup)
            td, _ = time_call(plan_direct, f, p, backend=backend, trials=trials, warmup=warmup)
            for solver, t in (("fast", tf), ("direct", td)):
                rows.append(dict(scenario="v0_sweep", solver=solver, stage="total", v0=v0,
                                 cap=cap, n_candidates=n, ds=f.ds_grid, worst_s=t.worst,
                                 median_s=t.median))
    return rows


def _with_count(params, n):
    return params.replace(da=(params.a_max - params.a_min) / (n - 1))


def run_scaling(params=REFERENCE, counts=(21, 41, 81, 161), ds_list=(0.5, 0.25, 0.125),
                seed=0, trials=61, direct_trials=15, warmup=2, backend=None):
    """Stage times against candidate count and arc-length resolution.

    Configurations within each group are timed interleaved.  Precompute
    calls take a few milliseconds, so they get many more trials than the
    direct solver to keep the medians stable to about a percent.
    """
    rows = []
    base = generate_brownian(seed, REF_GRID["n_t"], REF_GRID["n_s"], REF_GRID["dt_grid"],
                             REF_GRID["ds_grid"])
    plist = [_with_count(params, n) for n in counts]
    clist = [candidate_set(p) for p in plist]
    pres = [precompute(base, p, candidates=c, backend=backend) for p, c in zip(plist, clist)]
    timings = time_interleaved(
        [(lambda p=p, c=c: precompute(base, p, candidates=c, backend=backend))
         for p, c in zip(plist, clist)]
        + [(lambda pre=pre: evaluate_all(pre)) for pre in pres],
        trials=trials, warmup=warmup)
    timings += time_interleaved(
        [(lambda p=p: plan_direct(base, p, backend=backend)) for p in plist],
        trials=direct_trials, warmup=1)
    k = len(counts)
    for i, (n, p) in enumerate(zip(counts, plist)):
        for solver, stage, t in (("fast", "precompute", timings[i]),
                                 ("fast", "evaluate", timings[k + i]),
                                 ("direct", "total", timings[2 * k + i])):
            rows.append(dict(scenario="scaling_candidates", solver=solver, stage=stage,
                             v0=p.v0, cap=p.s_cap, n_candidates=n, ds=base.ds_grid,
                             worst_s=t.worst, median_s=t.median))
    extent = REF_GRID["n_s"] * REF_GRID["ds_grid"]
    fields = [generate_brownian(seed, REF_GRID["n_t"], int(round(extent / ds)),
                                REF_GRID["dt_grid"], ds) for ds in ds_list]
    cands = candidate_set(params)
    timings = time_interleaved(
        [(lambda f=f: precompute(f, params, candidates=cands, backend=backend)) for f in fields],
        trials=trials, warmup=warmup)
    for ds, t in zip(ds_list, timings):
        rows.append(dict(scenario="scaling_ds", solver="fast", stage="precompute",
                         v0=params.v0, cap=params.s_cap, n_candidates=int(cands.size),
                         ds=ds, worst_s=t.worst, median_s=t.median))
    return rows


def run_backends(params=REFERENCE, fields=None, trials=10, warmup=2):
    """Compiled versus pure-Python kernels for both solvers."""
    from . import _backend

    fields = fields or reference_fields(1)
    f = fields[0]
    rows = []
    for name in _backend.available():
        tf, _ = time_call(_fast_cycle, f, params, backend=name, trials=trials, warmup=warmup)
        td, _ = time_call(plan_direct, f, params, backend=name, trials=trials, warmup=warmup)
        for solver, t in (("fast", tf), ("direct", td)):
            rows.append(dict(scenario=f"backend_{name}", solver=solver, stage="total",
                             v0=params.v0, cap=params.s_cap,
                             n_candidates=int(candidate_set(params).size), ds=f.ds_grid,
                             worst_s=t.worst, median_s=t.median))
    return rows


def log_slope(xs, ys):
    """Least-squares slope of log(ys) against log(xs)."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in CSV_COLUMNS})


def summary(rows):
    """Human-readable table of benchmark rows."""
    lines = [f"{'scenario':<20} {'solver':<7} {'stage':<11} {'v0':>5} {'cap':>6} "
             f"{'|A|':>4} {'ds':>6} {'worst ms':>9} {'median ms':>9}"]
    for r in rows:
        cap = "-" if r.get("cap") is None else f"{r['cap']:g}"
        lines.append(f"{r['scenario']:<20} {r['solver']:<7} {r['stage']:<11} {r['v0']:>5g} "
                     f"{cap:>6} {r['n_candidates']:>4} {r['ds']:>6g} "
                     f"{1e3 * r['worst_s']:>9.3f} {1e3 * r['median_s']:>9.3f}")
    return "\n".join(lines)
