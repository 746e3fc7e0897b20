"""Command-line interface: ``brakeplan {plan,compare,gen,render,bench}``.

Exit codes: 0 ok, 1 solver comparison failed, 2 configuration or usage
error, 3 unreadable or malformed data.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import bench
from .direct_solver import plan_direct
from .errors import ConfigurationError, FieldFormatError, ParameterError
from .fast_solver import plan
from .field import (ScenarioSpec, TrajectoryFan, generate_brownian, generate_scenario,
                    load_field, render_pgm, write_csv)
from .kinematics import PlanParams

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3
COMPARE_RTOL = 0.01


def _add_params(p):
    p.add_argument("--field", required=True, help="penalty field CSV")
    p.add_argument("--v0", type=float, required=True, help="current speed [m/s]")
    p.add_argument("--a-prev", type=float, required=True, help="current preset deceleration [m/s^2]")
    p.add_argument("--a-min", type=float, default=-9.0)
    p.add_argument("--a-max", type=float, default=-1.0)
    p.add_argument("--dt-plan", type=float, default=0.25, help="replanning interval [s]")
    p.add_argument("--t-hzn", type=float, default=10.0, help="planning horizon [s]")
    p.add_argument("--kappa", type=float, default=100.0, help="valve speed [m/s^3]")
    p.add_argument("--da", type=float, default=0.1, help="candidate spacing [m/s^2]")
    p.add_argument("--s-cap", type=float, default=None, help="maximum stopping distance [m]")
    p.add_argument("--threads", type=int, default=1, help="threads for the fast precompute")
    p.add_argument("--backend", choices=["compiled", "python"], default=None)


def _params(args):
    return PlanParams(v0=args.v0, a_prev=args.a_prev, a_min=args.a_min, a_max=args.a_max,
                      dt_plan=args.dt_plan, t_hzn=args.t_hzn, kappa_mag=args.kappa,
                      da=args.da, s_cap=args.s_cap)


def _write_json(obj, path):
    text = json.dumps(obj, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def cmd_plan(args):
    params = _params(args)
    field = load_field(args.field)
    if args.solver == "direct":
        res = plan_direct(field, params, backend=args.backend, refine=args.refine)
    else:
        res = plan(field, params, threads=args.threads, backend=args.backend)
    out = res.to_dict()
    out["params"] = params.to_dict()
    _write_json(out, args.out)
    print(f"a* = {res.a_star:g} m/s^2 ({res.solver})", file=sys.stderr)
    return EXIT_OK


def compare_results(fast, direct, rtol=COMPARE_RTOL, floor=1e-6):
    """Per-candidate deltas and the agreement verdict of two PlanResults."""
    rows = []
    worst = 0.0
    for e, d in zip(fast.evaluations, direct.evaluations):
        delta = e.total - d.total
        rel = abs(delta) / max(d.total, floor)
        if d.total > floor:
            worst = max(worst, rel)
        rows.append({"a_next": e.a_next, "fast": e.total, "direct": d.total,
                     "delta": delta, "rel": rel})
    agree = fast.a_star == direct.a_star
    return {
        "a_star_fast": fast.a_star,
        "a_star_direct": direct.a_star,
        "argmin_agree": agree,
        "max_rel_deviation": worst,
        "pre_fail": direct.pre_fail,
        "candidates": rows,
        "ok": agree and worst <= rtol,
    }


def cmd_compare(args):
    params = _params(args)
    field = load_field(args.field)
    fast = plan(field, params, threads=args.threads, backend=args.backend)
    direct = plan_direct(field, params, backend=args.backend, refine=args.refine)
    report = compare_results(fast, direct)
    _write_json(report, args.out)
    print(f"fast a*={fast.a_star:g} direct a*={direct.a_star:g} "
          f"max rel dev={report['max_rel_deviation']:.3e}", file=sys.stderr)
    return EXIT_OK if report["ok"] else EXIT_MISMATCH


def cmd_gen(args):
    if args.scenario:
        spec = ScenarioSpec.from_json(args.scenario)
        field = generate_scenario(spec)
    else:
        field = generate_brownian(args.seed, args.nt, args.ns, args.dt, args.ds,
                                  smoothness=args.smoothness)
    write_csv(field, args.out)
    return EXIT_OK


def cmd_render(args):
    field = load_field(args.field)
    overlay = None
    if args.plan:
        with open(args.plan) as fh:
            res = json.load(fh)
        try:
            params = PlanParams(**res["params"])
            a_star = float(res["a_star"])
        except (KeyError, TypeError) as exc:
            raise FieldFormatError(f"{args.plan}: not a plan result ({exc})") from None
        overlay = TrajectoryFan.for_plan(params, a_star, field.n_t, field.dt_grid)
    render_pgm(field, args.out, overlay)
    return EXIT_OK


def cmd_bench(args):
    fields = bench.reference_fields(args.fields)
    if args.suite == "speedup":
        rep = bench.run_speedup(fields, trials=args.trials, threads=args.threads)
        rows = rep.rows()
        print(f"worst-case ratio fast/direct = {rep.ratio:.3f} "
              f"(median ratio {rep.median_ratio:.3f}, {len(fields)} fields, "
              f"{rep.trials} trials)")
    elif args.suite == "v0":
        rows = bench.run_v0_sweep(fields=fields, trials=args.trials)
    elif args.suite == "scaling":
        rows = bench.run_scaling()
    else:
        rows = bench.run_backends(fields=fields, trials=args.trials)
    print(bench.summary(rows))
    if args.out:
        bench.write_csv(rows, args.out)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="brakeplan", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="choose the preset deceleration for one cycle")
    _add_params(p)
    p.add_argument("--solver", choices=["fast", "direct"], default="fast")
    p.add_argument("--refine", type=int, default=1,
                   help="direct solver: failure-time samples per arc-length cell")
    p.add_argument("--out", default="-", help="result JSON (default: stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("compare", help="run both solvers and report deviations")
    _add_params(p)
    p.add_argument("--refine", type=int, default=8,
                   help="failure-time samples per arc-length cell for the direct oracle")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen", help="generate a penalty field CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--brownian", action="store_true", help="smoothed Brownian noise")
    src.add_argument("--scenario", metavar="SPEC.json", help="bands and zones description")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nt", type=int, default=100)
    p.add_argument("--ns", type=int, default=800)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--ds", type=float, default=0.25)
    p.add_argument("--smoothness", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("render", help="write a PGM heat map of a field")
    p.add_argument("--field", required=True)
    p.add_argument("--plan", help="plan result JSON whose trajectories are overlaid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="timing suites")
    p.add_argument("--suite", choices=["speedup", "v0", "scaling", "backends"],
                   default="speedup")
    p.add_argument("--fields", type=int, default=10)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="CSV report")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ParameterError) as exc:
        print(f"brakeplan: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FieldFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"brakeplan: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
