"""Scenario-driven command line front end.

Subcommands::

    analyze  <scenario> [--case X] [--json PATH]
    run      <scenario> --case X --out DIR [--iters K] [--seed S]
    verify   <scenario> [--case X] [--json PATH]
    examples list
    examples export [--out DIR]

``<scenario>`` is either a path to a scenario JSON file or the name of a
built-in (see ``examples list``).  Exit codes: 0 success, 2 a trackability
verdict came back negative (a verdict, not an error), 3 validation failure,
4 the divergence guard tripped (partial outputs are preserved).
"""

import argparse
import json
import os
import sys

import numpy as np

from .ilc import (
    DivergenceError,
    check_convergence_condition,
    fcs_diagnostic,
    ilc_run,
    predict_limit_overactuated,
    predict_limit_underactuated,
    robustness_run,
    simulate_error_limit,
    simulate_input_limit,
)
from .laplace import sample_exprs
from .ratmat import probe_points
from .scenarios import (
    ScenarioError,
    builtin_scenario,
    builtin_scenario_dict,
    builtin_scenario_names,
    load_scenario,
)
from .simulate import SampledSignal, sup_norm
from .trackability import (
    check_trackable_overactuated,
    check_trackable_underactuated,
)

EXIT_OK = 0
EXIT_UNTRACKABLE = 2
EXIT_VALIDATION = 3
EXIT_DIVERGED = 4


def _load(ref):
    if os.path.exists(ref):
        return load_scenario(ref)
    if ref in builtin_scenario_names():
        return builtin_scenario(ref)
    raise ScenarioError(
        f"{ref!r} is neither a scenario file nor a built-in "
        f"({', '.join(builtin_scenario_names())})"
    )


def _verdict(scenario, case_name):
    case = scenario.case(case_name)
    plant = scenario.plant
    if plant.q >= plant.p:
        return check_trackable_underactuated(plant, case.yd, seed=scenario.seed)
    return check_trackable_overactuated(plant, case.yd, seed=scenario.seed)


def cmd_analyze(args):
    sc = _load(args.scenario)
    names = [args.case] if args.case else sorted(sc.cases)
    cond = check_convergence_condition(sc.plant, sc.gain)
    out = {
        "scenario": sc.name,
        "condition": cond.to_dict(),
        "cases": {},
    }
    print(f"scenario {sc.name}: q={sc.plant.q} p={sc.plant.p} "
          f"condition {cond.side} rho={cond.rho:.6g} "
          f"{'satisfied' if cond.satisfied else 'VIOLATED'}")
    any_untrackable = False
    for name in names:
        v = _verdict(sc, name)
        out["cases"][name] = v.to_dict()
        kind = "trackable" if v.trackable else "untrackable"
        extra = "realizable" if v.realizable else "not realizable"
        res = "" if v.residual is None else f" residual={v.residual:.3g}"
        print(f"  case {name}: {kind}, {extra}, initial-condition "
              f"{'ok' if v.initial_condition_ok else 'VIOLATED'}{res}")
        if v.permutation and tuple(v.permutation) != tuple(range(sc.plant.p)):
            print(f"    column permutation for the leading block: {list(v.permutation)}")
        any_untrackable = any_untrackable or not v.trackable
    if args.json:
        with open(args.json, "w", newline="\n") as fh:
            json.dump(out, fh, indent=2)
            fh.write("\n")
    return EXIT_UNTRACKABLE if any_untrackable else EXIT_OK


def _write_signals(path, grid, named_signals):
    names, mats = [], []
    for base, sig in named_signals:
        for j in range(sig.dims):
            names.append(f"{base}{j + 1}")
        mats.append(sig.values)
    stacked = SampledSignal(grid, np.hstack(mats) if mats else np.zeros((grid.N, 0)))
    stacked.to_csv(path, names=names)


def cmd_run(args):
    sc = _load(args.scenario)
    case = sc.case(args.case)
    iters = sc.iterations if args.iters is None else args.iters
    if args.seed is not None:
        sc.seed = args.seed
        if sc.disturbance is not None:
            sc.disturbance.seed = args.seed
    os.makedirs(args.out, exist_ok=True)

    yd_sig = sample_exprs(case.yd, sc.grid)
    u0_sig = sample_exprs(case.u0, sc.grid)
    _write_signals(
        os.path.join(args.out, "signals_initial.csv"),
        sc.grid,
        [("yd", yd_sig), ("u", u0_sig)],
    )

    code = EXIT_OK
    try:
        if sc.disturbance is not None and not sc.disturbance.is_zero:
            report = robustness_run(
                sc.plant, sc.gain, case.yd, case.u0, iters, sc.grid,
                sc.disturbance, lam=sc.lam,
            )
        else:
            report = ilc_run(
                sc.plant, sc.gain, case.yd, case.u0, iters, sc.grid, lam=sc.lam
            )
    except DivergenceError as exc:
        print(f"divergence guard: {exc}", file=sys.stderr)
        report = exc.report
        code = EXIT_DIVERGED

    report.to_metrics_csv(os.path.join(args.out, "metrics.csv"))
    _write_signals(
        os.path.join(args.out, "signals_final.csv"),
        sc.grid,
        [
            ("yd", yd_sig),
            ("y", report.final_y),
            ("e", report.final_e),
            ("u", report.final_u),
        ],
    )
    summary = report.summary_dict()
    summary.update({"scenario": sc.name, "case": args.case, "seed": sc.seed})
    with open(os.path.join(args.out, "summary.json"), "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(
        f"case {args.case}: {report.iterations} iterations, final sup error "
        f"{report.final_sup_error:.6g}"
        + (" (diverged)" if report.diverged else "")
    )
    return code


def _check(checks, name, passed, measured, tol):
    checks.append({"name": name, "pass": bool(passed), "measured": measured, "tolerance": tol})
    status = "PASS" if passed else "FAIL"
    print(f"  [{status}] {name}: measured {measured:.3g} (tolerance {tol:.3g})")


def cmd_verify(args):
    """Cross-check simulated limits against the closed-form predictions."""
    sc = _load(args.scenario)
    names = [args.case] if args.case else sorted(sc.cases)
    plant, gain, grid = sc.plant, sc.gain, sc.grid
    cond = check_convergence_condition(plant, gain)
    checks = []
    reports = {}

    def run_case(name):
        if name not in reports:
            case = sc.case(name)
            reports[name] = ilc_run(
                plant, gain, case.yd, case.u0, sc.iterations, grid, lam=sc.lam
            )
        return reports[name]

    print(f"verify {sc.name}: condition {cond.side} rho={cond.rho:.6g}")
    for name in names:
        case = sc.case(name)
        v = _verdict(sc, name)
        print(f" case {name} ({'trackable' if v.trackable else 'untrackable'}):")
        report = run_case(name)
        scale = sup_norm(sample_exprs(case.yd, grid))
        diag = fcs_diagnostic(report)
        _check(checks, f"{name}: delta-u contraction ratio", diag.is_contractive,
               diag.fitted_rho, report.lambda_info.rho_bound + 0.05)

        if plant.q >= plant.p:
            pts = probe_points(12, seed=sc.seed + 1)
            if v.trackable:
                _check(checks, f"{name}: final tracking error", report.final_sup_error
                       <= 1e-2 * scale, report.final_sup_error, 1e-2 * scale)
                u_inf, _ = predict_limit_underactuated(plant, gain, case.yd)
                gap = max(
                    float(np.max(np.abs(u_inf(s0) - v.witness(s0)))) for s0 in pts
                )
                _check(checks, f"{name}: learned limit equals desired input",
                       gap <= 1e-7, gap, 1e-7)
            else:
                e_inf = simulate_error_limit(plant, gain, case.yd, grid)
                plateau_gap = sup_norm(SampledSignal(grid, report.final_e.values - e_inf.values))
                _check(checks, f"{name}: plateau matches limiting-error formula",
                       plateau_gap <= 2e-2, plateau_gap, 2e-2)
                late = report.delta_lambda_norms()[-5:]
                _check(checks, f"{name}: input still converges", late.size == 0
                       or np.all(late <= 1e-6 * max(1.0, scale)),
                       float(late.max(initial=0.0)), 1e-6 * max(1.0, scale))
        else:
            _check(checks, f"{name}: final tracking error", report.final_sup_error
                   <= 1e-2 * scale, report.final_sup_error, 1e-2 * scale)
            pts = probe_points(12, seed=sc.seed + 1)
            u_inf = predict_limit_overactuated(plant, gain, case.yd, case.u0)
            from .laplace import transform_vector

            ydt = transform_vector(case.yd)
            resid = 0.0
            for s0 in pts:
                r = plant.rhs_eval(ydt, s0)
                lhs = plant.g1(s0) @ u_inf(s0)
                resid = max(resid, float(np.max(np.abs(lhs - r))) /
                            (1.0 + float(np.max(np.abs(r)))))
            _check(checks, f"{name}: learned limit solves the plant equation",
                   resid <= 1e-7, resid, 1e-7)
            u_limit = simulate_input_limit(plant, gain, case.yd, case.u0, grid)
            gap = sup_norm(SampledSignal(grid, report.final_u.values - u_limit.values))
            _check(checks, f"{name}: simulated input matches limit formula",
                   gap <= 2e-2, gap, 2e-2)

    # Paired-case checks: same trajectory, different initial inputs.
    done = set()
    for a in names:
        for b in sorted(sc.cases):
            if a == b or (b, a) in done:
                continue
            if sc.cases[a].yd != sc.cases[b].yd:
                continue
            done.add((a, b))
            ra, rb = run_case(a), run_case(b)
            gap = sup_norm(SampledSignal(grid, ra.final_u.values - rb.final_u.values))
            if plant.q >= plant.p:
                _check(checks, f"{a} vs {b}: learned inputs agree (uniqueness)",
                       gap <= 2e-2, gap, 2e-2)
            else:
                _check(checks, f"{a} vs {b}: learned inputs differ (initial-input dependence)",
                       gap > 0.2, gap, 0.2)

    if args.json:
        with open(args.json, "w", newline="\n") as fh:
            json.dump({"scenario": sc.name, "checks": checks}, fh, indent=2)
            fh.write("\n")
    failed = [c for c in checks if not c["pass"]]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else 1


def cmd_examples(args):
    if args.action == "list":
        for name in builtin_scenario_names():
            sc = builtin_scenario(name)
            print(f"{name}: q={sc.plant.q} p={sc.plant.p} T={sc.grid.T:g} "
                  f"K={sc.iterations} cases={','.join(sorted(sc.cases))}")
        return EXIT_OK
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    for name in builtin_scenario_names():
        path = os.path.join(out, f"{name}.json")
        with open(path, "w", newline="\n") as fh:
            json.dump(builtin_scenario_dict(name), fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ilctrack",
        description="Trackability analysis and ILC simulation for MIMO LTI systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="trackability verdicts and convergence certificate")
    p.add_argument("scenario")
    p.add_argument("--case")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("run", help="run the learning iteration, write CSV telemetry")
    p.add_argument("scenario")
    p.add_argument("--case", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("verify", help="cross-check simulated limits vs closed forms")
    p.add_argument("scenario")
    p.add_argument("--case")
    p.add_argument("--json", help="also write the checks as JSON")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("examples", help="list or export the built-in scenarios")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("--out")
    p.set_defaults(fn=cmd_examples)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
