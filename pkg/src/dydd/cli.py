"""Command-line harness.

    dydd balance    --scenario file [--out report.json]
    dydd solve      --scenario file [--mode additive|multiplicative] [--workers k]
    dydd experiment --example {1,2,3,4} --case ID [--seed N] [--format csv|json]

Exit codes: 0 success, 2 not converged / not balanced, 3 invalid scenario or
arguments, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_BAD_SCENARIO = 3
EXIT_IO = 4

# cap BLAS threading before numpy initializes when we are the entry point;
# timed phases rely on it and child workers inherit the setting
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; keep 2 for solver status
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_SCENARIO, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="dydd", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-rounds", type=int, default=None, help="override max balance rounds")
    common.add_argument("--tol", type=float, default=None, help="override Schwarz tolerance")
    common.add_argument("--mu", type=float, default=None, help="override overlap penalty weight")
    common.add_argument("--overlap", type=int, default=None, help="override column overlap width")
    common.add_argument("--out", type=str, default=None, help="write the report to this path")

    p_bal = sub.add_parser("balance", parents=[common], help="run DyDD balancing only")
    p_bal.add_argument("--scenario", required=True, help="scenario JSON file")

    p_sol = sub.add_parser("solve", parents=[common], help="balance, then solve the DD-CLS problem")
    p_sol.add_argument("--scenario", required=True, help="scenario JSON file")
    p_sol.add_argument("--mode", choices=("additive", "multiplicative"), default="additive")
    p_sol.add_argument(
        "--workers",
        type=int,
        default=None,
        help="run the additive sweep on a process pool; the pool always holds "
        "one worker per subdomain, so any positive value enables it",
    )

    p_exp = sub.add_parser("experiment", parents=[common], help="full timed experiment")
    p_exp.add_argument("--example", type=int, required=True, choices=(1, 2, 3, 4))
    p_exp.add_argument("--case", required=True, help="case id, e.g. 1 or p8")
    p_exp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_exp.add_argument("--format", choices=("csv", "json"), default="json")
    p_exp.add_argument("--reps", type=int, default=5, help="timing repetitions (median)")
    return parser


def _apply_overrides(scenario_dict: dict, args) -> dict:
    for cli_key, field in (
        ("max_rounds", "max_rounds"),
        ("tol", "tol"),
        ("mu", "mu"),
        ("overlap", "s"),
    ):
        value = getattr(args, cli_key, None)
        if value is not None:
            scenario_dict[field] = value
    return scenario_dict


def _write_or_print(text: str, path) -> None:
    from .errors import IoFailure

    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_scenario_file(path, args):
    from .errors import IoFailure, ScenarioError
    from .scenarios import scenario_from_dict

    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(_apply_overrides(obj, args))


def _cmd_balance(args) -> int:
    from .harness import run_balance

    sc = _load_scenario_file(args.scenario, args)
    trace, _, _ = run_balance(sc)
    payload = {
        "p": sc.p,
        "l_in": [int(v) for v in trace.l_in],
        "l_r": [int(v) for v in trace.l_r],
        "l_fin": [int(v) for v in trace.l_fin],
        "rounds": trace.rounds,
        "E": trace.E,
        "balanced": trace.balanced,
        "T_DyDD": trace.t_total,
        "T_r": trace.t_split,
        "Oh_DyDD": (trace.t_split / trace.t_total) if trace.t_total > 0 else 0.0,
    }
    _write_or_print(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK if trace.balanced else EXIT_NOT_CONVERGED


def _cmd_solve(args) -> int:
    from .harness import solve_scenario

    sc = _load_scenario_file(args.scenario, args)
    workers = "process" if args.workers else None
    report, trace, _ = solve_scenario(sc, mode=args.mode, workers=workers)
    payload = {
        "iterations": report.iterations,
        "converged": report.converged,
        "final_change": report.residual_history[-1] if report.residual_history else 0.0,
        "balanced": trace.balanced,
        "x": [float(v) for v in report.x],
    }
    _write_or_print(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK if (report.converged and trace.balanced) else EXIT_NOT_CONVERGED


def _cmd_experiment(args) -> int:
    from .harness import run_experiment
    from .registry import example_scenario
    from .reporting import emit_report

    overrides = {}
    if args.max_rounds is not None:
        overrides["max_rounds"] = args.max_rounds
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.mu is not None:
        overrides["mu"] = args.mu
    if args.overlap is not None:
        overrides["s"] = args.overlap
    sc = example_scenario(args.example, args.case, seed=args.seed, **overrides)
    report = run_experiment(sc, case=f"ex{args.example}-{args.case}", reps=args.reps)
    text = emit_report(report, args.format)
    _write_or_print(text, args.out)
    return EXIT_OK if (report.converged and report.balanced) else EXIT_NOT_CONVERGED


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    from .errors import DyddError, InfeasibleDistribution, IoFailure, ScenarioError

    try:
        if args.command == "balance":
            return _cmd_balance(args)
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_experiment(args)
    except (ScenarioError, InfeasibleDistribution) as exc:
        print(f"dydd: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO
    except IoFailure as exc:
        print(f"dydd: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"dydd: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except DyddError as exc:
        print(f"dydd: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
