"""Command-line entry point.

Subcommands: ``simulate``, ``evaluate-dp``, ``sweep-severity``,
``sweep-risk``, ``learn``, ``verify``. Every command is deterministic for a
given configuration and seed. Exit codes: 0 success, 2 configuration or
model error, 3 capacity error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, load_config
from .consolidation import enumerate_states
from .dp import run_value_iteration, value_iteration_eacc, value_iteration_ecc
from .errors import CapacityError, ConfigError, ConvergenceError, ModelError
from .report import (SWEEP_HEADER, TRAJECTORY_HEADER, render_csv,
                     write_rows, write_rows_json, write_trace,
                     write_trajectory, write_value_table_csv,
                     write_value_table_json)
from .sweeps import parse_float_range, parse_int_range, sweep_risk, sweep_severity
from .td import AGGREGATED, CONSOLIDATED, SessionMetrics, run_td_session
from .verify import run_battery

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_VERIFY = 4

REGIME_UNCERTAINTY = {"high": 20.0, "low": 0.2}


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    return config


def _emit_rows(args, header, rows, **metadata):
    if args.output is None:
        sys.stdout.write(render_csv(header, rows))
        return None
    path = Path(args.output)
    if args.format == "json":
        write_rows_json(header, rows, path, **metadata)
    else:
        write_rows(path, header, rows)
    return path


def cmd_simulate(args) -> int:
    config = _load(args)
    from .attack import sample_trajectory
    trajectory = sample_trajectory(config.scenario.attack, args.horizon,
                                   config.seed)
    rows = list(trajectory.rows(config.scenario.attack.labels))
    if args.output is None:
        sys.stdout.write(render_csv(TRAJECTORY_HEADER, rows))
    elif args.format == "json":
        write_rows_json(TRAJECTORY_HEADER, rows, args.output, seed=config.seed)
    else:
        write_trajectory(trajectory, config.scenario.attack.labels, args.output)
    return EXIT_OK


def cmd_evaluate_dp(args) -> int:
    config = _load(args)
    table = run_value_iteration(config.scenario, config.strategy, config.dp,
                                args.representation)
    if args.output is None:
        sys.stdout.write(render_csv(["index", "value"], table.rows()))
        return EXIT_OK
    if args.format == "json":
        write_value_table_json(table, args.output)
    else:
        write_value_table_csv(table, args.output)
    if args.plot:
        from .figures import value_table_figure
        value_table_figure(table, Path(args.output).with_suffix(".png"))
    return EXIT_OK


def _sweep_grids(args):
    betas = periods = None
    if args.beta_range:
        betas = parse_float_range(args.beta_range)
    if args.m_range:
        periods = parse_int_range(args.m_range)
    return betas, periods


def cmd_sweep_severity(args) -> int:
    config = _load(args)
    betas, periods = _sweep_grids(args)
    rows = sweep_severity(config, betas=betas, periods=periods)
    path = _emit_rows(args, SWEEP_HEADER, rows, seed=config.seed)
    if args.plot and path is not None:
        from .figures import sweep_figure
        sweep_figure(rows, path.with_suffix(".png"), ylabel="severity")
    return EXIT_OK


def cmd_sweep_risk(args) -> int:
    config = _load(args)
    if args.regime is not None:
        config = config.with_uncertainty(REGIME_UNCERTAINTY[args.regime])
    elif args.cun is not None:
        config = config.with_uncertainty(args.cun)
    betas, periods = _sweep_grids(args)
    rows = sweep_risk(config, betas=betas, periods=periods)
    path = _emit_rows(args, SWEEP_HEADER, rows, seed=config.seed)
    if args.plot and path is not None:
        from .figures import sweep_figure
        sweep_figure(rows, path.with_suffix(".png"), ylabel="aggregated risk")
    return EXIT_OK


def _oracle_for(config: ExperimentConfig, scheme: str):
    """DP oracle per table index, when computable for the scheme."""
    try:
        if scheme == AGGREGATED:
            table = value_iteration_eacc(config.scenario, config.strategy,
                                         config.dp)
            return {i: float(v) for i, v in enumerate(table.values)}
        table = value_iteration_ecc(config.scenario, config.strategy, config.dp)
        states = enumerate_states(config.scenario.n_labels, config.am_period)
        return {x: float(v) for x, v in zip(states, table.values)}
    except (ModelError, CapacityError):
        return None


def _index_name(config: ExperimentConfig, scheme: str, index) -> str:
    names = config.scenario.attack.labels.names
    if scheme == AGGREGATED:
        return names[index]
    return "-".join(names[s] for s in index)


def cmd_learn(args) -> int:
    config = _load(args)
    kcs = [float(v) for v in args.kc.split(",")] if args.kc else [config.kc]
    oracle = _oracle_for(config, args.scheme)
    runs = []
    for kc in kcs:
        session = run_td_session(config.scenario, config.strategy, args.scheme,
                                 config.dp.gamma, kc, args.stages, config.seed)
        metrics = SessionMetrics.compute(session, oracle) if oracle else None
        runs.append((kc, session, metrics))

    summary_header = ["kc", "scheme", "index", "final_estimate", "oracle",
                      "relative_error", "final_bias", "last_decile_variance",
                      "flag"]
    flags = _pathology_flags(runs)
    summary = []
    for kc, session, metrics in runs:
        for index in sorted(session.estimate.values):
            est = session.estimate.value(index)
            target = oracle.get(index) if oracle else None
            rel = (abs(est - target) / abs(target)
                   if target not in (None, 0) else "")
            summary.append((
                kc, args.scheme, _index_name(config, args.scheme, index), est,
                target if target is not None else "", rel,
                metrics.final_bias if metrics else "",
                metrics.last_decile_variance if metrics else "",
                flags.get(kc, "")))

    if args.output is None:
        sys.stdout.write(render_csv(summary_header, summary))
        return EXIT_OK

    out = Path(args.output)
    for kc, session, _ in runs:
        rows = [(stage, scheme, _index_name(config, args.scheme, index), est, lr)
                for stage, scheme, index, est, lr in session.trace_rows()]
        trace_path = out.with_name(f"{out.stem}_kc{kc:g}{out.suffix or '.csv'}")
        write_trace(rows, trace_path)
        if args.plot:
            from .figures import trace_figure
            named_oracle = ({_index_name(config, args.scheme, k): v
                             for k, v in oracle.items()} if oracle else None)
            trace_figure(rows, trace_path.with_suffix(".png"), named_oracle)
    write_rows(out.with_name(f"{out.stem}_summary{out.suffix or '.csv'}"),
               summary_header, summary)
    return EXIT_OK


def _pathology_flags(runs) -> dict:
    """Mark the worst-bias and worst-variance step-size choices."""
    flags: dict = {}
    with_metrics = [(kc, m) for kc, _, m in runs if m is not None]
    if len(with_metrics) < 2:
        return flags
    biases = {kc: m.final_bias for kc, m in with_metrics}
    variances = {kc: m.last_decile_variance for kc, m in with_metrics}
    worst_bias = max(biases, key=biases.get)
    worst_var = max(variances, key=variances.get)
    if biases[worst_bias] > 1.2 * min(biases.values()):
        flags[worst_bias] = "slow_bias_decay"
    if variances[worst_var] > 1.2 * min(variances.values()):
        flags[worst_var] = (flags.get(worst_var, "") + "+high_variance").lstrip("+")
    return flags


def cmd_verify(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        report = f"[FAIL] config-validation: {exc}\n1 check failed\n"
        _write_report(args, report)
        return EXIT_VERIFY
    checks = run_battery(config, instances=args.instances)
    lines = [c.line() for c in checks]
    failed = sum(1 for c in checks if not c.passed)
    lines.append(f"{failed} check(s) failed" if failed
                 else f"all {len(checks)} checks passed")
    _write_report(args, "\n".join(lines) + "\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _write_report(args, text: str):
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idosim",
        description="Simulate feint-flood alert streams and evaluate "
                    "operator severity and long-term risk.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", required=True, help="experiment YAML")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
        p.add_argument("--output", default=None, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate", help="sample a seeded attack trajectory")
    common(p)
    p.add_argument("--horizon", type=int, default=1000,
                   help="number of attack stages")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("evaluate-dp", help="value-iterate a risk table")
    common(p)
    p.add_argument("--representation", required=True,
                   choices=("cc", "ecc", "acc", "eacc"))
    p.add_argument("--plot", action="store_true",
                   help="render a PNG next to the output")
    p.set_defaults(handler=cmd_evaluate_dp)

    p = sub.add_parser("sweep-severity", help="severity across a grid")
    common(p)
    p.add_argument("--beta-range", default=None, help="start:stop:count")
    p.add_argument("--m-range", default=None, help="lo:hi")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(handler=cmd_sweep_severity)

    p = sub.add_parser("sweep-risk", help="aggregated risk across a grid")
    common(p)
    p.add_argument("--beta-range", default=None, help="start:stop:count")
    p.add_argument("--m-range", default=None, help="lo:hi")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--cun", type=float, default=None,
                       help="override the uncertainty cost")
    group.add_argument("--regime", choices=sorted(REGIME_UNCERTAINTY),
                       default=None,
                       help="named uncertainty-cost regime "
                            "(high=20, low=0.2)")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(handler=cmd_sweep_risk)

    p = sub.add_parser("learn", help="online risk learning from simulation")
    common(p)
    p.add_argument("--scheme", choices=(AGGREGATED, CONSOLIDATED),
                   default=AGGREGATED)
    p.add_argument("--kc", default=None,
                   help="comma-separated step-size constants")
    p.add_argument("--stages", type=int, default=10_000)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(handler=cmd_learn)

    p = sub.add_parser("verify", help="run the self-check battery")
    p.add_argument("--config", required=True)
    p.add_argument("--instances", type=int, default=50,
                   help="randomized instances for the equivalency check")
    p.add_argument("--output", default=None, help="also write the report here")
    p.set_defaults(handler=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
