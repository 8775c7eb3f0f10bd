"""Command-line entry point: ``sahm <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import characterization, repro
from .chip import enumerate_design_space, load_chip
from .metrics import SWEEP_COLUMNS, sweep, sweep_rows, write_result_json, write_table
from .scheduler import DEFAULT_INERTIA, PolicyConfig, PolicyKind, StateSource
from .simulator import SimParams, simulate
from .states import DEFAULT_PRESET, N_STATES, classify, derive_percentile_cutoffs, label, load_cutoffs
from .trace import SyntheticSpec, generate_trace, read_traces, write_trace, write_traces

DEFAULT_SEED = repro.DEFAULT_SEED


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _distribution(text: str) -> np.ndarray:
    """Either 16 comma-separated weights or ``state:weight`` pairs."""
    w = np.zeros(N_STATES)
    parts = [p for p in text.split(",") if p.strip()]
    try:
        if all(":" in p for p in parts):
            for p in parts:
                s, v = p.split(":")
                w[int(s)] += float(v)
        elif len(parts) == N_STATES:
            w[:] = [float(p) for p in parts]
        else:
            raise ValueError
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(
            "distribution must be 16 comma-separated weights or state:weight pairs, e.g. 0:0.5,8:0.5"
        ) from None
    return w


def _add_cutoffs(p):
    p.add_argument("--cutoffs", default=DEFAULT_PRESET, help="preset name (intuitive, p25, p50) or JSON file")


def _add_traces(p, required=True):
    p.add_argument("--traces", nargs="+", required=required, help="trace CSV files or directories of them")
    p.add_argument("--epoch-ms", type=int, default=100)


def _add_sim(p, multi=False):
    chip_help = "preset (canonical30, realistic39) or JSON file"
    policies = [k.value for k in PolicyKind]
    if multi:
        p.add_argument("--chip", action="append", required=True, help=chip_help + "; repeatable")
        p.add_argument("--policy", action="append", required=True, choices=policies, help="repeatable")
    else:
        p.add_argument("--chip", default="realistic39", help=chip_help)
        p.add_argument("--policy", default="greedy", choices=policies)
    p.add_argument("--inertia-schedulings", type=int, default=None,
                   help=f"inertia length for inertia policies (default {DEFAULT_INERTIA})")
    p.add_argument("--state-source", default=None, choices=[s.value for s in StateSource],
                   help="override how the scheduler observes program state")
    p.add_argument("--timestep-ms", type=int, default=10)
    p.add_argument("--horizon-ms", type=int, default=None)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)


def _params(args, cost=0.0) -> SimParams:
    return SimParams(timestep_ms=args.timestep_ms, epoch_ms=args.epoch_ms, migration_cost_ms=float(cost),
                     horizon_ms=args.horizon_ms, seed=args.seed)


def _policy(args, name=None) -> PolicyConfig:
    return PolicyConfig.parse(name or args.policy, args.inertia_schedulings, args.state_source)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------------


def cmd_gen_trace(args) -> int:
    cutoffs = load_cutoffs(args.cutoffs)
    if args.distribution is not None:
        spec = SyntheticSpec.normalized(args.distribution, args.rho, args.epochs, args.seed, name=args.name,
                                        epoch_ms=args.epoch_ms)
        trace = generate_trace(spec, cutoffs)
        out = Path(args.out)
        if out.suffix != ".csv":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"{trace.name}.csv"
        write_trace(trace, out)
        print(out)
    else:
        traces = repro.synthetic_workload(cutoffs, args.n_traces, args.epochs, args.seed, args.epoch_ms)
        for p in write_traces(traces, args.out):
            print(p)
    return 0


def cmd_classify(args) -> int:
    cutoffs = load_cutoffs(args.cutoffs)
    if args.record is not None:
        if len(args.record) != 4:
            raise ValueError("--record needs exactly 4 values: branch,l1i_mpki,l1d,l2")
        s = classify(args.record, cutoffs)
        print(label(s))
        return 0
    if not args.traces:
        raise ValueError("give --record or --traces")
    traces = read_traces(args.traces, args.epoch_ms)
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "epoch_index", "state", "label"])
        for t in traces:
            for i, s in enumerate(t.states(cutoffs)):
                w.writerow([t.name, i, int(s), label(int(s))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_derive_cutoffs(args) -> int:
    traces = read_traces(args.traces, args.epoch_ms)
    cut = derive_percentile_cutoffs(traces, args.percentile)
    text = json.dumps(cut.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_characterize(args) -> int:
    traces = read_traces(args.traces, args.epoch_ms)
    cutoffs = load_cutoffs(args.cutoffs)
    out = _out_dir(args)
    if args.command == "coverage":
        path = characterization.write_coverage_csv(traces, cutoffs, out / "coverage.csv")
    elif args.command == "transitions":
        path = characterization.write_transitions_csv(traces, cutoffs, out / "transitions.csv")
    else:
        path = characterization.write_intervals_csv(traces, cutoffs, out / "intervals.csv", args.buckets)
    print(path)
    return 0


def cmd_enumerate(args) -> int:
    configs = enumerate_design_space(args.levels)
    lines = [c.name for c in configs]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        print(line)
    return 0


def cmd_simulate(args) -> int:
    traces = read_traces(args.traces, args.epoch_ms)
    result, log = simulate(traces, load_chip(args.chip), _policy(args), load_cutoffs(args.cutoffs),
                           _params(args, args.migration_cost_ms))
    out = _out_dir(args)
    print(write_result_json(result, out / "result.json"))
    if args.log_events:
        print(log.write_csv(out / "events.csv.gz"))
    return 0


def cmd_sweep(args) -> int:
    traces = read_traces(args.traces, args.epoch_ms)
    if args.solo:
        workloads = [(t.name, [t]) for t in traces]
    else:
        workloads = [("workload", traces)]
    chips = [load_chip(c) for c in args.chip]
    policies = [_policy(args, p) for p in args.policy]
    results = sweep(workloads, chips, policies, args.migration_cost_ms, load_cutoffs(args.cutoffs), _params(args))
    out = _out_dir(args)
    print(write_table(sweep_rows(results), out / f"sweep.{args.format}", args.format, SWEEP_COLUMNS))
    return 0


def cmd_repro(args) -> int:
    cutoffs = load_cutoffs(args.cutoffs)
    if args.traces:
        traces = read_traces(args.traces, args.epoch_ms)
    else:
        traces = repro.synthetic_workload(cutoffs, args.synthetic_traces, args.synthetic_epochs, args.seed,
                                          args.epoch_ms)
    params = SimParams(timestep_ms=args.timestep_ms, epoch_ms=args.epoch_ms, seed=args.seed)
    for p in repro.run_preset(args.preset, traces, cutoffs, args.out, params, args.format):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sahm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-trace", help="write synthetic traces")
    p.add_argument("--out", required=True, help="directory, or a .csv file for a single trace")
    p.add_argument("--distribution", type=_distribution, default=None,
                   help="target state weights for one trace; omit to write a SPEC-like workload")
    p.add_argument("--rho", type=float, default=0.84, help="self-transition probability")
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--n-traces", type=int, default=39)
    p.add_argument("--name", default="synthetic")
    p.add_argument("--epoch-ms", type=int, default=100)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    _add_cutoffs(p)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("classify", help="behavioral state of a record or of every epoch")
    p.add_argument("--record", type=_floats, default=None, help="branch,l1i_mpki,l1d,l2")
    _add_traces(p, required=False)
    p.add_argument("--out", default=None, help="CSV output file (default stdout)")
    _add_cutoffs(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("derive-cutoffs", help="pooled percentile cutoffs")
    _add_traces(p)
    p.add_argument("--percentile", type=float, default=0.5, help="fraction in (0, 1)")
    p.add_argument("--out", default=None, help="also write the JSON here")
    p.set_defaults(func=cmd_derive_cutoffs)

    for name, desc in (("coverage", "coverage.csv"), ("transitions", "transitions.csv"),
                       ("intervals", "intervals.csv")):
        p = sub.add_parser(name, help=f"write {desc}")
        _add_traces(p)
        _add_cutoffs(p)
        p.add_argument("--out", required=True, help="output directory")
        if name == "intervals":
            p.add_argument("--buckets", type=_ints, default=list(characterization.DEFAULT_BUCKETS),
                           help="bucket lower bounds, starting at 1")
        p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("enumerate-configs", help="list the specialized-chip design space")
    p.add_argument("--levels", type=_floats, default=[0.1, 0.2, 0.3])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="run one simulation")
    _add_traces(p)
    _add_cutoffs(p)
    _add_sim(p)
    p.add_argument("--migration-cost-ms", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--log-events", action="store_true", help="also write events.csv.gz")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate every chip x policy x cost combination")
    _add_traces(p)
    _add_cutoffs(p)
    _add_sim(p, multi=True)
    p.add_argument("--migration-cost-ms", type=_floats, default=[0.0], help="comma-separated costs")
    p.add_argument("--solo", action="store_true", help="simulate each trace alone instead of all together")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("repro", help="run a named experiment preset")
    p.add_argument("preset", choices=repro.PRESET_NAMES)
    _add_traces(p, required=False)
    _add_cutoffs(p)
    p.add_argument("--synthetic-traces", type=int, default=39, help="workload size when --traces is omitted")
    p.add_argument("--synthetic-epochs", type=int, default=600)
    p.add_argument("--timestep-ms", type=int, default=10)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"sahm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
