"""Command-line front end: ``poolal benchmark|learn|resume``.

Exit codes: 0 success, 2 invalid flags, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from poolal import history, selection
from poolal.dataset import load_csv
from poolal.errors import PoolALError
from poolal.experiment import ExperimentConfig, resume, run_benchmark, run_learn
from poolal.kernels import KernelSpec
from poolal.oracle import CommandOracle, PromptOracle
from poolal.plot import PlotSpec, emit_plot, format_number

EXIT_FLAGS = 2
EXIT_RUNTIME = 3

KERNEL_FLAGS = {"rbf": "rbf", "matern12": "matern_half", "matern32": "matern_three_halves"}


class FlagError(Exception):
    pass


def _int_list(text, flag):
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise FlagError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if not values:
        raise FlagError(f"{flag}: empty list")
    return values


def _float_list(text, flag):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise FlagError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _methods(text):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    if not methods:
        raise FlagError("--methods: empty list")
    for m in methods:
        if m not in selection.METHODS:
            raise FlagError(f"--methods: unknown method {m!r}; choose from {', '.join(selection.METHODS)}")
    if len(set(methods)) != len(methods):
        raise FlagError("--methods: duplicate method")
    return methods


def _oracle_flags(p, required):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--oracle-cmd", help="program that reads features on stdin and prints a label")
    group.add_argument("--oracle-prompt", action="store_true", help="ask for labels interactively")


def _common(p):
    p.add_argument("--methods", required=True, help="comma-separated: " + ",".join(selection.METHODS))
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel", choices=sorted(KERNEL_FLAGS), default="rbf")
    p.add_argument("--restarts", type=int, default=2, help="random optimizer restarts per fit")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poolal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("benchmark", help="replay a labeled dataset")
    b.add_argument("--data", required=True)
    b.add_argument("--label-column", required=True)
    b.add_argument("--init-set-size", type=int, required=True)
    b.add_argument("--metric", choices=("rmse", "r2"), default="rmse")
    _common(b)

    ln = sub.add_parser("learn", help="acquire labels from an oracle")
    ln.add_argument("--data", required=True)
    ln.add_argument("--known-indices", required=True)
    ln.add_argument("--known-labels", required=True)
    _common(ln)
    _oracle_flags(ln, required=True)

    r = sub.add_parser("resume", help="extend an existing run history")
    r.add_argument("--history", required=True)
    r.add_argument("--extra-iterations", type=int, required=True)
    r.add_argument("--data")
    r.add_argument("--label-column")
    r.add_argument("--restarts", type=int, default=2)
    _oracle_flags(r, required=False)
    return parser


def _oracle(args):
    if args.oracle_cmd:
        return CommandOracle(args.oracle_cmd)
    if args.oracle_prompt:
        return PromptOracle()
    return None


def write_summary(path, results) -> None:
    lines = ["method\tfinal_metric\tauc\truntime_s"]
    for r in results.values():
        lines.append("\t".join([r.method, format_number(r.metric_series[-1]), format_number(r.auc),
                                format_number(r.runtime)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def cmd_benchmark(args) -> int:
    methods = _methods(args.methods)
    if args.init_set_size < 1:
        raise FlagError("--init-set-size must be >= 1")
    if args.iterations < 1:
        raise FlagError("--iterations must be >= 1")
    if args.seed < 0:
        raise FlagError("--seed must be >= 0")
    X, y = load_csv(args.data, args.label_column)
    if args.init_set_size >= len(X):
        raise FlagError(f"--init-set-size must be below the pool size {len(X)}")
    out = Path(args.out)
    config = ExperimentConfig(mode="benchmark", iterations=args.iterations, methods=methods,
                              seed=args.seed, output_dir=out, metric=args.metric,
                              init_set_size=args.init_set_size,
                              kernel=KernelSpec(KERNEL_FLAGS[args.kernel]), restarts=args.restarts)
    results = run_benchmark(config, X, y)
    write_summary(out / "summary.tsv", results)
    emit_plot(PlotSpec({m: r.metric_series for m, r in results.items()}, args.init_set_size,
                       args.metric), out / "plot.svg")
    for r in results.values():
        print(f"{r.method}\tAUC={format_number(r.auc)}\t{r.history_path}")
    return 0


def cmd_learn(args) -> int:
    methods = _methods(args.methods)
    known = _int_list(args.known_indices, "--known-indices")
    labels = _float_list(args.known_labels, "--known-labels")
    if len(set(known)) != len(known):
        raise FlagError(f"--known-indices: duplicate index in {known}")
    if len(labels) != len(known):
        raise FlagError(f"--known-labels: {len(labels)} labels for {len(known)} known indices")
    if args.iterations < 1:
        raise FlagError("--iterations must be >= 1")
    if args.seed < 0:
        raise FlagError("--seed must be >= 0")
    oracle = _oracle(args)
    X, _ = load_csv(args.data)
    config = ExperimentConfig(mode="learn", iterations=args.iterations, methods=methods,
                              seed=args.seed, output_dir=Path(args.out), known_indices=known,
                              known_labels=labels, kernel=KernelSpec(KERNEL_FLAGS[args.kernel]),
                              restarts=args.restarts)
    results = run_learn(config, X, oracle)
    for r in results.values():
        print(r.final_snapshot)
    return 0


def cmd_resume(args) -> int:
    if args.extra_iterations < 0:
        raise FlagError("--extra-iterations must be >= 0")
    header, _ = history.parse_history(args.history)
    oracle = _oracle(args)
    if header.mode == "learn" and oracle is None:
        raise FlagError("resuming a learn history needs --oracle-cmd or --oracle-prompt")
    if header.mode == "benchmark" and (args.data is None or args.label_column is None):
        raise FlagError("resuming a benchmark history needs --data and --label-column")
    if args.data is None:
        raise FlagError("--data is required")
    X, y = load_csv(args.data, args.label_column if header.mode == "benchmark" else None)
    result = resume(args.history, args.extra_iterations, X, y=y, oracle=oracle,
                    restarts=args.restarts)
    print(result.final_snapshot)
    return 0


COMMANDS = {"benchmark": cmd_benchmark, "learn": cmd_learn, "resume": cmd_resume}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FlagError as exc:
        parser.print_usage(sys.stderr)
        print(f"poolal: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except (PoolALError, OSError) as exc:
        print(f"poolal: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
