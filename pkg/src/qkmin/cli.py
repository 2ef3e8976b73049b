"""Command-line entry point: ``qkmin {run,sweep,verify,gen-data}``.

Exit codes: 0 success, 1 usage or configuration error, 2 algorithm failure.
"""
import argparse
import json
import os
import sys
from dataclasses import asdict
from importlib import resources

from . import bench, verify
from .algorithms import ALGORITHMS, BACKENDS, QC_MODES, run_algorithm
from .errors import CapacityError
from .oracle import DISTRIBUTIONS, STRATEGIES, generate_dataset, dataset_to_csv, load_dataset
from .sim import MAX_QUBITS

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="qkmin", description="Query-model simulation of quantum k-minima search.",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one algorithm for one or more trials", formatter_class=fmt)
    run.add_argument("--algo", required=True, choices=ALGORITHMS, help="algorithm to run")
    run.add_argument("--n", type=int, required=True, help="dataset size N")
    run.add_argument("--k", type=int, default=1, help="number of minima / marked indices")
    run.add_argument("--dist", default="permutation", choices=DISTRIBUTIONS, help="synthetic data distribution")
    run.add_argument("--data", default=None, help="index,value CSV to use instead of synthetic data")
    run.add_argument("--seed", type=int, default=0, help="random seed")
    run.add_argument("--backend", default="analytic", choices=BACKENDS, help="state simulation backend")
    run.add_argument("--qc-mode", default="exact", choices=QC_MODES, help="quantum counting mode")
    run.add_argument("--strategy", default="max", choices=STRATEGIES,
                     help="threshold selection for kmin-conv")
    run.add_argument("--p", type=int, default=None, help="counting qubits (default from N)")
    run.add_argument("--trials", type=int, default=1, help="number of seeded trials")
    run.add_argument("--retries", type=int, default=3, help="retries after a verified k-minima failure")
    run.add_argument("--max-qubits", type=int, default=MAX_QUBITS, help="statevector qubit limit")
    run.add_argument("--timing", action="store_true", help="record wall-clock time (not reproducible)")
    run.add_argument("--out", default="-", help="JSON output path, '-' for stdout")

    sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file", formatter_class=fmt)
    sweep.add_argument("config", help="JSON sweep config (bundled: scaling.cfg)")
    sweep.add_argument("--out", default=None, help="override output path, '-' streams to stdout")
    sweep.add_argument("--format", default=None, choices=("csv", "json"), help="override output format")
    sweep.add_argument("--threads", type=int, default=None,
                       help="worker threads (default $QKMIN_THREADS or 1)")

    ver = sub.add_parser("verify", help="run the invariant suites", formatter_class=fmt)
    ver.add_argument("--quick", action="store_true", help="smaller grids, under a minute")

    gen = sub.add_parser("gen-data", help="write a synthetic dataset as index,value CSV", formatter_class=fmt)
    gen.add_argument("--n", type=int, required=True, help="dataset size N")
    gen.add_argument("--dist", default="permutation", choices=DISTRIBUTIONS, help="distribution")
    gen.add_argument("--seed", type=int, default=0, help="random seed")
    gen.add_argument("--out", default="-", help="output path, '-' for stdout")
    return parser


def _write(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_run(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.k < 0 or args.k > args.n:
        raise UsageError(f"--k must lie in [0, {args.n}]")
    if args.algo in ("kmin-conv", "kmin-prop") and args.k < 1:
        raise UsageError("k-minima needs --k >= 1")
    if args.p is not None and args.p < 1:
        raise UsageError("--p must be at least 1")
    data = None
    if args.data is not None:
        try:
            data = load_dataset(args.data)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc))
        if data.N != args.n:
            raise UsageError(f"--n {args.n} does not match {data.N} rows in {args.data}")
    if args.backend == "statevector" and data is None:
        n_qubits = max(1, (args.n - 1).bit_length())
        if n_qubits > args.max_qubits:
            raise UsageError(f"statevector backend holds at most {args.max_qubits} qubits; N={args.n} needs {n_qubits}")

    reports = []
    for i in range(args.trials):
        seed = args.seed if args.trials == 1 else bench.trial_seed(args.seed, "run", i)
        dataset = data if data is not None else generate_dataset(args.n, args.dist, seed)
        try:
            report = run_algorithm(args.algo, dataset, args.k, seed, args.backend, args.qc_mode,
                                   args.strategy, args.p, max_retries=args.retries)
        except CapacityError as exc:
            raise UsageError(str(exc))
        if not args.timing:
            report.wall_ns = 0
        reports.append(report)

    if args.trials == 1:
        doc = reports[0].to_dict()
    else:
        cell = bench.Cell(args.algo, args.n, args.k, args.dist, args.backend, args.qc_mode,
                          args.strategy, args.trials, args.seed)
        doc = {"summary": asdict(bench.aggregate(cell, reports)),
               "reports": [r.to_dict() for r in reports]}
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK if all(r.success for r in reports) else EXIT_FAILURE


def _resolve_config(path: str) -> str:
    if os.path.exists(path):
        return path
    bundled = resources.files("qkmin") / "data" / os.path.basename(path)
    if bundled.is_file():
        return str(bundled)
    raise UsageError(f"config file not found: {path}")


def cmd_sweep(args) -> int:
    path = _resolve_config(args.config)
    try:
        cfg = bench.load_config(path)
    except bench.ConfigError as exc:
        raise UsageError(f"{path}: invalid config at {exc}")
    except OSError as exc:
        raise UsageError(str(exc))
    if args.out is not None:
        cfg.output = args.out
    if args.format is not None:
        cfg.format = args.format
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be at least 1")
    stats = bench.run_sweep(cfg, args.threads)
    bench.emit_results(stats, cfg.format, cfg.output)
    table = bench.summary_table(stats)
    print(table, file=sys.stderr if cfg.output == "-" else sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_all(args.quick)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<28} {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def cmd_gen_data(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    ds = generate_dataset(args.n, args.dist, args.seed)
    _write(dataset_to_csv(ds), args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "gen-data": cmd_gen_data}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qkmin {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
