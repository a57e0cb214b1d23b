"""Command-line entry point: ``daccox simulate | fit | bench``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import ESTIMATORS, BenchSpec, format_table, run_bench
from .data import read_csv, write_csv
from .errors import DataError, NumericalError
from .inference import fit_dac, fit_full_adaptive_lasso_oracle
from .simulate import ScenarioConfig, generate

SCHEMA_VERSION = "1.0"
EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4

log = logging.getLogger("daccox")


def _write_json(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def cmd_simulate(args) -> int:
    out = Path(args.out)
    cfg = ScenarioConfig(args.scenario, args.n0, args.v, args.seed, p=args.p, p_ind=args.p_ind, p_dep=args.p_dep)
    data = generate(cfg, workers=args.workers)
    write_csv(data, out, include_start=cfg.scenario == "IV")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "kind": "scenario_manifest",
        "package_version": __version__,
        "config": cfg.to_dict(),
        "true_beta": cfg.beta.tolist(),
        "csv": out.name,
        "csv_sha256": _sha256(out),
        "n_rows": data.n_rows,
        "n_subjects": data.n_subjects,
        "d0": data.d0,
        "censoring_fraction": 1.0 - data.d0 / data.n_subjects,
    }
    _write_json(out.with_suffix(".json"), manifest)
    log.info("wrote %s (%d rows, %d subjects, %d events)", out, data.n_rows, data.n_subjects, data.d0)
    return 0


def cmd_fit(args) -> int:
    data = read_csv(args.data)
    if args.estimator == "dac":
        fit = fit_dac(
            data, args.k_shards, args.iterations,
            gamma=args.gamma, alpha=args.alpha, seed=args.seed, threads=args.threads,
        )
    else:
        fit = fit_full_adaptive_lasso_oracle(data, gamma=args.gamma, alpha=args.alpha)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit_result",
        "package_version": __version__,
        "data": str(args.data),
        "seed": args.seed,
        **fit.to_dict(),
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        _write_json(Path(args.out), payload)
    else:
        sys.stdout.write(text)
    return 0


def _bench_specs(args) -> list[BenchSpec]:
    specs = []
    for n0 in args.n0:
        for v in args.v:
            if args.scenario == "IV":
                specs.append(BenchSpec("IV", n0, v, p_ind=args.p_ind, p_dep=args.p_dep, k_shards=args.k_shards))
            else:
                for p in args.p:
                    specs.append(BenchSpec(args.scenario, n0, v, p=p, k_shards=args.k_shards))
    return specs


def cmd_bench(args) -> int:
    out = Path(args.out)
    table_path = Path(args.table) if args.table else out.with_suffix(".txt")
    estimators = args.estimators.split(",")
    for tag in estimators:
        if tag not in ESTIMATORS:
            raise _UsageError(f"unknown estimator {tag!r}; choose from {','.join(ESTIMATORS)}")
    specs = _bench_specs(args)
    latest: dict = {}

    def flush(report):
        latest.clear()
        latest.update(report)
        _write_json(out, report)
        table_path.write_text(format_table(report), encoding="utf-8")

    try:
        report = run_bench(
            specs, args.reps, args.seed, estimators,
            threads=args.threads, parallel_reps=args.parallel_reps, on_progress=flush,
        )
    except KeyboardInterrupt:
        if latest:
            flush(latest)
        log.warning("interrupted; partial results in %s", out)
        return 130
    flush(report)
    sys.stdout.write(format_table(report))
    return 0


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="daccox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="generate a scenario dataset (CSV + JSON manifest)")
    sim.add_argument("--scenario", required=True, choices=["I", "II", "III", "IV"])
    sim.add_argument("--n0", type=int, required=True)
    sim.add_argument("--p", type=int, help="covariate count (scenarios I-III)")
    sim.add_argument("--p-ind", type=int, default=50, help="time-independent covariates (IV)")
    sim.add_argument("--p-dep", type=int, default=50, help="time-dependent covariates (IV)")
    sim.add_argument("--v", type=float, default=0.2, help="equicorrelation")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit an adaptive LASSO Cox model")
    fit.add_argument("--data", required=True)
    fit.add_argument("--estimator", choices=["dac", "full"], default="dac")
    fit.add_argument("--k-shards", type=int, default=10)
    fit.add_argument("--iterations", type=int, default=2)
    fit.add_argument("--gamma", type=float, default=1.0)
    fit.add_argument("--alpha", type=float, default=0.05)
    fit.add_argument("--threads", type=int, default=1)
    fit.add_argument("--seed", type=int, default=0, help="shard assignment seed")
    fit.add_argument("--out", help="output JSON (default: stdout)")
    fit.set_defaults(func=cmd_fit)

    bench = sub.add_parser("bench", help="Monte Carlo comparison of estimators")
    bench.add_argument("--scenario", required=True, choices=["I", "II", "III", "IV"])
    bench.add_argument("--n0", type=int, nargs="+", required=True)
    bench.add_argument("--p", type=int, nargs="+", default=[50])
    bench.add_argument("--p-ind", type=int, default=50)
    bench.add_argument("--p-dep", type=int, default=50)
    bench.add_argument("--v", type=float, nargs="+", default=[0.2])
    bench.add_argument("--k-shards", type=int, default=10)
    bench.add_argument("--reps", type=int, default=20)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--estimators", default=",".join(ESTIMATORS))
    bench.add_argument("--threads", type=int, default=1)
    bench.add_argument("--parallel-reps", type=int, default=1)
    bench.add_argument("--out", required=True, help="report JSON")
    bench.add_argument("--table", help="text table path (default: <out>.txt)")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.exit(EXIT_USAGE, f"daccox: error: {exc}\n")
    except (DataError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        sys.stderr.write(f"daccox: data error: {exc}\n")
        return EXIT_DATA
    except NumericalError as exc:
        sys.stderr.write(f"daccox: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except ValueError as exc:
        # configuration values that argparse cannot check (e.g. p too small)
        sys.stderr.write(f"daccox: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
