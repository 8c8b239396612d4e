"""Command-line front end: simulate, fit, split-eval, emit-tables.

Every flag mirrors a key in the optional YAML config file (flags win).
Exit codes: 0 on success, 2 on specification errors, 3 on data errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import yaml

from .exceptions import DataError, SpecError
from .harness import (
    ExperimentSpec,
    SplitEvalSpec,
    aggregate_records,
    emit_tables,
    fit_csv,
    run_simulation,
    run_split_eval,
)
from .sampling import DISTRIBUTION_KINDS
from .solver import BIC_CRITERIA, SolverOptions
from .types import ESTIMATOR_KINDS

_PAPER_SCALE_REPLICATIONS = 1000


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root random seed")
    common.add_argument("--threads", type=int, default=None, help="worker processes")
    common.add_argument("--config", default=None, help="YAML config file mirroring the flags")
    common.add_argument("--out-dir", default=None, help="directory for output files")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="signcca",
        description="Robust sparse CCA: simulation harness and data analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="run a simulation grid")
    sim.add_argument("--model", choices=("I", "II"), default=None)
    sim.add_argument("--dist", choices=DISTRIBUTION_KINDS, default=None)
    sim.add_argument("--n", type=int, nargs="+", default=None, help="sample sizes")
    sim.add_argument("--p", type=int, nargs="+", default=None, help="total dimensions")
    sim.add_argument("--methods", nargs="+", choices=ESTIMATOR_KINDS, default=None)
    sim.add_argument("--reps", type=int, default=None, help="replications per cell")
    sim.add_argument("--criterion", choices=BIC_CRITERIA, default=None)
    sim.add_argument("--checkpoint-every", type=int, default=None)
    sim.add_argument(
        "--paper-scale",
        action="store_true",
        help=f"use {_PAPER_SCALE_REPLICATIONS} replications unless --reps is given",
    )
    sim.add_argument(
        "--fixed-w-star",
        action="store_true",
        help="draw model II's random bases once per cell instead of per replication",
    )
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", parents=[common], help="fit once on a CSV file")
    fit.add_argument("--data", default=None, help="CSV file with a header row")
    fit.add_argument("--split-col", type=int, default=None, help="columns in the first view")
    fit.add_argument("--method", choices=ESTIMATOR_KINDS, default=None)
    fit.add_argument("--criterion", choices=BIC_CRITERIA, default=None)
    fit.set_defaults(func=cmd_fit)

    spl = sub.add_parser(
        "split-eval", parents=[common], help="repeated train/test split evaluation"
    )
    spl.add_argument("--data", default=None)
    spl.add_argument("--split-col", type=int, default=None)
    spl.add_argument("--train-frac", type=float, default=None)
    spl.add_argument("--reps", type=int, default=None)
    spl.add_argument("--methods", nargs="+", choices=ESTIMATOR_KINDS, default=None)
    spl.add_argument("--criterion", choices=BIC_CRITERIA, default=None)
    spl.set_defaults(func=cmd_split_eval)

    tab = sub.add_parser(
        "emit-tables", parents=[common], help="render result tables from raw records"
    )
    tab.add_argument("--records", default=None, help="records.jsonl from a simulate run")
    tab.add_argument("--format", nargs="+", choices=("csv", "markdown"), default=None)
    tab.set_defaults(func=cmd_emit_tables)
    return parser


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except OSError as err:
        raise SpecError(f"cannot open config {path}: {err}") from err
    except yaml.YAMLError as err:
        raise SpecError(f"config {path} is not valid YAML: {err}") from err
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise SpecError(f"config {path} must be a mapping of sections to keys")
    return cfg


def _pick(flag_value, cfg: dict, section: str, key: str, default=None):
    """Flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    sect = cfg.get(section, {})
    if isinstance(sect, dict) and key in sect:
        return sect[key]
    if section == "" and key in cfg:
        return cfg[key]
    return default


def _global_opts(args, cfg: dict) -> tuple[int, int, str]:
    seed = _pick(args.seed, cfg, "", "seed", 0)
    threads = _pick(args.threads, cfg, "", "threads", 1)
    out_dir = _pick(args.out_dir, cfg, "", "out_dir", "signcca-out")
    return int(seed), int(threads), str(out_dir)


def _solver_options(cfg: dict) -> SolverOptions:
    section = cfg.get("solver", {})
    if not isinstance(section, dict):
        raise SpecError("the 'solver' config section must be a mapping")
    known = {f for f in SolverOptions.__dataclass_fields__}
    unknown = set(section) - known
    if unknown:
        raise SpecError(f"unknown solver option(s): {sorted(unknown)}")
    return SolverOptions(**section)


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def cmd_simulate(args, cfg: dict) -> int:
    seed, threads, out_dir = _global_opts(args, cfg)
    reps = _pick(args.reps, cfg, "simulate", "replications", None)
    if reps is None:
        reps = _PAPER_SCALE_REPLICATIONS if args.paper_scale else 100
    spec = ExperimentSpec(
        model=str(_pick(args.model, cfg, "simulate", "model", "I")),
        distribution=str(_pick(args.dist, cfg, "simulate", "distribution", "normal")),
        n_list=tuple(int(n) for n in _as_tuple(_pick(args.n, cfg, "simulate", "n", [200]))),
        p_list=tuple(int(p) for p in _as_tuple(_pick(args.p, cfg, "simulate", "p", [400]))),
        methods=tuple(_as_tuple(_pick(args.methods, cfg, "simulate", "methods", ESTIMATOR_KINDS))),
        replications=int(reps),
        seed=seed,
        criterion=str(_pick(args.criterion, cfg, "simulate", "criterion", "bic1")),
        fixed_w_star=bool(
            args.fixed_w_star or _pick(None, cfg, "simulate", "fixed_w_star", False)
        ),
        solver=_solver_options(cfg),
    )
    checkpoint = int(_pick(args.checkpoint_every, cfg, "simulate", "checkpoint_every", 50))
    result = run_simulation(
        spec, out_dir=out_dir, threads=threads, checkpoint_every=checkpoint, progress=True
    )
    print(
        f"simulate: {len(result.records)} records over {len(spec.cells())} cell(s) "
        f"in {result.wall_time_s:.1f}s -> {out_dir}",
        file=sys.stderr,
    )
    for row in result.aggregates:
        print(
            f"  {row['method']:>12s} n={row['n']} p={row['p']}: "
            f"|rho gap|*100 = {row['abs_rho_gap'] * 100:.1f}, "
            f"loss*100 = ({row['loss1'] * 100:.1f}, {row['loss2'] * 100:.1f}), "
            f"degenerate = {row['n_degenerate']}",
            file=sys.stderr,
        )
    return 0


def _require(value, name: str):
    if value is None:
        raise SpecError(f"missing required option --{name} (or config key)")
    return value


def cmd_fit(args, cfg: dict) -> int:
    _, _, out_dir = _global_opts(args, cfg)
    data = _require(_pick(args.data, cfg, "fit", "data", None), "data")
    split_col = int(_require(_pick(args.split_col, cfg, "fit", "split_col", None), "split-col"))
    method = str(_pick(args.method, cfg, "fit", "method", "spatial-sign"))
    criterion = str(_pick(args.criterion, cfg, "fit", "criterion", "bic1"))
    fit, report_path = fit_csv(
        data, split_col, method, criterion, out_dir=out_dir, solver_options=_solver_options(cfg)
    )
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    print(
        f"fit: method={method} rho={fit.rho_in_sample:.4f} "
        f"selected {len(report['weights1'])}+{len(report['weights2'])} variables "
        f"-> {report_path}",
        file=sys.stderr,
    )
    return 0


def cmd_split_eval(args, cfg: dict) -> int:
    seed, threads, out_dir = _global_opts(args, cfg)
    spec = SplitEvalSpec(
        data_path=str(_require(_pick(args.data, cfg, "split_eval", "data", None), "data")),
        split_col=int(
            _require(_pick(args.split_col, cfg, "split_eval", "split_col", None), "split-col")
        ),
        train_frac=float(_pick(args.train_frac, cfg, "split_eval", "train_frac", 0.8)),
        repetitions=int(_pick(args.reps, cfg, "split_eval", "repetitions", 500)),
        methods=tuple(
            _as_tuple(_pick(args.methods, cfg, "split_eval", "methods", ESTIMATOR_KINDS))
        ),
        criterion=str(_pick(args.criterion, cfg, "split_eval", "criterion", "bic1")),
        seed=seed,
        solver=_solver_options(cfg),
    )
    result = run_split_eval(spec, threads=threads, out_dir=out_dir)
    print(f"split-eval: {spec.repetitions} repetitions -> {out_dir}", file=sys.stderr)
    for row in result.summary:
        print(
            f"  {row['method']:>12s}: rho_test = {row['rho_test_mean']:.3f} "
            f"({row['rho_test_sd']:.3f}), selected = "
            f"{row['selected1_mean']:.2f} + {row['selected2_mean']:.2f}",
            file=sys.stderr,
        )
    return 0


def cmd_emit_tables(args, cfg: dict) -> int:
    _, _, out_dir = _global_opts(args, cfg)
    records_path = _require(_pick(args.records, cfg, "tables", "records", None), "records")
    formats = tuple(_as_tuple(_pick(args.format, cfg, "tables", "format", ["csv", "markdown"])))
    try:
        with open(records_path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except OSError as err:
        raise DataError(f"cannot open records file {records_path}: {err}") from err
    if not records:
        raise DataError(f"records file {records_path} is empty")
    methods = tuple(dict.fromkeys(rec["method"] for rec in records))
    aggregates = aggregate_records(records, methods)
    written = emit_tables(aggregates, out_dir, formats=formats, methods=methods)
    print(f"emit-tables: wrote {len(written)} file(s) to {out_dir}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except (SpecError, ValueError) as err:
        print(f"specification error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
