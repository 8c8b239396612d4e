"""Simulation grids, repeated-split evaluation, CSV fitting, and table emission.

Replications are driven by index-derived random streams: the stream for a
given (seed, cell, replication, purpose) tuple never depends on how many
other replications run, which order they run in, or how many workers run
them. Together with single-threaded BLAS inside each replication this makes
every run byte-reproducible across worker counts, and lets interrupted runs
resume without changing the final numbers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import multiprocessing
import os
import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numpy.random import SeedSequence, default_rng
from threadpoolctl import threadpool_limits

from .cov_models import JointCovModel, block_ar_cov, build_model_i, build_model_ii
from .exceptions import DataError, DegenerateFitError, MetricUndefinedError, SpecError
from .metrics import degenerate_report, evaluate_fit, oos_correlation
from .sampling import DISTRIBUTION_KINDS, DistributionSpec, draw_dataset
from .scatter import estimate_scatter
from .solver import BIC_CRITERIA, SolverOptions, fit_scca
from .types import ESTIMATOR_KINDS, Dataset

# Purpose tags appended to the per-replication seed tuple.
_STREAM_MODEL = 1
_STREAM_DATA = 2
_STREAM_SPLIT = 3

_MISSING_TOKENS = {"", "na", "nan", "n/a", "null"}

#: Metric fields aggregated per cell, in emission order.
_METRIC_FIELDS = (
    "rho_hat",
    "abs_rho_gap",
    "loss1",
    "loss2",
    "fpr1",
    "fnr1",
    "fpr2",
    "fnr2",
    "cos2_angle1",
    "cos2_angle2",
    "n_selected1",
    "n_selected2",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative simulation grid: model x distribution x n x p x methods."""

    model: str = "I"
    distribution: DistributionSpec | str = "normal"
    n_list: tuple[int, ...] = (200,)
    p_list: tuple[int, ...] = (400,)
    methods: tuple[str, ...] = ESTIMATOR_KINDS
    replications: int = 100
    seed: int = 0
    criterion: str = "bic1"
    solver: SolverOptions = field(default_factory=SolverOptions)
    block_count: int = 5
    ar_rho: float = 0.8
    leading_rho: float = 0.9
    extra_rank: int = 50
    extra_scale: float = 0.1
    fixed_w_star: bool = False

    def __post_init__(self):
        if self.model not in ("I", "II"):
            raise SpecError(f"model must be 'I' or 'II', got {self.model!r}")
        dist = self.distribution
        if isinstance(dist, str):
            if dist not in DISTRIBUTION_KINDS:
                raise SpecError(
                    f"distribution must be one of {DISTRIBUTION_KINDS}, got {dist!r}"
                )
            object.__setattr__(self, "distribution", DistributionSpec(kind=dist))
        if not self.n_list or not self.p_list:
            raise SpecError("n_list and p_list must be non-empty")
        for n in self.n_list:
            if n < 2:
                raise SpecError(f"sample sizes must be >= 2, got {n}")
        for p in self.p_list:
            if p % 2 != 0:
                raise SpecError(f"p must be even (two views of p/2), got {p}")
            d = p // 2
            if d % self.block_count != 0:
                raise SpecError(
                    f"p/2 = {d} must be divisible by block_count = {self.block_count}"
                )
            if d < 11:
                raise SpecError(f"p/2 must be >= 11 for the sparse direction, got {d}")
            if self.model == "II" and d <= self.extra_rank + 1:
                raise SpecError(
                    f"model II needs p/2 > extra_rank + 1 = {self.extra_rank + 1}, got {d}"
                )
        if not self.methods:
            raise SpecError("methods must be non-empty")
        for m in self.methods:
            if m not in ESTIMATOR_KINDS:
                raise SpecError(f"unknown method {m!r}; expected one of {ESTIMATOR_KINDS}")
        if self.replications < 1:
            raise SpecError(f"replications must be >= 1, got {self.replications}")
        if self.criterion not in BIC_CRITERIA:
            raise SpecError(f"criterion must be one of {BIC_CRITERIA}, got {self.criterion!r}")
        if self.seed < 0:
            raise SpecError(f"seed must be non-negative, got {self.seed}")

    def cells(self) -> list[tuple[int, int, int]]:
        """Grid cells as (cell_index, n, p), in canonical order."""
        return [
            (idx, n, p)
            for idx, (n, p) in enumerate((n, p) for n in self.n_list for p in self.p_list)
        ]

    def to_jsonable(self) -> dict:
        out = asdict(self)
        return out


@dataclass
class ExperimentResult:
    """Raw per-replication records plus per-cell aggregates."""

    spec: ExperimentSpec
    records: list[dict]
    aggregates: list[dict]
    wall_time_s: float
    out_dir: str | None = None


def _replication_model(spec: ExperimentSpec, cell_index: int, rep: int, d: int) -> JointCovModel:
    """Ground-truth model for one replication.

    Model I is deterministic. Model II redraws its random tail bases every
    replication unless ``fixed_w_star`` pins them per cell.
    """
    sigma = block_ar_cov(d, spec.block_count, spec.ar_rho)
    if spec.model == "I":
        return build_model_i(sigma, sigma, spec.leading_rho)
    draw_rep = 0 if spec.fixed_w_star else rep
    rng = default_rng(SeedSequence((spec.seed, cell_index, draw_rep, _STREAM_MODEL)))
    return build_model_ii(
        sigma,
        sigma,
        spec.leading_rho,
        extra_rank=spec.extra_rank,
        extra_scale=spec.extra_scale,
        rng=rng,
    )


def _fit_records(spec, model, dataset, base: dict) -> list[dict]:
    """Fit every method on one dataset; degenerate fits get penalty scores."""
    data_hash = hashlib.sha256(dataset.data.tobytes()).hexdigest()[:16]
    records = []
    for method in spec.methods:
        record = dict(base)
        record.update({"method": method, "data_hash": data_hash})
        try:
            blocks = estimate_scatter(dataset.data, dataset.split_col, method)
            fit = fit_scca(blocks, dataset.n, criterion=spec.criterion, options=spec.solver)
            report = evaluate_fit(fit.w1_hat, fit.w2_hat, model)
            assert report.rho_hat <= model.rho_star + 1e-10
            record.update(
                degenerate=False,
                n_selected1=int(fit.support1.size),
                n_selected2=int(fit.support2.size),
                lambda1=float(fit.lambda1),
                lambda2=float(fit.lambda2),
                outer_iterations=int(fit.outer_iterations),
                converged=bool(fit.converged),
            )
        except DegenerateFitError:
            report = degenerate_report(model)
            record.update(
                degenerate=True,
                n_selected1=0,
                n_selected2=0,
                lambda1=None,
                lambda2=None,
                outer_iterations=0,
                converged=False,
            )
        record.update({k: float(v) for k, v in asdict(report).items()})
        records.append(record)
    return records


def _simulate_replication(spec: ExperimentSpec, cell_index: int, n: int, p: int, rep: int) -> list[dict]:
    """All method records for one (cell, replication) pair; order-independent."""
    with threadpool_limits(limits=1), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = p // 2
        model = _replication_model(spec, cell_index, rep, d)
        rng = default_rng(SeedSequence((spec.seed, cell_index, rep, _STREAM_DATA)))
        dataset = draw_dataset(model, n, spec.distribution, rng)
        base = {
            "model": spec.model,
            "distribution": spec.distribution.kind,
            "n": n,
            "p": p,
            "cell": cell_index,
            "rep": rep,
        }
        return _fit_records(spec, model, dataset, base)


_WORKER_SPEC: ExperimentSpec | None = None


def _init_sim_worker(spec: ExperimentSpec) -> None:
    global _WORKER_SPEC
    _WORKER_SPEC = spec


def _sim_task(task: tuple[int, int, int, int]) -> list[dict]:
    cell_index, n, p, rep = task
    return _simulate_replication(_WORKER_SPEC, cell_index, n, p, rep)


def _record_sort_key(record: dict, methods: tuple[str, ...]):
    return (record["cell"], record["rep"], methods.index(record["method"]))


def _load_existing_records(path: str, spec: ExperimentSpec) -> tuple[list[dict], set]:
    """Read checkpointed records; only replications with every method count as done."""
    if not os.path.exists(path):
        return [], set()
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    by_rep: dict[tuple, set] = {}
    for rec in records:
        by_rep.setdefault((rec["cell"], rec["rep"]), set()).add(rec["method"])
    done = {key for key, methods in by_rep.items() if methods == set(spec.methods)}
    records = [rec for rec in records if (rec["cell"], rec["rep"]) in done]
    return records, done


def aggregate_records(records: list[dict], methods: tuple[str, ...]) -> list[dict]:
    """Per-cell means over all replications, degenerate ones included and counted."""
    groups: dict[tuple, list[dict]] = {}
    for rec in records:
        groups.setdefault((rec["cell"], rec["method"]), []).append(rec)
    rows = []
    for (cell, method) in sorted(
        groups, key=lambda key: (key[0], methods.index(key[1]))
    ):
        cell_records = sorted(groups[(cell, method)], key=lambda r: r["rep"])
        row = {
            "model": cell_records[0]["model"],
            "distribution": cell_records[0]["distribution"],
            "n": cell_records[0]["n"],
            "p": cell_records[0]["p"],
            "method": method,
            "replications": len(cell_records),
            "n_degenerate": sum(bool(r["degenerate"]) for r in cell_records),
        }
        for metric in _METRIC_FIELDS:
            row[metric] = float(np.mean([r[metric] for r in cell_records]))
        rows.append(row)
    return rows


def _write_records(path: str, records: list[dict]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _write_csv(path: str, rows: list[dict], fieldnames: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(row.get(k)) for k in fieldnames})


def _csv_cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def run_simulation(
    spec: ExperimentSpec,
    out_dir: str | None = None,
    threads: int = 1,
    checkpoint_every: int = 50,
    resume: bool = True,
    progress: bool = False,
) -> ExperimentResult:
    """Run the full grid: sample, estimate per method, fit, and score.

    Within a replication all methods see the identical dataset. Records are
    appended to ``records.jsonl`` every ``checkpoint_every`` replications so
    an interrupted run can resume; on completion the file is rewritten in
    canonical order, making full runs byte-identical for a fixed seed
    regardless of ``threads``.
    """
    if threads < 1:
        raise SpecError(f"threads must be >= 1, got {threads}")
    started = time.time()
    records: list[dict] = []
    done: set = set()
    records_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        records_path = os.path.join(out_dir, "records.jsonl")
        if resume:
            records, done = _load_existing_records(records_path, spec)

    tasks = [
        (cell_index, n, p, rep)
        for cell_index, n, p in spec.cells()
        for rep in range(spec.replications)
        if (cell_index, rep) not in done
    ]

    checkpoint_fh = None
    if records_path is not None:
        checkpoint_fh = open(records_path, "a", encoding="utf-8")
    try:
        if threads == 1:
            stream = (_simulate_replication(spec, *task) for task in tasks)
            _collect(stream, tasks, records, checkpoint_fh, checkpoint_every, progress)
        else:
            ctx = multiprocessing.get_context("spawn")
            with ctx.Pool(threads, initializer=_init_sim_worker, initargs=(spec,)) as pool:
                stream = pool.imap(_sim_task, tasks, chunksize=1)
                _collect(stream, tasks, records, checkpoint_fh, checkpoint_every, progress)
    finally:
        if checkpoint_fh is not None:
            checkpoint_fh.close()

    records.sort(key=lambda rec: _record_sort_key(rec, spec.methods))
    aggregates = aggregate_records(records, spec.methods)
    wall = time.time() - started

    if out_dir is not None:
        _write_records(records_path, records)
        agg_fields = list(aggregates[0].keys()) if aggregates else []
        _write_csv(os.path.join(out_dir, "aggregates.csv"), aggregates, agg_fields)
        with open(os.path.join(out_dir, "spec.json"), "w", encoding="utf-8") as fh:
            json.dump(spec.to_jsonable(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return ExperimentResult(
        spec=spec, records=records, aggregates=aggregates, wall_time_s=wall, out_dir=out_dir
    )


def _collect(stream, tasks, records, checkpoint_fh, checkpoint_every, progress) -> None:
    for index, rep_records in enumerate(stream):
        records.extend(rep_records)
        if checkpoint_fh is not None:
            for rec in rep_records:
                checkpoint_fh.write(json.dumps(rec, sort_keys=True) + "\n")
            if (index + 1) % checkpoint_every == 0:
                checkpoint_fh.flush()
                os.fsync(checkpoint_fh.fileno())
        if progress and (index + 1) % checkpoint_every == 0:
            print(f"  completed {index + 1}/{len(tasks)} replications", flush=True)


# ---------------------------------------------------------------------------
# Presentation tables
# ---------------------------------------------------------------------------


def emit_tables(
    aggregates: list[dict],
    out_dir: str,
    formats: tuple[str, ...] = ("csv", "markdown"),
    methods: tuple[str, ...] | None = None,
) -> list[str]:
    """Write one error, loss, and rate table per (model, distribution) present.

    Values are multiplied by 100 and rounded to one decimal, mirroring how
    simulation results are usually reported. Returns the written paths.
    """
    if not aggregates:
        raise SpecError("cannot emit tables from an empty result")
    for fmt in formats:
        if fmt not in ("csv", "markdown"):
            raise SpecError(f"unknown table format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    if methods is None:
        methods = tuple(dict.fromkeys(row["method"] for row in aggregates))

    written = []
    panels = sorted({(row["model"], row["distribution"]) for row in aggregates})
    for model, dist in panels:
        panel = [r for r in aggregates if r["model"] == model and r["distribution"] == dist]
        cells = sorted({(r["n"], r["p"]) for r in panel})
        by_key = {(r["n"], r["p"], r["method"]): r for r in panel}

        def table(columns_of):
            header = ["n", "p"]
            for m in methods:
                header.extend(columns_of(m)[0])
            rows = []
            for n, p in cells:
                row = [str(n), str(p)]
                for m in methods:
                    rec = by_key.get((n, p, m))
                    _, fields = columns_of(m)
                    if rec is None:
                        row.extend([""] * len(fields))
                    else:
                        row.extend(f"{rec[f] * 100:.1f}" for f in fields)
                rows.append(row)
            return header, rows

        tables = {
            "error": table(lambda m: ([m], ["abs_rho_gap"])),
            "loss": table(lambda m: ([f"{m} L1", f"{m} L2"], ["loss1", "loss2"])),
            "rates": table(
                lambda m: (
                    [f"{m} FPR1", f"{m} FNR1", f"{m} FPR2", f"{m} FNR2"],
                    ["fpr1", "fnr1", "fpr2", "fnr2"],
                )
            ),
        }
        for name, (header, rows) in tables.items():
            stem = f"table_{name}_model{model}_{dist}"
            if "csv" in formats:
                path = os.path.join(out_dir, stem + ".csv")
                with open(path, "w", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(header)
                    writer.writerows(rows)
                written.append(path)
            if "markdown" in formats:
                path = os.path.join(out_dir, stem + ".md")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write("| " + " | ".join(header) + " |\n")
                    fh.write("|" + "|".join(" --- " for _ in header) + "|\n")
                    for row in rows:
                        fh.write("| " + " | ".join(row) + " |\n")
                written.append(path)
    return written


# ---------------------------------------------------------------------------
# CSV data: loading, one-shot fits, repeated-split evaluation
# ---------------------------------------------------------------------------


def load_numeric_csv(path: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Parse a rectangular numeric CSV with a header row.

    Raises ``DataError`` naming the first unparseable cell (line and column,
    both 1-based) or listing every missing-value cell.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot open {path}: {err}") from err
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty: expected a header row") from None
        names = tuple(name.strip() for name in header)
        n_cols = len(names)
        rows = []
        missing = []
        for line_no, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != n_cols:
                raise DataError(
                    f"{path}: line {line_no} has {len(raw)} fields, expected {n_cols}"
                )
            row = np.empty(n_cols)
            for col, token in enumerate(raw, start=1):
                text = token.strip()
                if text.lower() in _MISSING_TOKENS:
                    missing.append((line_no, col))
                    row[col - 1] = np.nan
                    continue
                try:
                    row[col - 1] = float(text)
                except ValueError:
                    raise DataError(
                        f"{path}: could not parse {text!r} as a number "
                        f"at line {line_no}, column {col}"
                    ) from None
            rows.append(row)
    if missing:
        shown = ", ".join(f"(line {ln}, column {col})" for ln, col in missing[:20])
        more = "" if len(missing) <= 20 else f" and {len(missing) - 20} more"
        raise DataError(f"{path}: missing values at {shown}{more}")
    if not rows:
        raise DataError(f"{path} has a header but zero data rows")
    return names, np.vstack(rows)


def load_dataset(path: str, split_col: int) -> Dataset:
    names, data = load_numeric_csv(path)
    if not 0 < split_col < data.shape[1]:
        raise SpecError(
            f"split_col must be strictly between 0 and {data.shape[1]}, got {split_col}"
        )
    return Dataset(data=data, split_col=split_col, source="file", columns=names)


def fit_csv(
    path: str,
    split_col: int,
    method: str,
    criterion: str = "bic1",
    out_dir: str = ".",
    solver_options: SolverOptions | None = None,
) -> tuple:
    """Fit once on a CSV file and write a JSON report of the directions.

    The report lists the non-zero weights of each side sorted by decreasing
    magnitude, with the in-sample correlation, selected penalties, and
    iteration diagnostics.
    """
    if method not in ESTIMATOR_KINDS:
        raise SpecError(f"unknown method {method!r}; expected one of {ESTIMATOR_KINDS}")
    if criterion not in BIC_CRITERIA:
        raise SpecError(f"criterion must be one of {BIC_CRITERIA}, got {criterion!r}")
    dataset = load_dataset(path, split_col)
    blocks = estimate_scatter(dataset.data, dataset.split_col, method)
    fit = fit_scca(blocks, dataset.n, criterion=criterion, options=solver_options)

    def weight_rows(w, names):
        order = np.argsort(-np.abs(w), kind="stable")
        return [
            {"variable": names[j], "weight": float(w[j])}
            for j in order
            if w[j] != 0.0
        ]

    names1 = dataset.columns[: dataset.split_col]
    names2 = dataset.columns[dataset.split_col :]
    report = {
        "data": os.path.basename(path),
        "method": method,
        "criterion": criterion,
        "n": dataset.n,
        "p1": dataset.p1,
        "p2": dataset.p2,
        "rho_in_sample": float(fit.rho_in_sample),
        "lambda1": float(fit.lambda1),
        "lambda2": float(fit.lambda2),
        "outer_iterations": int(fit.outer_iterations),
        "converged": bool(fit.converged),
        "weights1": weight_rows(fit.w1_hat, names1),
        "weights2": weight_rows(fit.w2_hat, names2),
    }
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "fit_report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return fit, report_path


@dataclass(frozen=True)
class SplitEvalSpec:
    """Repeated random-split evaluation of each method on one dataset."""

    data_path: str
    split_col: int
    train_frac: float = 0.8
    repetitions: int = 500
    methods: tuple[str, ...] = ESTIMATOR_KINDS
    criterion: str = "bic1"
    seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not 0.0 < self.train_frac < 1.0:
            raise SpecError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.repetitions < 1:
            raise SpecError(f"repetitions must be >= 1, got {self.repetitions}")
        for m in self.methods:
            if m not in ESTIMATOR_KINDS:
                raise SpecError(f"unknown method {m!r}; expected one of {ESTIMATOR_KINDS}")
        if self.criterion not in BIC_CRITERIA:
            raise SpecError(f"criterion must be one of {BIC_CRITERIA}, got {self.criterion!r}")
        if self.seed < 0:
            raise SpecError(f"seed must be non-negative, got {self.seed}")


@dataclass
class SplitEvalResult:
    spec: SplitEvalSpec
    records: list[dict]
    summary: list[dict]
    out_dir: str | None = None


def _split_sizes(n: int, train_frac: float) -> tuple[int, int]:
    n_train = int(round(train_frac * n))
    return n_train, n - n_train


def _split_eval_one(dataset: Dataset, spec: SplitEvalSpec, rep: int) -> list[dict]:
    with threadpool_limits(limits=1), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        n_train, _ = _split_sizes(dataset.n, spec.train_frac)
        rng = default_rng(SeedSequence((spec.seed, rep, _STREAM_SPLIT)))
        order = rng.permutation(dataset.n)
        train, test = order[:n_train], order[n_train:]
        records = []
        for method in spec.methods:
            record = {"rep": rep, "method": method}
            try:
                blocks = estimate_scatter(dataset.data[train], dataset.split_col, method)
                fit = fit_scca(blocks, n_train, criterion=spec.criterion, options=spec.solver)
                test_blocks = estimate_scatter(dataset.data[test], dataset.split_col, method)
                rho_test = oos_correlation(fit.w1_hat, fit.w2_hat, test_blocks)
                record.update(
                    degenerate=False,
                    rho_test=float(rho_test),
                    n_selected1=int(fit.support1.size),
                    n_selected2=int(fit.support2.size),
                )
            except (DegenerateFitError, MetricUndefinedError):
                record.update(degenerate=True, rho_test=0.0, n_selected1=0, n_selected2=0)
            records.append(record)
        return records


_SPLIT_CONTEXT: tuple[Dataset, SplitEvalSpec] | None = None


def _init_split_worker(dataset: Dataset, spec: SplitEvalSpec) -> None:
    global _SPLIT_CONTEXT
    _SPLIT_CONTEXT = (dataset, spec)


def _split_task(rep: int) -> list[dict]:
    dataset, spec = _SPLIT_CONTEXT
    return _split_eval_one(dataset, spec, rep)


def run_split_eval(
    spec: SplitEvalSpec, threads: int = 1, out_dir: str | None = None
) -> SplitEvalResult:
    """Repeatedly split, fit on the training part, score on the held-out part.

    The out-of-sample correlation uses scatter blocks estimated on the test
    split by the same estimator that produced the fit.
    """
    if threads < 1:
        raise SpecError(f"threads must be >= 1, got {threads}")
    dataset = load_dataset(spec.data_path, spec.split_col)
    if dataset.n < 10:
        raise SpecError(f"split evaluation needs n >= 10 rows, got {dataset.n}")
    n_train, n_test = _split_sizes(dataset.n, spec.train_frac)
    if n_train < 2 or n_test < 3:
        raise SpecError(
            f"train_frac={spec.train_frac} leaves {n_train} train / {n_test} test rows; "
            "need at least 2 and 3"
        )

    reps = list(range(spec.repetitions))
    if threads == 1:
        batches = [_split_eval_one(dataset, spec, rep) for rep in reps]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(
            threads, initializer=_init_split_worker, initargs=(dataset, spec)
        ) as pool:
            batches = list(pool.imap(_split_task, reps, chunksize=1))
    records = [rec for batch in batches for rec in batch]

    summary = []
    for method in spec.methods:
        rows = [r for r in records if r["method"] == method]
        rhos = np.array([r["rho_test"] for r in rows])
        summary.append(
            {
                "method": method,
                "rho_test_mean": float(rhos.mean()),
                "rho_test_sd": float(rhos.std(ddof=1)) if rhos.size > 1 else 0.0,
                "selected1_mean": float(np.mean([r["n_selected1"] for r in rows])),
                "selected2_mean": float(np.mean([r["n_selected2"] for r in rows])),
                "repetitions": len(rows),
                "n_degenerate": sum(bool(r["degenerate"]) for r in rows),
            }
        )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_records(os.path.join(out_dir, "split_records.jsonl"), records)
        fields = list(summary[0].keys())
        _write_csv(os.path.join(out_dir, "split_summary.csv"), summary, fields)
        with open(os.path.join(out_dir, "split_summary.md"), "w", encoding="utf-8") as fh:
            fh.write("| " + " | ".join(fields) + " |\n")
            fh.write("|" + "|".join(" --- " for _ in fields) + "|\n")
            for row in summary:
                cells = [
                    f"{row[f]:.3f}" if isinstance(row[f], float) else str(row[f])
                    for f in fields
                ]
                fh.write("| " + " | ".join(cells) + " |\n")
    return SplitEvalResult(spec=spec, records=records, summary=summary, out_dir=out_dir)
