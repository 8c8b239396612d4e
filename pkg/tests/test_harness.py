import csv
import json
import os

import numpy as np
import pytest
from numpy.random import default_rng

from signcca.cov_models import block_ar_cov, build_model_i
from signcca.exceptions import DataError, SpecError
from signcca.harness import (
    ExperimentSpec,
    SplitEvalSpec,
    _replication_model,
    aggregate_records,
    emit_tables,
    fit_csv,
    load_numeric_csv,
    run_simulation,
    run_split_eval,
)
from signcca.sampling import sample_normal

TINY = dict(
    model="I",
    distribution="normal",
    n_list=(60,),
    p_list=(40,),
    methods=("spatial-sign", "sample-cov"),
    replications=3,
    seed=17,
)


############################ spec validation ############################


def test_spec_rejects_odd_p():
    with pytest.raises(SpecError, match="even"):
        ExperimentSpec(**{**TINY, "p_list": (41,)})


def test_spec_rejects_indivisible_half_dimension():
    with pytest.raises(SpecError, match="divisible"):
        ExperimentSpec(**{**TINY, "p_list": (44,)})


def test_spec_rejects_small_dimension():
    with pytest.raises(SpecError, match="sparse direction"):
        ExperimentSpec(**{**TINY, "p_list": (20,)})


def test_spec_rejects_bad_method_and_reps():
    with pytest.raises(SpecError, match="unknown method"):
        ExperimentSpec(**{**TINY, "methods": ("pearson",)})
    with pytest.raises(SpecError, match="replications"):
        ExperimentSpec(**{**TINY, "replications": 0})


def test_spec_model_ii_needs_room_for_extra_rank():
    with pytest.raises(SpecError, match="extra_rank"):
        ExperimentSpec(**{**TINY, "model": "II", "p_list": (80,)})


############################ run_simulation ############################


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    spec = ExperimentSpec(**TINY)
    result = run_simulation(spec, out_dir=str(out), threads=1)
    return spec, result, out


def test_simulation_record_count_and_labels(tiny_run):
    spec, result, _ = tiny_run
    assert len(result.records) == 3 * 2
    for rec in result.records:
        assert rec["model"] == "I"
        assert rec["distribution"] == "normal"
        assert (rec["n"], rec["p"]) == (60, 40)
        assert rec["method"] in spec.methods


def test_simulation_paired_datasets_across_methods(tiny_run):
    _, result, _ = tiny_run
    by_rep = {}
    for rec in result.records:
        by_rep.setdefault(rec["rep"], set()).add(rec["data_hash"])
    for rep, hashes in by_rep.items():
        assert len(hashes) == 1, f"methods saw different data in rep {rep}"


def test_simulation_aggregates_are_means(tiny_run):
    spec, result, _ = tiny_run
    for row in result.aggregates:
        rows = [r for r in result.records if r["method"] == row["method"]]
        for metric in ("abs_rho_gap", "loss1", "fnr2", "rho_hat"):
            assert row[metric] == pytest.approx(
                float(np.mean([r[metric] for r in rows])), abs=1e-12
            )
        assert row["replications"] == 3
        assert row["n_degenerate"] == 0


def test_simulation_deterministic_repeat(tiny_run):
    spec, result, _ = tiny_run
    again = run_simulation(spec, out_dir=None, threads=1)
    assert again.records == result.records
    assert again.aggregates == result.aggregates


def test_simulation_resume_matches_fresh_run(tmp_path):
    spec_small = ExperimentSpec(**{**TINY, "replications": 2})
    spec_full = ExperimentSpec(**{**TINY, "replications": 4})
    resumed_dir = tmp_path / "resumed"
    run_simulation(spec_small, out_dir=str(resumed_dir), threads=1)
    resumed = run_simulation(spec_full, out_dir=str(resumed_dir), threads=1)
    fresh = run_simulation(spec_full, out_dir=None, threads=1)
    assert resumed.records == fresh.records
    assert resumed.aggregates == fresh.aggregates


def test_simulation_partial_replication_recomputed(tmp_path):
    # records from an interrupted run that only covered one method must be
    # recomputed, not trusted
    spec = ExperimentSpec(**TINY)
    out = tmp_path / "crashed"
    full = run_simulation(spec, out_dir=str(out), threads=1)
    records = full.records
    # simulate a crash that lost the second method of rep 2
    torn = [r for r in records if not (r["rep"] == 2 and r["method"] == "sample-cov")]
    path = out / "records.jsonl"
    with open(path, "w") as fh:
        for rec in torn:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    resumed = run_simulation(spec, out_dir=str(out), threads=1)
    assert resumed.records == records


def test_model_ii_bases_redrawn_per_replication():
    spec = ExperimentSpec(
        **{**TINY, "model": "II", "p_list": (120,), "methods": ("sample-cov",)}
    )
    m0 = _replication_model(spec, 0, 0, 60)
    m1 = _replication_model(spec, 0, 1, 60)
    assert not np.array_equal(m0.sigma12, m1.sigma12)
    pinned = ExperimentSpec(
        **{
            **TINY,
            "model": "II",
            "p_list": (120,),
            "methods": ("sample-cov",),
            "fixed_w_star": True,
        }
    )
    p0 = _replication_model(pinned, 0, 0, 60)
    p1 = _replication_model(pinned, 0, 1, 60)
    assert np.array_equal(p0.sigma12, p1.sigma12)


def test_simulation_thread_pool_matches_serial(tmp_path):
    spec = ExperimentSpec(**{**TINY, "replications": 2})
    serial = run_simulation(spec, out_dir=str(tmp_path / "s"), threads=1)
    pooled = run_simulation(spec, out_dir=str(tmp_path / "p"), threads=2)
    assert serial.records == pooled.records
    assert (tmp_path / "s" / "records.jsonl").read_bytes() == (
        tmp_path / "p" / "records.jsonl"
    ).read_bytes()
    assert (tmp_path / "s" / "aggregates.csv").read_bytes() == (
        tmp_path / "p" / "aggregates.csv"
    ).read_bytes()


############################ tables ############################


def test_emit_tables_single_cell_markdown(tiny_run, tmp_path):
    _, result, _ = tiny_run
    paths = emit_tables(result.aggregates, str(tmp_path), methods=("spatial-sign", "sample-cov"))
    md = (tmp_path / "table_error_modelI_normal.md").read_text().splitlines()
    assert md[0] == "| n | p | spatial-sign | sample-cov |"
    assert len(md) == 3  # header, rule, one data row
    rates = (tmp_path / "table_rates_modelI_normal.csv").read_text().splitlines()[0]
    assert rates.split(",")[2:6] == [
        "spatial-sign FPR1",
        "spatial-sign FNR1",
        "spatial-sign FPR2",
        "spatial-sign FNR2",
    ]


def test_emit_tables_csv_round_trip(tiny_run, tmp_path):
    spec, result, _ = tiny_run
    emit_tables(result.aggregates, str(tmp_path), methods=spec.methods)
    with open(tmp_path / "table_error_modelI_normal.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    for method in spec.methods:
        agg = next(r for r in result.aggregates if r["method"] == method)
        parsed = float(rows[0][method])
        assert abs(parsed - round(agg["abs_rho_gap"] * 100, 1)) < 1e-9


def test_emit_tables_rejects_empty_and_bad_format(tmp_path):
    with pytest.raises(SpecError, match="empty"):
        emit_tables([], str(tmp_path))
    with pytest.raises(SpecError, match="format"):
        emit_tables([{"model": "I"}], str(tmp_path), formats=("pdf",))


############################ CSV loading ############################


def test_load_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("a,b,c\n")
    with pytest.raises(DataError, match="zero data rows"):
        load_numeric_csv(str(path))


def test_load_csv_missing_value_coordinates(tmp_path):
    path = tmp_path / "holes.csv"
    path.write_text("a,b\n1.0,2.0\nNA,3.0\n4.0,\n")
    with pytest.raises(DataError, match=r"\(line 3, column 1\).*\(line 4, column 2\)"):
        load_numeric_csv(str(path))


def test_load_csv_parse_error_coordinates(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1.0,2.0\n3.0,oops\n")
    with pytest.raises(DataError, match="line 3, column 2"):
        load_numeric_csv(str(path))


def test_load_csv_ragged_row(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b\n1.0,2.0\n3.0\n")
    with pytest.raises(DataError, match="has 1 fields, expected 2"):
        load_numeric_csv(str(path))


def test_load_csv_happy_path(tmp_path):
    path = tmp_path / "ok.csv"
    path.write_text("a,b,c\n1,2,3\n4,5,6\n")
    names, data = load_numeric_csv(str(path))
    assert names == ("a", "b", "c")
    assert np.array_equal(data, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])


############################ fit_csv ############################


def closed_form_cca_2x2(data):
    """Independent oracle: unpenalized CCA of two 2-column views via the
    generalized eigenproblem on the sample covariance."""
    n = data.shape[0]
    centered = data - data.mean(axis=0)
    s = centered.T @ centered / (n - 1)
    s1, s12, s2 = s[:2, :2], s[:2, 2:], s[2:, 2:]
    m = np.linalg.solve(s1, s12) @ np.linalg.solve(s2, s12.T)
    vals, vecs = np.linalg.eig(m)
    w1 = np.real(vecs[:, np.argmax(np.real(vals))])
    w1 /= np.sqrt(w1 @ s1 @ w1)
    w2 = np.linalg.solve(s2, s12.T @ w1)
    w2 /= np.sqrt(w2 @ s2 @ w2)
    rho = abs(w1 @ s12 @ w2)
    return w1, w2, rho


def test_fit_csv_matches_closed_form_cca(tmp_path):
    # planted dense 2x2 pair: both variables matter on each side, so the
    # selected model is dense and a vanishing penalty floor reproduces
    # classical CCA
    n = 1000
    sigma1 = np.array([[1.0, 0.3], [0.3, 1.0]])
    sigma2 = np.array([[1.0, -0.2], [-0.2, 1.0]])
    model = build_model_i(
        sigma1, sigma2, 0.85, directions=(np.array([1.0, 0.9]), np.array([1.0, -0.8]))
    )
    data = sample_normal(model, n, default_rng(21)).data
    path = tmp_path / "toy.csv"
    with open(path, "w") as fh:
        fh.write("x1,x2,y1,y2\n")
        for row in data:
            fh.write(",".join(repr(v) for v in row) + "\n")

    from signcca.solver import SolverOptions

    # a near-zero floor on the penalty path makes BIC pick an essentially
    # unpenalized dense solution comparable to classical CCA
    fit, report_path = fit_csv(
        str(path),
        2,
        "sample-cov",
        out_dir=str(tmp_path),
        solver_options=SolverOptions(n_lambda=30, lambda_ratio=1e-9),
    )
    w1, w2, rho = closed_form_cca_2x2(data)
    if np.sign(w1[0]) != np.sign(fit.w1_hat[0]):
        w1, w2 = -w1, -w2
    assert np.allclose(fit.w1_hat, w1, atol=1e-6)
    assert np.allclose(fit.w2_hat, w2, atol=1e-6)
    assert fit.rho_in_sample == pytest.approx(rho, abs=1e-6)

    with open(report_path) as fh:
        report = json.load(fh)
    assert report["n"] == n and report["p1"] == 2 and report["p2"] == 2
    weights = report["weights1"]
    assert weights == sorted(weights, key=lambda r: -abs(r["weight"]))
    assert {w["variable"] for w in weights} <= {"x1", "x2"}


def test_fit_csv_rejects_bad_split(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    with pytest.raises(SpecError, match="split_col"):
        fit_csv(str(path), 2, "sample-cov", out_dir=str(tmp_path))


############################ split evaluation ############################


def make_planted_csv(path, n=40, p1=120, p2=21, seed=5):
    """Synthetic data shaped like a small two-omics study with a strong
    planted canonical pair."""
    sigma1 = block_ar_cov(p1, 5, 0.8)
    sigma2 = block_ar_cov(p2, 3, 0.8)
    model = build_model_i(sigma1, sigma2, 0.9)
    ds = sample_normal(model, n, default_rng(seed))
    names = [f"g{j}" for j in range(p1)] + [f"f{j}" for j in range(p2)]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in ds.data:
            fh.write(",".join(repr(v) for v in row) + "\n")
    return model


@pytest.fixture(scope="module")
def planted_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("split") / "planted.csv"
    make_planted_csv(str(path))
    return str(path)


def test_split_eval_recovers_planted_signal(planted_csv, tmp_path):
    spec = SplitEvalSpec(
        data_path=planted_csv,
        split_col=120,
        repetitions=8,
        methods=("spatial-sign",),
        seed=3,
    )
    result = run_split_eval(spec, out_dir=str(tmp_path))
    row = result.summary[0]
    assert row["method"] == "spatial-sign"
    assert row["rho_test_mean"] > 0.5
    assert row["repetitions"] == 8
    assert row["selected1_mean"] >= 1.0
    assert set(row) == {
        "method",
        "rho_test_mean",
        "rho_test_sd",
        "selected1_mean",
        "selected2_mean",
        "repetitions",
        "n_degenerate",
    }
    assert os.path.exists(tmp_path / "split_summary.csv")
    assert os.path.exists(tmp_path / "split_records.jsonl")


def test_split_eval_deterministic(planted_csv):
    spec = SplitEvalSpec(
        data_path=planted_csv, split_col=120, repetitions=2, methods=("sample-cov",), seed=9
    )
    a = run_split_eval(spec)
    b = run_split_eval(spec)
    assert a.records == b.records
    assert a.summary == b.summary


def test_split_eval_rejects_tiny_test_split(planted_csv):
    spec = SplitEvalSpec(
        data_path=planted_csv, split_col=120, train_frac=0.97, repetitions=1
    )
    with pytest.raises(SpecError, match="test"):
        run_split_eval(spec)


def test_split_eval_needs_minimum_rows(tmp_path):
    path = tmp_path / "short.csv"
    rows = "\n".join("1.0,2.0,3.0,4.0" for _ in range(5))
    path.write_text("a,b,c,d\n" + rows + "\n")
    spec = SplitEvalSpec(data_path=str(path), split_col=2, repetitions=1)
    with pytest.raises(SpecError, match="n >= 10"):
        run_split_eval(spec)


def test_split_spec_validation(planted_csv):
    with pytest.raises(SpecError, match="train_frac"):
        SplitEvalSpec(data_path=planted_csv, split_col=120, train_frac=1.0)
    with pytest.raises(SpecError, match="repetitions"):
        SplitEvalSpec(data_path=planted_csv, split_col=120, repetitions=0)
