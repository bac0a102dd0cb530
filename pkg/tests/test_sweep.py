"""Benchmark sweep and degree-fit diagnostics tests."""

import csv

import numpy as np
import pytest

from mlcommunity.graph import InputDataError, MultiLayerGraph, PreconditionError
from mlcommunity.scenarios import builtin_scenario
from mlcommunity.sweep import (
    AGGREGATE_FIELDS,
    DEGREE_FIT_FIELDS,
    REPLICATE_FIELDS,
    SweepSpec,
    aggregate_rows,
    degree_fit_table,
    resolve_workers,
    run_replicate,
    run_sweep,
    write_csv,
)

# hub pairs in the heavy-tailed scenarios legitimately clamp at small N
pytestmark = pytest.mark.filterwarnings(
    "ignore:.*exceeded probability 1:RuntimeWarning"
)


def small_spec(**over):
    kw = dict(
        scenario=builtin_scenario("strong_sparse"),
        axis="avg-degree",
        values=[12.0, 20.0],
        n_nodes=60,
        n_communities=2,
        avg_degree=12.0,
        reps=2,
        measures=["ng-aggregate", "mnavrg"],
        seed=5,
        restarts=2,
    )
    kw.update(over)
    return SweepSpec(**kw)


def test_spec_validation():
    with pytest.raises(PreconditionError):
        small_spec(axis="density")
    with pytest.raises(PreconditionError):
        small_spec(values=[])
    with pytest.raises(PreconditionError):
        small_spec(reps=0)
    with pytest.raises(PreconditionError):
        small_spec(measures=[])
    with pytest.raises(PreconditionError):
        small_spec(measures=["modularity"])
    with pytest.raises(PreconditionError):
        small_spec(perturb_fraction=1.5)


def test_replicate_rows_have_full_schema():
    spec = small_spec()
    rows = run_replicate(spec, 0, 0)
    assert len(rows) == len(spec.measures)
    for row in rows:
        assert set(row) == set(REPLICATE_FIELDS)
        assert row["error"] == ""
        assert row["axis"] == "avg-degree"
        assert row["axis_value"] == 12.0
        assert 0.0 <= float(row["nmi"]) <= 1.0 + 1e-12
        assert int(row["k_detected"]) >= 1


def test_replicates_are_independent_of_execution_order():
    spec = small_spec()
    direct = run_replicate(spec, 1, 1)
    rows, _ = run_sweep(spec)
    subset = [r for r in rows if r["axis_value"] == 20.0 and r["rep"] == 1]
    assert subset == direct


def test_sweep_rows_and_aggregates_are_deterministic():
    spec = small_spec()
    rows1, agg1 = run_sweep(spec)
    rows2, agg2 = run_sweep(spec)
    assert rows1 == rows2
    assert agg1 == agg2
    assert len(rows1) == len(spec.values) * spec.reps * len(spec.measures)
    assert len(agg1) == len(spec.values) * len(spec.measures)
    for entry in agg1:
        assert set(entry) == set(AGGREGATE_FIELDS)
        assert entry["reps_ok"] == spec.reps
        assert entry["reps_failed"] == 0


def test_aggregate_matches_hand_average():
    spec = small_spec()
    rows, agg = run_sweep(spec)
    cell = [
        r
        for r in rows
        if r["axis_value"] == 12.0 and r["measure"] == "ng-aggregate"
    ]
    want = float(np.mean([float(r["nmi"]) for r in cell]))
    got = next(
        a
        for a in agg
        if a["axis_value"] == 12.0 and a["measure"] == "ng-aggregate"
    )
    assert got["nmi_mean"] == pytest.approx(want, abs=1e-12)
    assert got["k_mean"] == pytest.approx(
        np.mean([float(r["k_detected"]) for r in cell]), abs=1e-12
    )


def test_aggregate_keeps_failed_rows_out():
    spec = small_spec()
    rows = run_replicate(spec, 0, 0)
    rows[0] = dict(rows[0], error="boom", nmi="", k_detected="", score="")
    agg = aggregate_rows(spec, rows)
    bad = next(a for a in agg if a["measure"] == rows[0]["measure"])
    assert bad["reps_failed"] == 1
    assert bad["reps_ok"] == 0
    assert bad["nmi_mean"] == ""


def test_known_k_mode_runs_fixed_k_search():
    spec = small_spec(
        scenario=builtin_scenario("known_k_mixed"),
        known_k=True,
        values=[16.0],
        reps=1,
        measures=["dcmlsbm"],
        restarts=1,
    )
    rows, agg = run_sweep(spec)
    assert all(int(r["k_detected"]) <= 2 for r in rows)
    assert agg[0]["reps_ok"] == 1


def test_write_csv_schema_line_and_roundtrip(tmp_path):
    spec = small_spec(values=[12.0], reps=1)
    rows, _ = run_sweep(spec)
    dest = tmp_path / "rows.csv"
    write_csv(dest, rows, REPLICATE_FIELDS, "replicates v1")
    text = dest.read_text().splitlines()
    assert text[0] == "# replicates v1"
    assert text[1] == ",".join(REPLICATE_FIELDS)
    back = list(csv.DictReader(text[1:]))
    assert len(back) == len(rows)
    for raw, row in zip(back, rows):
        assert raw["measure"] == row["measure"]
        assert float(raw["nmi"]) == pytest.approx(float(row["nmi"]), rel=1e-10)


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv("MLCOMMUNITY_THREADS", raising=False)
    assert resolve_workers(None) == 1
    assert resolve_workers(3) == 3
    with pytest.raises(PreconditionError):
        resolve_workers(0)
    monkeypatch.setenv("MLCOMMUNITY_THREADS", "4")
    assert resolve_workers(None) == 4
    monkeypatch.setenv("MLCOMMUNITY_THREADS", "zero")
    with pytest.raises(InputDataError):
        resolve_workers(None)
    monkeypatch.setenv("MLCOMMUNITY_THREADS", "0")
    with pytest.raises(InputDataError):
        resolve_workers(None)


def test_degree_fit_reproduces_layer_totals():
    rng = np.random.default_rng(17)
    mats = []
    for _ in range(3):
        a = np.triu((rng.random((20, 20)) < 0.2).astype(float), k=1)
        mats.append(a + a.T)
    g = MultiLayerGraph.from_dense(mats)
    rows, summary = degree_fit_table(g)
    assert len(rows) == 60
    assert set(rows[0]) == set(DEGREE_FIT_FIELDS)
    for m in range(3):
        layer = [r for r in rows if r["layer"] == g.layer_names[m]]
        obs = sum(r["observed"] for r in layer)
        fit = sum(r["fitted"] for r in layer)
        assert fit == pytest.approx(obs, rel=1e-9)
    assert summary["excluded_nodes"] == 0
    assert summary["n_nodes"] == 20
    assert -1.0 <= summary["correlation_overall"] <= 1.0


def test_degree_fit_flags_isolated_nodes():
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = 2.0
    b = np.zeros((4, 4))
    b[0, 2] = b[2, 0] = 1.0
    g = MultiLayerGraph.from_dense([a, b])
    rows, summary = degree_fit_table(g)
    assert summary["excluded_nodes"] == 1
    flagged = {r["node"] for r in rows if r["excluded"]}
    assert flagged == {g.node_ids[3]}
