"""Replicated benchmark sweeps and degree-fit diagnostics.

A sweep fixes a scenario and walks one axis (average degree, node count
or community count), drawing ``reps`` independent networks per value and
scoring each configured measure's detected partition against the planted
labels.  Replicates are independent, seeded from disjoint spawn keys, so
the rows come out identical no matter how many workers run them.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evaluate import mse_num_communities, nmi
from .generate import sample_dcmlsbm, sample_labels, sample_mlsbm
from .graph import InputDataError, MultiLayerGraph, Partition, PreconditionError
from .modularity import Measure
from .nullmodels import fit_sd
from .optimize import OptimizeConfig, detect, perturb_labels
from .scenarios import Scenario

SWEEP_AXES = ("avg-degree", "n-nodes", "n-communities")
REPLICATE_FIELDS = [
    "axis",
    "axis_value",
    "rep",
    "measure",
    "nmi",
    "k_detected",
    "k_true",
    "score",
    "n_nodes",
    "avg_degree",
    "resamples",
    "error",
]
AGGREGATE_FIELDS = [
    "axis",
    "axis_value",
    "measure",
    "reps_ok",
    "reps_failed",
    "nmi_mean",
    "nmi_std",
    "k_mean",
    "k_mse",
]


@dataclass
class SweepSpec:
    """One benchmark study: scenario, swept axis, and fixed parameters."""

    scenario: Scenario
    axis: str
    values: list
    n_nodes: int
    n_communities: int
    avg_degree: float
    reps: int
    measures: list
    seed: int
    restarts: int | None = None
    known_k: bool = False
    perturb_fraction: float = 0.5
    kl_variant: str = "steepest"
    min_gain: float = 1e-10
    max_sweeps: int = 50
    class_probs: list | None = None

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise PreconditionError(
                f"axis must be one of {SWEEP_AXES}, got {self.axis!r}"
            )
        if not self.values:
            raise PreconditionError("sweep needs at least one axis value")
        if self.reps < 1:
            raise PreconditionError("reps must be at least 1")
        self.measures = [
            m if isinstance(m, Measure) else Measure.parse(m) for m in self.measures
        ]
        if not self.measures:
            raise PreconditionError("sweep needs at least one measure")
        if not (0.0 <= self.perturb_fraction <= 1.0):
            raise PreconditionError("perturb_fraction must lie in [0, 1]")


def _cell_params(spec: SweepSpec, value):
    n = spec.n_nodes
    k = spec.n_communities
    d = spec.avg_degree
    if spec.axis == "avg-degree":
        d = float(value)
    elif spec.axis == "n-nodes":
        n = int(value)
    else:
        k = int(value)
    return n, k, d


def _sample_cell(spec: SweepSpec, n, k, d, axis_index, rep):
    """Draw labels and a network, redrawing when a layer comes out empty."""
    last = None
    for attempt in range(10):
        ss = np.random.SeedSequence(
            spec.seed, spawn_key=(axis_index, rep, attempt)
        )
        gen_seed = int(ss.generate_state(1)[0])
        gen = spec.scenario.spec(
            n_nodes=n,
            n_communities=k,
            avg_degree=d,
            seed=gen_seed,
            class_probs=spec.class_probs,
        )
        labels = sample_labels(gen)
        if np.unique(labels.labels).size < k:
            last = "a planted community came out empty"
            continue
        if spec.scenario.degree_mode == "none":
            g = sample_mlsbm(labels, gen)
        else:
            g = sample_dcmlsbm(labels, gen)
        if np.all(g.layer_totals > 0.0):
            return labels, g, attempt
        last = "a layer came out with no edges"
    raise PreconditionError(f"replicate kept failing after 10 draws: {last}")


def run_replicate(spec: SweepSpec, axis_index: int, rep: int) -> list[dict]:
    """All measure rows for one replicate of one axis cell."""
    value = spec.values[axis_index]
    n, k, d = _cell_params(spec, value)
    rows = []
    try:
        truth, g, resamples = _sample_cell(spec, n, k, d, axis_index, rep)
    except (PreconditionError, InputDataError) as exc:
        for measure in spec.measures:
            rows.append(
                {
                    "axis": spec.axis,
                    "axis_value": value,
                    "rep": rep,
                    "measure": measure.value,
                    "nmi": "",
                    "k_detected": "",
                    "k_true": k,
                    "score": "",
                    "n_nodes": n,
                    "avg_degree": d,
                    "resamples": "",
                    "error": str(exc),
                }
            )
        return rows
    detect_ss = np.random.SeedSequence(spec.seed, spawn_key=(axis_index, rep, 100))
    detect_seed = int(detect_ss.generate_state(1)[0])
    for measure in spec.measures:
        row = {
            "axis": spec.axis,
            "axis_value": value,
            "rep": rep,
            "measure": measure.value,
            "k_true": k,
            "n_nodes": n,
            "avg_degree": d,
            "resamples": resamples,
            "error": "",
        }
        try:
            cfg = OptimizeConfig(
                measure=measure,
                restarts=spec.restarts,
                seed=detect_seed,
                min_gain=spec.min_gain,
                max_sweeps=spec.max_sweeps,
                known_k=k if spec.known_k else None,
                kl_variant=spec.kl_variant,
            )
            init = None
            if spec.known_k:
                init = perturb_labels(truth, spec.perturb_fraction, detect_seed)
            result = detect(g, cfg, init=init)
            row["nmi"] = nmi(result.partition, truth)
            row["k_detected"] = result.k_detected
            row["score"] = result.score
        except (PreconditionError, InputDataError) as exc:
            row.update({"nmi": "", "k_detected": "", "score": "", "error": str(exc)})
        rows.append(row)
    return rows


def _run_replicate_star(args):
    return run_replicate(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> tuple[list[dict], list[dict]]:
    """Execute the sweep; returns (replicate rows, aggregate rows).

    Raises when more than a tenth of the replicate rows errored, after
    producing the rows, so partial output stays inspectable.
    """
    tasks = [
        (spec, ai, rep)
        for ai in range(len(spec.values))
        for rep in range(spec.reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(_run_replicate_star, tasks, chunksize=1))
    else:
        nested = [run_replicate(*t) for t in tasks]
    rows = [row for group in nested for row in group]
    agg = aggregate_rows(spec, rows)
    n_failed = sum(1 for r in rows if r["error"])
    if rows and n_failed > 0.1 * len(rows):
        raise PreconditionError(
            f"{n_failed} of {len(rows)} replicate rows failed; sweep unusable"
        )
    return rows, agg


def aggregate_rows(spec: SweepSpec, rows: list[dict]) -> list[dict]:
    out = []
    for value in spec.values:
        for measure in spec.measures:
            cell = [
                r
                for r in rows
                if r["axis_value"] == value and r["measure"] == measure.value
            ]
            good = [r for r in cell if not r["error"]]
            entry = {
                "axis": spec.axis,
                "axis_value": value,
                "measure": measure.value,
                "reps_ok": len(good),
                "reps_failed": len(cell) - len(good),
            }
            if good:
                nmis = np.array([float(r["nmi"]) for r in good])
                ks = np.array([float(r["k_detected"]) for r in good])
                k_true = float(good[0]["k_true"])
                entry["nmi_mean"] = float(nmis.mean())
                entry["nmi_std"] = float(nmis.std())
                entry["k_mean"] = float(ks.mean())
                entry["k_mse"] = mse_num_communities(ks, k_true)
            else:
                entry.update(
                    {"nmi_mean": "", "nmi_std": "", "k_mean": "", "k_mse": ""}
                )
            out.append(entry)
    return out


def _format_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(path, rows: list[dict], fields: list[str], schema: str) -> None:
    """CSV with a schema comment line above the header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {schema}\n")
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(row.get(k, "")) for k in fields})


def resolve_workers(cli_value: int | None) -> int:
    """Worker count: explicit flag, else MLCOMMUNITY_THREADS, else 1."""
    if cli_value is not None:
        if cli_value < 1:
            raise PreconditionError("thread count must be at least 1")
        return cli_value
    env = os.environ.get("MLCOMMUNITY_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InputDataError(
                f"MLCOMMUNITY_THREADS must be an integer, got {env!r}"
            ) from None
        if value < 1:
            raise InputDataError("MLCOMMUNITY_THREADS must be at least 1")
        return value
    return 1


# -- degree fit diagnostics -------------------------------------------------


def degree_fit_table(g: MultiLayerGraph) -> tuple[list[dict], dict]:
    """Observed versus fitted degrees under the shared-degree null.

    The fitted value for node i in layer m is theta_i * beta_m * sqrt(2L),
    which reproduces every layer total exactly.  Nodes with zero total
    degree are flagged and left out of the correlations.
    """
    params = fit_sd(g)
    expected = np.sqrt(g.grand_total) * np.outer(params.beta, params.theta)
    ktot = g.degrees.sum(axis=0)
    excluded = ktot <= 0.0
    rows = []
    for m in range(g.n_layers):
        for i in range(g.n_nodes):
            rows.append(
                {
                    "node": g.node_ids[i],
                    "layer": g.layer_names[m],
                    "observed": float(g.degrees[m, i]),
                    "fitted": float(expected[m, i]),
                    "excluded": int(excluded[i]),
                }
            )
    keep = ~excluded
    per_layer = {}
    for m in range(g.n_layers):
        obs = g.degrees[m, keep]
        fit = expected[m, keep]
        if obs.size >= 2 and obs.std() > 0 and fit.std() > 0:
            per_layer[g.layer_names[m]] = float(np.corrcoef(obs, fit)[0, 1])
        else:
            per_layer[g.layer_names[m]] = None
    all_obs = g.degrees[:, keep].ravel()
    all_fit = expected[:, keep].ravel()
    if all_obs.size >= 2 and all_obs.std() > 0 and all_fit.std() > 0:
        overall = float(np.corrcoef(all_obs, all_fit)[0, 1])
    else:
        overall = None
    summary = {
        "correlation_overall": overall,
        "correlation_per_layer": per_layer,
        "excluded_nodes": int(excluded.sum()),
        "n_nodes": g.n_nodes,
        "n_layers": g.n_layers,
    }
    return rows, summary


DEGREE_FIT_FIELDS = ["node", "layer", "observed", "fitted", "excluded"]
