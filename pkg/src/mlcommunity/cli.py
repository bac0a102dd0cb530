"""Command line front end.

Subcommands: detect, select-null, simulate, sweep, eval, degree-fit,
aggregate.  Single-record results print as JSON on stdout; tables go to
CSV files.  Every randomized command requires an explicit --seed so runs
are reproducible byte for byte.  Exit codes: 0 success, 2 bad input,
3 violated precondition or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .evaluate import nmi, optimal_assignment
from .generate import sample_dcmlsbm, sample_labels, sample_mlsbm
from .graph import (
    InputDataError,
    MultiLayerGraph,
    Partition,
    PreconditionError,
    aggregate_graph,
    load_layer_files,
    load_multilayer_edgelist,
    load_partition,
    load_partition_map,
    write_multilayer_edgelist,
    write_partition,
)
from .modularity import Measure
from .nullmodels import bootstrap_lrt
from .optimize import OptimizeConfig, detect
from .scenarios import resolve_scenario
from .sweep import (
    AGGREGATE_FIELDS,
    DEGREE_FIT_FIELDS,
    REPLICATE_FIELDS,
    SweepSpec,
    degree_fit_table,
    resolve_workers,
    run_sweep,
    write_csv,
)

_MEASURES = ", ".join(m.value for m in Measure)


def _print_json(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--input",
        help="edge list with 'layer u v [w]' lines ('#' comments allowed)",
    )
    p.add_argument(
        "--layer-file",
        nargs="+",
        action="extend",
        help="one 'u v [w]' edge list per layer; the file stem names the layer",
    )
    p.add_argument(
        "--dedup",
        default="sum-halved",
        choices=["sum-halved", "sum", "max"],
        help="merge rule for repeated pairs (default: sum-halved)",
    )


def _load_graph(args) -> MultiLayerGraph:
    if bool(args.input) == bool(args.layer_file):
        raise InputDataError("give exactly one of --input or --layer-file")
    if args.input:
        return load_multilayer_edgelist(args.input, dedup=args.dedup)
    return load_layer_files(args.layer_file, dedup=args.dedup)


def _comma_list(text: str, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputDataError(f"cannot parse list {text!r}") from None


def _cmd_detect(args) -> int:
    g = _load_graph(args)
    cfg = OptimizeConfig(
        measure=Measure.parse(args.measure),
        restarts=args.restarts,
        seed=args.seed,
        min_gain=args.min_gain,
        max_sweeps=args.max_sweeps,
        known_k=args.k,
        kl_variant=args.kl_variant,
    )
    init = None
    if args.init:
        init = load_partition(args.init, node_ids=g.node_ids)
    result = detect(g, cfg, init=init)
    if args.output:
        write_partition(result.partition, g.node_ids, args.output)
    else:
        write_partition(result.partition, g.node_ids, sys.stdout)
    _print_json(
        {
            "schema": "mlcommunity.detect/1",
            "measure": cfg.measure.value,
            "score": result.score,
            "k_detected": result.k_detected,
            "sweeps_used": result.sweeps_used,
            "restart_scores": result.restart_scores,
            "n_nodes": g.n_nodes,
            "n_layers": g.n_layers,
            "seed": args.seed,
            "output": args.output or "-",
        }
    )
    return 0


def _cmd_select_null(args) -> int:
    g = _load_graph(args)
    result = bootstrap_lrt(g, n_boot=args.bootstrap, seed=args.seed, alpha=args.alpha)
    _print_json(
        {
            "schema": "mlcommunity.select-null/1",
            "statistic": result.statistic,
            "df": result.df,
            "p_boot": result.p_boot,
            "p_chi2": result.p_chi2,
            "recommended": result.recommended,
            "n_boot": result.n_boot,
            "alpha": result.alpha,
            "n_nodes": g.n_nodes,
            "n_layers": g.n_layers,
            "seed": args.seed,
        }
    )
    return 0


def _cmd_simulate(args) -> int:
    scenario = resolve_scenario(args.scenario)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    class_probs = _comma_list(args.class_probs, float) if args.class_probs else None
    files = []
    for rep in range(args.reps):
        ss = np.random.SeedSequence(args.seed, spawn_key=(rep,))
        gen = scenario.spec(
            n_nodes=args.n,
            n_communities=args.k,
            avg_degree=args.avg_degree,
            seed=int(ss.generate_state(1)[0]),
            class_probs=class_probs,
            clamp_policy=args.clamp,
        )
        labels = sample_labels(gen)
        if scenario.degree_mode == "none":
            g = sample_mlsbm(labels, gen)
        else:
            g = sample_dcmlsbm(labels, gen)
        edge_path = outdir / f"rep_{rep:04d}.edges"
        label_path = outdir / f"rep_{rep:04d}.labels"
        write_multilayer_edgelist(g, edge_path)
        write_partition(labels, g.node_ids, label_path)
        files.append({"edges": edge_path.name, "labels": label_path.name})
    manifest = {
        "schema": "mlcommunity.simulate/1",
        "scenario": scenario.name,
        "degree_mode": scenario.degree_mode,
        "n_nodes": args.n,
        "n_communities": args.k,
        "avg_degree": args.avg_degree,
        "reps": args.reps,
        "seed": args.seed,
        "class_probs": class_probs,
        "files": files,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _print_json(manifest)
    return 0


def _cmd_sweep(args) -> int:
    scenario = resolve_scenario(args.scenario)
    axis_cast = float if args.axis == "avg-degree" else int
    spec = SweepSpec(
        scenario=scenario,
        axis=args.axis,
        values=_comma_list(args.values, axis_cast),
        n_nodes=args.n,
        n_communities=args.k,
        avg_degree=args.avg_degree,
        reps=args.reps,
        measures=[Measure.parse(m) for m in _comma_list(args.measures, str)],
        seed=args.seed,
        restarts=args.restarts,
        known_k=args.known_k,
        perturb_fraction=args.perturb,
        kl_variant=args.kl_variant,
        class_probs=_comma_list(args.class_probs, float) if args.class_probs else None,
    )
    workers = resolve_workers(args.threads)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows, agg = run_sweep(spec, workers=workers)
    write_csv(outdir / "replicates.csv", rows, REPLICATE_FIELDS, "mlcommunity.sweep-replicates/1")
    write_csv(outdir / "aggregate.csv", agg, AGGREGATE_FIELDS, "mlcommunity.sweep-aggregate/1")
    _print_json(
        {
            "schema": "mlcommunity.sweep/1",
            "scenario": scenario.name,
            "axis": spec.axis,
            "values": spec.values,
            "reps": spec.reps,
            "measures": [m.value for m in spec.measures],
            "rows": len(rows),
            "failed_rows": sum(1 for r in rows if r["error"]),
            "workers": workers,
            "outdir": str(outdir),
            "seed": args.seed,
        }
    )
    return 0


def _cmd_eval(args) -> int:
    # the two files may list nodes in different orders; compare by node id
    detected_map = load_partition_map(args.detected)
    order = list(detected_map)
    detected = Partition.from_labels(
        np.fromiter(detected_map.values(), dtype=np.int64, count=len(order))
    )
    truth = load_partition(args.truth, node_ids=order)
    report = optimal_assignment(detected, truth, nmi_variant=args.nmi_variant)
    _print_json(
        {
            "schema": "mlcommunity.eval/1",
            "nmi": report.nmi,
            "nmi_variant": report.nmi_variant,
            "agreement": report.agreement,
            "n_nodes": detected.n_nodes,
            "k_detected": report.k_detected,
            "k_true": report.k_true,
            "matching": {str(k): v for k, v in sorted(report.matching.items())},
            "confusion": report.confusion.tolist(),
            "hungarian": report.hungarian,
        }
    )
    return 0


def _cmd_degree_fit(args) -> int:
    g = _load_graph(args)
    rows, summary = degree_fit_table(g)
    write_csv(args.output, rows, DEGREE_FIT_FIELDS, "mlcommunity.degree-fit/1")
    summary["schema"] = "mlcommunity.degree-fit/1"
    summary["output"] = args.output
    _print_json(summary)
    return 0


def _cmd_aggregate(args) -> int:
    g = _load_graph(args)
    flat = aggregate_graph(g)
    if args.output:
        write_multilayer_edgelist(flat, args.output)
    else:
        write_multilayer_edgelist(flat, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlcommunity",
        description="Community detection in weighted multi-layer networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="optimize a quality measure on a network")
    _add_input_args(p)
    p.add_argument("--measure", required=True, help=f"one of: {_MEASURES}")
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--restarts", type=int, default=None, help="independent restarts")
    p.add_argument("--min-gain", type=float, default=1e-10)
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("--k", type=int, default=None, help="fix the community count")
    p.add_argument(
        "--kl-variant", default="steepest", choices=["steepest", "ordered"]
    )
    p.add_argument("--init", help="starting partition file (fixed-k refinement)")
    p.add_argument("--output", help="partition file to write (default: stdout)")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser(
        "select-null", help="choose between shared and independent degree nulls"
    )
    _add_input_args(p)
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--bootstrap", type=int, default=200, help="replicates (default 200)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_select_null)

    p = sub.add_parser("simulate", help="draw synthetic benchmark networks")
    p.add_argument("--scenario", required=True, help="built-in name or JSON path")
    p.add_argument("--n", type=int, required=True, help="nodes")
    p.add_argument("--k", type=int, required=True, help="planted communities")
    p.add_argument("--avg-degree", type=float, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--class-probs", help="comma list, e.g. 0.3,0.7 (default balanced)")
    p.add_argument("--clamp", default="clamp", choices=["clamp", "strict"])
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="replicated recovery study along one axis")
    p.add_argument("--scenario", required=True)
    p.add_argument("--axis", required=True, choices=["avg-degree", "n-nodes", "n-communities"])
    p.add_argument("--values", required=True, help="comma list of axis values")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--avg-degree", type=float, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--measures", required=True, help=f"comma list from: {_MEASURES}")
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--known-k", action="store_true", help="fixed-k refinement runs")
    p.add_argument("--perturb", type=float, default=0.5, help="init noise for --known-k")
    p.add_argument("--kl-variant", default="steepest", choices=["steepest", "ordered"])
    p.add_argument("--class-probs", help="comma list (default balanced)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--threads", type=int, default=None, help="override MLCOMMUNITY_THREADS")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("eval", help="compare a detected partition to a reference")
    p.add_argument("--detected", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--nmi-variant", default="mean", choices=["mean", "sqrt", "max"])
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("degree-fit", help="observed vs fitted degrees per layer")
    _add_input_args(p)
    p.add_argument("--output", required=True, help="CSV path for the table")
    p.set_defaults(func=_cmd_degree_fit)

    p = sub.add_parser("aggregate", help="sum all layers into one edge list")
    _add_input_args(p)
    p.add_argument("--output", help="edge list to write (default: stdout)")
    p.set_defaults(func=_cmd_aggregate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
