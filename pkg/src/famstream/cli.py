"""Command-line entry point.

Subcommands: run, grid, baseline, sweep-tau, select-features. Flags mirror
PipelineConfig fields in kebab-case; a JSON config file may supply any field
and explicit flags override it. Exit codes: 0 success, 1 usage error,
2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .batch import ClustererSpec
from .data import DataFormatError, Dataset
from .decision import sweep_tau
from .pipeline import (
    ONLINE_ALGORITHMS,
    PipelineConfig,
    build_known_model,
    load_inputs,
    repeat_seed,
    run_grid,
    run_pipeline,
    run_reference_baseline,
    transform_stream,
)
from .preprocess import apply_scaler, fit_scaler, select_feature_count
from .report import (
    write_baseline_results,
    write_feature_selection_table,
    write_tau_sweep,
    write_baseline_metrics,
    write_grid_outputs,
    write_json,
    write_run_outputs,
)
from .pipeline import GridSummaryRow, aggregate

DEFAULT_OUTPUT_DIR = "famstream_out"
DEFAULT_TAUS = "-5,-2,0,2,5"
DEFAULT_FEATURE_CANDIDATES = "20,30,40,50,60,70,80"
DEFAULT_CLUSTER_COUNTS = "4-10"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # map argparse failures onto exit code 1
        raise UsageError(message)


def parse_int_list(text: str) -> list[int]:
    """Parse '4-10' ranges and '4,6,8' lists (mixable)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:  # allow a leading minus sign
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, "")
            if hi == "":
                raise UsageError(f"bad integer range {part!r}")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return out


def parse_float_list(text: str) -> list[float]:
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad float list {text!r}") from None
    if not values:
        raise UsageError(f"empty float list {text!r}")
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    data = parser.add_argument_group("data")
    data.add_argument("--corpus", help="corpus dataset file (csv or jsonl)")
    data.add_argument("--stream", help="stream dataset file (csv or jsonl)")
    data.add_argument("--data", help="single dataset file, split at --cutoff")
    data.add_argument("--cutoff", help="year-month split point, e.g. 2018-11")
    data.add_argument("--format", choices=("csv", "jsonl"), help="override format inference")

    model = parser.add_argument_group("model")
    model.add_argument("--config", help="JSON config file; flags override its fields")
    model.add_argument("--n-features", type=int)
    model.add_argument("--corpus-clusters", type=int)
    model.add_argument("--corpus-epochs", type=int)
    model.add_argument("--wknn-k", type=int)
    model.add_argument("--wknn-weighting", choices=("uniform", "distance"))
    model.add_argument("--tau", type=float)
    model.add_argument("--freeze-centroids", action="store_true", default=None,
                       help="do not move known centroids on acceptance")
    model.add_argument("--freeze-members", action="store_true", default=None,
                       help="evaluate the rule against original members only")
    model.add_argument("--no-grow-reference", action="store_true", default=None,
                       help="do not append accepted samples to the classifier")
    model.add_argument("--online-algorithm", choices=ONLINE_ALGORITHMS)
    model.add_argument("--online-clusters", type=int)
    model.add_argument("--bsas-theta", type=float)
    model.add_argument("--repeats", type=int)
    model.add_argument("--seed", type=int)
    model.add_argument("--no-silhouette", action="store_true", default=None)
    model.add_argument("--no-known-metrics", action="store_true", default=None)

    out = parser.add_argument_group("output")
    out.add_argument("-o", "--output-dir")
    out.add_argument("--emit-timings", action="store_true",
                     help="also write wall-clock timing files (not byte-reproducible)")


def build_config(args: argparse.Namespace) -> PipelineConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
    merged = dict(base)
    wknn = dict(base.get("wknn", {}))
    decision = dict(base.get("decision", {}))
    overrides = {
        "corpus_path": args.corpus,
        "stream_path": args.stream,
        "data_path": args.data,
        "cutoff": args.cutoff,
        "fmt": args.format,
        "n_features": args.n_features,
        "corpus_clusters": args.corpus_clusters,
        "corpus_epochs": args.corpus_epochs,
        "online_algorithm": args.online_algorithm,
        "online_clusters": args.online_clusters,
        "bsas_theta": args.bsas_theta,
        "repeats": args.repeats,
        "seed": args.seed,
        "output_dir": args.output_dir,
    }
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    if args.wknn_k is not None:
        wknn["k"] = args.wknn_k
    if args.wknn_weighting is not None:
        wknn["weighting"] = args.wknn_weighting
    if args.tau is not None:
        decision["tau"] = args.tau
    if args.freeze_centroids:
        decision["update_centroids"] = False
    if args.freeze_members:
        decision["grow_members"] = False
    if args.no_grow_reference:
        decision["grow_reference"] = False
    if wknn:
        merged["wknn"] = wknn
    if decision:
        merged["decision"] = decision
    if args.no_silhouette:
        merged["compute_silhouette"] = False
    if args.no_known_metrics:
        merged["compute_known_metrics"] = False
    try:
        config = PipelineConfig.from_dict(merged)
        config.validate()
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return config


def _load(config: PipelineConfig) -> tuple[Dataset, Dataset]:
    try:
        return load_inputs(config)
    except (DataFormatError, OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc


def _outdir(config: PipelineConfig) -> Path:
    return Path(config.output_dir or DEFAULT_OUTPUT_DIR)


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def cmd_run(args) -> int:
    config = build_config(args)
    data = _load(config)
    report = run_pipeline(config, data=data)
    outdir = _outdir(config)
    write_run_outputs(outdir, report, emit_timings=args.emit_timings)
    agg = report.aggregates
    print(f"repeats: {len(report.repeats)}  stream: {report.repeats[0].stream_size}")
    for name in ("new_route_fraction", "purity_new", "silhouette_new",
                 "purity_known", "silhouette_known"):
        stats = agg.get(name)
        if stats is None:
            print(f"{name}: n/a")
        else:
            print(f"{name}: mean {stats['mean']:.4f} std {stats['std']:.4f}")
    print(f"outputs in {outdir}")
    return 0


def cmd_grid(args) -> int:
    config = build_config(args)
    counts = parse_int_list(args.cluster_counts)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for algo in algorithms:
        if algo not in ONLINE_ALGORITHMS:
            raise UsageError(f"unknown online algorithm {algo!r}")
    data = _load(config)
    grid = run_grid(config, counts, algorithms, repeats=config.repeats, data=data)
    outdir = _outdir(config)
    write_grid_outputs(outdir, grid, emit_timings=args.emit_timings)
    for row in grid.summary:
        print(
            f"{row.algorithm} k={row.clusters}: purity {_fmt(row.purity_mean)} "
            f"silhouette {_fmt(row.silhouette_mean)}"
        )
    print(f"outputs in {outdir}")
    return 0


def cmd_baseline(args) -> int:
    config = build_config(args)
    counts = parse_int_list(args.cluster_counts)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for algo in algorithms:
        if algo not in ONLINE_ALGORITHMS:
            raise UsageError(f"unknown online algorithm {algo!r}")
    data = _load(config)
    rows = []
    summary: list[GridSummaryRow] = []
    for algo in algorithms:
        for count in counts:
            cfg = replace(config, online_algorithm=algo, online_clusters=count)
            report = run_reference_baseline(cfg, data=data)
            for r in report.repeats:
                rows.append((algo, count, r.repeat, r.seed, r.purity_new, r.silhouette_new))
            pur = aggregate([r.purity_new for r in report.repeats])
            sil = aggregate([r.silhouette_new for r in report.repeats])
            summary.append(
                GridSummaryRow(
                    algorithm=algo,
                    clusters=count,
                    purity_mean=None if pur is None else pur["mean"],
                    purity_std=None if pur is None else pur["std"],
                    silhouette_mean=None if sil is None else sil["mean"],
                    silhouette_std=None if sil is None else sil["std"],
                )
            )
    outdir = _outdir(config)
    write_baseline_results(outdir / "baseline_results.csv", rows)
    write_baseline_metrics(outdir / "baseline_metrics.csv", summary)
    for row in summary:
        print(
            f"baseline {row.algorithm} k={row.clusters}: purity {_fmt(row.purity_mean)} "
            f"silhouette {_fmt(row.silhouette_mean)}"
        )
    print(f"outputs in {outdir}")
    return 0


def cmd_sweep_tau(args) -> int:
    config = build_config(args)
    taus = parse_float_list(args.taus)
    corpus, stream = _load(config)
    seed = repeat_seed(config.seed, 0)
    scaler, pca, known, ref, _ = build_known_model(corpus, config, seed)
    z_stream = transform_stream(scaler, pca, stream)
    sweep = sweep_tau(known, ref, config.wknn, z_stream, taus, dp=config.decision)
    outdir = _outdir(config)
    write_tau_sweep(outdir / "tau_sweep.csv", sweep)
    for point in sweep:
        print(f"tau={point.tau:g}: {100.0 * point.new_fraction:.1f}% routed new")
    print(f"outputs in {outdir}")
    return 0


def _selection_specs(args, config: PipelineConfig) -> list[ClustererSpec]:
    specs: list[ClustererSpec] = []
    for name in (a.strip() for a in args.clusterers.split(",")):
        if name == "kmeans":
            specs.append(ClustererSpec("kmeans", "kmeans", {"k": config.corpus_clusters}))
        elif name == "som":
            specs.append(
                ClustererSpec(
                    "som", "som",
                    {"k_units": config.corpus_clusters, "epochs": config.corpus_epochs},
                )
            )
        elif name == "dbscan":
            specs.append(
                ClustererSpec(
                    "dbscan", "dbscan",
                    {"eps": args.dbscan_eps, "min_samples": args.dbscan_min_samples},
                )
            )
        elif name:
            raise UsageError(f"unknown clusterer {name!r}")
    if not specs:
        raise UsageError("no clusterers selected")
    return specs


def cmd_select_features(args) -> int:
    config = build_config(args)
    candidates = parse_int_list(args.candidates)
    corpus, _ = _load(config)
    scaled = apply_scaler(fit_scaler(corpus), corpus.matrix())
    specs = _selection_specs(args, config)
    (best_count, best_name), table = select_feature_count(
        scaled, candidates, specs, seed=config.seed
    )
    outdir = _outdir(config)
    write_feature_selection_table(outdir / "feature_count_silhouette.csv", table)
    write_json(
        outdir / "feature_selection.json",
        {
            "best_n_features": best_count,
            "best_clusterer": best_name,
            "table": [
                {"n_features": c.n_features, "clusterer": c.clusterer,
                 "mean_silhouette": c.mean_silhouette}
                for c in table
            ],
        },
    )
    print(f"best: {best_count} features via {best_name}")
    print(f"outputs in {outdir}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="famstream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full pipeline with repeats", parents=[])
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("grid", help="online-algorithm x cluster-count grid")
    _add_common(p_grid)
    p_grid.add_argument("--cluster-counts", default=DEFAULT_CLUSTER_COUNTS)
    p_grid.add_argument("--algorithms", default=",".join(ONLINE_ALGORITHMS))
    p_grid.set_defaults(func=cmd_grid)

    p_base = sub.add_parser("baseline", help="direct online clustering of corpus+stream")
    _add_common(p_base)
    p_base.add_argument("--cluster-counts", default=DEFAULT_CLUSTER_COUNTS)
    p_base.add_argument("--algorithms", default=",".join(ONLINE_ALGORITHMS))
    p_base.set_defaults(func=cmd_baseline)

    p_tau = sub.add_parser("sweep-tau", help="new-route fraction per tau")
    _add_common(p_tau)
    p_tau.add_argument("--taus", default=DEFAULT_TAUS)
    p_tau.set_defaults(func=cmd_sweep_tau)

    p_sel = sub.add_parser("select-features", help="silhouette-driven feature count")
    _add_common(p_sel)
    p_sel.add_argument("--candidates", default=DEFAULT_FEATURE_CANDIDATES)
    p_sel.add_argument("--clusterers", default="kmeans,som,dbscan")
    p_sel.add_argument("--dbscan-eps", type=float, default=5.0)
    p_sel.add_argument("--dbscan-min-samples", type=int, default=10)
    p_sel.set_defaults(func=cmd_select_features)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
