"""End-to-end orchestration: preprocess, cluster the corpus, route the
stream, online-cluster the new-family route, and score the result.

One repeat runs these sequential stages:

1. standard score and PCA, both fit on the corpus only;
2. batch SOM over the projected corpus, producing the known clusters;
3. a reference set labeled with the known-cluster ids;
4. the stream, in chronological order: classify with WKNN, then apply the
   expansion rule; accepted samples join their known cluster, the rest are
   queued for the online clusterer in arrival order;
5. the configured online clusterer over the new-route samples, then a final
   nearest-centroid assignment of exactly those samples;
6. purity/silhouette for the new-route and known populations, where ground
   truth or cluster counts allow.

Routing never reads the online state, so clustering the new route after the
routing pass is byte-identical to interleaving them sample by sample.

Seeds: repeat r of a run with master seed s uses base = s + 1000 * r; the
corpus clustering consumes base and the online stage consumes base + 1.
Every grid cell can therefore be reproduced in isolation with run_pipeline.
Wall-clock timings are kept apart from metric outputs so that result files
are byte-reproducible for a fixed master seed.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .batch import KnownClusters, som_batch
from .data import Dataset, Route, RouteAssignment, Sample, load_dataset, split_by_time
from .decision import DecisionParams, route_sample
from .metrics import mean_silhouette, purity
from .online import StreamingClusterer, final_assign
from .preprocess import PCAModel, ScalerModel, apply_scaler, fit_pca, fit_scaler, transform_pca
from .wknn import ReferenceSet, WKNNParams

ONLINE_ALGORITHMS = ("okm", "som", "bsas")
TIMING_STAGES = ("preprocess", "corpus_clustering", "wknn_total", "online_total", "total")


@dataclass
class PipelineConfig:
    """Everything one run needs; mirrors the CLI flags in snake_case."""

    corpus_path: str | None = None
    stream_path: str | None = None
    data_path: str | None = None        # single file, split at `cutoff`
    cutoff: str | None = None
    fmt: str | None = None
    n_features: int = 40
    corpus_clusters: int = 4
    corpus_epochs: int = 5
    wknn: WKNNParams = field(default_factory=WKNNParams)
    decision: DecisionParams = field(default_factory=DecisionParams)
    online_algorithm: str = "okm"
    online_clusters: int = 4            # BSAS reads this as the cap q
    bsas_theta: float | None = None
    repeats: int = 20
    seed: int = 0
    output_dir: str | None = None
    compute_known_metrics: bool = True
    compute_silhouette: bool = True

    def validate(self, require_paths: bool = True) -> None:
        if self.online_algorithm not in ONLINE_ALGORITHMS:
            raise ValueError(f"online_algorithm must be one of {ONLINE_ALGORITHMS}")
        for name in ("n_features", "corpus_clusters", "online_clusters", "repeats"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.corpus_epochs < 0:
            raise ValueError("corpus_epochs must be >= 0")
        if self.bsas_theta is not None and self.bsas_theta <= 0:
            raise ValueError("bsas_theta must be positive")
        if require_paths:
            has_pair = self.corpus_path is not None and self.stream_path is not None
            has_split = self.data_path is not None and self.cutoff is not None
            if not (has_pair or has_split):
                raise ValueError(
                    "need either corpus_path and stream_path, or data_path and cutoff"
                )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wknn"] = {"k": self.wknn.k, "weighting": self.wknn.weighting}
        d["decision"] = asdict(self.decision)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        wknn = d.pop("wknn", None)
        decision = d.pop("decision", None)
        unknown = set(d) - {f.name for f in cls.__dataclass_fields__.values()}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if wknn is not None:
            cfg.wknn = WKNNParams(**wknn)
        if decision is not None:
            cfg.decision = DecisionParams(**decision)
        return cfg


def repeat_seed(master: int, repeat: int) -> int:
    return master + 1000 * repeat


def load_inputs(config: PipelineConfig) -> tuple[Dataset, Dataset]:
    """Load (corpus, stream), splitting a single file at the cutoff if needed.

    A separately supplied stream file is re-sorted chronologically when every
    sample carries first_seen; otherwise file order is trusted as arrival
    order.
    """
    config.validate()
    if config.data_path is not None and config.cutoff is not None:
        data = load_dataset(config.data_path, config.fmt)
        return split_by_time(data, config.cutoff)
    corpus = load_dataset(config.corpus_path, config.fmt)
    stream = load_dataset(config.stream_path, config.fmt)
    if stream.samples and all(s.first_seen is not None for s in stream.samples):
        ordered = sorted(stream.samples, key=lambda s: s.first_seen)
        stream = Dataset.from_samples(ordered, dim=stream.dim)
    return corpus, stream


@dataclass
class RoutingPass:
    """Everything the routing stage produced for one repeat."""

    scaler: ScalerModel
    pca: PCAModel
    known: KnownClusters
    ref: ReferenceSet
    assignments: list[RouteAssignment]
    new_ids: list[str]
    new_points: np.ndarray
    stream_size: int
    timings: dict[str, float]

    @property
    def new_fraction(self) -> float:
        return len(self.new_ids) / self.stream_size if self.stream_size else 0.0


def build_known_model(
    corpus: Dataset, config: PipelineConfig, seed: int
) -> tuple[ScalerModel, PCAModel, KnownClusters, ReferenceSet, dict[str, float]]:
    """Fit preprocessing on the corpus and cluster it into known families."""
    t0 = time.perf_counter()
    scaler = fit_scaler(corpus)
    corpus_scaled = apply_scaler(scaler, corpus.matrix())
    pca = fit_pca(corpus_scaled, config.n_features)
    corpus_z = transform_pca(pca, corpus_scaled)
    t1 = time.perf_counter()
    known = som_batch(
        corpus_z,
        k_units=config.corpus_clusters,
        epochs=config.corpus_epochs,
        seed=seed,
        ids=corpus.ids(),
    )
    cluster_of = known.assignments()
    ref = ReferenceSet(
        points=corpus_z,
        labels=[cluster_of[sid] for sid in corpus.ids()],
    )
    t2 = time.perf_counter()
    timings = {"preprocess": t1 - t0, "corpus_clustering": t2 - t1}
    return scaler, pca, known, ref, timings


def transform_stream(
    scaler: ScalerModel, pca: PCAModel, stream: Dataset
) -> Dataset:
    """Project stream samples into model space, keeping ids and metadata."""
    out = []
    for s in stream.samples:
        z = transform_pca(pca, apply_scaler(scaler, s.features))
        z.setflags(write=False)
        out.append(Sample(id=s.id, features=z, family=s.family, first_seen=s.first_seen))
    return Dataset.from_samples(out, dim=pca.n_components)


def run_routing(
    corpus: Dataset, stream: Dataset, config: PipelineConfig, seed: int
) -> RoutingPass:
    """Preprocess, cluster the corpus, and route every stream sample."""
    scaler, pca, known, ref, stage_timings = build_known_model(corpus, config, seed)
    t2 = time.perf_counter()

    assignments: list[RouteAssignment] = []
    new_ids: list[str] = []
    new_rows: list[np.ndarray] = []
    for sample in stream.samples:
        z = transform_pca(pca, apply_scaler(scaler, sample.features))
        assignment = route_sample(known, ref, config.wknn, config.decision, z, sample.id)
        assignments.append(assignment)
        if assignment.route is Route.NEW:
            new_ids.append(sample.id)
            new_rows.append(z)
    t3 = time.perf_counter()

    new_points = (
        np.stack(new_rows) if new_rows else np.empty((0, config.n_features), dtype=np.float64)
    )
    return RoutingPass(
        scaler=scaler,
        pca=pca,
        known=known,
        ref=ref,
        assignments=assignments,
        new_ids=new_ids,
        new_points=new_points,
        stream_size=len(stream.samples),
        timings={**stage_timings, "wknn_total": t3 - t2},
    )


def run_online_stage(
    points: np.ndarray,
    algorithm: str,
    n_clusters: int,
    seed: int,
    bsas_theta: float | None = None,
):
    """Stream the given points through one online clusterer.

    Returns (state, per-push emitted indices, final assignment array,
    seconds). state is None when no points arrived (except SOM, which always
    has its initial map).
    """
    t0 = time.perf_counter()
    clusterer = StreamingClusterer(
        algorithm,
        n_clusters,
        dim=points.shape[1],
        seed=seed,
        expected_stream_length=len(points),
        bsas_theta=bsas_theta,
    )
    for row in points:
        clusterer.push(row)
    state = clusterer.finalize()
    assigned = (
        final_assign(state, points)
        if state is not None and len(points)
        else np.zeros(0, dtype=np.intp)
    )
    return state, list(clusterer.emitted), assigned, time.perf_counter() - t0


@dataclass
class RepeatResult:
    """Metrics of one pipeline repeat; timing lives in `timings` only."""

    repeat: int
    seed: int
    stream_size: int
    known_count: int
    new_count: int
    new_route_fraction: float
    purity_new: float | None
    silhouette_new: float | None
    purity_known: float | None
    silhouette_known: float | None
    online_clusters_used: int
    skipped: list[str]
    timings: dict[str, float]

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "repeat": self.repeat,
            "seed": self.seed,
            "stream_size": self.stream_size,
            "known_count": self.known_count,
            "new_count": self.new_count,
            "new_route_fraction": self.new_route_fraction,
            "purity_new": self.purity_new,
            "silhouette_new": self.silhouette_new,
            "purity_known": self.purity_known,
            "silhouette_known": self.silhouette_known,
            "online_clusters_used": self.online_clusters_used,
            "skipped": list(self.skipped),
        }
        if include_timings:
            d["timings"] = dict(self.timings)
        return d


METRIC_FIELDS = (
    "new_route_fraction",
    "purity_new",
    "silhouette_new",
    "purity_known",
    "silhouette_known",
)


@dataclass
class RunReport:
    """Per-repeat results plus mean/std aggregates."""

    config: dict
    repeats: list[RepeatResult]
    aggregates: dict[str, dict[str, float]]

    # first repeat's artifacts, for serialization
    first_assignments: list[RouteAssignment] = field(default_factory=list)
    first_models: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "repeats": [r.to_dict() for r in self.repeats],
            "aggregates": self.aggregates,
        }

    def timing_dict(self) -> dict:
        rows = [{"repeat": r.repeat, **r.timings} for r in self.repeats]
        agg = {}
        for stage in TIMING_STAGES:
            values = [r.timings[stage] for r in self.repeats if stage in r.timings]
            if values:
                agg[stage] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
        return {"repeats": rows, "aggregates": agg}


def aggregate(values: list[float | None]) -> dict[str, float] | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return {"mean": float(np.mean(present)), "std": float(np.std(present))}


def _metric_aggregates(repeats: list[RepeatResult]) -> dict:
    return {
        name: aggregate([getattr(r, name) for r in repeats])
        for name in METRIC_FIELDS
    }


def _family_labels(*datasets: Dataset) -> dict[str, str]:
    labels: dict[str, str] = {}
    for ds in datasets:
        for s in ds.samples:
            if s.family is not None:
                labels[s.id] = s.family
    return labels


def _score_population(
    ids: list[str],
    points: np.ndarray,
    cluster_ids: list[int],
    labels: dict[str, str],
    compute_silhouette: bool,
    tag: str,
    skipped: list[str],
) -> tuple[float | None, float | None]:
    """Purity and silhouette for one population, with skip bookkeeping."""
    if not ids:
        skipped.append(f"{tag}: empty population")
        return None, None
    pur = None
    if all(sid in labels for sid in ids):
        pur = purity(dict(zip(ids, cluster_ids)), labels).purity
    else:
        skipped.append(f"{tag}: ground-truth labels missing")
    sil = None
    if not compute_silhouette:
        skipped.append(f"{tag}: silhouette disabled")
    elif len(set(cluster_ids)) < 2:
        skipped.append(f"{tag}: fewer than 2 clusters")
    else:
        sil = mean_silhouette(points, cluster_ids)
    return pur, sil


def _known_population(known: KnownClusters) -> tuple[list[str], np.ndarray, list[int]]:
    ids: list[str] = []
    blocks: list[np.ndarray] = []
    cluster_ids: list[int] = []
    for cluster in known.clusters:
        ids.extend(cluster.member_ids)
        blocks.append(cluster.member_points)
        cluster_ids.extend([cluster.id] * cluster.count)
    return ids, np.vstack(blocks), cluster_ids


def _one_repeat(
    corpus: Dataset,
    stream: Dataset,
    config: PipelineConfig,
    repeat: int,
    labels: dict[str, str],
) -> tuple[RepeatResult, RoutingPass, object, list[int]]:
    base = repeat_seed(config.seed, repeat)
    t0 = time.perf_counter()
    routing = run_routing(corpus, stream, config, seed=base)
    state, emitted, assigned, online_seconds = run_online_stage(
        routing.new_points,
        config.online_algorithm,
        config.online_clusters,
        seed=base + 1,
        bsas_theta=config.bsas_theta,
    )
    skipped: list[str] = []
    pur_new, sil_new = _score_population(
        routing.new_ids,
        routing.new_points,
        [int(c) for c in assigned],
        labels,
        config.compute_silhouette,
        "new",
        skipped,
    )
    if config.compute_known_metrics:
        k_ids, k_points, k_clusters = _known_population(routing.known)
        pur_known, sil_known = _score_population(
            k_ids, k_points, k_clusters, labels, config.compute_silhouette, "known", skipped
        )
    else:
        pur_known = sil_known = None
        skipped.append("known: metrics disabled")
    total = time.perf_counter() - t0
    timings = dict(routing.timings)
    timings["online_total"] = online_seconds
    timings["total"] = total
    result = RepeatResult(
        repeat=repeat,
        seed=base,
        stream_size=routing.stream_size,
        known_count=routing.stream_size - len(routing.new_ids),
        new_count=len(routing.new_ids),
        new_route_fraction=routing.new_fraction,
        purity_new=pur_new,
        silhouette_new=sil_new,
        purity_known=pur_known,
        silhouette_known=sil_known,
        online_clusters_used=len(set(int(c) for c in assigned)) if len(assigned) else 0,
        skipped=skipped,
        timings=timings,
    )
    return result, routing, state, emitted


def run_pipeline(config: PipelineConfig, data: tuple[Dataset, Dataset] | None = None) -> RunReport:
    """Run the full model for config.repeats repeats and aggregate."""
    config.validate(require_paths=data is None)
    corpus, stream = data if data is not None else load_inputs(config)
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    labels = _family_labels(corpus, stream)
    repeats: list[RepeatResult] = []
    first_assignments: list[RouteAssignment] = []
    first_models: dict = {}
    for r in range(config.repeats):
        result, routing, state, emitted = _one_repeat(corpus, stream, config, r, labels)
        repeats.append(result)
        if r == 0:
            first_assignments = _emission_assignments(routing, emitted)
            first_models = {
                "scaler": routing.scaler.to_dict(),
                "pca": routing.pca.to_dict(),
                "known_clusters": routing.known.to_dict(),
                "online_state": state.to_dict() if state is not None else None,
            }
    return RunReport(
        config=config.to_dict(),
        repeats=repeats,
        aggregates=_metric_aggregates(repeats),
        first_assignments=first_assignments,
        first_models=first_models,
    )


def _emission_assignments(
    routing: RoutingPass, emitted: list[int]
) -> list[RouteAssignment]:
    """Rewrite New rows with the online cluster index assigned at push time."""
    online_of = dict(zip(routing.new_ids, emitted))
    out: list[RouteAssignment] = []
    for a in routing.assignments:
        if a.route is Route.NEW and a.sample_id in online_of:
            out.append(RouteAssignment(a.sample_id, a.route, int(online_of[a.sample_id])))
        else:
            out.append(a)
    return out


@dataclass(frozen=True)
class GridCell:
    algorithm: str
    clusters: int
    repeat: int
    seed: int
    n_new: int
    purity: float | None
    silhouette: float | None
    online_seconds: float


@dataclass(frozen=True)
class GridSummaryRow:
    algorithm: str
    clusters: int
    purity_mean: float | None
    purity_std: float | None
    silhouette_mean: float | None
    silhouette_std: float | None


@dataclass
class GridResult:
    cells: list[GridCell]
    summary: list[GridSummaryRow]


def run_grid(
    config: PipelineConfig,
    cluster_counts,
    algorithms,
    repeats: int | None = None,
    data: tuple[Dataset, Dataset] | None = None,
) -> GridResult:
    """Sweep (algorithm, cluster count) over repeated runs.

    Routing does not depend on the online algorithm, so each repeat routes
    once and every grid cell consumes the same new-route population; the
    grid isolates online-clusterer variance. Cell failures are recorded as
    empty metrics and do not stop the grid.
    """
    config.validate(require_paths=data is None)
    counts = [int(c) for c in cluster_counts]
    algos = list(algorithms)
    if not counts or not algos:
        raise ValueError("cluster_counts and algorithms must be non-empty")
    for algo in algos:
        if algo not in ONLINE_ALGORITHMS:
            raise ValueError(f"unknown online algorithm {algo!r}")
    n_repeats = config.repeats if repeats is None else int(repeats)
    corpus, stream = data if data is not None else load_inputs(config)
    labels = _family_labels(corpus, stream)

    cells: list[GridCell] = []
    for r in range(n_repeats):
        base = repeat_seed(config.seed, r)
        routing = run_routing(corpus, stream, config, seed=base)
        for algo in algos:
            for count in counts:
                try:
                    _, _, assigned, seconds = run_online_stage(
                        routing.new_points,
                        algo,
                        count,
                        seed=base + 1,
                        bsas_theta=config.bsas_theta,
                    )
                    skipped: list[str] = []
                    pur, sil = _score_population(
                        routing.new_ids,
                        routing.new_points,
                        [int(c) for c in assigned],
                        labels,
                        config.compute_silhouette,
                        "new",
                        skipped,
                    )
                except ValueError:
                    pur = sil = None
                    seconds = 0.0
                cells.append(
                    GridCell(
                        algorithm=algo,
                        clusters=count,
                        repeat=r,
                        seed=base,
                        n_new=len(routing.new_ids),
                        purity=pur,
                        silhouette=sil,
                        online_seconds=seconds,
                    )
                )

    summary: list[GridSummaryRow] = []
    for algo in algos:
        for count in counts:
            group = [c for c in cells if c.algorithm == algo and c.clusters == count]
            pur = aggregate([c.purity for c in group])
            sil = aggregate([c.silhouette for c in group])
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
    return GridResult(cells=cells, summary=summary)


def run_reference_baseline(
    config: PipelineConfig, data: tuple[Dataset, Dataset] | None = None
) -> RunReport:
    """Direct online clustering of corpus-then-stream, for comparison.

    Preprocessing stays identical to the proposed model (fit on the corpus);
    the WKNN classifier and the routing rule are bypassed, so the corpus
    points and then the chronological stream feed the online clusterer
    directly. Metrics cover the whole population. Routing-stage timings are
    reported as zero.
    """
    config.validate(require_paths=data is None)
    corpus, stream = data if data is not None else load_inputs(config)
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    labels = _family_labels(corpus, stream)
    repeats: list[RepeatResult] = []
    for r in range(config.repeats):
        base = repeat_seed(config.seed, r)
        t0 = time.perf_counter()
        scaler = fit_scaler(corpus)
        pca = fit_pca(apply_scaler(scaler, corpus.matrix()), config.n_features)
        all_ids = corpus.ids() + [s.id for s in stream.samples]
        points = transform_pca(
            pca,
            apply_scaler(
                scaler,
                np.vstack([corpus.matrix(), stream.matrix()])
                if len(stream)
                else corpus.matrix(),
            ),
        )
        t1 = time.perf_counter()
        state, _, assigned, online_seconds = run_online_stage(
            points,
            config.online_algorithm,
            config.online_clusters,
            seed=base + 1,
            bsas_theta=config.bsas_theta,
        )
        skipped: list[str] = []
        pur, sil = _score_population(
            all_ids,
            points,
            [int(c) for c in assigned],
            labels,
            config.compute_silhouette,
            "baseline",
            skipped,
        )
        total = time.perf_counter() - t0
        repeats.append(
            RepeatResult(
                repeat=r,
                seed=base,
                stream_size=len(stream),
                known_count=0,
                new_count=len(all_ids),
                new_route_fraction=1.0,
                purity_new=pur,
                silhouette_new=sil,
                purity_known=None,
                silhouette_known=None,
                online_clusters_used=len(set(int(c) for c in assigned)) if len(assigned) else 0,
                skipped=skipped + ["known: not applicable to the baseline"],
                timings={
                    "preprocess": t1 - t0,
                    "corpus_clustering": 0.0,
                    "wknn_total": 0.0,
                    "online_total": online_seconds,
                    "total": total,
                },
            )
        )
    return RunReport(
        config=config.to_dict(),
        repeats=repeats,
        aggregates=_metric_aggregates(repeats),
    )
