"""Batch clustering of the initial corpus: k-means, DBSCAN, and batch SOM.

All three return KnownClusters, the structure the streaming stage routes
against: integer cluster ids, member points, and centroids kept equal to the
member mean. Ids default to stringified point indices when none are given.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .online import final_assign, som_init, som_update


class Cluster:
    """One known cluster: id, running-mean centroid, member points and ids.

    Member storage grows by capacity doubling so the streaming stage can
    append accepted samples cheaply.
    """

    def __init__(self, cluster_id: int, points, member_ids):
        pts = np.array(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[0] == 0:
            raise ValueError("a cluster must have at least one member")
        member_ids = [str(m) for m in member_ids]
        if len(member_ids) != pts.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {len(member_ids)} member ids")
        self.id = int(cluster_id)
        self._buf = pts
        self._n = pts.shape[0]
        self.member_ids = member_ids
        self.centroid = pts.mean(axis=0)

    @property
    def count(self) -> int:
        return self._n

    @property
    def member_points(self) -> np.ndarray:
        return self._buf[: self._n]

    def add_member(self, x, member_id: str, update_centroid: bool = True) -> None:
        """Append one member; optionally advance the running-mean centroid."""
        x = np.asarray(x, dtype=np.float64)
        if self._n == self._buf.shape[0]:
            grown = np.empty((max(8, 2 * self._buf.shape[0]), self._buf.shape[1]))
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = x
        self._n += 1
        self.member_ids.append(str(member_id))
        if update_centroid:
            self.centroid = self.centroid + (x - self.centroid) / self._n

    def __deepcopy__(self, memo):
        clone = Cluster.__new__(Cluster)
        clone.id = self.id
        clone._buf = self._buf.copy()
        clone._n = self._n
        clone.member_ids = list(self.member_ids)
        clone.centroid = self.centroid.copy()
        return clone


@dataclass
class KnownClusters:
    """The clustered corpus the stream is routed against."""

    clusters: list[Cluster] = field(default_factory=list)

    def cluster_by_id(self, cluster_id: int) -> Cluster:
        for c in self.clusters:
            if c.id == cluster_id:
                return c
        raise KeyError(f"no cluster with id {cluster_id}")

    def centroids(self) -> np.ndarray:
        return np.stack([c.centroid for c in self.clusters])

    def assignments(self) -> dict[str, int]:
        """sample id -> cluster id over all members."""
        out: dict[str, int] = {}
        for c in self.clusters:
            for sid in c.member_ids:
                out[sid] = c.id
        return out

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"id": c.id, "centroid": c.centroid.tolist(), "member_ids": list(c.member_ids)}
                for c in self.clusters
            ]
        }


def _as_points(points) -> np.ndarray:
    X = np.array(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"expected a non-empty (n, d) point array, got shape {X.shape}")
    return X


def _default_ids(n: int, ids) -> list[str]:
    if ids is None:
        return [str(i) for i in range(n)]
    ids = [str(i) for i in ids]
    if len(ids) != n:
        raise ValueError(f"{n} points but {len(ids)} ids")
    return ids


def _clusters_from_labels(X, labels, ids) -> KnownClusters:
    known = KnownClusters()
    next_id = 0
    for lab in sorted(set(int(l) for l in labels)):
        idx = [i for i, l in enumerate(labels) if int(l) == lab]
        known.clusters.append(Cluster(next_id, X[idx], [ids[i] for i in idx]))
        next_id += 1
    return known


def kmeans_batch(
    points, k: int, seed: int = 0, max_iters: int = 100, ids=None
) -> KnownClusters:
    """Lloyd k-means from k distinct seeded initial centroids.

    Iterates assignment/update until the assignment reaches a fixpoint or
    max_iters passes. An emptied cluster is reseeded to the point farthest
    from its former centroid. Nearest-centroid ties go to the lowest cluster
    id. Raises ValueError when k exceeds the number of distinct points.
    """
    X = _as_points(points)
    ids = _default_ids(X.shape[0], ids)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    distinct = np.unique(X, axis=0)
    if k > distinct.shape[0]:
        raise ValueError(f"k={k} exceeds the {distinct.shape[0]} distinct points")
    rng = np.random.default_rng(seed)
    centroids = distinct[rng.choice(distinct.shape[0], size=k, replace=False)].copy()

    labels = np.full(X.shape[0], -1, dtype=np.intp)
    for _ in range(max_iters):
        dist = cdist(X, centroids)
        new_labels = np.argmin(dist, axis=1)  # argmin takes the lowest id on ties
        taken: set[int] = set()
        for j in range(k):
            if np.any(new_labels == j):
                continue
            far = np.argsort(-cdist(X, centroids[j][None, :])[:, 0], kind="stable")
            pick = next(int(i) for i in far if int(i) not in taken)
            taken.add(pick)
            new_labels[pick] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            centroids[j] = X[labels == j].mean(axis=0)
    return _clusters_from_labels(X, labels, ids)


def dbscan(
    points, eps: float, min_samples: int, ids=None
) -> tuple[KnownClusters, list[str]]:
    """Density-based clustering; returns (clusters, noise ids).

    A point is core when its eps-neighborhood (itself included) holds at
    least min_samples points. Clusters are the density-reachability closure
    of core points, grown in scan order, so border points join the first
    core cluster that reaches them. Deterministic for a fixed input order.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if min_samples < 1:
        raise ValueError(f"min_samples must be >= 1, got {min_samples}")
    X = _as_points(points)
    ids = _default_ids(X.shape[0], ids)
    n = X.shape[0]

    UNVISITED, NOISE = -2, -1
    labels = np.full(n, UNVISITED, dtype=np.intp)

    def region(i: int) -> np.ndarray:
        d = cdist(X[i][None, :], X)[0]
        return np.nonzero(d <= eps)[0]

    cid = 0
    for i in range(n):
        if labels[i] != UNVISITED:
            continue
        neigh = region(i)
        if neigh.size < min_samples:
            labels[i] = NOISE
            continue
        labels[i] = cid
        queue = deque(int(j) for j in neigh)
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cid  # border point claimed by the first core reaching it
            if labels[j] != UNVISITED:
                continue
            labels[j] = cid
            jn = region(j)
            if jn.size >= min_samples:
                queue.extend(int(m) for m in jn)
        cid += 1

    noise_ids = [ids[i] for i in range(n) if labels[i] == NOISE]
    kept = [i for i in range(n) if labels[i] >= 0]
    if not kept:
        return KnownClusters(), noise_ids
    known = _clusters_from_labels(
        X[kept], [labels[i] for i in kept], [ids[i] for i in kept]
    )
    return known, noise_ids


def som_batch(
    points,
    k_units: int,
    epochs: int = 5,
    seed: int = 0,
    ids=None,
    alpha0: float = 0.5,
    sigma0: float | None = None,
) -> KnownClusters:
    """Cluster by training the online SOM over shuffled epochs.

    Runs `epochs` seeded-shuffle passes of the stream update over the
    points, then assigns each point to its best-matching unit. Units that
    win nothing are dropped and surviving cluster ids are renumbered
    densely; centroids are recomputed as member means. epochs=0 assigns by
    the initial random weights, still a valid partition.
    """
    X = _as_points(points)
    ids = _default_ids(X.shape[0], ids)
    if k_units < 1:
        raise ValueError(f"k_units must be >= 1, got {k_units}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    rng = np.random.default_rng(seed)
    horizon = max(1, epochs * X.shape[0])
    state = som_init(
        k_units,
        X.shape[1],
        seed=rng,
        alpha0=alpha0,
        sigma0=sigma0,
        lambda_alpha=float(horizon),
        lambda_sigma=float(horizon),
    )
    for _ in range(epochs):
        for i in rng.permutation(X.shape[0]):
            som_update(state, X[i])
    labels = final_assign(state, X)
    return _clusters_from_labels(X, labels, ids)


@dataclass(frozen=True)
class ClustererSpec:
    """A named batch-clusterer configuration for selection grids."""

    name: str
    algorithm: str  # kmeans | som | dbscan
    params: dict = field(default_factory=dict)


def run_batch_clusterer(spec: ClustererSpec, points, seed: int = 0, ids=None) -> KnownClusters:
    """Dispatch one ClustererSpec; DBSCAN noise stays unassigned."""
    if spec.algorithm == "kmeans":
        return kmeans_batch(points, seed=seed, ids=ids, **spec.params)
    if spec.algorithm == "som":
        return som_batch(points, seed=seed, ids=ids, **spec.params)
    if spec.algorithm == "dbscan":
        known, _ = dbscan(points, ids=ids, **spec.params)
        if not known.clusters:
            raise ValueError("dbscan produced no clusters")
        return known
    raise ValueError(f"unknown batch clusterer {spec.algorithm!r}")
