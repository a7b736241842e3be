"""Cluster-quality metrics: weighted purity and mean silhouette coefficient.

Purity consumes ground-truth family labels and is used for evaluation only;
it is never read by model selection. The silhouette coefficient (Rousseeuw,
1987) is label-free and safe to use while tuning.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

_CHUNK = 256


@dataclass(frozen=True)
class ClusterPurity:
    cluster_id: int
    size: int
    purity: float
    dominant_family: str


@dataclass
class MetricsReport:
    """Purity and silhouette results; either field may be absent."""

    purity: float | None = None
    mean_silhouette: float | None = None
    per_cluster: list[ClusterPurity] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "purity": self.purity,
            "mean_silhouette": self.mean_silhouette,
            "per_cluster": [
                {
                    "cluster_id": c.cluster_id,
                    "size": c.size,
                    "purity": c.purity,
                    "dominant_family": c.dominant_family,
                }
                for c in self.per_cluster
            ],
        }


def purity(assignments: Mapping[str, int], labels: Mapping[str, str]) -> MetricsReport:
    """Weighted purity of a clustering against ground-truth families.

    Each cluster scores the share of its dominant family; the overall value
    is the size-weighted average, equivalently the fraction of samples that
    belong to their cluster's dominant family. Dominance ties break to the
    lexicographically smallest family name.
    """
    if not assignments:
        raise ValueError("purity of an empty assignment is undefined")
    missing = sorted(sid for sid in assignments if sid not in labels)
    if missing:
        shown = missing[:10]
        suffix = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise ValueError(f"samples missing ground-truth labels: {shown}{suffix}")

    by_cluster: dict[int, Counter] = defaultdict(Counter)
    for sid, cid in assignments.items():
        by_cluster[int(cid)][labels[sid]] += 1

    n = len(assignments)
    per_cluster: list[ClusterPurity] = []
    dominant_total = 0
    for cid in sorted(by_cluster):
        counts = by_cluster[cid]
        top = max(counts.values())
        family = min(f for f, c in counts.items() if c == top)
        size = sum(counts.values())
        dominant_total += top
        per_cluster.append(ClusterPurity(cid, size, top / size, family))
    return MetricsReport(purity=dominant_total / n, per_cluster=per_cluster)


def mean_silhouette(points, labels: Sequence) -> float:
    """Mean silhouette coefficient over all points.

    For a point x in cluster C: a(x) is its mean distance to the other
    members of C (divisor |C| - 1), b(x) the smallest mean distance to any
    other cluster, and s(x) = (b - a) / max(a, b). Points in singleton
    clusters contribute s = 0, the original Rousseeuw convention. Requires
    at least two clusters.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        X = np.atleast_2d(X)
    n = X.shape[0]
    labels = list(labels)
    if len(labels) != n:
        raise ValueError(f"{n} points but {len(labels)} labels")
    uniq = sorted(set(labels))
    if len(uniq) < 2:
        raise ValueError(f"silhouette needs at least 2 clusters, got {len(uniq)}")
    index = {c: i for i, c in enumerate(uniq)}
    lab = np.array([index[c] for c in labels], dtype=np.intp)
    sizes = np.bincount(lab, minlength=len(uniq)).astype(np.float64)

    scores = np.zeros(n, dtype=np.float64)
    onehot = np.zeros((n, len(uniq)), dtype=np.float64)
    onehot[np.arange(n), lab] = 1.0
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        dist = cdist(X[start:stop], X)          # (m, n), self-distance is 0
        cluster_sums = dist @ onehot            # (m, k) fixed-order reduction
        for row, i in enumerate(range(start, stop)):
            own = lab[i]
            if sizes[own] <= 1:
                continue                        # singleton: s = 0
            a = cluster_sums[row, own] / (sizes[own] - 1.0)
            means = cluster_sums[row] / sizes
            means[own] = np.inf
            b = float(means.min())
            denom = max(a, b)
            scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())
