"""Process clustering (simplified OPTICS) and 1-D k-means severity classes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

Vectors = Union[Mapping[int, Sequence[float]], Sequence[Sequence[float]]]

SEVERITY_NAMES = ("very low", "low", "medium", "high", "very high")


class ClusterError(ValueError):
    pass


class DimensionMismatch(ClusterError):
    pass


class EmptyInput(ClusterError):
    pass


class UniverseMismatch(ClusterError):
    pass


def euclidean_distance(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise DimensionMismatch(f"vectors have {len(u)} and {len(v)} components")
    return math.dist(u, v)


def _norm(v: Sequence[float]) -> float:
    return math.hypot(*v)


@dataclass(frozen=True)
class Partition:
    """Grouping of ranks; cluster ids follow discovery order.

    ``isolated`` holds the ranks that ended up as singleton clusters because
    their seed neighbourhood was too sparse.
    """

    assignments: Mapping[int, int]
    clusters: tuple[frozenset[int], ...]
    isolated: frozenset[int]

    @property
    def ranks(self) -> frozenset[int]:
        return frozenset(self.assignments)

    def __len__(self) -> int:
        return len(self.clusters)

    def groups(self) -> frozenset[frozenset[int]]:
        return frozenset(self.clusters)

    def to_dict(self) -> dict:
        return {
            "clusters": [sorted(c) for c in self.clusters],
            "isolated": sorted(self.isolated),
        }


def _as_mapping(vectors: Vectors) -> dict[int, tuple[float, ...]]:
    if isinstance(vectors, Mapping):
        items = {int(k): tuple(map(float, v)) for k, v in vectors.items()}
    else:
        items = {i: tuple(map(float, v)) for i, v in enumerate(vectors)}
    if not items:
        raise EmptyInput("no vectors to cluster")
    dims = {len(v) for v in items.values()}
    if len(dims) != 1:
        raise DimensionMismatch(f"vectors have differing dimensions {sorted(dims)}")
    return items


def optics_cluster(
    vectors: Vectors, threshold_fraction: float = 0.10, count_threshold: int = 1
) -> Partition:
    """Cluster per-rank performance vectors.

    Seeds are visited in ascending rank.  For an unassigned seed ``p`` the
    neighbours are the still-unassigned ranks closer than
    ``threshold_fraction * |p|``; exact duplicates of the seed always count,
    so all-zero vectors still group together.  More than ``count_threshold``
    neighbours makes the seed and its neighbours a new cluster, otherwise the
    seed is isolated.  No density expansion beyond the seed's neighbourhood.
    """
    if threshold_fraction <= 0:
        raise ClusterError("threshold_fraction must be positive")
    points = _as_mapping(vectors)
    ranks = sorted(points)
    assignments: dict[int, int] = {}
    clusters: list[frozenset[int]] = []
    isolated: set[int] = set()
    for p in ranks:
        if p in assignments:
            continue
        vp = points[p]
        threshold = threshold_fraction * _norm(vp)
        neighbours = []
        for q in ranks:
            if q == p or q in assignments:
                continue
            d = math.dist(vp, points[q])
            if d < threshold or d == 0.0:
                neighbours.append(q)
        if len(neighbours) > count_threshold:
            members = frozenset([p, *neighbours])
        else:
            members = frozenset([p])
            isolated.add(p)
        for r in members:
            assignments[r] = len(clusters)
        clusters.append(members)
    return Partition(assignments, tuple(clusters), frozenset(isolated))


def partitions_equal(a: Partition, b: Partition) -> bool:
    """Label-invariant equality: same member sets, regardless of discovery order."""
    if a.ranks != b.ranks:
        raise UniverseMismatch(f"partitions cover {sorted(a.ranks)} and {sorted(b.ranks)}")
    return a.groups() == b.groups()


# ---------------------------------------------------------------------------
# severity classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeverityMap:
    severity: Mapping[int, int]
    centroids: tuple[float, ...]

    def __getitem__(self, key: int) -> int:
        return self.severity[key]

    def at_least(self, level: int) -> frozenset[int]:
        return frozenset(k for k, s in self.severity.items() if s >= level)


def _initial_centroids(xs: Sequence[float], k: int) -> list[float]:
    # 10/30/50/70/90th percentiles for k=5
    qs = [100.0 * (2 * i + 1) / (2 * k) for i in range(k)]
    return [float(c) for c in np.percentile(np.asarray(xs, dtype=float), qs)]


def _nearest(x: float, centroids: Sequence[float]) -> int:
    best, best_d = 0, abs(x - centroids[0])
    for i in range(1, len(centroids)):
        d = abs(x - centroids[i])
        if d < best_d:  # strict: ties stay with the lower centroid
            best, best_d = i, d
    return best


def lloyd_1d(xs: Sequence[float], centroids: Sequence[float], max_iter: int = 1000):
    """Plain Lloyd iteration; returns (labels per value, final centroids).

    Empty clusters keep their previous centre until the end, where they are
    dropped and the survivors relabelled by ascending centre.
    """
    cents = sorted(centroids)
    labels: list[int] | None = None
    for _ in range(max_iter):
        new = [_nearest(x, cents) for x in xs]
        if new == labels:
            break
        labels = new
        for c in range(len(cents)):
            members = [x for x, lab in zip(xs, labels) if lab == c]
            if members:
                cents[c] = math.fsum(members) / len(members)
        order = sorted(range(len(cents)), key=lambda i: cents[i])
        if order != list(range(len(cents))):
            remap = {old: new_i for new_i, old in enumerate(order)}
            cents = [cents[i] for i in order]
            labels = [remap[lab] for lab in labels]
    assert labels is not None
    used = sorted(set(labels), key=lambda c: cents[c])
    relabel = {old: new_i for new_i, old in enumerate(used)}
    return [relabel[lab] for lab in labels], tuple(cents[c] for c in used)


def kmeans_severity(values: Mapping[int, float] | Sequence[float], k: int = 5) -> SeverityMap:
    """Classify values into at most *k* severity categories (0 = very low).

    Deterministic: with more than *k* distinct values Lloyd starts from evenly
    spaced percentiles; with *k* or fewer distinct values each distinct value
    forms its own class, labelled from 0 upward.
    """
    if isinstance(values, Mapping):
        keys = list(values)
        xs = [float(values[key]) for key in keys]
    else:
        keys = list(range(len(values)))
        xs = [float(v) for v in values]
    if not xs:
        raise EmptyInput("no values to classify")
    if k < 1:
        raise ClusterError("k must be at least 1")
    distinct = sorted(set(xs))
    if len(distinct) <= k:
        init = distinct
    else:
        init = _initial_centroids(sorted(xs), k)
    labels, centroids = lloyd_1d(xs, init)
    return SeverityMap(dict(zip(keys, labels)), centroids)
