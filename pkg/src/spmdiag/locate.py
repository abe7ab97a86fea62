"""Bottleneck location: zero-and-recluster search and severity-based ranking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .cluster import Partition, SeverityMap, kmeans_severity, optics_cluster, partitions_equal
from .model import (
    MetricKind,
    ModelError,
    ProfileDataset,
    RegionTree,
    UnknownRegion,
    average_over_processes,
    included_ranks,
    metric_vector,
)

log = logging.getLogger(__name__)

DISSIMILARITY = "dissimilarity"
DISPARITY = "disparity"
HIGH_SEVERITY = 3  # "high" and "very high"


@dataclass(frozen=True)
class AnalysisConfig:
    dissimilarity_metric: MetricKind = MetricKind.CPU_TIME
    disparity_metric: MetricKind = MetricKind.CRNM
    excluded_ranks: frozenset[int] = frozenset()
    threshold_fraction: float = 0.10
    count_threshold: int = 1
    subtree_root: Optional[int] = None  # second-round analysis of one region

    def cluster(self, vectors: Mapping[int, tuple[float, ...]]) -> Partition:
        return optics_cluster(vectors, self.threshold_fraction, self.count_threshold)


@dataclass(frozen=True)
class BottleneckSet:
    kind: str
    ccr: frozenset[int]
    cccr: frozenset[int]
    evidence: Mapping[int, dict] = field(default_factory=dict)
    composite_width: Optional[int] = None
    composites: tuple[tuple[int, ...], ...] = ()
    inconclusive: bool = False
    partition: Optional[Partition] = None  # full-vector clustering (dissimilarity)
    baseline: Optional[Partition] = None  # depth-1 partition B0 (dissimilarity)
    values: Mapping[int, float] = field(default_factory=dict)  # per-region averages (disparity)
    severity: Optional[SeverityMap] = None

    def __post_init__(self) -> None:
        if not self.cccr <= self.ccr:
            raise ValueError("cccr must be a subset of ccr")

    @property
    def found(self) -> bool:
        return bool(self.ccr)


@dataclass(frozen=True)
class NoBottleneck:
    """Every process fell into one cluster."""

    partition: Partition
    kind: str = DISSIMILARITY
    found = False


# ---------------------------------------------------------------------------
# second-round restriction
# ---------------------------------------------------------------------------


def restrict_to_subtree(dataset: ProfileDataset, root: int) -> ProfileDataset:
    """Dataset over the subtree of *root*, with *root* as the new program root.

    The region's children become the depth-1 layer, so both searches and
    CRNM normalisation work relative to that region.
    """
    if root not in dataset.tree:
        raise UnknownRegion(f"region {root} is not in the tree")
    keep = [root, *dataset.tree.descendants(root)]
    # preorder keeps each parent's children in their source order
    spec = []
    stack = [root]
    while stack:
        rid = stack.pop()
        node = dataset.tree.node(rid)
        spec.append((rid, node.label, None if rid == root else node.parent))
        stack.extend(reversed(node.children))
    tree = RegionTree.build(spec)
    samples = {(r, rid): dataset.sample(r, rid) for r in dataset.ranks for rid in keep}
    return ProfileDataset(tree, dataset.roles, samples, dataset.program)


def _prepare(dataset: ProfileDataset, config: AnalysisConfig) -> ProfileDataset:
    if config.subtree_root is None or config.subtree_root == dataset.tree.root:
        return dataset
    return restrict_to_subtree(dataset, config.subtree_root)


# ---------------------------------------------------------------------------
# dissimilarity
# ---------------------------------------------------------------------------


class _Scratch:
    """Per-rank region values; tests build vectors from an active-region mask.

    A region outside the mask contributes 0, which is what zeroing it means.
    The source values are never modified, so nothing needs restoring.
    """

    def __init__(self, dataset: ProfileDataset, config: AnalysisConfig):
        self.config = config
        self.regions = dataset.tree.code_regions()
        self.ranks = included_ranks(dataset, config.excluded_ranks)
        self.values = {
            rank: dict(zip(self.regions, metric_vector(dataset, rank, config.dissimilarity_metric, self.regions)))
            for rank in self.ranks
        }

    def partition(self, active: Iterable[int]) -> Partition:
        on = set(active)
        vectors = {
            rank: tuple(self.values[rank][rid] if rid in on else 0.0 for rid in self.regions)
            for rank in self.ranks
        }
        return self.config.cluster(vectors)

    def composite_partition(self, groups: list[tuple[int, ...]], off: tuple[int, ...] | None) -> Partition:
        vectors = {}
        for rank in self.ranks:
            row = self.values[rank]
            vectors[rank] = tuple(
                0.0 if g == off else sum(row[rid] for rid in g) for g in groups
            )
        return self.config.cluster(vectors)


def find_dissimilarity(dataset: ProfileDataset, config: AnalysisConfig = AnalysisConfig()):
    """Cluster whole-program vectors; search for the responsible regions if they split."""
    dataset = _prepare(dataset, config)
    scratch = _Scratch(dataset, config)
    full = scratch.partition(scratch.regions)
    if len(full) == 1:
        return NoBottleneck(full)
    found = _search(dataset, scratch)
    return replace(found, partition=full)


def search_dissimilarity(dataset: ProfileDataset, config: AnalysisConfig = AnalysisConfig()) -> BottleneckSet:
    dataset = _prepare(dataset, config)
    return _search(dataset, _Scratch(dataset, config))


def _search(dataset: ProfileDataset, scratch: _Scratch) -> BottleneckSet:
    tree = dataset.tree
    top = tree.top_level()
    top_set = frozenset(top)
    baseline = scratch.partition(top_set)
    ccr: set[int] = set()
    evidence: dict[int, dict] = {}

    def descend(parent: int, others: frozenset[int]) -> None:
        # others: depth-1 regions still active while parent's subtree is tested
        for child in tree.children(parent):
            trial = scratch.partition(others | {child})
            if partitions_equal(trial, baseline):
                ccr.add(child)
                evidence[child] = {"restored_alone": trial.to_dict()}
                descend(child, others)

    for j in top:
        others = top_set - {j}
        zeroed = scratch.partition(others)
        if partitions_equal(zeroed, baseline):
            continue
        ccr.add(j)
        evidence[j] = {"zeroed": zeroed.to_dict()}
        descend(j, others)

    if ccr:
        cccr = {r for r in ccr if not any(c in ccr for c in tree.children(r))}
        return BottleneckSet(DISSIMILARITY, frozenset(ccr), frozenset(cccr), evidence, baseline=baseline)
    return _composite_fallback(scratch, top, baseline)


def _chunks(seq: tuple[int, ...], size: int) -> list[tuple[int, ...]]:
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def _composite_fallback(scratch: _Scratch, top: tuple[int, ...], b0: Partition) -> BottleneckSet:
    # adjacent depth-1 siblings merged into non-overlapping left-aligned groups
    for width in range(2, len(top)):
        groups = _chunks(top, width)
        baseline = scratch.composite_partition(groups, None)
        hits = []
        for g in groups:
            if len(g) < 2:
                continue
            zeroed = scratch.composite_partition(groups, g)
            if not partitions_equal(zeroed, baseline):
                hits.append(g)
        if hits:
            members = frozenset(r for g in hits for r in g)
            evidence = {r: {"composite": list(g)} for g in hits for r in g}
            log.info("composite fallback matched at width %d: %s", width, hits)
            return BottleneckSet(
                DISSIMILARITY, members, members, evidence,
                composite_width=width, composites=tuple(hits), baseline=b0,
            )
    return BottleneckSet(DISSIMILARITY, frozenset(), frozenset(), inconclusive=True, baseline=b0)


# ---------------------------------------------------------------------------
# disparity
# ---------------------------------------------------------------------------


def find_disparity(dataset: ProfileDataset, config: AnalysisConfig = AnalysisConfig()) -> BottleneckSet:
    dataset = _prepare(dataset, config)
    averages = average_over_processes(dataset, config.disparity_metric, config.excluded_ranks)
    regions = dataset.tree.code_regions()
    if not regions:
        raise ModelError("the tree has no code regions below the root")
    values = {rid: averages[rid] for rid in regions}
    severity = kmeans_severity(values)
    ccr = severity.at_least(HIGH_SEVERITY)
    cccr = refine_disparity(ccr, severity, dataset.tree)
    evidence = {rid: {"average": values[rid], "severity": severity[rid]} for rid in sorted(ccr)}
    return BottleneckSet(
        DISPARITY, ccr, cccr, evidence, values=values, severity=severity
    )


def refine_disparity(ccr: Iterable[int], severity: SeverityMap, tree: RegionTree) -> frozenset[int]:
    """Narrow CCRs to CCCRs.

    A leaf CCR qualifies outright.  An inner CCR qualifies only when it is
    strictly more severe than each child.  When a child ties with it, that
    child is itself a CCR and is judged by the same rule one level down, so
    the tie moves the candidate into the child rather than losing it.
    """
    ccr = frozenset(ccr)
    out = set()
    for rid in ccr:
        kids = tree.children(rid)
        if not kids or all(severity[rid] > severity[c] for c in kids):
            out.add(rid)
    return frozenset(out)
