"""Decision tables over the five hardware attributes and root-cause extraction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cluster import Partition, kmeans_severity
from .locate import DISPARITY, DISSIMILARITY, HIGH_SEVERITY, AnalysisConfig, BottleneckSet, _prepare
from .model import (
    MetricKind,
    ProfileDataset,
    average_over_processes,
    derived_metric,
    included_ranks,
    metric_vector,
)
from .roughset import DecisionTable, InconsistencyReport, ReductSet, build_matrix, compute_reducts


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: MetricKind
    gloss: str
    additive: bool  # program-share percentages only make sense for totals


ATTRIBUTES = (
    Attribute("a1", MetricKind.L1_MISS_RATE, "L1 cache miss rate", False),
    Attribute("a2", MetricKind.L2_MISS_RATE, "L2 cache miss rate", False),
    Attribute("a3", MetricKind.DISK_BYTES, "disk I/O quantity", True),
    Attribute("a4", MetricKind.NETWORK_BYTES, "network I/O quantity", True),
    Attribute("a5", MetricKind.INSTRUCTIONS, "instructions retired", True),
)
ATTRIBUTE_NAMES = tuple(a.name for a in ATTRIBUTES)
_BY_NAME = {a.name: a for a in ATTRIBUTES}


def attribute(name: str) -> Attribute:
    return _BY_NAME[name]


def build_dissimilarity_table(
    dataset: ProfileDataset, config: AnalysisConfig, decision_partition: Partition
) -> DecisionTable:
    """One row per rank; each attribute is the rank's cluster id under that metric."""
    dataset = _prepare(dataset, config)
    ranks = included_ranks(dataset, config.excluded_ranks)
    columns = []
    for attr in ATTRIBUTES:
        vectors = {r: metric_vector(dataset, r, attr.kind) for r in ranks}
        columns.append(config.cluster(vectors).assignments)
    rows = [
        (r, [col[r] for col in columns], decision_partition.assignments[r])
        for r in ranks
    ]
    return DecisionTable.from_rows(ATTRIBUTE_NAMES, rows)


def build_disparity_table(dataset: ProfileDataset, config: AnalysisConfig, ccr) -> DecisionTable:
    """One row per region; an attribute is 1 when its average is high or very high."""
    dataset = _prepare(dataset, config)
    regions = dataset.tree.code_regions()
    ccr = frozenset(ccr)
    columns = []
    for attr in ATTRIBUTES:
        avg = average_over_processes(dataset, attr.kind, config.excluded_ranks)
        sev = kmeans_severity({rid: avg[rid] for rid in regions})
        columns.append({rid: int(sev[rid] >= HIGH_SEVERITY) for rid in regions})
    rows = [(rid, [col[rid] for col in columns], int(rid in ccr)) for rid in regions]
    return DecisionTable.from_rows(ATTRIBUTE_NAMES, rows)


@dataclass(frozen=True)
class Diagnosis:
    kind: str
    region: int
    root_causes: tuple[str, ...]
    reducts: ReductSet
    evidence: dict = field(default_factory=dict)
    ambiguous: bool = False
    inconsistency: InconsistencyReport = InconsistencyReport()

    def glosses(self) -> list[str]:
        return [attribute(a).gloss for a in self.root_causes]


@dataclass(frozen=True)
class TableAnalysis:
    reducts: ReductSet
    causes: frozenset[str]
    inconsistency: InconsistencyReport
    ambiguous: bool


def analyse_table(table: DecisionTable) -> TableAnalysis:
    """Core plus the first smallest reduct; flagged ambiguous when the core is empty."""
    matrix, report = build_matrix(table)
    rs = compute_reducts(matrix)
    causes = frozenset(rs.core) | rs.smallest()
    ambiguous = not rs.core and bool(causes)
    return TableAnalysis(rs, causes, report, ambiguous)


def _ordered(names) -> tuple[str, ...]:
    chosen = set(names)
    return tuple(a for a in ATTRIBUTE_NAMES if a in chosen)


def diagnose(
    table: DecisionTable,
    bottlenecks: BottleneckSet,
    dataset: ProfileDataset,
    config: Optional[AnalysisConfig] = None,
) -> list[Diagnosis]:
    """One Diagnosis per CCCR region of *bottlenecks*."""
    config = config or AnalysisConfig()
    dataset = _prepare(dataset, config)
    result = analyse_table(table)
    out = []
    ranks = included_ranks(dataset, config.excluded_ranks)
    if bottlenecks.kind == DISSIMILARITY:
        # causes come from the core; without one the smallest reduct stands in
        causes = _ordered(result.reducts.core or result.reducts.smallest())
        for rid in sorted(bottlenecks.cccr):
            evidence = {
                a: {r: _value(dataset, r, rid, a) for r in ranks}
                for a in causes
            }
            out.append(Diagnosis(
                DISSIMILARITY, rid, causes, result.reducts, evidence,
                not result.reducts.core, result.inconsistency,
            ))
    elif bottlenecks.kind == DISPARITY:
        averages = {a: average_over_processes(dataset, attribute(a).kind, config.excluded_ranks) for a in ATTRIBUTE_NAMES}
        root = dataset.tree.root
        for rid in sorted(bottlenecks.cccr):
            row = table.row(rid)
            causes = _ordered(a for a in result.causes if row[a] == 1)
            evidence = {}
            for a in causes:
                avg = averages[a]
                entry = {"average": avg[rid]}
                if attribute(a).additive:
                    total = avg[root]
                    entry["program_share_pct"] = 100.0 * avg[rid] / total if total > 0 else 0.0
                evidence[a] = entry
            out.append(Diagnosis(
                DISPARITY, rid, causes, result.reducts, evidence,
                result.ambiguous, result.inconsistency,
            ))
    else:
        raise ValueError(f"unknown bottleneck kind {bottlenecks.kind!r}")
    return out


def _value(dataset: ProfileDataset, rank: int, region: int, attr: str) -> float:
    sample = dataset.sample(rank, region)
    return derived_metric(sample, attribute(attr).kind) if sample.executed else 0.0
