"""End-to-end analysis and its report.

The machine-readable report is a plain dict; the human text is rendered
from that dict so the two can never disagree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Union

from .cluster import SEVERITY_NAMES
from .diagnose import (
    ATTRIBUTE_NAMES,
    Diagnosis,
    TableAnalysis,
    analyse_table,
    attribute,
    build_disparity_table,
    build_dissimilarity_table,
    diagnose,
)
from .locate import AnalysisConfig, BottleneckSet, NoBottleneck, _prepare, find_disparity, find_dissimilarity
from .model import MetricKind, ProfileDataset
from .roughset import DecisionTable

REPORT_SCHEMA = 1


@dataclass(frozen=True)
class Analysis:
    config: AnalysisConfig
    dataset: ProfileDataset  # after any subtree restriction
    dissimilarity: Union[BottleneckSet, NoBottleneck]
    dissimilarity_table: Optional[DecisionTable]
    dissimilarity_result: Optional[TableAnalysis]
    dissimilarity_diagnoses: tuple[Diagnosis, ...]
    disparity: BottleneckSet
    disparity_table: DecisionTable
    disparity_result: TableAnalysis
    disparity_diagnoses: tuple[Diagnosis, ...]

    @property
    def dissimilarity_causes(self) -> frozenset[str]:
        return self.dissimilarity_result.causes if self.dissimilarity_result else frozenset()

    @property
    def disparity_causes(self) -> frozenset[str]:
        return self.disparity_result.causes

    @property
    def bottlenecks_found(self) -> bool:
        return isinstance(self.dissimilarity, BottleneckSet) or self.disparity.found


def analyze(dataset: ProfileDataset, config: AnalysisConfig = AnalysisConfig()) -> Analysis:
    dataset = _prepare(dataset, config)
    # the restriction is done once here; downstream calls see the restricted tree
    config = replace(config, subtree_root=None)

    dis = find_dissimilarity(dataset, config)
    dis_table = dis_result = None
    dis_diag: tuple[Diagnosis, ...] = ()
    if isinstance(dis, BottleneckSet):
        dis_table = build_dissimilarity_table(dataset, config, dis.partition)
        dis_result = analyse_table(dis_table)
        dis_diag = tuple(diagnose(dis_table, dis, dataset, config))

    disp = find_disparity(dataset, config)
    disp_table = build_disparity_table(dataset, config, disp.ccr)
    disp_result = analyse_table(disp_table)
    disp_diag = tuple(diagnose(disp_table, disp, dataset, config))
    return Analysis(config, dataset, dis, dis_table, dis_result, dis_diag, disp, disp_table, disp_result, disp_diag)


# ---------------------------------------------------------------------------
# machine format
# ---------------------------------------------------------------------------


def _sets(sets) -> list[list[int]]:
    return [sorted(s) for s in sets]


def _diagnosis(d: Diagnosis) -> dict:
    evidence = {}
    for attr, values in d.evidence.items():
        if all(isinstance(k, int) for k in values):
            evidence[attr] = [[k, v] for k, v in sorted(values.items())]
        else:
            evidence[attr] = values
    return {
        "region": d.region,
        "causes": list(d.root_causes),
        "glosses": d.glosses(),
        "ambiguous": d.ambiguous,
        "evidence": evidence,
    }


def _table_section(result: Optional[TableAnalysis]) -> dict:
    if result is None:
        return {"causes": [], "reducts": [], "core": [], "inconsistent_pairs": []}
    order = {a: i for i, a in enumerate(ATTRIBUTE_NAMES)}
    srt = lambda s: sorted(s, key=order.get)  # noqa: E731
    return {
        "causes": srt(result.causes),
        "reducts": [srt(r) for r in result.reducts.reducts],
        "core": srt(result.reducts.core),
        "inconsistent_pairs": [list(p) for p in result.inconsistency.pairs],
    }


def to_machine(a: Analysis) -> dict:
    ds = a.dataset
    cfg = a.config
    dis = a.dissimilarity
    partition = dis.partition
    dsec = {
        "metric": cfg.dissimilarity_metric.value,
        "clusters": _sets(partition.clusters),
        "isolated": sorted(partition.isolated),
        "found": isinstance(dis, BottleneckSet),
        "ccr": sorted(dis.ccr) if isinstance(dis, BottleneckSet) else [],
        "cccr": sorted(dis.cccr) if isinstance(dis, BottleneckSet) else [],
        "composite_width": dis.composite_width if isinstance(dis, BottleneckSet) else None,
        "composites": [list(g) for g in dis.composites] if isinstance(dis, BottleneckSet) else [],
        "inconclusive": dis.inconclusive if isinstance(dis, BottleneckSet) else False,
        "diagnoses": [_diagnosis(d) for d in a.dissimilarity_diagnoses],
    }
    dsec.update(_table_section(a.dissimilarity_result))

    disp = a.disparity
    psec = {
        "metric": cfg.disparity_metric.value,
        "regions": [
            {"id": rid, "average": disp.values[rid], "severity": disp.severity[rid]}
            for rid in sorted(disp.values)
        ],
        "centroids": list(disp.severity.centroids),
        "ccr": sorted(disp.ccr),
        "cccr": sorted(disp.cccr),
        "diagnoses": [_diagnosis(d) for d in a.disparity_diagnoses],
    }
    psec.update(_table_section(a.disparity_result))
    return {
        "schema_version": REPORT_SCHEMA,
        "program": {
            "name": ds.program,
            "ranks": ds.m,
            "regions": ds.n,
            "depth": ds.tree.max_depth(),
            "root": ds.tree.root,
        },
        "config": {
            "excluded_ranks": sorted(cfg.excluded_ranks),
            "threshold_fraction": cfg.threshold_fraction,
            "count_threshold": cfg.count_threshold,
        },
        "dissimilarity": dsec,
        "disparity": psec,
        "warnings": [str(w) for w in ds.warnings],
        "bottlenecks_found": a.bottlenecks_found,
    }


def dumps_machine(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# text
# ---------------------------------------------------------------------------


def _ids(xs) -> str:
    return "{" + ", ".join(str(x) for x in xs) + "}" if xs else "(none)"


def _causes(names) -> str:
    if not names:
        return "(none)"
    return ", ".join(f"{n} ({attribute(n).gloss})" for n in names)


def render_text(doc: dict) -> str:
    p = doc["program"]
    lines = [
        f"program {p['name'] or '(unnamed)'}: {p['ranks']} processes, {p['regions']} code regions, depth {p['depth']}",
    ]
    excl = doc["config"]["excluded_ranks"]
    if excl:
        lines.append(f"excluded ranks: {_ids(excl)}")

    d = doc["dissimilarity"]
    lines += ["", f"== dissimilarity ({d['metric']}) =="]
    lines.append(f"clusters: {len(d['clusters'])}  " + " ".join(_ids(c) for c in d["clusters"]))
    if not d["found"]:
        lines.append("all processes behave alike: no dissimilarity bottleneck")
    else:
        if d["inconclusive"]:
            lines.append("processes differ but no region or adjacent group explains it (inconclusive)")
        lines.append(f"CCR:  {_ids(d['ccr'])}")
        lines.append(f"CCCR: {_ids(d['cccr'])}")
        if d["composite_width"]:
            groups = " ".join(_ids(g) for g in d["composites"])
            lines.append(f"matched only as adjacent groups of {d['composite_width']}: {groups}")
        lines.append(f"root causes: {_causes(d['causes'])}")
        lines.append(f"reducts: {' '.join(_ids(r) for r in d['reducts'])}  core: {_ids(d['core'])}")
        for diag in d["diagnoses"]:
            for attr, values in diag["evidence"].items():
                shown = ", ".join(f"{r}:{v:.4g}" for r, v in values)
                lines.append(f"  region {diag['region']} {attr} per rank: {shown}")

    s = doc["disparity"]
    lines += ["", f"== disparity ({s['metric']}) =="]
    lines.append(f"{'region':>8} {'average':>12}  severity")
    for row in s["regions"]:
        lines.append(f"{row['id']:>8} {row['average']:>12.4g}  {row['severity']} {SEVERITY_NAMES[row['severity']]}")
    lines.append(f"CCR:  {_ids(s['ccr'])}")
    lines.append(f"CCCR: {_ids(s['cccr'])}")
    if s["ccr"]:
        lines.append(f"root causes: {_causes(s['causes'])}")
        lines.append(f"reducts: {' '.join(_ids(r) for r in s['reducts'])}  core: {_ids(s['core'])}")
        for diag in s["diagnoses"]:
            parts = []
            for attr in diag["causes"]:
                ev = diag["evidence"][attr]
                share = ev.get("program_share_pct")
                extra = f", {share:.1f}% of program" if share is not None else ""
                parts.append(f"{attribute(attr).gloss} (avg {ev['average']:.4g}{extra})")
            lines.append(f"  region {diag['region']}: " + ("; ".join(parts) or "no attribute stands out"))
    for key in ("dissimilarity", "disparity"):
        pairs = doc[key]["inconsistent_pairs"]
        if pairs:
            lines.append(f"note: {key} table has indiscernible objects with different decisions: "
                         + " ".join(f"({a},{b})" for a, b in pairs))
    if doc["warnings"]:
        lines += ["", f"warnings ({len(doc['warnings'])}):"]
        lines += [f"  {w}" for w in doc["warnings"][:20]]
        if len(doc["warnings"]) > 20:
            lines.append(f"  ... {len(doc['warnings']) - 20} more")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# metric comparison
# ---------------------------------------------------------------------------

DISPARITY_METRICS = (MetricKind.CRNM, MetricKind.CPI, MetricKind.WALL_TIME)
DISSIMILARITY_METRICS = (MetricKind.CPU_TIME, MetricKind.WALL_TIME)


def compare_metrics(dataset: ProfileDataset, config: AnalysisConfig = AnalysisConfig()) -> dict:
    dataset = _prepare(dataset, config)
    config = replace(config, subtree_root=None)
    rows = {"disparity": [], "dissimilarity": []}
    for kind in DISPARITY_METRICS:
        bs = find_disparity(dataset, replace(config, disparity_metric=kind))
        rows["disparity"].append({"metric": kind.value, "ccr": sorted(bs.ccr), "cccr": sorted(bs.cccr)})
    for kind in DISSIMILARITY_METRICS:
        res = find_dissimilarity(dataset, replace(config, dissimilarity_metric=kind))
        found = isinstance(res, BottleneckSet)
        rows["dissimilarity"].append({
            "metric": kind.value,
            "clusters": len(res.partition),
            "ccr": sorted(res.ccr) if found else [],
            "cccr": sorted(res.cccr) if found else [],
        })
    return {"schema_version": REPORT_SCHEMA, "program": dataset.program, **rows}


def render_comparison(doc: dict) -> str:
    lines = [f"metric comparison for {doc['program'] or '(unnamed)'}", "", "disparity:"]
    for row in doc["disparity"]:
        lines.append(f"  {row['metric']:>5}  CCR {_ids(row['ccr'])}  CCCR {_ids(row['cccr'])}")
    lines += ["", "dissimilarity:"]
    for row in doc["dissimilarity"]:
        lines.append(f"  {row['metric']:>5}  clusters {row['clusters']}  CCR {_ids(row['ccr'])}  CCCR {_ids(row['cccr'])}")
    return "\n".join(lines) + "\n"
