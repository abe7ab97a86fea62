"""spmdiag command line.

Exit codes: 0 no bottleneck, 1 bottlenecks found (report still written),
2 bad input or usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .locate import AnalysisConfig
from .model import MetricKind, ModelError, ProfileDataset
from .report import analyze, compare_metrics, dumps_machine, render_comparison, render_text, to_machine
from .trace.fileformat import ProfileFormatError, load_profile, load_xml_profile, save_profile
from .trace.generator import (
    HEAVY_METRICS,
    CompositeImbalance,
    HeavyRegion,
    ImbalancedRegion,
    InvalidSpec,
    PlantSpec,
    generate,
)
from .trace.presets import NONE, flat_uniform, graded, presets, with_children

EXIT_CLEAN = 0
EXIT_BOTTLENECK = 1
EXIT_ERROR = 2

DISSIMILARITY_CHOICES = {"cpu": MetricKind.CPU_TIME, "wall": MetricKind.WALL_TIME}
DISPARITY_CHOICES = {"crnm": MetricKind.CRNM, "cpi": MetricKind.CPI, "wall": MetricKind.WALL_TIME}
HEAVY_CHOICES = {
    "l1": MetricKind.L1_MISS_RATE,
    "l2": MetricKind.L2_MISS_RATE,
    "disk": MetricKind.DISK_BYTES,
    "network": MetricKind.NETWORK_BYTES,
    "instructions": MetricKind.INSTRUCTIONS,
}
# smallest intensities at which a heavy plant on any graded region is recovered exactly
HEAVY_DEFAULT_INTENSITY = {"l1": 10.0, "l2": 10.0, "disk": 50.0, "network": 50.0, "instructions": 10.0}
SCENARIOS = ("balanced", "imbalanced", "heavy", "composite")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must be between 0 and 1")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def read_profile(path: str) -> ProfileDataset:
    data = Path(path).read_bytes()
    try:
        if path.lower().endswith(".xml"):
            return load_xml_profile(data)
        return load_profile(data)
    except (TypeError, AttributeError, KeyError) as exc:
        # wrong JSON shapes (a list where an object belongs, and so on)
        raise ProfileFormatError(f"{path}: malformed profile ({exc})") from None


def _config(args, dataset: ProfileDataset) -> AnalysisConfig:
    excluded = set(args.exclude_ranks or ())
    if args.exclude_masters:
        excluded |= dataset.masters()
    unknown = sorted(r for r in excluded if r not in dataset.ranks)
    if unknown:
        raise UsageError(f"--exclude-ranks names ranks not in the profile: {unknown}")
    if args.region_filter is not None and args.region_filter not in dataset.tree:
        raise UsageError(f"--region-filter: no region {args.region_filter}")
    return AnalysisConfig(
        dissimilarity_metric=DISSIMILARITY_CHOICES[args.metric_dissimilarity],
        disparity_metric=DISPARITY_CHOICES[args.metric_disparity],
        excluded_ranks=frozenset(excluded),
        threshold_fraction=args.threshold_fraction,
        count_threshold=args.count_threshold,
        subtree_root=args.region_filter,
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    dataset = read_profile(args.profile)
    result = analyze(dataset, _config(args, dataset))
    doc = to_machine(result)
    _emit(dumps_machine(doc) if args.format == "machine" else render_text(doc), args.out)
    return EXIT_BOTTLENECK if result.bottlenecks_found else EXIT_CLEAN


def cmd_compare_metrics(args) -> int:
    dataset = read_profile(args.profile)
    doc = compare_metrics(dataset, _config(args, dataset))
    _emit(dumps_machine(doc) if args.format == "machine" else render_comparison(doc), args.out)
    return EXIT_CLEAN


def _scenario_spec(args) -> PlantSpec:
    ranks = args.ranks or 8
    seed = args.seed if args.seed is not None else 0
    if ranks < 2 and args.scenario != "balanced":
        raise UsageError("planted scenarios need at least 2 ranks")
    # default affected ranks: the upper half
    affected = frozenset(args.ranks_affected or range(ranks // 2, ranks))
    intensity = args.intensity
    if args.scenario == "balanced":
        return PlantSpec(flat_uniform(args.regions, ranks), (), seed, name="balanced")
    if args.scenario == "imbalanced":
        # the nested shape hangs two leaves under a workless region 4; deeper
        # trees would let the imbalance lift the parents' CRNM as well
        if args.shape == "nested":
            if args.regions < 4:
                raise UsageError("the nested shape needs --regions 4 or more")
            shape = with_children(args.regions, 4, (args.regions + 1, args.regions + 2), NONE, ranks)
            default = args.regions + 2
        else:
            shape, default = flat_uniform(args.regions, ranks), 3
        region = args.region if args.region is not None else default
        plant = ImbalancedRegion(region, affected, 3.0 if intensity is None else intensity)
        return PlantSpec(shape, (plant,), seed, name="imbalanced")
    if args.scenario == "heavy":
        region = args.region if args.region is not None else 3
        plant = HeavyRegion(
            region, HEAVY_CHOICES[args.metric],
            HEAVY_DEFAULT_INTENSITY[args.metric] if intensity is None else intensity,
        )
        return PlantSpec(graded(args.regions, ranks), (plant,), seed, name=f"heavy-{args.metric}")
    members = tuple(args.composite or (1, 2))
    plant = CompositeImbalance(members, affected, 3.0 if intensity is None else intensity)
    return PlantSpec(flat_uniform(args.regions, ranks), (plant,), seed, name="composite")


def _describe(plant) -> dict:
    if isinstance(plant, ImbalancedRegion):
        return {"type": "imbalanced", "region": plant.region, "ranks": sorted(plant.ranks), "intensity": plant.intensity}
    if isinstance(plant, HeavyRegion):
        return {"type": "heavy", "region": plant.region, "metric": plant.metric.value,
                "attribute": HEAVY_METRICS[plant.metric], "intensity": plant.intensity}
    return {"type": "composite", "regions": list(plant.regions), "ranks": sorted(plant.ranks), "intensity": plant.intensity}


def truth_document(spec: PlantSpec, truth) -> dict:
    return {
        "schema_version": 1,
        "program": spec.name,
        "shape": spec.shape.name,
        "seed": spec.seed,
        "noise": spec.noise,
        "plants": [_describe(p) for p in spec.plants],
        **truth.to_dict(),
    }


def cmd_generate(args) -> int:
    if args.preset:
        table = presets()
        if args.preset not in table:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(table)}")
        spec = table[args.preset]
        if args.ranks:
            spec = replace(spec, shape=replace(spec.shape, ranks=args.ranks))
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    else:
        spec = _scenario_spec(args)
    dataset, truth = generate(spec)
    out = Path(args.out or f"{spec.name}.json")
    truth_path = Path(args.truth) if args.truth else out.with_name(out.stem + ".truth.json")
    out.write_bytes(save_profile(dataset))
    truth_path.write_text(json.dumps(truth_document(spec, truth), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} and {truth_path}", file=sys.stderr)
    return EXIT_CLEAN


def cmd_presets(args) -> int:
    for name, spec in presets().items():
        print(f"{name:20s} shape={spec.shape.name} ranks={spec.shape.ranks} plants={len(spec.plants)}")
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spmdiag", description="Locate and diagnose bottlenecks in SPMD profiles.")
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("profile", help="profile file (.json, or .xml)")
    shared.add_argument("--metric-dissimilarity", choices=sorted(DISSIMILARITY_CHOICES), default="cpu")
    shared.add_argument("--metric-disparity", choices=sorted(DISPARITY_CHOICES), default="crnm")
    shared.add_argument("--exclude-ranks", type=_int_list, default=None, metavar="LIST",
                        help="comma-separated ranks to leave out, e.g. 0,3")
    shared.add_argument("--exclude-masters", action="store_true", help="also leave out ranks whose role is master")
    shared.add_argument("--threshold-fraction", type=_fraction, default=0.10)
    shared.add_argument("--count-threshold", type=_nonneg, default=1)
    shared.add_argument("--region-filter", type=int, default=None, metavar="ID",
                        help="analyse only this region's subtree, its children becoming the top level")
    shared.add_argument("--format", choices=("text", "machine"), default="text")
    shared.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = sub.add_parser("analyze", parents=[shared], help="report bottlenecks and root causes")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("compare-metrics", parents=[shared], help="ccr/cccr under each metric side by side")
    p.set_defaults(func=cmd_compare_metrics)

    g = sub.add_parser("generate", help="write a synthetic profile and its ground truth")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--preset", help="a shipped fixture (see `spmdiag presets`)")
    src.add_argument("--scenario", choices=SCENARIOS, default=None)
    g.add_argument("--shape", choices=("flat", "nested"), default="flat")
    g.add_argument("--regions", type=int, default=8, help="depth-1 regions (nested adds two leaves under region 4)")
    g.add_argument("--region", type=int, default=None)
    g.add_argument("--composite", type=_int_list, default=None, metavar="LIST", help="adjacent regions, e.g. 1,2")
    g.add_argument("--ranks", type=int, default=None)
    g.add_argument("--ranks-affected", type=_int_list, default=None, metavar="LIST")
    g.add_argument("--intensity", type=float, default=None)
    g.add_argument("--metric", choices=sorted(HEAVY_CHOICES), default="disk")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None, help="profile path (default NAME.json)")
    g.add_argument("--truth", default=None, help="ground-truth path (default next to --out)")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("presets", help="list shipped fixtures")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) == "generate" and not args.preset and not args.scenario:
        args.scenario = "balanced"
    try:
        return args.func(args)
    except (OSError, UsageError, InvalidSpec, ModelError, ValueError) as exc:
        print(f"spmdiag: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
