"""Synthetic SPMD profiles with planted bottlenecks and their ground truth.

Cost model
----------
Every region has a per-work-unit profile of integer counters.  A rank does
``units`` work units in a region, so its self counters are the profile
times ``units``; ``units`` is the rank's base workload (1000 units with up
to +/-1% seeded jitter) times any imbalance factor.  Inclusive counters are
subtree sums and the times follow from them:

    cycles = ins * cpi + l2_miss * L2_PENALTY
    cpu    = cycles / CLOCK_HZ
    wall   = cpu + disk / DISK_BW + mpi_bytes / NET_BW

All counters stay integral, so regions sharing a profile produce exactly
equal averages; the severity classes then see the shape the fixture
designer intended rather than rounding noise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Union

from ..model import MetricKind, MetricSample, ProfileDataset, RegionTree

UNITS = 1000
CLOCK_HZ = 2.0e9
L2_PENALTY = 200
DISK_BW = 100.0e6
NET_BW = 100.0e6
DEFAULT_DISK = 4096  # bytes per unit when a disk plant hits a region without I/O
DEFAULT_NET = 4096


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class RegionProfile:
    """Per-work-unit counters of one region (self part only)."""

    ins: int = 0
    l1_access: int = 0
    l1_miss: int = 0
    l2_miss: int = 0  # L2 accesses are the L1 misses
    cycles: int = 0  # before L2 miss penalties
    disk: int = 0
    net: int = 0
    role: str = "all"  # all | worker | master | idle (entered by no rank)

    def __post_init__(self) -> None:
        if self.l1_miss > self.l1_access or self.l2_miss > self.l1_miss:
            raise InvalidSpec(f"inconsistent cache counters in {self}")
        if self.role not in ("all", "worker", "master", "idle"):
            raise InvalidSpec(f"unknown region role {self.role!r}")


def profile(
    ins: int,
    mem: Fraction = Fraction(1, 4),
    l1: Fraction = Fraction(1, 16),
    l2: Fraction = Fraction(1, 8),
    cpi: Fraction = Fraction(1),
    disk: int = 0,
    net: int = 0,
    role: str = "all",
) -> RegionProfile:
    """Build a profile from rates; every derived counter must come out integral.

    ``cpi`` is the cost per instruction before L2 miss penalties.
    """
    l1_access = ins * Fraction(mem)
    l1_miss = l1_access * Fraction(l1)
    l2_miss = l1_miss * Fraction(l2)
    cycles = ins * Fraction(cpi)
    for name, v in (("l1_access", l1_access), ("l1_miss", l1_miss), ("l2_miss", l2_miss), ("cycles", cycles)):
        if v.denominator != 1:
            raise InvalidSpec(f"{name} = {v} is not integral for ins={ins}")
    return RegionProfile(ins, int(l1_access), int(l1_miss), int(l2_miss), int(cycles), disk, net, role)


@dataclass(frozen=True)
class Shape:
    """Base program: tree (in sibling order), per-region profiles, process roles."""

    name: str
    regions: tuple[tuple[int, str, Optional[int]], ...]
    profiles: Mapping[int, RegionProfile]
    ranks: int = 8
    masters: frozenset[int] = frozenset()

    def tree(self) -> RegionTree:
        return RegionTree.build(self.regions)

    def roles(self) -> tuple[str, ...]:
        return tuple("master" if r in self.masters else "worker" for r in range(self.ranks))


@dataclass(frozen=True)
class ImbalancedRegion:
    region: int
    ranks: frozenset[int]
    intensity: float = 3.0


@dataclass(frozen=True)
class HeavyRegion:
    region: int
    metric: MetricKind
    intensity: float = 10.0


@dataclass(frozen=True)
class CompositeImbalance:
    regions: tuple[int, ...]
    ranks: frozenset[int]
    intensity: float = 3.0


Plant = Union[ImbalancedRegion, HeavyRegion, CompositeImbalance]

HEAVY_METRICS = {
    MetricKind.L1_MISS_RATE: "a1",
    MetricKind.L2_MISS_RATE: "a2",
    MetricKind.DISK_BYTES: "a3",
    MetricKind.NETWORK_BYTES: "a4",
    MetricKind.INSTRUCTIONS: "a5",
}


@dataclass(frozen=True)
class PlantSpec:
    shape: Shape
    plants: tuple[Plant, ...] = ()
    seed: int = 0
    noise: float = 0.01
    name: str = ""


@dataclass(frozen=True)
class GroundTruth:
    """What the analyzer has to report for a generated profile.

    An empty dissimilarity_cccr means the processes must form one cluster.
    """

    dissimilarity_ccr: frozenset[int] = frozenset()
    dissimilarity_cccr: frozenset[int] = frozenset()
    dissimilarity_causes: frozenset[str] = frozenset()
    composite_width: Optional[int] = None
    disparity_ccr: frozenset[int] = frozenset()
    disparity_cccr: frozenset[int] = frozenset()
    disparity_causes: frozenset[str] = frozenset()
    excluded_ranks: frozenset[int] = frozenset()

    def to_dict(self) -> dict:
        return {
            "dissimilarity": {
                "ccr": sorted(self.dissimilarity_ccr),
                "cccr": sorted(self.dissimilarity_cccr),
                "causes": sorted(self.dissimilarity_causes),
                "composite_width": self.composite_width,
            },
            "disparity": {
                "ccr": sorted(self.disparity_ccr),
                "cccr": sorted(self.disparity_cccr),
                "causes": sorted(self.disparity_causes),
            },
            "excluded_ranks": sorted(self.excluded_ranks),
        }


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_spec(spec: PlantSpec) -> RegionTree:
    shape = spec.shape
    try:
        tree = shape.tree()
    except ValueError as exc:
        raise InvalidSpec(f"shape {shape.name!r}: {exc}") from None
    if shape.ranks < 1:
        raise InvalidSpec("a shape needs at least one rank")
    if set(shape.profiles) != set(tree.ids()):
        raise InvalidSpec("shape must give a profile for every region, root included")
    if not 0 <= spec.noise < 0.05:
        raise InvalidSpec("noise must be in [0, 0.05)")
    workers = frozenset(r for r in range(shape.ranks) if r not in shape.masters)

    def check_ranks(ranks: frozenset[int]) -> None:
        if not ranks:
            raise InvalidSpec("affected ranks must be non-empty")
        if not ranks < workers:
            raise InvalidSpec(f"affected ranks {sorted(ranks)} must be a proper subset of the workers")

    def check_region(rid: int) -> None:
        if rid not in tree or rid == tree.root:
            raise InvalidSpec(f"region {rid} is not a code region of shape {shape.name!r}")
        # scaling a region that does no work of its own would plant nothing
        if shape.profiles[rid].ins == 0:
            raise InvalidSpec(f"region {rid} does no work of its own in shape {shape.name!r}")

    top = tree.top_level()
    for plant in spec.plants:
        if not plant.intensity > 1:
            raise InvalidSpec(f"intensity must exceed 1, got {plant.intensity}")
        if isinstance(plant, ImbalancedRegion):
            check_region(plant.region)
            check_ranks(frozenset(plant.ranks))
        elif isinstance(plant, HeavyRegion):
            check_region(plant.region)
            if plant.metric not in HEAVY_METRICS:
                raise InvalidSpec(f"cannot drive {plant.metric.value} high")
        elif isinstance(plant, CompositeImbalance):
            check_ranks(frozenset(plant.ranks))
            members = tuple(plant.regions)
            if len(members) < 2 or any(r not in top for r in members):
                raise InvalidSpec("a composite needs two or more depth-1 regions")
            for r in members:
                check_region(r)
            start = top.index(members[0])
            if top[start:start + len(members)] != members:
                raise InvalidSpec(f"composite members {members} are not adjacent siblings")
            if start % len(members):
                raise InvalidSpec(f"composite {members} must start at a multiple of its width")
        else:
            raise InvalidSpec(f"unknown plant {plant!r}")
    return tree


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _scale(v: int, k: float) -> int:
    return int(round(v * k))


def _heavy(p: RegionProfile, metric: MetricKind, k: float) -> RegionProfile:
    if metric is MetricKind.INSTRUCTIONS:
        return replace(
            p, ins=_scale(p.ins, k), l1_access=_scale(p.l1_access, k), l1_miss=_scale(p.l1_miss, k),
            l2_miss=_scale(p.l2_miss, k), cycles=_scale(p.cycles, k),
        )
    if metric is MetricKind.L1_MISS_RATE:
        l1_miss = min(p.l1_access, _scale(p.l1_miss, k))
        ratio = l1_miss / p.l1_miss if p.l1_miss else 0
        return replace(p, l1_miss=l1_miss, l2_miss=min(l1_miss, _scale(p.l2_miss, ratio)))
    if metric is MetricKind.L2_MISS_RATE:
        return replace(p, l2_miss=min(p.l1_miss, _scale(p.l2_miss, k)))
    if metric is MetricKind.DISK_BYTES:
        return replace(p, disk=_scale(p.disk or DEFAULT_DISK, k))
    if metric is MetricKind.NETWORK_BYTES:
        return replace(p, net=_scale(p.net or DEFAULT_NET, k))
    raise InvalidSpec(f"cannot drive {metric.value} high")


def _runs_on(p: RegionProfile, role: str) -> bool:
    return p.role == "all" or p.role == role


def _sample(c: dict[str, int]) -> MetricSample:
    cycles = c["cycles"] + c["l2_miss"] * L2_PENALTY
    cpu = cycles / CLOCK_HZ
    io = c["disk"] / DISK_BW
    mpi = c["net"] / NET_BW
    return MetricSample(
        wall_time=cpu + io + mpi,
        cpu_time=cpu,
        cycles=cycles,
        instructions=c["ins"],
        l1_miss=c["l1_miss"],
        l1_access=c["l1_access"],
        l2_miss=c["l2_miss"],
        l2_access=c["l1_miss"],
        mpi_time=mpi,
        mpi_bytes=c["net"],
        disk_bytes=c["disk"],
    )


_COUNTERS = ("ins", "l1_access", "l1_miss", "l2_miss", "cycles", "disk", "net")


def generate(spec: PlantSpec) -> tuple[ProfileDataset, GroundTruth]:
    tree = validate_spec(spec)
    shape = spec.shape
    roles = shape.roles()
    rng = random.Random(spec.seed)
    base = [int(round(UNITS * (1 + rng.uniform(-spec.noise, spec.noise)))) for _ in range(shape.ranks)]

    profiles = dict(shape.profiles)
    for plant in spec.plants:
        if isinstance(plant, HeavyRegion):
            profiles[plant.region] = _heavy(profiles[plant.region], plant.metric, plant.intensity)

    factor: dict[tuple[int, int], float] = {}
    for plant in spec.plants:
        if isinstance(plant, (ImbalancedRegion, CompositeImbalance)):
            members = (plant.region,) if isinstance(plant, ImbalancedRegion) else plant.regions
            for rid in members:
                for rank in plant.ranks:
                    factor[(rank, rid)] = factor.get((rank, rid), 1.0) * plant.intensity

    samples = {}
    # children before parents so inclusive sums can be accumulated
    post = list(reversed(_preorder(tree)))
    for rank in range(shape.ranks):
        incl: dict[int, dict[str, int]] = {}
        ran: dict[int, bool] = {}
        for rid in post:
            p = profiles[rid]
            here = _runs_on(p, roles[rank])
            units = int(round(base[rank] * factor.get((rank, rid), 1.0))) if here else 0
            c = {k: getattr(p, k) * units for k in _COUNTERS}
            executed = here
            for child in tree.children(rid):
                executed = executed or ran[child]
                for k in _COUNTERS:
                    c[k] += incl[child][k]
            incl[rid] = c
            ran[rid] = executed
            samples[(rank, rid)] = _sample(c) if executed else MetricSample.not_executed()

    dataset = ProfileDataset(tree, roles, samples, spec.name or shape.name)
    return dataset, ground_truth(spec, tree)


def _preorder(tree: RegionTree) -> list[int]:
    out, stack = [], [tree.root]
    while stack:
        rid = stack.pop()
        out.append(rid)
        stack.extend(reversed(tree.children(rid)))
    return out


def ground_truth(spec: PlantSpec, tree: Optional[RegionTree] = None) -> GroundTruth:
    """Expected findings, read straight off the plants."""
    tree = tree or spec.shape.tree()
    d_ccr: set[int] = set()
    d_cccr: set[int] = set()
    width = None
    for plant in spec.plants:
        if isinstance(plant, ImbalancedRegion):
            d_ccr.add(plant.region)
            d_ccr.update(tree.ancestors(plant.region))
            d_cccr.add(plant.region)
        elif isinstance(plant, CompositeImbalance):
            d_ccr.update(plant.regions)
            d_cccr.update(plant.regions)
            width = len(plant.regions)
    # a planted region sitting above another planted region is not a core
    d_cccr = {r for r in d_cccr if not any(a in d_cccr for a in tree.descendants(r))}

    heavy = [p for p in spec.plants if isinstance(p, HeavyRegion)]
    p_ccr: set[int] = set()
    for plant in heavy:
        p_ccr.add(plant.region)
        p_ccr.update(tree.ancestors(plant.region))
    planted = {p.region for p in heavy}
    p_cccr = {r for r in planted if not any(d in planted for d in tree.descendants(r))}
    return GroundTruth(
        dissimilarity_ccr=frozenset(d_ccr),
        dissimilarity_cccr=frozenset(d_cccr),
        dissimilarity_causes=frozenset({"a5"}) if d_cccr else frozenset(),
        composite_width=width,
        disparity_ccr=frozenset(p_ccr),
        disparity_cccr=frozenset(p_cccr),
        disparity_causes=frozenset(HEAVY_METRICS[p.metric] for p in heavy),
        excluded_ranks=spec.shape.masters,
    )
