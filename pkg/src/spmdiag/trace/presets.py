"""Shipped fixture shapes and plant specs.

Profiles are chosen so each metric's regional averages take a small, known
set of distinct values.  Two tricks keep the count down:

* a parent with zero self work and one busy child has exactly the child's
  counters, and four children with a quarter of a profile each sum to it;
* a region with twice the instructions, the same cycles and I/O time equal
  to its CPU time has twice the wall time at half the CPI, so its CRNM is
  bit-identical to the plain profile's while its instruction and I/O counts
  are not.  Halving the wall time while doubling the CPI works the same way,
  which lets small stall-bound regions top the CPI ranking at a low CRNM.

The design targets are recorded next to each shape.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction as F

from ..model import MetricKind
from .generator import (
    CompositeImbalance,
    HeavyRegion,
    ImbalancedRegion,
    PlantSpec,
    RegionProfile,
    Shape,
    profile,
)

NONE = RegionProfile()
IDLE = RegionProfile(role="idle")

# plain profile: 1.224M cycles per unit (CPI 1.195)
Y = profile(1_024_000, mem=F(1, 4), l1=F(1, 32), l2=F(1, 8))
# a quarter of Y; four of them sum to Y exactly
Z = profile(256_000, mem=F(1, 4), l1=F(1, 32), l2=F(1, 8))
# same CRNM as Y: 2x instructions, same cycles, disk time = CPU time
X_DISK = RegionProfile(
    ins=2_048_000, l1_access=512_000, l1_miss=16_000, l2_miss=1_000,
    cycles=1_024_000, disk=61_200,
)
# same CRNM as Y: 2x instructions, network time = CPU time
X_NET = RegionProfile(
    ins=2_048_000, l1_access=256_000, l1_miss=8_000, l2_miss=1_000,
    cycles=1_024_000, net=61_200,
)
# same CRNM as Z: a quarter of its instructions at twice its CPI (stall-bound
# setup code); four of them sum to half of Y's cycles at Y's CRNM
STALL = RegionProfile(ins=64_000, l1_access=16_384, l1_miss=512, l2_miss=64, cycles=140_200)
# same CRNM as Z at CPI ~6: tiny, disk time = CPU time, network = 2x CPU time
STALL_IO = RegionProfile(ins=2_560, l1_access=512, l1_miss=16, l2_miss=1, cycles=15_100, disk=765, net=1_530)
# same CRNM as Y: 4x instructions, 2x cycles, no I/O (cheap vectorised code)
X_CHEAP = RegionProfile(
    ins=4_096_000, l1_access=512_000, l1_miss=16_000, l2_miss=2_000,
    cycles=2_048_000,
)

# graded background: three levels in every attribute
A = Y
B = profile(1_280_000, mem=F(1, 4), l1=F(3, 64), l2=F(1, 5), disk=4096, net=4096)
C = profile(1_536_000, mem=F(1, 4), l1=F(1, 16), l2=F(1, 4), disk=8192, net=8192)
B2 = profile(2_048_000, mem=F(1, 4), l1=F(3, 64), l2=F(1, 5), net=4096)


def _flat(n: int) -> tuple:
    return ((0, "main", None),) + tuple((i, f"r{i}", 0) for i in range(1, n + 1))


def _shape(name, regions, profiles, ranks=8, masters=frozenset()) -> Shape:
    return Shape(name, tuple(regions), dict(profiles), ranks, frozenset(masters))


def flat_uniform(n: int = 8, ranks: int = 8) -> Shape:
    return _shape(f"flat{n}", _flat(n), {0: NONE, **{i: Y for i in range(1, n + 1)}}, ranks)


def nested_uniform(ranks: int = 8) -> Shape:
    # three distinct levels only (leaf, 2-leaf parent, 4-leaf grandparent)
    regions = [
        (0, "main", None),
        (1, "setup", 0), (2, "solve", 0), (3, "sweep", 2), (4, "kernel_a", 3), (5, "kernel_b", 3),
        (6, "update", 2), (7, "kernel_c", 6), (8, "kernel_d", 6), (9, "output", 0),
    ]
    profiles = {0: NONE, 1: Y, 2: NONE, 3: NONE, 4: Y, 5: Y, 6: NONE, 7: Y, 8: Y, 9: Y}
    return _shape("nested", regions, profiles, ranks)


def graded(n: int = 8, ranks: int = 8) -> Shape:
    # A, B, C cycling; C sits on 3, 6, 9, ...
    cycle = (A, B, C)
    return _shape(f"graded{n}", _flat(n), {0: NONE, **{i: cycle[(i - 1) % 3] for i in range(1, n + 1)}}, ranks)


# ST-like program.  Depth-1 order 1,2,3,8,9,10,13,14; 4-7 under 2; 11,12 under 14.
ST_REGIONS = (
    (0, "main", None),
    (1, "read_input", 0),
    (2, "setup_grid", 0),
    (4, "grid_x", 2), (5, "grid_y", 2), (6, "grid_z", 2), (7, "grid_halo", 2),
    (3, "init_fields", 0),
    (8, "write_checkpoint", 0),
    (9, "exchange", 0),
    (10, "reduce", 0),
    (13, "log_stats", 0),
    (14, "timestep", 0),
    (11, "stencil", 14), (12, "error_path", 14),
)


def st(ranks: int = 8) -> Shape:
    """Targets, averaged over ranks:

    CRNM  5 levels: 0 (12) < Z (4-7, 13) < Y (1, 2, 3, 9, 10) < 8 < 11 = 14
    disk  4 levels: 0 < 13 < 1 < 8          network 2 levels
    L1    2 levels                          L2 4 levels: 0 < 1/16 (1, 8, 13) < 1/8 < 11 = 14
    wall  1, 3, 9 and 10 join 8, 11 and 14 in the top classes
    CPI   the small stall-bound regions 2, 4-7 and 13 top the CPI ranking, while
          8 (half of Y's CPI) and 11, 14 (long but efficient) stay below it
    """
    profiles = {
        0: NONE, 1: X_DISK, 2: NONE, 3: Y, 4: STALL, 5: STALL, 6: STALL, 7: STALL,
        8: replace(X_DISK, disk=8_000),
        9: Y, 10: Y, 11: Y, 12: IDLE, 13: STALL_IO, 14: NONE,
    }
    return _shape("st", ST_REGIONS, profiles, ranks)


def st_fine(ranks: int = 8) -> Shape:
    """ST with one more level: 19 under 8 and 21 under 11 carry the work."""
    regions = list(ST_REGIONS)
    regions.insert(regions.index((8, "write_checkpoint", 0)) + 1, (19, "flush_buffers", 8))
    regions.append((21, "stencil_inner", 11))
    base = st(ranks).profiles
    profiles = {**base, 8: NONE, 19: base[8], 11: NONE, 21: base[11]}
    return _shape("st-fine", regions, profiles, ranks)


def npar1way(ranks: int = 8) -> Shape:
    """Twelve flat regions; region 5 retires as many instructions as the
    planted regions but cheaply, so its CRNM matches the A profile."""
    profiles = {
        0: NONE, 1: A, 2: B, 3: A, 4: C, 5: X_CHEAP, 6: C,
        7: A, 8: B, 9: C, 10: A, 11: B, 12: A,
    }
    return _shape("npar1way", _flat(12), profiles, ranks)


def mpibzip2(ranks: int = 8) -> Shape:
    """Rank 0 is a master running only regions 1-2; workers run 3-16."""
    cycle = (A, B2, X_NET)
    profiles = {0: NONE, 1: replace(Y, role="master"), 2: replace(Y, role="master")}
    for i in range(3, 17):
        profiles[i] = replace(cycle[(i - 3) % 3], role="worker")
    # 6 is an A, 7 is an X_NET
    return _shape("mpibzip2", _flat(16), profiles, ranks, masters={0})


def with_children(n: int, parent: int, kids: tuple[int, ...], self_profile, ranks: int = 8) -> Shape:
    regions = list(_flat(n))
    at = regions.index((parent, f"r{parent}", 0)) + 1
    for k in reversed(kids):
        regions.insert(at, (k, f"r{k}", parent))
    profiles = {0: NONE, **{i: Y for i in range(1, n + 1)}, **{k: Y for k in kids}, parent: self_profile}
    return _shape(f"flat{n}-nest{parent}", regions, profiles, ranks)


# ---------------------------------------------------------------------------
# plant specs
# ---------------------------------------------------------------------------

HI = frozenset({4, 5, 6, 7})
ST_L2 = 3.1  # region 11 averages CRNM 0.41
ST_L2_OPTIMIZED = 1.2  # and 0.26 after the fix


def st_plants(region: int = 11, l2: float = ST_L2, disk_region: int = 8) -> tuple:
    # five behaviour groups: ranks 0-3 unchanged, 4..7 at 2x..5x
    groups = tuple(ImbalancedRegion(region, frozenset({r}), float(r - 2)) for r in (4, 5, 6, 7))
    return groups + (
        HeavyRegion(disk_region, MetricKind.DISK_BYTES, 10.0),
        HeavyRegion(region, MetricKind.L2_MISS_RATE, l2),
    )


def presets() -> dict[str, PlantSpec]:
    specs = [
        PlantSpec(flat_uniform(), (), seed=1, name="balanced"),
        PlantSpec(nested_uniform(), (), seed=2, name="balanced-nested"),
        PlantSpec(st(), st_plants(), seed=3, name="st"),
        PlantSpec(st_fine(), st_plants(21, disk_region=19), seed=4, name="st-fine"),
        PlantSpec(npar1way(), (
            HeavyRegion(3, MetricKind.INSTRUCTIONS, 4.0),
            HeavyRegion(12, MetricKind.INSTRUCTIONS, 4.0),
            HeavyRegion(12, MetricKind.NETWORK_BYTES, 10.0),
        ), seed=5, name="npar1way"),
        PlantSpec(mpibzip2(), (
            HeavyRegion(6, MetricKind.INSTRUCTIONS, 4.0),
            HeavyRegion(7, MetricKind.NETWORK_BYTES, 10.0),
        ), seed=6, name="mpibzip2"),
        PlantSpec(with_children(6, 3, (7, 8), Y), (ImbalancedRegion(3, HI, 3.0),), seed=7, name="imbalance-depth1"),
        PlantSpec(with_children(6, 4, (7, 8), NONE), (ImbalancedRegion(8, HI, 3.0),), seed=8, name="imbalance-nested"),
        PlantSpec(flat_uniform(8), (CompositeImbalance((1, 2), HI, 3.0),), seed=9, name="composite-pair"),
        PlantSpec(flat_uniform(9), (CompositeImbalance((1, 2, 3), HI, 3.0),), seed=10, name="composite-triple"),
        PlantSpec(graded(8), (HeavyRegion(3, MetricKind.L1_MISS_RATE, 4.0),), seed=11, name="heavy-l1"),
        PlantSpec(graded(8), (HeavyRegion(6, MetricKind.L2_MISS_RATE, 3.0),), seed=12, name="heavy-l2"),
        PlantSpec(graded(8), (HeavyRegion(3, MetricKind.DISK_BYTES, 10.0),), seed=13, name="heavy-disk"),
        PlantSpec(graded(8), (HeavyRegion(6, MetricKind.NETWORK_BYTES, 10.0),), seed=14, name="heavy-network"),
        PlantSpec(graded(8), (HeavyRegion(3, MetricKind.INSTRUCTIONS, 4.0),), seed=15, name="heavy-instructions"),
    ]
    return {s.name: s for s in specs}


def optimized_st(l2: float = ST_L2_OPTIMIZED, seed: int = 3) -> PlantSpec:
    """The ST program after the L2 fix: same shape, fewer L2 misses in region 11."""
    return PlantSpec(st(), st_plants(l2=l2), seed=seed, name="st-optimized")
