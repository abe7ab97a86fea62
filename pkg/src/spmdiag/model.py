"""Code-region tree, raw profile samples and the metrics derived from them.

Every region measurement is inclusive: a parent's counters and timers
already contain the activity of its nested children.  The root node stands
for the whole program and is not itself a code region, so performance
vectors and severity rankings only ever cover non-root regions.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, fields
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)


class ModelError(ValueError):
    pass


class UnsupportedKind(ModelError):
    pass


class UnknownRank(ModelError):
    pass


class UnknownRegion(ModelError):
    pass


class ZeroProgramTime(ModelError):
    pass


class AllRanksExcluded(ModelError):
    pass


class InvalidSample(ModelError):
    pass


class MetricKind(enum.Enum):
    WALL_TIME = "wall"
    CPU_TIME = "cpu"
    CPI = "cpi"
    L1_MISS_RATE = "l1_miss_rate"
    L2_MISS_RATE = "l2_miss_rate"
    DISK_BYTES = "disk_bytes"
    NETWORK_BYTES = "network_bytes"
    INSTRUCTIONS = "instructions"
    MPI_TIME = "mpi_time"
    CRNM = "crnm"

    @property
    def derived(self) -> bool:
        return self in _DERIVED

    @classmethod
    def parse(cls, text: str) -> "MetricKind":
        try:
            return cls(text)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown metric {text!r} (choose from {choices})") from None


_DERIVED = frozenset(
    {MetricKind.CPI, MetricKind.L1_MISS_RATE, MetricKind.L2_MISS_RATE, MetricKind.CRNM}
)

# raw kinds map straight onto a MetricSample field
_RAW_FIELD = {
    MetricKind.WALL_TIME: "wall_time",
    MetricKind.CPU_TIME: "cpu_time",
    MetricKind.DISK_BYTES: "disk_bytes",
    MetricKind.NETWORK_BYTES: "mpi_bytes",
    MetricKind.INSTRUCTIONS: "instructions",
    MetricKind.MPI_TIME: "mpi_time",
}

# (numerator, denominator) for ratio kinds
_RATIO_FIELDS = {
    MetricKind.CPI: ("cycles", "instructions"),
    MetricKind.L1_MISS_RATE: ("l1_miss", "l1_access"),
    MetricKind.L2_MISS_RATE: ("l2_miss", "l2_access"),
}


# ---------------------------------------------------------------------------
# region tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionNode:
    id: int
    label: str
    parent: int | None
    children: tuple[int, ...] = ()
    depth: int = 0


@dataclass(frozen=True)
class TreeError:
    code: str  # DuplicateId | OrphanNode | DepthMismatch | MultipleRoots | MissingRoot
    region: int | None
    detail: str = ""

    def __str__(self) -> str:
        where = "" if self.region is None else f" (region {self.region})"
        return f"{self.code}{where}: {self.detail}" if self.detail else f"{self.code}{where}"


class TreeValidationError(ModelError):
    def __init__(self, errors: Sequence[TreeError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class RegionTree:
    """Regions in the order they were declared plus the id of the whole-program root.

    Use :meth:`build` to derive children and depths from parent links; the raw
    constructor accepts arbitrary node lists so malformed trees can still be
    handed to :func:`validate_tree`.
    """

    regions: tuple[RegionNode, ...]
    root: int

    @classmethod
    def build(cls, spec: Iterable[tuple[int, str, int | None]]) -> "RegionTree":
        """Build a tree from ``(id, label, parent)`` triples in source order."""
        triples = list(spec)
        roots = [rid for rid, _, parent in triples if parent is None]
        children: dict[int, list[int]] = {rid: [] for rid, _, _ in triples}
        for rid, _, parent in triples:
            if parent is not None and parent in children:
                children[parent].append(rid)
        depth: dict[int, int] = {}
        if len(roots) == 1:
            stack = [(roots[0], 0)]
            while stack:
                rid, d = stack.pop()
                if rid in depth:
                    continue
                depth[rid] = d
                stack.extend((c, d + 1) for c in children[rid])
        nodes = tuple(
            RegionNode(rid, label, parent, tuple(children[rid]), depth.get(rid, -1))
            for rid, label, parent in triples
        )
        tree = cls(nodes, roots[0] if roots else -1)
        errors = validate_tree(tree)
        if errors:
            raise TreeValidationError(errors)
        return tree

    # id -> node lookup, built on first use
    @property
    def _index(self) -> Mapping[int, RegionNode]:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = MappingProxyType({n.id: n for n in self.regions})
            object.__setattr__(self, "_index_cache", cache)
        return cache

    def node(self, rid: int) -> RegionNode:
        try:
            return self._index[rid]
        except KeyError:
            raise UnknownRegion(f"region {rid} is not in the tree") from None

    def __contains__(self, rid: object) -> bool:
        return rid in self._index

    def ids(self) -> list[int]:
        return sorted(self._index)

    def code_regions(self) -> list[int]:
        """All non-root region ids, ascending."""
        return [rid for rid in self.ids() if rid != self.root]

    def children(self, rid: int) -> tuple[int, ...]:
        return self.node(rid).children

    def depth(self, rid: int) -> int:
        return self.node(rid).depth

    def is_leaf(self, rid: int) -> bool:
        return not self.node(rid).children

    def top_level(self) -> tuple[int, ...]:
        """Depth-1 regions in sibling (source) order."""
        return self.node(self.root).children

    def at_depth(self, depth: int) -> list[int]:
        return [n.id for n in self.regions if n.depth == depth]

    def max_depth(self) -> int:
        return max(n.depth for n in self.regions)

    def ancestors(self, rid: int) -> list[int]:
        """Non-root ancestors, nearest first."""
        out = []
        parent = self.node(rid).parent
        while parent is not None and parent != self.root:
            out.append(parent)
            parent = self.node(parent).parent
        return out

    def descendants(self, rid: int) -> list[int]:
        out: list[int] = []
        stack = list(reversed(self.node(rid).children))
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self.node(cur).children))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegionTree):
            return NotImplemented
        return self.root == other.root and self.regions == other.regions

    def __hash__(self) -> int:
        return hash((self.root, self.regions))


def validate_tree(tree: RegionTree) -> list[TreeError]:
    """Return every structural violation found in *tree* (empty list means valid).

    The result is sorted so it does not depend on the storage order of the
    region list.
    """
    errors: set[TreeError] = set()
    seen: dict[int, RegionNode] = {}
    for node in tree.regions:
        if node.id in seen:
            errors.add(TreeError("DuplicateId", node.id, "id declared more than once"))
        else:
            seen[node.id] = node

    roots = sorted(n.id for n in seen.values() if n.parent is None)
    if not roots:
        errors.add(TreeError("MissingRoot", None, "no node without a parent"))
    elif len(roots) > 1:
        for rid in roots:
            errors.add(TreeError("MultipleRoots", rid, "node has no parent"))
    elif roots[0] != tree.root:
        errors.add(TreeError("MultipleRoots", roots[0], f"declared root is {tree.root}"))

    # a region may appear under exactly one parent, and that must be its own parent
    listed_under: dict[int, list[int]] = {}
    for node in seen.values():
        for child in node.children:
            listed_under.setdefault(child, []).append(node.id)
    for node in seen.values():
        if node.parent is None:
            if node.id in listed_under:
                errors.add(TreeError("OrphanNode", node.id, "root listed as a child"))
            continue
        if node.parent not in seen:
            errors.add(TreeError("OrphanNode", node.id, f"parent {node.parent} does not exist"))
            continue
        owners = listed_under.get(node.id, [])
        if owners != [node.parent]:
            errors.add(
                TreeError("OrphanNode", node.id, f"listed under {sorted(owners)}, parent is {node.parent}")
            )
    for child, owners in listed_under.items():
        if child not in seen:
            for owner in owners:
                errors.add(TreeError("OrphanNode", owner, f"child {child} does not exist"))

    # depths, walking down from the unique root; anything unreachable sits on a cycle
    if len(roots) == 1 and roots[0] in seen:
        reached: set[int] = set()
        stack = [(roots[0], 0)]
        while stack:
            rid, expected = stack.pop()
            if rid in reached or rid not in seen:
                continue
            reached.add(rid)
            node = seen[rid]
            if node.depth != expected:
                errors.add(TreeError("DepthMismatch", rid, f"depth {node.depth}, expected {expected}"))
            stack.extend(
                (c, expected + 1) for c in node.children if c in seen and seen[c].parent == rid
            )
        for rid in seen:
            if rid not in reached and not any(e.region == rid for e in errors):
                errors.add(TreeError("OrphanNode", rid, "not reachable from the root"))
    return sorted(errors, key=lambda e: (e.code, -1 if e.region is None else e.region, e.detail))


# ---------------------------------------------------------------------------
# samples and datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSample:
    wall_time: float = 0.0
    cpu_time: float = 0.0
    cycles: int = 0
    instructions: int = 0
    l1_miss: int = 0
    l1_access: int = 0
    l2_miss: int = 0
    l2_access: int = 0
    mpi_time: float = 0.0
    mpi_bytes: int = 0
    disk_bytes: int = 0
    executed: bool = True

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name == "executed":
                continue
            value = getattr(self, f.name)
            if value < 0:
                raise InvalidSample(f"{f.name} is negative ({value})")
        if self.l1_miss > self.l1_access:
            raise InvalidSample(f"l1_miss {self.l1_miss} exceeds l1_access {self.l1_access}")
        if self.l2_miss > self.l2_access:
            raise InvalidSample(f"l2_miss {self.l2_miss} exceeds l2_access {self.l2_access}")

    @classmethod
    def not_executed(cls) -> "MetricSample":
        return cls(executed=False)


SAMPLE_FIELDS = tuple(f.name for f in fields(MetricSample) if f.name != "executed")


@dataclass(frozen=True)
class ProfileWarning:
    rank: int
    region: int
    message: str

    def __str__(self) -> str:
        return f"rank {self.rank}, region {self.region}: {self.message}"


def derived_metric(
    sample: MetricSample, kind: MetricKind, warnings: list[str] | None = None
) -> float:
    """Scalar value of *kind* for one sample.

    Ratios with a zero denominator evaluate to 0; the problem is appended to
    *warnings* when a list is given.
    """
    if kind is MetricKind.CRNM:
        raise UnsupportedKind("CRNM needs whole-program context; use crnm_vector")
    if kind in _RAW_FIELD:
        return float(getattr(sample, _RAW_FIELD[kind]))
    num_field, den_field = _RATIO_FIELDS[kind]
    den = getattr(sample, den_field)
    if den == 0:
        if sample.executed and warnings is not None:
            warnings.append(f"{kind.value}: {den_field} is zero, using 0")
        return 0.0
    return getattr(sample, num_field) / den


class ProfileDataset:
    """Immutable per-(rank, region) samples over a region tree.

    ``samples`` must cover every pair; regions that a rank never entered are
    carried as ``MetricSample.not_executed()``.
    """

    def __init__(
        self,
        tree: RegionTree,
        roles: Sequence[str],
        samples: Mapping[tuple[int, int], MetricSample],
        program: str = "",
    ):
        errors = validate_tree(tree)
        if errors:
            raise TreeValidationError(errors)
        if not roles:
            raise ModelError("a dataset needs at least one process")
        for role in roles:
            if role not in ("worker", "master"):
                raise ModelError(f"unknown process role {role!r}")
        region_ids = tree.ids()
        missing = [
            (rank, rid)
            for rank in range(len(roles))
            for rid in region_ids
            if (rank, rid) not in samples
        ]
        if missing:
            raise ModelError(f"missing samples for {missing[:5]}{'...' if len(missing) > 5 else ''}")
        extra = [key for key in samples if key[0] >= len(roles) or key[1] not in tree]
        if extra:
            raise ModelError(f"samples reference unknown rank/region pairs {sorted(extra)[:5]}")

        self.tree = tree
        self.roles = tuple(roles)
        self.program = program
        self._samples = MappingProxyType(dict(samples))

        warnings: list[ProfileWarning] = []
        for (rank, rid), sample in sorted(self._samples.items()):
            msgs: list[str] = []
            for kind in (MetricKind.CPI, MetricKind.L1_MISS_RATE, MetricKind.L2_MISS_RATE):
                derived_metric(sample, kind, msgs)
            warnings.extend(ProfileWarning(rank, rid, m) for m in msgs)
        self.warnings = tuple(warnings)
        for w in self.warnings:
            log.debug("profile warning: %s", w)

    @property
    def m(self) -> int:
        return len(self.roles)

    @property
    def n(self) -> int:
        return len(self.tree.code_regions())

    @property
    def ranks(self) -> range:
        return range(len(self.roles))

    @property
    def samples(self) -> Mapping[tuple[int, int], MetricSample]:
        return self._samples

    def masters(self) -> frozenset[int]:
        return frozenset(r for r, role in enumerate(self.roles) if role == "master")

    def sample(self, rank: int, region: int) -> MetricSample:
        self._check_rank(rank)
        if region not in self.tree:
            raise UnknownRegion(f"region {region} is not in the tree")
        return self._samples[(rank, region)]

    def _check_rank(self, rank: int) -> None:
        if not 0 <= rank < len(self.roles):
            raise UnknownRank(f"rank {rank} outside 0..{len(self.roles) - 1}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProfileDataset):
            return NotImplemented
        return (
            self.tree == other.tree
            and self.roles == other.roles
            and self.program == other.program
            and dict(self._samples) == dict(other._samples)
        )

    def __repr__(self) -> str:
        return f"ProfileDataset(program={self.program!r}, m={self.m}, n={self.n})"


# ---------------------------------------------------------------------------
# vectors and averages
# ---------------------------------------------------------------------------


def crnm_vector(dataset: ProfileDataset, rank: int) -> dict[int, float]:
    """CRNM of every region (root included) on one rank.

    CRNM = (region wall time / program wall time) * region CPI.  The root's
    value is therefore its own CPI.
    """
    dataset._check_rank(rank)
    program_wall = dataset.sample(rank, dataset.tree.root).wall_time
    if program_wall <= 0:
        raise ZeroProgramTime(f"rank {rank}: whole-program wall time is zero")
    out = {}
    for rid in dataset.tree.ids():
        sample = dataset.sample(rank, rid)
        if not sample.executed:
            out[rid] = 0.0
            continue
        out[rid] = (sample.wall_time / program_wall) * derived_metric(sample, MetricKind.CPI)
    return out


def metric_vector(
    dataset: ProfileDataset,
    rank: int,
    kind: MetricKind,
    region_filter: Iterable[int] | None = None,
) -> tuple[float, ...]:
    """Performance vector of one rank, components ordered by region id.

    Without a filter the vector spans every non-root region.
    """
    dataset._check_rank(rank)
    if region_filter is None:
        regions = dataset.tree.code_regions()
    else:
        regions = sorted(set(region_filter))
        for rid in regions:
            if rid not in dataset.tree:
                raise UnknownRegion(f"region {rid} is not in the tree")
    if kind is MetricKind.CRNM:
        crnm = crnm_vector(dataset, rank)
        return tuple(crnm[rid] for rid in regions)
    out = []
    for rid in regions:
        sample = dataset.sample(rank, rid)
        out.append(derived_metric(sample, kind) if sample.executed else 0.0)
    return tuple(out)


def included_ranks(dataset: ProfileDataset, excluded_ranks: Iterable[int] = ()) -> list[int]:
    excluded = set(excluded_ranks)
    for rank in excluded:
        dataset._check_rank(rank)
    ranks = [r for r in dataset.ranks if r not in excluded]
    if not ranks:
        raise AllRanksExcluded("every rank is excluded from the analysis")
    return ranks


def average_over_processes(
    dataset: ProfileDataset, kind: MetricKind, excluded_ranks: Iterable[int] = ()
) -> dict[int, float]:
    """Mean of *kind* per region over the non-excluded ranks, zeros included."""
    ranks = included_ranks(dataset, excluded_ranks)
    regions = dataset.tree.ids()
    totals = dict.fromkeys(regions, 0.0)
    for rank in ranks:
        vec = metric_vector(dataset, rank, kind, regions)
        for rid, value in zip(regions, vec):
            totals[rid] += value
    return {rid: totals[rid] / len(ranks) for rid in regions}
