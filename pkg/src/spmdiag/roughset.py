"""Decision tables, discernibility matrices and reducts.

Reducts are found as minimal hitting sets of the non-empty matrix entries,
which is the same thing as the prime implicants of the discernibility
function written in conjunctive form.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Iterable, Sequence

MAX_ATTRIBUTES = 20


class RoughSetError(ValueError):
    pass


class TooManyAttributes(RoughSetError):
    pass


@dataclass(frozen=True)
class DecisionTable:
    objects: tuple[Hashable, ...]
    attributes: tuple[str, ...]
    values: tuple[tuple[Hashable, ...], ...]
    decisions: tuple[Hashable, ...]

    def __post_init__(self) -> None:
        n = len(self.objects)
        if len(set(self.objects)) != n:
            raise RoughSetError("object ids must be unique")
        if len(set(self.attributes)) != len(self.attributes):
            raise RoughSetError("attribute names must be unique")
        if len(self.values) != n or len(self.decisions) != n:
            raise RoughSetError("every object needs one value row and one decision")
        for obj, row in zip(self.objects, self.values):
            if len(row) != len(self.attributes):
                raise RoughSetError(f"object {obj}: {len(row)} values for {len(self.attributes)} attributes")
            for value in row:
                _check_symbol(value, obj)
        for obj, d in zip(self.objects, self.decisions):
            _check_symbol(d, obj)

    @classmethod
    def from_rows(
        cls,
        attributes: Sequence[str],
        rows: Iterable[tuple[Hashable, Sequence[Hashable], Hashable]],
    ) -> "DecisionTable":
        objects, values, decisions = [], [], []
        for obj, row, d in rows:
            objects.append(obj)
            values.append(tuple(row))
            decisions.append(d)
        return cls(tuple(objects), tuple(attributes), tuple(values), tuple(decisions))

    def column(self, attribute: str) -> tuple[Hashable, ...]:
        i = self.attributes.index(attribute)
        return tuple(row[i] for row in self.values)

    def row(self, obj: Hashable) -> dict[str, Hashable]:
        i = self.objects.index(obj)
        return dict(zip(self.attributes, self.values[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", *self.attributes, "decision"])
        for obj, row, d in zip(self.objects, self.values, self.decisions):
            writer.writerow([obj, *row, d])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DecisionTable":
        """Parse ``id,<attributes...>,decision`` text; integer-looking cells become ints."""
        reader = csv.reader(io.StringIO(text))
        rows = [r for r in reader if r and any(cell.strip() for cell in r)]
        if not rows:
            raise RoughSetError("empty decision table")
        header = [h.strip() for h in rows[0]]
        if len(header) < 2:
            raise RoughSetError("header needs an id column and a decision column")
        attributes = header[1:-1]
        out = []
        for lineno, cells in enumerate(rows[1:], start=2):
            if len(cells) != len(header):
                raise RoughSetError(f"line {lineno}: expected {len(header)} cells, got {len(cells)}")
            cells = [_symbol(c.strip()) for c in cells]
            out.append((cells[0], cells[1:-1], cells[-1]))
        return cls.from_rows(attributes, out)


def _symbol(text: str) -> Hashable:
    try:
        return int(text)
    except ValueError:
        return text


def _check_symbol(value: object, obj: Hashable) -> None:
    if isinstance(value, float):
        raise RoughSetError(f"object {obj}: continuous value {value!r}; discretise first")


@dataclass(frozen=True)
class DiscernibilityMatrix:
    """Upper triangle of the decision-relative discernibility matrix.

    ``entries[(i, j)]`` (``i < j``, positions in ``objects``) is the set of
    attributes separating objects i and j when their decisions differ, and
    the empty set otherwise.
    """

    objects: tuple[Hashable, ...]
    attributes: tuple[str, ...]
    entries: dict[tuple[int, int], frozenset[str]]

    def entry(self, i: int, j: int) -> frozenset[str]:
        if i == j:
            return frozenset()
        return self.entries[(min(i, j), max(i, j))]

    def entry_for(self, a: Hashable, b: Hashable) -> frozenset[str]:
        return self.entry(self.objects.index(a), self.objects.index(b))

    def nonempty(self) -> list[frozenset[str]]:
        return [e for _, e in sorted(self.entries.items()) if e]


@dataclass(frozen=True)
class InconsistencyReport:
    pairs: tuple[tuple[Hashable, Hashable], ...] = ()

    def __bool__(self) -> bool:
        return bool(self.pairs)


def build_matrix(table: DecisionTable) -> tuple[DiscernibilityMatrix, InconsistencyReport]:
    entries: dict[tuple[int, int], frozenset[str]] = {}
    clashes = []
    n = len(table.objects)
    for i in range(n):
        for j in range(i + 1, n):
            if table.decisions[i] == table.decisions[j]:
                entries[(i, j)] = frozenset()
                continue
            diff = frozenset(
                a for a, x, y in zip(table.attributes, table.values[i], table.values[j]) if x != y
            )
            if not diff:
                clashes.append((table.objects[i], table.objects[j]))
            entries[(i, j)] = diff
    matrix = DiscernibilityMatrix(table.objects, table.attributes, entries)
    return matrix, InconsistencyReport(tuple(clashes))


def covers(subset: Iterable[str], matrix: DiscernibilityMatrix) -> bool:
    chosen = frozenset(subset)
    return all(entry & chosen for entry in matrix.entries.values() if entry)


@dataclass(frozen=True)
class ReductSet:
    reducts: tuple[frozenset[str], ...]
    core: frozenset[str]

    def smallest(self) -> frozenset[str]:
        """First reduct in (size, attribute order) order."""
        return self.reducts[0]


def compute_reducts(matrix: DiscernibilityMatrix) -> ReductSet:
    """All minimal attribute subsets hitting every non-empty entry.

    Subsets are tried by increasing size and in attribute order within a
    size, so the reducts come out sorted the same way.
    """
    attrs = matrix.attributes
    if len(attrs) > MAX_ATTRIBUTES:
        raise TooManyAttributes(f"{len(attrs)} attributes; exhaustive search stops at {MAX_ATTRIBUTES}")
    clauses = set(matrix.nonempty())
    # absorption: a clause containing another clause adds no constraint
    minimal = [c for c in clauses if not any(o < c for o in clauses)]

    reducts: list[frozenset[str]] = []
    for size in range(len(attrs) + 1):
        for combo in combinations(attrs, size):
            cand = frozenset(combo)
            if any(r <= cand for r in reducts):
                continue
            if all(c & cand for c in minimal):
                reducts.append(cand)
    core = frozenset.intersection(*reducts) if reducts else frozenset()
    singletons = frozenset(next(iter(c)) for c in clauses if len(c) == 1)
    if core != singletons:
        raise RuntimeError(f"core mismatch: intersection {sorted(core)} vs singletons {sorted(singletons)}")
    return ReductSet(tuple(reducts), core)
