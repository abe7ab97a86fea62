"""Independent reference implementations used by the tests.

Each one is written the slow, obvious way and shares no code with the
package beyond plain data types.
"""

from __future__ import annotations

from itertools import combinations


def brute_distance(u, v) -> float:
    total = 0.0
    for a, b in zip(u, v):
        total += (a - b) * (a - b)
    return total ** 0.5


def _discerns(rows, decisions, attrs, subset) -> bool:
    """True when *subset* separates every pair that all of *attrs* separates
    and that carries different decisions."""
    idx = [attrs.index(a) for a in subset]
    n = len(rows)
    for i in range(n):
        for j in range(i + 1, n):
            if decisions[i] == decisions[j] or rows[i] == rows[j]:
                continue
            if all(rows[i][k] == rows[j][k] for k in idx):
                return False
    return True


def brute_reducts(attrs, rows, decisions):
    """Every subset of the attributes checked directly against the table.

    Returns (set of reducts, core).  The core is computed from its textbook
    definition: the attributes whose removal loses discernibility.
    """
    attrs = list(attrs)
    good = [
        frozenset(s)
        for size in range(len(attrs) + 1)
        for s in combinations(attrs, size)
        if _discerns(rows, decisions, attrs, s)
    ]
    reducts = {s for s in good if not any(t < s for t in good)}
    core = frozenset(a for a in attrs if not _discerns(rows, decisions, attrs, [b for b in attrs if b != a]))
    return reducts, core


def _wcss(groups) -> float:
    total = 0.0
    for g in groups:
        mean = sum(g) / len(g)
        total += sum((x - mean) ** 2 for x in g)
    return total


def exact_kmeans_1d(xs, k: int = 5):
    """Optimal 1-D clustering by trying every contiguous split of the sorted
    distinct values into min(k, distinct) groups.

    Returns (labels in input order, wcss).  Equal values never straddle a cut.
    """
    distinct = sorted(set(xs))
    g = min(k, len(distinct))
    best = None
    for cuts in combinations(range(1, len(distinct)), g - 1):
        bounds = [0, *cuts, len(distinct)]
        label_of = {}
        for lab in range(g):
            for v in distinct[bounds[lab]:bounds[lab + 1]]:
                label_of[v] = lab
        groups = [[x for x in xs if label_of[x] == lab] for lab in range(g)]
        cost = _wcss(groups)
        if best is None or cost < best[0] - 1e-15:
            best = (cost, [label_of[x] for x in xs])
    return best[1], best[0]


def wcss_of(xs, labels) -> float:
    groups = {}
    for x, lab in zip(xs, labels):
        groups.setdefault(lab, []).append(x)
    return _wcss(groups.values())


def zero_and_compare(vectors, regions, cluster, rid):
    """Cluster once with every component and once with *rid* zeroed; used to
    confirm a single region explains a split."""
    full = cluster(vectors)
    i = regions.index(rid)
    zeroed = {r: tuple(0.0 if k == i else x for k, x in enumerate(v)) for r, v in vectors.items()}
    return full, cluster(zeroed)
