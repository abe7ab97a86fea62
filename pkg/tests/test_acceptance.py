"""One test per acceptance criterion.

Each test records a single PASS/FAIL line (echoed in the terminal summary)
and then asserts, so a failing criterion shows up both ways.  Time bounds
are checked alongside the result.
"""

from __future__ import annotations

import json
import random
import time
from pathlib import Path

from conftest import ACCEPTANCE, generated, load_reference_matrix, load_table
from oracles import brute_reducts, exact_kmeans_1d, wcss_of
from spmdiag.cli import main
from spmdiag.cluster import kmeans_severity, optics_cluster, partitions_equal
from spmdiag.diagnose import analyse_table
from spmdiag.locate import AnalysisConfig
from spmdiag.report import compare_metrics
from spmdiag.roughset import DecisionTable, build_matrix, compute_reducts
from spmdiag.trace import save_profile
from spmdiag.trace.presets import presets

ROOT = Path(__file__).resolve().parent.parent


def record(n: int, title: str, ok: bool, detail: str, elapsed: float, bound: float) -> None:
    in_time = elapsed < bound
    status = "PASS" if ok and in_time else "FAIL"
    ACCEPTANCE[str(n)] = f"[{status}] {n}. {title}: {detail} ({elapsed:.2f}s, bound {bound:g}s)"
    print(ACCEPTANCE[str(n)])
    assert ok, detail
    assert in_time, f"took {elapsed:.2f}s, bound {bound}s"


def matrix_entries(table: DecisionTable) -> dict:
    matrix, _ = build_matrix(table)
    objs = table.objects
    return {
        (objs[i], objs[j]): matrix.entry(i, j)
        for i in range(len(objs))
        for j in range(i + 1, len(objs))
        if matrix.entry(i, j)
    }


def test_criterion_1_weather_table():
    t0 = time.perf_counter()
    table = load_table("weather")
    entries_ok = matrix_entries(table) == load_reference_matrix("weather_matrix")
    rs = compute_reducts(build_matrix(table)[0])
    reducts_ok = set(rs.reducts) == {frozenset({"a1", "a2"}), frozenset({"a1", "a3"})}
    core_ok = rs.core == {"a1"}
    record(1, "weather table matrix, reducts and core", entries_ok and reducts_ok and core_ok,
           f"matrix {'matches' if entries_ok else 'differs'}, reducts {sorted(map(sorted, rs.reducts))}, "
           f"core {sorted(rs.core)}", time.perf_counter() - t0, 1.0)


def test_criterion_2_st_dissimilarity_table():
    t0 = time.perf_counter()
    table = load_table("st_dissimilarity")
    computed = matrix_entries(table)
    reference = load_reference_matrix("st_dissimilarity_matrix")
    diff = sorted(k for k in set(computed) | set(reference) if computed.get(k) != reference.get(k))
    core = compute_reducts(build_matrix(table)[0]).core
    detail = f"core {sorted(core)}; matrix cells differing from the reference matrix: {diff or 'none'}"
    if diff:
        detail += " (the reference cells drop a1 although the table separates those objects on a1)"
    record(2, "8-object dissimilarity table", not diff and core == {"a5"}, detail, time.perf_counter() - t0, 1.0)


def test_criterion_3_st_disparity_table():
    t0 = time.perf_counter()
    result = analyse_table(load_table("st_disparity"))
    smallest = result.reducts.smallest()
    causes = result.reducts.core | smallest
    ok = causes == {"a2", "a3"} == result.causes
    record(3, "14-object disparity table", ok,
           f"core {sorted(result.reducts.core)} + smallest reduct {sorted(smallest)} = {sorted(causes)}; "
           f"inconsistent pairs {list(result.inconsistency.pairs)}", time.perf_counter() - t0, 1.0)


def test_criterion_4_reduct_oracle():
    t0 = time.perf_counter()
    rng = random.Random(20240601)
    agree = 0
    for _ in range(200):
        n_obj, n_attr = rng.randint(1, 6), rng.randint(1, 6)
        attrs = tuple(f"a{i + 1}" for i in range(n_attr))
        rows = [(i, tuple(rng.randint(0, 2) for _ in attrs), rng.randint(0, 2)) for i in range(n_obj)]
        table = DecisionTable.from_rows(attrs, rows)
        rs = compute_reducts(build_matrix(table)[0])
        want, core = brute_reducts(attrs, table.values, table.decisions)
        agree += set(rs.reducts) == want and rs.core == core
    record(4, "reducts against the brute-force subset oracle", agree == 200,
           f"{agree}/200 tables agree", time.perf_counter() - t0, 30.0)


def test_criterion_5_clustering_properties():
    t0 = time.perf_counter()
    rng = random.Random(77)

    scale_ok = 0
    for _ in range(100):
        d, m = rng.randint(1, 6), rng.randint(1, 12)
        vs = [tuple(rng.choice([rng.uniform(0, 100), rng.uniform(0, 1)]) for _ in range(d)) for _ in range(m)]
        c = rng.uniform(0.1, 10)
        scale_ok += partitions_equal(optics_cluster([tuple(c * x for x in v) for v in vs]), optics_cluster(vs))

    one_cluster_fail = []
    for m in range(1, 17):
        for _ in range(3):
            v = tuple(rng.uniform(0.01, 1e3) for _ in range(rng.randint(1, 6)))
            if len(optics_cluster([v] * m)) != 1:
                one_cluster_fail.append(m)
    one_cluster_fail = sorted(set(one_cluster_fail))

    order_ok = exact = 0
    worst_gap = 0.0
    for _ in range(100):
        xs = [rng.choice([rng.uniform(0, 1), rng.uniform(0, 10), 0.5]) for _ in range(rng.randint(1, 12))]
        sev = kmeans_severity(xs)
        ours = [sev[i] for i in range(len(xs))]
        best, cost = exact_kmeans_1d(xs)
        pairs = [(a, b) for a in range(len(xs)) for b in range(len(xs)) if xs[a] < xs[b]]
        same_order = (
            all(ours[a] <= ours[b] for a, b in pairs)
            and all(best[a] <= best[b] for a, b in pairs)
            and ours[xs.index(min(xs))] == best[xs.index(min(xs))] == 0
            and ours[xs.index(max(xs))] == max(ours)
        )
        order_ok += same_order
        gap = wcss_of(xs, ours) - cost
        exact += gap <= 1e-9
        worst_gap = max(worst_gap, gap)

    ok = scale_ok == 100 and not one_cluster_fail and order_ok == 100
    detail = (
        f"(a) scale invariance {scale_ok}/100; "
        f"(b) identical vectors one cluster for m=1..16 except m={one_cluster_fail or 'none'}; "
        f"(c) label order {order_ok}/100, exact optimum reached {exact}/100, worst WCSS gap {worst_gap:.3g}"
    )
    if one_cluster_fail:
        detail += "; with count_threshold=1 a lone pair has one neighbour each and both stay isolated"
    record(5, "clustering properties", ok, detail, time.perf_counter() - t0, 30.0)


def _analyze_machine(path: Path, truth, capsys) -> tuple[int, dict]:
    argv = ["analyze", str(path), "--format", "machine"]
    if truth.excluded_ranks:
        argv += ["--exclude-ranks", ",".join(map(str, sorted(truth.excluded_ranks)))]
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_criterion_6_planted_suite(tmp_path, capsys):
    t0 = time.perf_counter()
    specs = presets()
    misses = []
    for name, spec in specs.items():
        ds, truth = generated(name)
        path = tmp_path / f"{name}.json"
        path.write_bytes(save_profile(ds))
        code, doc = _analyze_machine(path, truth, capsys)
        got = (
            set(doc["dissimilarity"]["cccr"]), set(doc["dissimilarity"]["causes"]),
            set(doc["disparity"]["cccr"]), set(doc["disparity"]["causes"]),
        )
        want = (truth.dissimilarity_cccr, truth.dissimilarity_causes, truth.disparity_cccr, truth.disparity_causes)
        if got != want:
            misses.append(name)
    ok = not misses and len(specs) >= 10
    record(6, "planted bottlenecks recovered through the CLI", ok,
           f"{len(specs) - len(misses)}/{len(specs)} specs match their ground truth"
           + (f"; misses {misses}" if misses else ""), time.perf_counter() - t0, 60.0)


def test_criterion_7_metric_comparison():
    t0 = time.perf_counter()
    ds, _ = generated("st")
    doc = compare_metrics(ds)
    rows = {r["metric"]: set(r["ccr"]) for r in doc["disparity"]}
    crnm, cpi, wall = rows["crnm"], rows["cpi"], rows["wall"]
    st_ok = crnm < wall and bool(crnm - cpi)
    unequal = []
    for name in presets():
        ds, truth = generated(name)
        cmp = compare_metrics(ds, AnalysisConfig(excluded_ranks=truth.excluded_ranks))
        cccr = {r["metric"]: r["cccr"] for r in cmp["dissimilarity"]}
        if cccr["cpu"] != cccr["wall"]:
            unequal.append(name)
    record(7, "metric comparison", st_ok and not unequal,
           f"CRNM {sorted(crnm)} < wall {sorted(wall)}; CRNM-only vs CPI {sorted(crnm - cpi)}; "
           f"cpu/wall cccr equal on {len(presets()) - len(unequal)}/{len(presets())} fixtures",
           time.perf_counter() - t0, 10.0)


def test_criterion_8_not_reproduced_is_documented():
    t0 = time.perf_counter()
    readme = (ROOT / "README.md").read_text()
    section = "## What is not reproduced"
    ok = section in readme
    body = readme.split(section, 1)[1] if ok else ""
    ok = ok and "speedup" in body and "hardware-counter magnitudes" in body
    # no test asserts a speedup or an absolute counter magnitude as a measurement
    tests = " ".join(p.read_text() for p in (ROOT / "tests").glob("test_*.py") if p.name != "test_acceptance.py")
    ok = ok and "speedup" not in tests.lower()
    record(8, "desk-scale limits documented, never asserted", ok,
           "README states them; no test asserts them" if ok else "README section missing or a test asserts a speedup",
           time.perf_counter() - t0, 1.0)


def test_criterion_9_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    differ = []
    for name in presets():
        ds, truth = generated(name)
        path = tmp_path / f"{name}.json"
        path.write_bytes(save_profile(ds))
        outs = []
        for i in range(2):
            out = tmp_path / f"{name}.{i}.report.json"
            argv = ["analyze", str(path), "--format", "machine", "--out", str(out)]
            if truth.excluded_ranks:
                argv += ["--exclude-ranks", ",".join(map(str, sorted(truth.excluded_ranks)))]
            main(argv)
            outs.append(out.read_bytes())
        if outs[0] != outs[1]:
            differ.append(name)
    record(9, "byte-identical machine reports", not differ,
           f"{len(presets()) - len(differ)}/{len(presets())} fixtures identical across two runs",
           time.perf_counter() - t0, 60.0)
