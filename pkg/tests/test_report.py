from __future__ import annotations

import json

import pytest

from conftest import generated
from spmdiag.locate import AnalysisConfig
from spmdiag.report import REPORT_SCHEMA, analyze, compare_metrics, dumps_machine, render_text, to_machine
from spmdiag.trace.presets import presets


def machine(name):
    ds, truth = generated(name)
    return to_machine(analyze(ds, AnalysisConfig(excluded_ranks=truth.excluded_ranks)))


@pytest.mark.parametrize("name", sorted(presets()))
def test_machine_is_plain_json_and_stable(name):
    doc = machine(name)
    text = dumps_machine(doc)
    assert json.loads(text) == doc
    assert dumps_machine(machine(name)) == text
    assert doc["schema_version"] == REPORT_SCHEMA == 1


def test_text_is_rendered_from_machine_dict():
    doc = machine("st")
    text = render_text(doc)
    # editing the dict changes the text: the renderer reads nothing else
    doc["disparity"]["cccr"] = [3]
    assert "CCCR: {3}" in render_text(doc) and "CCCR: {3}" not in text
    assert render_text(json.loads(dumps_machine(machine("st")))) == text


def test_machine_sections():
    doc = machine("st")
    d, p = doc["dissimilarity"], doc["disparity"]
    assert d["found"] and not d["inconclusive"] and d["composite_width"] is None
    assert len(d["clusters"]) == 5 and d["core"] == ["a5"]
    assert [r["id"] for r in p["regions"]] == sorted(r["id"] for r in p["regions"])
    assert p["centroids"] == sorted(p["centroids"])
    assert p["inconsistent_pairs"] == []
    assert doc["bottlenecks_found"] is True
    [diag] = d["diagnoses"]
    assert diag["region"] == 11 and diag["glosses"] == ["instructions retired"]
    assert [rank for rank, _ in diag["evidence"]["a5"]] == list(range(8))


def test_composite_reported():
    doc = machine("composite-pair")
    assert doc["dissimilarity"]["composites"] == [[1, 2]]
    assert "adjacent groups of 2: {1, 2}" in render_text(doc)


def test_excluded_ranks_shown():
    doc = machine("mpibzip2")
    assert doc["config"]["excluded_ranks"] == [0]
    assert "excluded ranks: {0}" in render_text(doc)


def test_comparison_rows():
    doc = compare_metrics(generated("st")[0])
    assert [r["metric"] for r in doc["disparity"]] == ["crnm", "cpi", "wall"]
    assert [r["metric"] for r in doc["dissimilarity"]] == ["cpu", "wall"]
    assert json.loads(dumps_machine(doc)) == doc
