"""Versioned JSON profile files, plus a reader for an equivalent XML layout.

Layout (schema_version 1)::

    {
      "schema_version": 1,
      "program": "st",
      "regions": [{"id": 0, "label": "main", "parent": null}, ...],
      "processes": [{"rank": 0, "role": "worker"}, ...],
      "samples": [{"rank": 0, "region": 0, "wall_time": ..., ..., "executed": true}, ...]
    }

Regions are listed so that each parent's children appear in sibling order.
A (rank, region) pair without a sample record is loaded as a region the
rank never entered.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from typing import Any, Union

from ..model import SAMPLE_FIELDS, MetricSample, ModelError, ProfileDataset, RegionTree

SCHEMA_VERSION = 1


class ProfileFormatError(ModelError):
    pass


class ParseError(ProfileFormatError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class SchemaVersionUnsupported(ProfileFormatError):
    pass


class UnresolvedRegion(ProfileFormatError):
    pass


class DuplicateSample(ProfileFormatError):
    pass


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ProfileFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def profile_from_document(doc: dict) -> ProfileDataset:
    if not isinstance(doc, dict):
        raise ProfileFormatError("top level must be an object")
    version = _require(doc, "schema_version", "profile")
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(f"schema_version {version!r} (supported: {SCHEMA_VERSION})")

    spec = []
    for i, reg in enumerate(_require(doc, "regions", "profile")):
        where = f"regions[{i}]"
        spec.append((int(_require(reg, "id", where)), str(reg.get("label", "")), reg.get("parent")))
    ids = {rid for rid, _, _ in spec}
    for rid, _, parent in spec:
        if parent is not None and parent not in ids:
            raise UnresolvedRegion(f"region {rid} names unknown parent {parent}")
    tree = RegionTree.build((rid, label, None if p is None else int(p)) for rid, label, p in spec)

    procs = sorted(_require(doc, "processes", "profile"), key=lambda p: p.get("rank", -1))
    ranks = [int(_require(p, "rank", "processes")) for p in procs]
    if ranks != list(range(len(ranks))):
        raise ProfileFormatError(f"process ranks must be 0..m-1, got {ranks}")
    roles = [p.get("role", "worker") for p in procs]

    samples: dict[tuple[int, int], MetricSample] = {}
    for i, rec in enumerate(_require(doc, "samples", "profile")):
        where = f"samples[{i}]"
        rank = int(_require(rec, "rank", where))
        rid = int(_require(rec, "region", where))
        if rid not in ids:
            raise UnresolvedRegion(f"{where}: unknown region {rid}")
        if not 0 <= rank < len(roles):
            raise ProfileFormatError(f"{where}: unknown rank {rank}")
        if (rank, rid) in samples:
            raise DuplicateSample(f"{where}: second sample for rank {rank}, region {rid}")
        values = {f: rec.get(f, 0) for f in SAMPLE_FIELDS}
        for f, v in values.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ProfileFormatError(f"{where}: field {f!r} must be a number")
        samples[(rank, rid)] = MetricSample(**values, executed=bool(rec.get("executed", True)))
    for rank in range(len(roles)):
        for rid in ids:
            samples.setdefault((rank, rid), MetricSample.not_executed())
    return ProfileDataset(tree, roles, samples, str(doc.get("program", "")))


def load_profile(data: Union[bytes, str]) -> ProfileDataset:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return profile_from_document(doc)


def profile_to_document(dataset: ProfileDataset) -> dict:
    tree = dataset.tree
    order = []
    stack = [tree.root]
    while stack:
        rid = stack.pop()
        order.append(rid)
        stack.extend(reversed(tree.children(rid)))
    regions = [
        {"id": rid, "label": tree.node(rid).label, "parent": tree.node(rid).parent}
        for rid in order
    ]
    samples = []
    for rank in dataset.ranks:
        for rid in sorted(tree.ids()):
            s = dataset.sample(rank, rid)
            rec = {"rank": rank, "region": rid, "executed": s.executed}
            rec.update({f: getattr(s, f) for f in SAMPLE_FIELDS})
            samples.append(rec)
    return {
        "schema_version": SCHEMA_VERSION,
        "program": dataset.program,
        "regions": regions,
        "processes": [{"rank": r, "role": role} for r, role in enumerate(dataset.roles)],
        "samples": samples,
    }


def save_profile(dataset: ProfileDataset) -> bytes:
    """Canonical bytes: fixed key order, ranks then region ids ascending."""
    text = json.dumps(profile_to_document(dataset), indent=1, sort_keys=True)
    return (text + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# XML
# ---------------------------------------------------------------------------


def _number(text: str, where: str) -> float | int:
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise ProfileFormatError(f"{where}: {text!r} is not a number") from None


def xml_to_document(data: Union[bytes, str]) -> dict:
    """Read ``<profile schema_version=.. program=..>`` with ``region``,
    ``process`` and ``sample`` child elements whose attributes carry the same
    field names as the JSON layout."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML: {exc}", line, col) from None
    if root.tag != "profile":
        raise ProfileFormatError(f"root element is <{root.tag}>, expected <profile>")
    doc: dict = {
        "schema_version": _number(root.get("schema_version", "0"), "profile"),
        "program": root.get("program", ""),
        "regions": [],
        "processes": [],
        "samples": [],
    }
    for el in root:
        where = f"<{el.tag}> line {getattr(el, 'sourceline', '?')}"
        if el.tag == "region":
            parent = el.get("parent")
            doc["regions"].append({
                "id": _number(el.get("id", ""), where),
                "label": el.get("label", ""),
                "parent": None if parent in (None, "") else _number(parent, where),
            })
        elif el.tag == "process":
            doc["processes"].append({"rank": _number(el.get("rank", ""), where), "role": el.get("role", "worker")})
        elif el.tag == "sample":
            rec: dict = {}
            for key, value in el.attrib.items():
                if key == "executed":
                    rec[key] = value.strip().lower() in ("1", "true", "yes")
                else:
                    rec[key] = _number(value, where)
            doc["samples"].append(rec)
        else:
            raise ProfileFormatError(f"unexpected element <{el.tag}>")
    return doc


def load_xml_profile(data: Union[bytes, str]) -> ProfileDataset:
    return profile_from_document(xml_to_document(data))


def xml_to_json(data: Union[bytes, str]) -> bytes:
    return save_profile(load_xml_profile(data))
