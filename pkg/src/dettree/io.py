"""CSV ingestion and JSON tree documents.

Reals are serialized with Python's shortest round-trip repr, so a document
(or CSV) parses back to bit-identical floats and re-serializes to identical
bytes. Tree documents are validated on load against the same invariants the
builder guarantees.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .build import Ensemble
from .core import (
    Cuboid,
    DetNode,
    DetTree,
    DistributionElement,
    MarginalModel,
    MarginalOrder,
    Split,
    validate_tree,
)

__all__ = [
    "CsvFormatError",
    "TreeDocumentError",
    "FORMAT_VERSION",
    "read_csv",
    "write_csv",
    "tree_to_document",
    "document_to_tree",
    "write_tree",
    "read_tree",
]

FORMAT_VERSION = 1


class CsvFormatError(ValueError):
    """Malformed sample CSV (ragged rows, non-numeric fields, empty file)."""


class TreeDocumentError(ValueError):
    """Malformed or invariant-violating tree document."""


def read_csv(path) -> Ensemble:
    """Read a comma-separated ensemble: one sample per row, optional single
    header row (detected by any non-numeric field in row one), decimal-point
    reals. Errors name the offending 1-based row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh)]
    if not rows or all(len(r) == 0 for r in rows):
        raise CsvFormatError(f"{path}: file is empty")

    first = rows[0]
    names = None
    body_start = 0
    if _parse_row(first) is None:
        names = tuple(field.strip() for field in first)
        body_start = 1
    if body_start == len(rows):
        raise CsvFormatError(f"{path}: no data rows after the header")

    width = len(first)
    data = []
    for line_no, row in enumerate(rows[body_start:], start=body_start + 1):
        if len(row) != width:
            raise CsvFormatError(f"{path}: row {line_no} has {len(row)} fields, expected {width}")
        values = _parse_row(row)
        if values is None:
            raise CsvFormatError(f"{path}: row {line_no} contains a non-numeric field")
        if not all(np.isfinite(values)):
            raise CsvFormatError(f"{path}: row {line_no} contains a non-finite value")
        data.append(values)
    return Ensemble(data=np.array(data, dtype=np.float64), column_names=names or ())


def write_csv(path, points: np.ndarray, column_names: Sequence[str]) -> None:
    """Write points with a header row; floats use shortest round-trip repr so
    the file is byte-deterministic and re-readable by ``read_csv``."""
    points = np.asarray(points, dtype=np.float64)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(column_names))
        for row in points:
            writer.writerow([repr(float(v)) for v in row])


def tree_to_document(tree: DetTree) -> dict:
    return {
        "formatVersion": FORMAT_VERSION,
        "n": tree.n,
        "dims": tree.dims,
        "columnNames": list(tree.column_names),
        "order": tree.order.value,
        "root": _node_to_record(tree.root),
    }


def document_to_tree(doc: dict) -> DetTree:
    if not isinstance(doc, dict):
        raise TreeDocumentError("tree document must be a JSON object")
    version = doc.get("formatVersion")
    if version != FORMAT_VERSION:
        raise TreeDocumentError(f"unknown formatVersion {version!r}, expected {FORMAT_VERSION}")
    try:
        order = MarginalOrder(doc["order"])
        n = int(doc["n"])
        dims = int(doc["dims"])
        names = tuple(str(s) for s in doc["columnNames"])
        root = _record_to_node(doc["root"], dims, order, where="root")
        tree = DetTree(root=root, n=n, order=order, column_names=names)
        validate_tree(tree)
    except TreeDocumentError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise TreeDocumentError(f"invalid tree document: {exc}") from exc
    return tree


def write_tree(path, tree: DetTree) -> None:
    with Path(path).open("w") as fh:
        json.dump(tree_to_document(tree), fh, indent=2)
        fh.write("\n")


def read_tree(path) -> DetTree:
    path = Path(path)
    try:
        with path.open() as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TreeDocumentError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return document_to_tree(doc)


def _parse_row(row: list[str]):
    try:
        return [float(field) for field in row]
    except ValueError:
        return None


def _node_to_record(node: DetNode) -> dict:
    record = {
        "lower": [float(v) for v in node.cuboid.lower],
        "upper": [float(v) for v in node.cuboid.upper],
    }
    if node.is_leaf:
        de = node.body
        record["count"] = de.count
        record["theta"] = [m.theta for m in de.marginals]
    else:
        split = node.body
        record["split"] = {"dim": split.dim, "position": split.position}
        record["children"] = [_node_to_record(split.lower_child), _node_to_record(split.upper_child)]
    return record


def _record_to_node(record: dict, dims: int, order: MarginalOrder, where: str) -> DetNode:
    if not isinstance(record, dict):
        raise TreeDocumentError(f"{where}: node record must be an object")
    lower = record.get("lower")
    upper = record.get("upper")
    if not isinstance(lower, list) or not isinstance(upper, list) or len(lower) != dims or len(upper) != dims:
        raise TreeDocumentError(f"{where}: node needs 'lower' and 'upper' arrays of length {dims}")
    try:
        cuboid = Cuboid(np.array(lower, dtype=np.float64), np.array(upper, dtype=np.float64))
    except ValueError as exc:
        raise TreeDocumentError(f"{where}: {exc}") from exc

    is_leaf = "count" in record
    is_split = "split" in record
    if is_leaf == is_split:
        raise TreeDocumentError(f"{where}: node must have exactly one of 'count' (leaf) or 'split'")
    if is_leaf:
        theta = record.get("theta")
        if not isinstance(theta, list) or len(theta) != dims:
            raise TreeDocumentError(f"{where}: leaf needs a 'theta' array of length {dims}")
        try:
            marginals = tuple(MarginalModel(order=order, theta=float(t)) for t in theta)
            element = DistributionElement(cuboid=cuboid, count=int(record["count"]), marginals=marginals)
        except ValueError as exc:
            raise TreeDocumentError(f"{where}: {exc}") from exc
        return DetNode(cuboid=cuboid, body=element)

    split = record["split"]
    children = record.get("children")
    if not isinstance(split, dict) or "dim" not in split or "position" not in split:
        raise TreeDocumentError(f"{where}: split needs 'dim' and 'position'")
    if not isinstance(children, list) or len(children) != 2:
        raise TreeDocumentError(f"{where}: split needs exactly two children")
    lower_child = _record_to_node(children[0], dims, order, where=f"{where}.children[0]")
    upper_child = _record_to_node(children[1], dims, order, where=f"{where}.children[1]")
    return DetNode(
        cuboid=cuboid,
        body=Split(int(split["dim"]), float(split["position"]), lower_child, upper_child),
    )
