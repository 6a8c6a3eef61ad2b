"""Durable single-file snapshots with canonical byte form.

Canonical means: object keys sorted, methods sorted by id, trees by scope key,
edges by (refiner, target), and every float rendered with 17 significant
digits, so save(load(path)) reproduces the file byte for byte. Loading
re-validates all domain invariants and refuses version mismatches outright.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import Settings
from .errors import SnapshotError, SnapshotVersionError
from .model import (
    ContentSource,
    ExternalRef,
    Method,
    MethodFormat,
    RefinementEdge,
    ScoreCard,
    Scope,
    Solution,
    SolutionPart,
    make_problem,
)
from .repository import MethodRepository
from .tree import MethodTree, TreeNode

FORMAT_VERSION = 1


# -- canonical JSON ------------------------------------------------------


def _format_float(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        raise SnapshotError("non-finite float in snapshot")
    text = "%.17g" % value
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


def dumps_canonical(obj, indent: int = 0) -> str:
    pad = "  " * indent
    child_pad = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{child_pad}{json.dumps(str(key), ensure_ascii=False)}: {dumps_canonical(value, indent + 1)}"
            for key, value in sorted(obj.items())
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{child_pad}{dumps_canonical(value, indent + 1)}" for value in obj)
        return "[\n" + items + "\n" + pad + "]"
    raise SnapshotError(f"unserializable value of type {type(obj).__name__}")


# -- snapshot assembly ---------------------------------------------------


def _problem_record(problem) -> dict:
    return {"text": problem.text, "vector": [float(v) for v in problem.features.vector]}


def _method_record(method: Method) -> dict:
    return {
        "id": method.id,
        "problem": _problem_record(method.problem),
        "solution": {
            "parts": [
                {"role": p.role, "text": p.text, "part_score": float(p.part_score)}
                for p in method.solution.parts
            ],
            "external_refs": [
                {"descriptor": r.descriptor, "link": r.link} for r in method.solution.external_refs
            ],
        },
        "format": method.format.value,
        "scope": method.scope.key(),
        "source": method.source.value,
        "created_at": method.created_at,
        "score": {
            "effectiveness": float(method.score.effectiveness),
            "rated": method.score.rated,
            "times_used": method.score.times_used,
            "times_top_ranked": method.score.times_top_ranked,
        },
        "extraction_confidence": (
            None if method.extraction_confidence is None else float(method.extraction_confidence)
        ),
    }


def _tree_record(key: str, tree: MethodTree) -> dict:
    nodes = []
    for node in sorted(tree.nodes.values(), key=lambda n: n.node_id):
        nodes.append(
            {
                "node_id": node.node_id,
                "problem": None if node.problem is None else _problem_record(node.problem),
                "solutions": list(node.solutions),
                "children": list(node.children),
            }
        )
    return {"scope": key, "root_id": tree.root_id, "next_node": tree._next_node, "nodes": nodes}


def snapshot_dict(repository: MethodRepository) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "embedder_seed": repository.settings.seed,
        "dimension": repository.settings.dimension,
        "counters": {
            "method_seq": repository._method_seq,
            "application_seq": repository._application_seq,
        },
        "methods": [
            _method_record(m) for m in sorted(repository.methods.values(), key=lambda m: m.id)
        ],
        "trees": [_tree_record(key, tree) for key, tree in sorted(repository.trees.items())],
        "edges": [
            {"refiner_id": e.refiner_id, "target_id": e.target_id}
            for e in sorted(repository.edges, key=lambda e: (e.refiner_id, e.target_id))
        ],
    }


def save(repository: MethodRepository, path: str | Path) -> None:
    """Atomic write: serialize to a temp file, then rename into place."""
    path = Path(path)
    payload = dumps_canonical(snapshot_dict(repository)) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


# -- loading -------------------------------------------------------------


def _parse_problem(record: dict, dimension: int):
    vector = np.asarray(record["vector"], dtype=np.float64)
    if vector.shape[0] != dimension:
        raise SnapshotError(
            f"problem vector dimension {vector.shape[0]} does not match snapshot dimension {dimension}"
        )
    problem = make_problem(record["text"], vector)
    return problem


def _parse_method(record: dict, dimension: int) -> Method:
    solution = Solution(
        parts=tuple(
            SolutionPart(role=p["role"], text=p["text"], part_score=float(p["part_score"]))
            for p in record["solution"]["parts"]
        ),
        external_refs=tuple(
            ExternalRef(descriptor=r["descriptor"], link=r["link"])
            for r in record["solution"]["external_refs"]
        ),
    )
    score = record["score"]
    return Method(
        id=record["id"],
        problem=_parse_problem(record["problem"], dimension),
        solution=solution,
        format=MethodFormat(record["format"]),
        scope=Scope.from_key(record["scope"]),
        source=ContentSource(record["source"]),
        created_at=int(record["created_at"]),
        score=ScoreCard(
            effectiveness=float(score["effectiveness"]),
            rated=bool(score["rated"]),
            times_used=int(score["times_used"]),
            times_top_ranked=int(score["times_top_ranked"]),
        ),
        extraction_confidence=(
            None
            if record.get("extraction_confidence") is None
            else float(record["extraction_confidence"])
        ),
    )


def _parse_tree(record: dict, dimension: int) -> MethodTree:
    tree = MethodTree(scope=Scope.from_key(record["scope"]), dimension=dimension)
    tree.nodes.clear()
    tree.root_id = record["root_id"]
    tree._next_node = int(record["next_node"])
    for node_record in record["nodes"]:
        problem = (
            None
            if node_record["problem"] is None
            else _parse_problem(node_record["problem"], dimension)
        )
        tree.nodes[node_record["node_id"]] = TreeNode(
            node_id=node_record["node_id"],
            problem=problem,
            solutions=list(node_record["solutions"]),
            children=list(node_record["children"]),
        )
    for node in tree.nodes.values():
        for child_id in node.children:
            child = tree.nodes.get(child_id)
            if child is None:
                raise SnapshotError(f"tree {record['scope']}: missing child node {child_id}")
            child.parent = node.node_id
    return tree


def load(path: str | Path, settings: Settings | None = None) -> MethodRepository:
    """Rebuild a repository; every invariant is re-checked before returning."""
    path = Path(path)
    if not path.exists():
        raise SnapshotError(f"snapshot not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SnapshotError("snapshot root must be an object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise SnapshotVersionError(
            f"snapshot version {version!r} unsupported (expected {FORMAT_VERSION}); refusing to migrate"
        )
    try:
        dimension = int(data["dimension"])
        seed = int(data["embedder_seed"])
        base = settings or Settings()
        repository = MethodRepository(replace(base, dimension=dimension, seed=seed))
        repository.trees.clear()
        for tree_record in data["trees"]:
            repository.trees[tree_record["scope"]] = _parse_tree(tree_record, dimension)
        for method_record in data["methods"]:
            method = _parse_method(method_record, dimension)
            repository.methods[method.id] = method
        repository.edges = [
            RefinementEdge(refiner_id=e["refiner_id"], target_id=e["target_id"])
            for e in data["edges"]
        ]
        counters = data["counters"]
        repository._method_seq = int(counters["method_seq"])
        repository._application_seq = int(counters["application_seq"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"snapshot {path} is malformed: {exc!r}") from exc
    problems = repository.check_invariants()
    if repository._method_seq < max((m.created_at for m in repository.methods.values()), default=0):
        problems.append("method_seq below the highest created_at")
    if problems:
        raise SnapshotError("snapshot violates invariants: " + "; ".join(problems))
    return repository


def reset(repository: MethodRepository) -> None:
    """Clear all stored state; the embedder seed and dimension are retained."""
    repository.reset()
