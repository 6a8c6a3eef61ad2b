"""Hierarchical method storage: one problem per node, many solution variants.

Placement is similarity-driven. A new method merges into an existing node when
its problem relevance clears the merge bar mu; otherwise it becomes a child of
the most relevant node when that relevance clears the attachment bar, or a
child of the sentinel root when nothing is close. The root carries no problem
and only holds methods placed there explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .embedding import relevance_from_vectors
from .errors import DimensionMismatchError, PlacementError, UnknownMethodError, UnknownNodeError
from .model import Method, ProblemStatement, Scope

ROOT_ID = "root"


@dataclass
class TreeNode:
    node_id: str
    problem: ProblemStatement | None  # None only for the sentinel root
    solutions: list[str] = field(default_factory=list)
    children: list[str] = field(default_factory=list)
    parent: str | None = None


@dataclass(frozen=True)
class PlacementAdvice:
    """A suggested parent node, e.g. chosen by the LLM."""

    parent_node_id: str


class MethodTree:
    def __init__(self, scope: Scope, dimension: int) -> None:
        self.scope = scope
        self.dimension = dimension
        self.nodes: dict[str, TreeNode] = {ROOT_ID: TreeNode(node_id=ROOT_ID, problem=None)}
        self.root_id = ROOT_ID
        self._next_node = 0

    # -- queries -------------------------------------------------------

    def content_nodes(self) -> Iterator[TreeNode]:
        for node in self.nodes.values():
            if node.problem is not None:
                yield node

    def has_content(self) -> bool:
        return any(True for _ in self.content_nodes())

    def all_method_ids(self) -> list[str]:
        ids: list[str] = []
        for node in self.nodes.values():
            ids.extend(node.solutions)
        return ids

    def node_of(self, method_id: str) -> str | None:
        for node in self.nodes.values():
            if method_id in node.solutions:
                return node.node_id
        return None

    def _check_dimension(self, features_vector: np.ndarray) -> None:
        if features_vector.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"features have dimension {features_vector.shape[0]}, tree expects {self.dimension}"
            )

    def _scored_nodes(self, vector: np.ndarray) -> list[tuple[TreeNode, float]]:
        self._check_dimension(vector)
        return [
            (node, relevance_from_vectors(vector, node.problem.features.vector))
            for node in self.content_nodes()
        ]

    def most_relevant_node(self, vector: np.ndarray) -> tuple[TreeNode, float] | None:
        best: tuple[TreeNode, float] | None = None
        for node, rel in self._scored_nodes(vector):
            if best is None or rel > best[1]:
                best = (node, rel)
        return best

    # -- mutation ------------------------------------------------------

    def _new_node(self, problem: ProblemStatement, parent_id: str) -> TreeNode:
        node_id = f"n{self._next_node:06d}"
        self._next_node += 1
        node = TreeNode(node_id=node_id, problem=problem, parent=parent_id)
        self.nodes[node_id] = node
        self.nodes[parent_id].children.append(node_id)
        return node

    def insert(
        self,
        method: Method,
        mu: float,
        attach_threshold: float,
        placement: PlacementAdvice | None = None,
    ) -> str:
        """Place a method; returns the id of the node now holding it."""
        vector = method.problem.features.vector
        self._check_dimension(vector)

        if placement is not None:
            advised = self.nodes.get(placement.parent_node_id)
            if advised is None:
                raise PlacementError(f"unknown placement node: {placement.parent_node_id}")
            if advised.problem is None:
                target = advised  # explicit root placement: general-purpose method
            elif relevance_from_vectors(vector, advised.problem.features.vector) >= mu:
                target = advised
            else:
                target = self._new_node(method.problem, advised.node_id)
        else:
            best = self.most_relevant_node(vector)
            if best is not None and best[1] >= mu:
                target = best[0]
            elif best is not None and best[1] >= attach_threshold:
                target = self._new_node(method.problem, best[0].node_id)
            else:
                target = self._new_node(method.problem, self.root_id)

        if method.id not in target.solutions:
            target.solutions.append(method.id)
        return target.node_id

    def remove_method(self, method_id: str) -> None:
        node_id = self.node_of(method_id)
        if node_id is None:
            raise UnknownMethodError(f"method {method_id} not in tree")
        node = self.nodes[node_id]
        node.solutions.remove(method_id)
        # Prune empty childless non-root nodes up the chain.
        while node.node_id != self.root_id and not node.solutions and not node.children:
            parent = self.nodes[node.parent]  # type: ignore[index]
            parent.children.remove(node.node_id)
            del self.nodes[node.node_id]
            node = parent

    # -- retrieval -----------------------------------------------------

    def solutions_for(self, problem: ProblemStatement, mu: float) -> set[str]:
        """Union of solution variants at every node matching at the merge bar."""
        matched: set[str] = set()
        for node, rel in self._scored_nodes(problem.features.vector):
            if rel >= mu:
                matched.update(node.solutions)
        return matched

    def find_candidates(
        self,
        vector: np.ndarray,
        k: int,
        theta: float,
        methods: Mapping[str, Method],
    ) -> list[tuple[str, float]]:
        """Methods at nodes with relevance >= theta, best first, at most k.

        Ties on relevance break toward the most recently stored method.
        """
        scored: list[tuple[str, float]] = []
        for node, rel in self._scored_nodes(vector):
            if rel >= theta:
                scored.extend((mid, rel) for mid in node.solutions)
        scored.sort(key=lambda item: (-item[1], -methods[item[0]].created_at))
        return scored[:k]

    def path_methods(self, node_id: str) -> list[str]:
        """Solutions along the root-to-node path, root first."""
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node: {node_id}")
        path: list[TreeNode] = []
        current: TreeNode | None = self.nodes[node_id]
        while current is not None:
            path.append(current)
            current = self.nodes[current.parent] if current.parent is not None else None
        path.reverse()
        methods: list[str] = []
        for node in path:
            methods.extend(node.solutions)
        return methods

    # -- integrity -----------------------------------------------------

    def check_invariants(self) -> list[str]:
        """Structural invariant violations; empty list means the tree is sound."""
        problems: list[str] = []
        if self.root_id not in self.nodes:
            return ["root node missing"]
        root = self.nodes[self.root_id]
        if root.parent is not None:
            problems.append("root must have no parent")
        if root.problem is not None:
            problems.append("root must be contentless")

        seen_methods: set[str] = set()
        for node in self.nodes.values():
            if len(set(node.solutions)) != len(node.solutions):
                problems.append(f"node {node.node_id}: duplicate solution ids")
            if len(set(node.children)) != len(node.children):
                problems.append(f"node {node.node_id}: duplicate children")
            for mid in node.solutions:
                if mid in seen_methods:
                    problems.append(f"method {mid} appears in more than one node")
                seen_methods.add(mid)
            if node.node_id != self.root_id:
                if node.parent is None or node.parent not in self.nodes:
                    problems.append(f"node {node.node_id}: missing parent")
                elif node.node_id not in self.nodes[node.parent].children:
                    problems.append(f"node {node.node_id}: not listed under its parent")
                if node.problem is None:
                    problems.append(f"node {node.node_id}: non-root node without problem")
                elif node.problem.features.dimension != self.dimension:
                    problems.append(f"node {node.node_id}: feature dimension mismatch")

        # Reachability from the root establishes acyclicity for parent links.
        reachable: set[str] = set()
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            if nid in reachable:
                problems.append(f"node {nid} reachable twice (cycle or duplicate link)")
                continue
            reachable.add(nid)
            node = self.nodes.get(nid)
            if node is None:
                problems.append(f"child link to missing node {nid}")
                continue
            stack.extend(node.children)
        unreachable = set(self.nodes) - reachable
        if unreachable:
            problems.append(f"unreachable nodes: {sorted(unreachable)}")
        return problems
