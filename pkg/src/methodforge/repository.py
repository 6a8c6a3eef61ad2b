"""The method repository: methods by id, one storage tree per scope,
refinement edges, and the monotonic counters that order everything.

Single-writer, multi-reader: mutations take the repository lock, lookups are
safe to run concurrently because core values are immutable.
"""

from __future__ import annotations

import threading
from dataclasses import replace

import numpy as np

from .config import Settings
from .embedding import HashingEmbedder
from .errors import RefinementCycleError, UnknownMethodError, ValidationError
from .model import Method, ProblemStatement, RefinementEdge, ScoreCard, Scope, validate_method
from .tree import MethodTree, PlacementAdvice


class MethodRepository:
    def __init__(self, settings: Settings | None = None) -> None:
        self.settings = settings or Settings()
        self.embedder = HashingEmbedder(dimension=self.settings.dimension, seed=self.settings.seed)
        self.methods: dict[str, Method] = {}
        self.trees: dict[str, MethodTree] = {}
        self.edges: list[RefinementEdge] = []
        self._method_seq = 0
        self._application_seq = 0
        self._lock = threading.RLock()
        self.tree_for(Scope.global_scope())

    @property
    def dimension(self) -> int:
        return self.settings.dimension

    def tree_for(self, scope: Scope) -> MethodTree:
        key = scope.key()
        tree = self.trees.get(key)
        if tree is None:
            tree = MethodTree(scope=scope, dimension=self.dimension)
            self.trees[key] = tree
        return tree

    def embed(self, text: str) -> np.ndarray:
        return self.embedder.embed(text)

    # -- method lifecycle ----------------------------------------------

    def get(self, method_id: str) -> Method:
        method = self.methods.get(method_id)
        if method is None:
            raise UnknownMethodError(f"unknown method: {method_id}")
        return method

    def __contains__(self, method_id: str) -> bool:
        return method_id in self.methods

    def list_methods(self) -> list[Method]:
        return sorted(self.methods.values(), key=lambda m: m.created_at)

    def insert_method(self, method: Method, placement: PlacementAdvice | None = None) -> str:
        """Store and place a method; duplicate content is a no-op.

        Returns the node id now holding the method. created_at is assigned
        here from the repository counter.
        """
        violations = validate_method(method)
        if violations:
            raise ValidationError(f"invalid method: {', '.join(violations)}")
        with self._lock:
            existing = self.methods.get(method.id)
            if existing is not None:
                node_id = self.tree_for(existing.scope).node_of(method.id)
                assert node_id is not None
                return node_id
            self._method_seq += 1
            method = replace(method, created_at=self._method_seq)
            node_id = self.tree_for(method.scope).insert(
                method,
                mu=self.settings.mu,
                attach_threshold=self.settings.theta,
                placement=placement,
            )
            self.methods[method.id] = method
            return node_id

    def remove_method(self, method_id: str) -> None:
        with self._lock:
            method = self.get(method_id)
            self.tree_for(method.scope).remove_method(method_id)
            del self.methods[method_id]
            self.edges = [
                e for e in self.edges if method_id not in (e.refiner_id, e.target_id)
            ]

    def update_score(self, method_id: str, score: ScoreCard) -> Method:
        with self._lock:
            updated = self.get(method_id).with_score(score)
            self.methods[method_id] = updated
            return updated

    def placement_of(self, method_id: str) -> tuple[str, str]:
        """(scope key, node id) of a stored method."""
        method = self.get(method_id)
        node_id = self.tree_for(method.scope).node_of(method_id)
        assert node_id is not None
        return method.scope.key(), node_id

    # -- retrieval -----------------------------------------------------

    def _scope_cascade(self, user_id: str | None) -> list[MethodTree]:
        trees: list[MethodTree] = []
        if user_id is not None:
            key = Scope.user(user_id).key()
            if key in self.trees:
                trees.append(self.trees[key])
        trees.append(self.tree_for(Scope.global_scope()))
        return trees

    def find_candidates(
        self,
        vector: np.ndarray,
        k: int | None = None,
        theta: float | None = None,
        user_id: str | None = None,
    ) -> list[tuple[Method, float]]:
        """Candidates across scopes, best first; user-scope wins relevance ties."""
        k = k if k is not None else self.settings.k
        theta = theta if theta is not None else self.settings.theta
        ranked: list[tuple[float, int, int, str]] = []
        seen: set[str] = set()
        for pref, tree in enumerate(self._scope_cascade(user_id)):
            for mid, rel in tree.find_candidates(vector, k, theta, self.methods):
                if mid not in seen:
                    seen.add(mid)
                    ranked.append((-rel, pref, -self.methods[mid].created_at, mid))
        ranked.sort()
        return [(self.methods[mid], -neg_rel) for neg_rel, _, _, mid in ranked[:k]]

    def solutions_for(self, problem: ProblemStatement, user_id: str | None = None) -> set[str]:
        matched: set[str] = set()
        for tree in self._scope_cascade(user_id):
            matched |= tree.solutions_for(problem, self.settings.mu)
        return matched

    def most_relevant_node(self, vector: np.ndarray, user_id: str | None = None):
        """(tree, node, relevance) of the closest content node across scopes."""
        best = None
        for tree in self._scope_cascade(user_id):
            found = tree.most_relevant_node(vector)
            if found is not None and (best is None or found[1] > best[2]):
                best = (tree, found[0], found[1])
        return best

    # -- refinement edges ----------------------------------------------

    def _would_create_cycle(self, refiner_id: str, target_id: str) -> bool:
        """True if target can already reach refiner through refinement edges."""
        adjacency: dict[str, list[str]] = {}
        for edge in self.edges:
            adjacency.setdefault(edge.refiner_id, []).append(edge.target_id)
        stack = [target_id]
        visited: set[str] = set()
        while stack:
            current = stack.pop()
            if current == refiner_id:
                return True
            if current in visited:
                continue
            visited.add(current)
            stack.extend(adjacency.get(current, []))
        return False

    def add_refinement_edge(self, refiner_id: str, target_id: str) -> RefinementEdge:
        with self._lock:
            if refiner_id == target_id:
                raise ValidationError("a method cannot refine itself")
            self.get(refiner_id)
            self.get(target_id)
            edge = RefinementEdge(refiner_id=refiner_id, target_id=target_id)
            if edge in self.edges:
                return edge
            if self._would_create_cycle(refiner_id, target_id):
                raise RefinementCycleError(
                    f"edge {refiner_id[:8]} => {target_id[:8]} would close a refinement cycle"
                )
            self.edges.append(edge)
            return edge

    # -- bookkeeping ----------------------------------------------------

    def next_application_seq(self) -> int:
        with self._lock:
            self._application_seq += 1
            return self._application_seq

    def reset(self) -> None:
        """Drop all methods, trees, and edges; the embedder seed is retained."""
        with self._lock:
            self.methods.clear()
            self.trees.clear()
            self.edges.clear()
            self._method_seq = 0
            self._application_seq = 0
            self.tree_for(Scope.global_scope())

    def check_invariants(self) -> list[str]:
        """Cross-cutting integrity checks used on snapshot load."""
        problems: list[str] = []
        placed: dict[str, str] = {}
        for key, tree in self.trees.items():
            problems.extend(f"tree {key}: {p}" for p in tree.check_invariants())
            for mid in tree.all_method_ids():
                if mid in placed:
                    problems.append(f"one node per method: {mid} in {placed[mid]} and {key}")
                placed[mid] = key
                if mid not in self.methods:
                    problems.append(f"tree {key} references unknown method {mid}")
        for mid in self.methods:
            if mid not in placed:
                problems.append(f"method {mid} not placed in any tree")
        for method in self.methods.values():
            problems.extend(f"method {method.id[:8]}: {v}" for v in validate_method(method))
        for edge in self.edges:
            if edge.refiner_id not in self.methods or edge.target_id not in self.methods:
                problems.append(f"edge {edge.refiner_id[:8]}=>{edge.target_id[:8]} references unknown method")
            if edge.refiner_id == edge.target_id:
                problems.append("self-refinement edge")
        if self._edges_have_cycle():
            problems.append("refinement edges form a cycle")
        return problems

    def _edges_have_cycle(self) -> bool:
        adjacency: dict[str, list[str]] = {}
        for edge in self.edges:
            adjacency.setdefault(edge.refiner_id, []).append(edge.target_id)
        WHITE, GRAY, BLACK = 0, 1, 2
        color: dict[str, int] = {}

        def visit(node: str) -> bool:
            color[node] = GRAY
            for succ in adjacency.get(node, []):
                state = color.get(succ, WHITE)
                if state == GRAY:
                    return True
                if state == WHITE and visit(succ):
                    return True
            color[node] = BLACK
            return False

        return any(color.get(n, WHITE) == WHITE and visit(n) for n in adjacency)
