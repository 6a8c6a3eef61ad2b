"""Acceptance suite: one test per exit criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines alongside pytest's own verdicts.
"""

from __future__ import annotations

import json
import random
import time

import networkx as nx

from methodforge.composition import update_part
from methodforge.config import Settings
from methodforge.embedding import HashingEmbedder
from methodforge.errors import RefinementCycleError
from methodforge.evalharness import bundled_path, load_scenario, run_scenario
from methodforge.gateway import MockBackend, load_fixture
from methodforge.model import ScoreCard, Solution, SolutionPart
from methodforge.orchestrator import Orchestrator
from methodforge.persistence import dumps_canonical, load, save
from methodforge.ranking import RankedOutcome, rank_score, record_feedback, select_best, utility
from methodforge.repository import MethodRepository
from methodforge.tree import ROOT_ID, MethodTree
from methodforge.model import Scope, make_problem

from conftest import SEED, SMALL_DIM, build_method
from test_persistence import random_repository

PASS = "PASS"


def _report(criterion: str, detail: str = "") -> None:
    suffix = f"  [{detail}]" if detail else ""
    print(f"{PASS}: {criterion}{suffix}")


# -- directional replays --------------------------------------------------


def test_sufhongkey_replay_direction_and_runtime():
    started = time.monotonic()
    report = run_scenario(load_scenario("sufhongkey"))
    elapsed = time.monotonic() - started
    assert report.errors == []
    no_method = report.condition("NoMethod")
    taught = report.condition("method1")
    assert len(no_method.scores) == len(taught.scores) == 20
    gap = taught.mean - no_method.mean
    assert gap >= 0.2, f"gap {gap:.4f} below 0.2"
    assert len(set(no_method.scores)) == 1 and len(set(taught.scores)) == 1
    assert elapsed < 10.0, f"replay took {elapsed:.2f}s"
    _report(
        "three-session replay: taught method beats the no-method baseline by >= 0.2",
        f"means {taught.mean:.4f} vs {no_method.mean:.4f}, {elapsed:.2f}s",
    )


def test_honghankey_replay_direction_and_runtime():
    started = time.monotonic()
    report = run_scenario(load_scenario("honghankey"))
    elapsed = time.monotonic() - started
    assert report.errors == []
    old = report.condition("method1")
    new = report.condition("method2")
    gap = new.mean - old.mean
    assert gap >= 0.2, f"gap {gap:.4f} below 0.2"
    assert elapsed < 10.0, f"replay took {elapsed:.2f}s"
    _report(
        "continuous-improvement replay: general method beats the specific one by >= 0.2",
        f"means {new.mean:.4f} vs {old.mean:.4f}, {elapsed:.2f}s",
    )


# -- storage tree properties -----------------------------------------------


def _tree_oracle_check(tree: MethodTree, live_ids: set[str]) -> None:
    """Independent structural walk, separate from MethodTree.check_invariants."""
    seen_nodes: set[str] = set()
    seen_methods: list[str] = []
    stack = [(ROOT_ID, None)]
    while stack:
        node_id, parent = stack.pop()
        assert node_id not in seen_nodes, "node reached twice"
        seen_nodes.add(node_id)
        node = tree.nodes[node_id]
        assert node.parent == parent
        assert len(set(node.solutions)) == len(node.solutions)
        seen_methods.extend(node.solutions)
        for child in node.children:
            stack.append((child, node_id))
    assert seen_nodes == set(tree.nodes), "unreachable nodes exist"
    assert len(seen_methods) == len(set(seen_methods)), "method in two nodes"
    assert set(seen_methods) == live_ids


def test_storage_tree_property_suite():
    started = time.monotonic()
    rng = random.Random(20240817)
    embedder = HashingEmbedder(dimension=SMALL_DIM, seed=SEED)
    vocab = [
        "project", "software", "exists", "verify", "create", "duplicate", "report",
        "configure", "archive", "restore", "guitar", "bread", "tune", "bake",
    ]
    sequences = 10_000
    for case in range(sequences):
        tree = MethodTree(scope=Scope.global_scope(), dimension=SMALL_DIM)
        live: dict[str, object] = {}
        ops = rng.randint(2, 6) if case % 100 else rng.randint(20, 40)
        for _ in range(ops):
            if live and rng.random() < 0.35:
                victim = rng.choice(sorted(live))
                del live[victim]
                tree.remove_method(victim)
            else:
                text = " ".join(rng.choices(vocab, k=rng.randint(2, 6)))
                method = build_method(embedder, text, [f"s{rng.randrange(10)}"])
                tree.insert(method, mu=0.95, attach_threshold=0.75)
                live[method.id] = method
        assert tree.check_invariants() == []
        _tree_oracle_check(tree, set(live))

    # Completeness at theta = 0: every stored method is either returned or
    # sits at the contentless root.
    methods = {m.id: m for m in (build_method(embedder, t) for t in ("alpha words", "beta words", "gamma words"))}
    tree = MethodTree(scope=Scope.global_scope(), dimension=SMALL_DIM)
    for m in methods.values():
        tree.insert(m, mu=0.95, attach_threshold=0.75)
    probe = embedder.embed("anything")
    found = {mid for mid, _ in tree.find_candidates(probe, k=1000, theta=0.0, methods=methods)}
    assert found | set(tree.nodes[ROOT_ID].solutions) == set(methods)

    # Insertion idempotence.
    duplicate = build_method(embedder, "alpha words")
    nodes_before = len(tree.nodes)
    tree.insert(duplicate, mu=0.95, attach_threshold=0.75)
    assert len(tree.nodes) == nodes_before
    assert sorted(tree.all_method_ids()) == sorted(methods)

    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"property suite took {elapsed:.2f}s"
    _report(
        "storage tree: 10,000 random insert/remove sequences hold every invariant",
        f"{elapsed:.2f}s, completeness and idempotence included",
    )


# -- ranking suite -----------------------------------------------------------


def test_ranking_suite():
    rng = random.Random(555)
    settings = Settings(dimension=SMALL_DIM, seed=SEED)
    repo = MethodRepository(settings)
    embedder = repo.embedder
    methods = [build_method(embedder, f"ranked problem number {i} words") for i in range(5)]
    for m in methods:
        repo.insert_method(m)

    # EMA closed form vs implementation over random ranking sequences.
    expected = {m.id: 0.5 for m in methods}
    for _ in range(400):
        group = rng.sample(methods, rng.randint(2, 5))
        ranks = list(range(1, len(group) + 1))
        rng.shuffle(ranks)
        record_feedback(repo, RankedOutcome(ordering=tuple((m.id, r) for m, r in zip(group, ranks))))
        for m, r in zip(group, ranks):
            expected[m.id] = 0.7 * expected[m.id] + 0.3 * rank_score(r, len(group))
        for m in methods:
            actual = repo.get(m.id).score.effectiveness
            assert abs(actual - expected[m.id]) < 1e-12
            assert 0.0 <= actual <= 1.0

    # Rank-1 monotonicity / bottom-rank anti-monotonicity.
    a, b = methods[0], methods[1]
    for _ in range(25):
        top_before = repo.get(a.id).score.effectiveness
        bottom_before = repo.get(b.id).score.effectiveness
        record_feedback(repo, RankedOutcome(ordering=((a.id, 1), (b.id, 2))))
        assert repo.get(a.id).score.effectiveness >= top_before
        assert repo.get(b.id).score.effectiveness <= bottom_before

    # Argmax invariance under uniform positive scaling.
    import dataclasses

    probe = make_problem("ranked problem number 2 words", embedder.embed("ranked problem number 2 words"))
    for _ in range(100):
        pool = [
            m.with_score(ScoreCard(effectiveness=rng.uniform(0.05, 1.0), rated=True))
            for m in methods
        ]
        utilities = [round(utility(m, probe).utility, 12) for m in pool]
        if len(set(utilities)) < len(utilities):
            continue
        baseline = select_best(pool, probe)[0].id
        c = rng.uniform(0.01, 1.0)
        scaled = [
            m.with_score(dataclasses.replace(m.score, effectiveness=m.score.effectiveness * c))
            for m in pool
        ]
        assert select_best(scaled, probe)[0].id == baseline

    # Two-step soundness on every transcript of the bundled flows.
    from test_orchestrator import CS1, CS3, ICS, TEACH, TEACH_GENERAL, make_orchestrator

    orch = make_orchestrator()
    session = orch.create_session()
    for text in (CS1, TEACH, CS3, ICS, TEACH_GENERAL, ICS):
        orch.handle_query(session, text)
    checked = 0
    for turn in session.turns:
        if not turn.fallback_used and turn.internal_choice is not None:
            assert turn.internal_choice in turn.filtered_method_ids
            checked += 1
    assert checked >= 2
    _report(
        "ranking: EMA oracle at 1e-12, bounds, monotonicity, argmax invariance, "
        "two-step soundness on transcripts"
    )


# -- part-wise update suite ----------------------------------------------------


def test_update_part_positional_suite():
    rng = random.Random(909)
    for _ in range(1000):
        n = rng.randint(1, 9)
        solution = Solution(
            parts=tuple(
                SolutionPart(role=f"r{i}", text=f"text {i} {rng.random():.6f}", part_score=rng.random())
                for i in range(n)
            )
        )
        index = rng.randint(1, n)
        candidates = [
            SolutionPart(role="cand", text=f"cand {j}", part_score=rng.random())
            for j in range(rng.randint(1, 5))
        ]
        updated = update_part(solution, index, candidates)
        assert len(updated.parts) == n
        for j in range(n):
            if j != index - 1:
                assert updated.parts[j] == solution.parts[j]
        pool_best = max([solution.parts[index - 1], *candidates], key=lambda p: p.part_score)
        assert updated.parts[index - 1].part_score == pool_best.part_score
    _report("part-wise update: positional equality on 1,000 random solutions")


# -- refinement DAG suite -------------------------------------------------------


def test_refinement_dag_suite():
    rng = random.Random(77)
    settings = Settings(dimension=SMALL_DIM, seed=SEED)
    repo = MethodRepository(settings)
    methods = [build_method(repo.embedder, f"dag method number {i} text") for i in range(15)]
    for m in methods:
        repo.insert_method(m)
    oracle = nx.DiGraph()
    oracle.add_nodes_from(m.id for m in methods)
    accepted = rejected = 0
    for _ in range(1500):
        refiner, target = rng.sample(methods, 2)
        try:
            repo.add_refinement_edge(refiner.id, target.id)
        except RefinementCycleError:
            rejected += 1
            oracle.add_edge(refiner.id, target.id)
            assert not nx.is_directed_acyclic_graph(oracle), "rejection disagreed with oracle"
            oracle.remove_edge(refiner.id, target.id)
        else:
            accepted += 1
            oracle.add_edge(refiner.id, target.id)
            assert nx.is_directed_acyclic_graph(oracle), "acceptance created a cycle"
    assert accepted > 0 and rejected > 0
    assert not repo._edges_have_cycle()
    _report(
        "refinement edges: random insertions never close a cycle",
        f"{accepted} accepted / {rejected} rejected, verified against networkx",
    )


# -- persistence suite ------------------------------------------------------------


def test_persistence_roundtrip_suite(tmp_path):
    rng = random.Random(31337)
    for case in range(100):
        repo = random_repository(rng)
        p1 = tmp_path / f"case{case}_a.json"
        p2 = tmp_path / f"case{case}_b.json"
        save(repo, p1)
        restored = load(p1)
        save(restored, p2)
        assert p1.read_bytes() == p2.read_bytes(), f"case {case}: bytes differ"
        probe = repo.embed("verify the project exists please")
        before = [(m.id, round(rel, 15)) for m, rel in repo.find_candidates(probe, k=50, theta=0.0, user_id="u1")]
        after = [(m.id, round(rel, 15)) for m, rel in restored.find_candidates(probe, k=50, theta=0.0, user_id="u1")]
        assert before == after, f"case {case}: behavior differs"
    _report("persistence: byte-identical save/load/save and behavioral identity on 100 random repositories")


# -- determinism suite --------------------------------------------------------------


def _run_transcript(scenario_name: str) -> bytes:
    scenario = load_scenario(scenario_name)
    settings = Settings()
    fixture = load_fixture(scenario.fixture)
    backend = MockBackend(fixture, HashingEmbedder(settings.dimension, settings.seed))
    orchestrator = Orchestrator(MethodRepository(settings), backend, settings)
    session = orchestrator.create_session()
    for step in scenario.steps:
        if step.kind == "reset":
            orchestrator.repository.reset()
        elif step.kind == "rank":
            orchestrator.submit_ranking(session, len(session.turns) - 1, list(step.ordering or ()))
        else:
            orchestrator.handle_query(session, step.text or "")
    return dumps_canonical(orchestrator.transcript_dict(session)).encode("utf-8")


def test_transcript_determinism_suite():
    for name in ("sufhongkey", "honghankey"):
        first = _run_transcript(name)
        second = _run_transcript(name)
        assert first == second, f"{name}: transcripts differ between runs"
        parsed = json.loads(first)
        assert parsed["turns"], "transcript must not be empty"
    _report("determinism: full replay flows produce byte-identical transcripts across runs")
