"""End-to-end query handling: retrieve, filter, select, apply, collect
rankings, and keep mining methods from everything that flows through.

Pipeline order is fixed: external filtering (user-feedback scores) strictly
precedes internal selection (LLM choice), and the internal choice is always a
member of the filtered set. When retrieval comes up empty the fallback ladder
is root-to-node path methods, then a plain completion with nothing injected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .composition import apply_method
from .config import Settings
from .errors import RankingError, SessionError, TransportError
from .extraction import filter_candidates, ingest
from .gateway import Backend, GatewayRequest
from .model import ContentSource, Method, Scope, make_problem
from .prompts import PromptLibrary, default_prompts
from .ranking import RankedOutcome, internal_select, record_feedback, select_best
from .repository import MethodRepository

NO_METHOD_TAG = "no-method"


@dataclass(frozen=True)
class CandidateOutput:
    method_id: str | None
    text: str

    @property
    def tag(self) -> str:
        return self.method_id if self.method_id is not None else NO_METHOD_TAG


@dataclass
class Turn:
    user_input: str
    injected_method_ids: list[str]
    filtered_method_ids: list[str]
    candidate_outputs: list[CandidateOutput]
    chosen_output: str
    fallback_used: bool
    internal_choice: str | None = None
    ranking: tuple[int, ...] | None = None  # candidate indices, best first


@dataclass
class Session:
    session_id: str
    user_id: str | None = None
    turns: list[Turn] = field(default_factory=list)
    # Retains method content seen in turns so a ranked winner can be
    # re-inserted even if it was removed from the repository meanwhile.
    method_snapshots: dict[str, Method] = field(default_factory=dict)


@dataclass(frozen=True)
class QueryResponse:
    outputs: tuple[tuple[str, str], ...]  # (candidate tag, text)
    applied_method_ids: tuple[str, ...]
    fallback_used: bool
    turn_index: int


class Orchestrator:
    def __init__(
        self,
        repository: MethodRepository,
        backend: Backend,
        settings: Settings | None = None,
        prompts: PromptLibrary | None = None,
    ) -> None:
        self.repository = repository
        self.backend = backend
        self.settings = settings or repository.settings
        self.prompts = prompts or default_prompts()
        self._session_seq = 0

    def create_session(self, user_id: str | None = None) -> Session:
        self._session_seq += 1
        return Session(session_id=f"s{self._session_seq:04d}", user_id=user_id)

    # -- query pipeline --------------------------------------------------

    def _apply_candidates(self, methods: list[Method], query: str) -> list[CandidateOutput]:
        outputs: list[CandidateOutput] = []
        last_error: TransportError | None = None
        for method in methods:
            try:
                text, _ = apply_method(
                    self.backend, method, query, repository=self.repository, prompts=self.prompts
                )
            except TransportError as exc:
                last_error = exc
                continue
            outputs.append(CandidateOutput(method_id=method.id, text=text))
        if not outputs and last_error is not None:
            raise last_error
        return outputs

    def _fallback(self, session: Session, vector, problem, user_input: str):
        """Path methods under the closest node, else a bare completion."""
        located = self.repository.most_relevant_node(vector, user_id=session.user_id)
        if located is not None:
            tree, node, _ = located
            path_ids = tree.path_methods(node.node_id)
            path = [self.repository.get(mid) for mid in path_ids]
            if path:
                chosen, _ = internal_select(
                    self.backend, path, user_input, problem, prompts=self.prompts
                )
                outputs = self._apply_candidates([chosen], user_input)
                if outputs:
                    return outputs, chosen.id
        text = self.backend.complete(GatewayRequest.user(user_input))
        return [CandidateOutput(method_id=None, text=text)], None

    def handle_query(self, session: Session, user_input: str) -> QueryResponse:
        settings = self.settings
        vector = self.backend.embed(user_input)
        problem = make_problem(user_input, vector)

        found = self.repository.find_candidates(
            vector, k=settings.k, theta=settings.theta, user_id=session.user_id
        )
        filtered = filter_candidates([m for m, _ in found], settings.tau)
        internal_choice: str | None = None

        if filtered:
            best, alternatives = select_best(filtered, problem)
            ordered = [best] + alternatives
            chosen, _rationale = internal_select(
                self.backend, ordered, user_input, problem, prompts=self.prompts
            )
            internal_choice = chosen.id
            to_apply = [chosen] + [m for m in ordered if m.id != chosen.id]
            outputs = self._apply_candidates(to_apply[: settings.n_out], user_input)
            fallback_used = False
            if not outputs:  # every candidate dropped without transport errors
                outputs, internal_choice = self._fallback(session, vector, problem, user_input)
                fallback_used = True
        else:
            outputs, internal_choice = self._fallback(session, vector, problem, user_input)
            fallback_used = True

        scope = Scope.user(session.user_id) if session.user_id else Scope.global_scope()
        ingest(
            self.repository,
            self.backend,
            user_input,
            ContentSource.USER_INPUT,
            scope=scope,
            tau=settings.tau,
            prompts=self.prompts,
        )
        for output in outputs:
            ingest(
                self.repository,
                self.backend,
                output.text,
                ContentSource.LLM_OUTPUT,
                scope=scope,
                tau=settings.tau,
                prompts=self.prompts,
            )

        turn = Turn(
            user_input=user_input,
            injected_method_ids=[o.method_id for o in outputs if o.method_id is not None],
            filtered_method_ids=[m.id for m in filtered],
            candidate_outputs=outputs,
            chosen_output=outputs[0].text,
            fallback_used=fallback_used,
            internal_choice=internal_choice,
        )
        session.turns.append(turn)
        for output in outputs:
            if output.method_id is not None:
                session.method_snapshots[output.method_id] = self.repository.get(output.method_id)

        return QueryResponse(
            outputs=tuple((o.tag, o.text) for o in outputs),
            applied_method_ids=tuple(turn.injected_method_ids),
            fallback_used=fallback_used,
            turn_index=len(session.turns) - 1,
        )

    # -- feedback ----------------------------------------------------------

    def submit_ranking(self, session: Session, turn_index: int, ordering: list[int]) -> dict[str, float]:
        """Apply a user ranking to a turn.

        `ordering` lists 1-based candidate indices, best first. One ranking
        per turn; methods behind the ranked outputs get score updates and the
        winner is re-inserted if it has since left the repository.
        """
        if not 0 <= turn_index < len(session.turns):
            raise SessionError(f"turn {turn_index} does not exist")
        turn = session.turns[turn_index]
        if turn.ranking is not None:
            raise RankingError(f"turn {turn_index} already ranked")
        n = len(turn.candidate_outputs)
        if sorted(ordering) != list(range(1, n + 1)):
            raise RankingError(f"ordering must be a permutation of 1..{n}, got {ordering}")

        winner = turn.candidate_outputs[ordering[0] - 1]
        if winner.method_id is not None and winner.method_id not in self.repository:
            self.repository.insert_method(session.method_snapshots[winner.method_id])

        ranked: list[tuple[str, int]] = []
        for rank, candidate_index in enumerate(ordering, start=1):
            output = turn.candidate_outputs[candidate_index - 1]
            if output.method_id is not None and output.method_id in self.repository:
                ranked.append((output.method_id, rank))
        # Removed non-winners drop out; compress ranks to stay a permutation.
        ranked = [(mid, pos) for pos, (mid, _) in enumerate(sorted(ranked, key=lambda r: r[1]), start=1)]

        updated: dict[str, float] = {}
        if ranked:
            outcome = RankedOutcome(ordering=tuple(ranked))
            for mid, method in record_feedback(
                self.repository, outcome, alpha=self.settings.alpha
            ).items():
                updated[mid] = method.score.effectiveness
        turn.ranking = tuple(ordering)
        return updated

    # -- transcripts -------------------------------------------------------

    def transcript_dict(self, session: Session) -> dict:
        """Canonical, serializable view of a session for determinism checks."""
        return {
            "session_id": session.session_id,
            "user_id": session.user_id,
            "turns": [
                {
                    "user_input": t.user_input,
                    "injected_method_ids": list(t.injected_method_ids),
                    "filtered_method_ids": list(t.filtered_method_ids),
                    "candidate_outputs": [
                        {"method_id": o.method_id, "text": o.text} for o in t.candidate_outputs
                    ],
                    "chosen_output": t.chosen_output,
                    "fallback_used": t.fallback_used,
                    "internal_choice": t.internal_choice,
                    "ranking": None if t.ranking is None else list(t.ranking),
                }
                for t in session.turns
            ],
        }
