"""Applying methods to queries, meta-methods that refine other methods, and
part-wise solution refinement.

External-executable methods are never run: their reference descriptors are
rendered into the prompt and logged by a no-op recorder, and the gateway's
text is the output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ValidationError
from .gateway import Backend, GatewayRequest
from .model import Method, MethodFormat, Solution, SolutionPart, validate_method
from .prompts import PromptLibrary, default_prompts
from .repository import MethodRepository


@dataclass(frozen=True)
class ApplicationRecord:
    method_id: str
    query_text: str
    output_text: str
    sequence: int
    meta_of: str | None = None


class ExternalCallRecorder:
    """Stub for external-executable methods: records what would run, runs nothing."""

    def __init__(self) -> None:
        self.calls: list[tuple[str, str]] = []

    def record(self, descriptor: str, link: str) -> None:
        self.calls.append((descriptor, link))


def render_steps(method: Method) -> str:
    return "\n".join(f"{i}. {part.text}" for i, part in enumerate(method.solution.parts, start=1))


def _render_refs(method: Method, recorder: ExternalCallRecorder | None) -> str:
    if method.format is not MethodFormat.EXTERNAL_EXECUTABLE:
        return ""
    lines = ["External references (not executed):"]
    for ref in method.solution.external_refs:
        lines.append(f"- {ref.descriptor}: {ref.link}")
        if recorder is not None:
            recorder.record(ref.descriptor, ref.link)
    return "\n".join(lines) + "\n"


def apply_method(
    gateway: Backend,
    method: Method,
    query: str,
    repository: MethodRepository | None = None,
    prompts: PromptLibrary | None = None,
    recorder: ExternalCallRecorder | None = None,
) -> tuple[str, ApplicationRecord]:
    """Render the method's parts as numbered instructions ahead of the query."""
    prompts = prompts or default_prompts()
    prompt = prompts.render(
        "apply",
        steps=render_steps(method),
        refs=_render_refs(method, recorder),
        query=query,
    )
    output = gateway.complete(GatewayRequest.user(prompt))
    record = ApplicationRecord(
        method_id=method.id,
        query_text=query,
        output_text=output,
        sequence=repository.next_application_seq() if repository is not None else 0,
    )
    return output, record


def apply_meta_method(
    gateway: Backend,
    repository: MethodRepository,
    refiner: Method,
    target: Method,
    query: str,
    prompts: PromptLibrary | None = None,
) -> tuple[str, ApplicationRecord]:
    """Apply `refiner` to `target` (with the original query as context).

    The refinement edge refiner => target is recorded atomically with the
    application; an edge that would close a cycle rejects the whole call.
    """
    if refiner.id == target.id:
        raise ValidationError("a method cannot refine itself")
    for name, method in (("refiner", refiner), ("target", target)):
        violations = validate_method(method)
        if violations:
            raise ValidationError(f"{name} method invalid: {', '.join(violations)}")
    repository.add_refinement_edge(refiner.id, target.id)
    prompts = prompts or default_prompts()
    prompt = prompts.render(
        "meta",
        meta_steps=render_steps(refiner),
        target_problem=target.problem.text,
        target_steps=render_steps(target),
        query=query,
    )
    output = gateway.complete(GatewayRequest.user(prompt))
    record = ApplicationRecord(
        method_id=refiner.id,
        query_text=query,
        output_text=output,
        sequence=repository.next_application_seq(),
        meta_of=target.id,
    )
    return output, record


def split_solution(
    gateway: Backend,
    solution_text: str,
    prompts: PromptLibrary | None = None,
) -> list[SolutionPart]:
    """Segment free text into ordered labeled parts via the gateway.

    Replies are expected as "PART: role | text" lines; anything unparsable
    degrades to a single part with role "whole".
    """
    if not solution_text.strip():
        raise ValidationError("solution text must be non-empty")
    prompts = prompts or default_prompts()
    reply = gateway.complete(GatewayRequest.user(prompts.render("segment", solution=solution_text)))
    parts: list[SolutionPart] = []
    for line in reply.splitlines():
        line = line.strip()
        if not line.upper().startswith("PART:"):
            continue
        body = line[len("PART:"):].strip()
        role, sep, text = body.partition("|")
        if not sep or not text.strip():
            continue
        parts.append(SolutionPart(role=role.strip() or "step", text=text.strip()))
    if not parts:
        return [SolutionPart(role="whole", text=solution_text.strip())]
    return parts


def update_part(solution: Solution, index: int, candidates: list[SolutionPart]) -> Solution:
    """Replace part `index` (1-based) with the best-scoring candidate.

    The incumbent competes: if it outranks every candidate the solution is
    returned unchanged. All other positions are untouched.
    """
    if not candidates:
        raise ValidationError("candidates must be non-empty")
    if not 1 <= index <= len(solution.parts):
        raise ValidationError(f"part index {index} out of range 1..{len(solution.parts)}")
    incumbent = solution.parts[index - 1]
    best = incumbent
    for candidate in candidates:
        if candidate.part_score > best.part_score:
            best = candidate
    if best is incumbent:
        return solution
    parts = list(solution.parts)
    parts[index - 1] = best
    return replace(solution, parts=tuple(parts))
