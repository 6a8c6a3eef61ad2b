"""Command line interface: serve, chat, ingest, methods, eval, reset."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import persistence
from .config import Settings, load_settings
from .errors import MethodForgeError
from .evalharness import load_scenario, report_render, run_scenario
from .gateway import make_backend
from .model import ContentSource, Scope
from .orchestrator import Orchestrator
from .repository import MethodRepository


def _build_settings(args) -> Settings:
    return load_settings(args.config, backend=args.backend, fixture=args.fixture)


def _open_repository(args, settings: Settings) -> MethodRepository:
    if args.repo and Path(args.repo).exists():
        return persistence.load(args.repo, settings)
    return MethodRepository(settings)


def _save_repository(args, repository: MethodRepository) -> None:
    if args.repo:
        persistence.save(repository, args.repo)


def _parse_scope(raw: str) -> Scope:
    if raw == "global":
        return Scope.global_scope()
    if raw.startswith("user:"):
        return Scope.user(raw[len("user:"):])
    raise MethodForgeError(f"scope must be 'global' or 'user:<id>', got {raw!r}")


# -- subcommands ---------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    settings = _build_settings(args)
    repository = _open_repository(args, settings)
    orchestrator = Orchestrator(repository, make_backend(settings), settings)
    app = create_app(orchestrator, repository_path=args.repo)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def run_chat(orchestrator: Orchestrator, in_stream, out, user_id: str | None = None) -> None:
    """REPL: plain text queries; `rank 2 1 3` orders the last turn's candidates."""
    session = orchestrator.create_session(user_id=user_id)
    out("methodforge chat - plain text to ask, 'rank 2 1 3' to rank, '/quit' to leave")
    for raw_line in in_stream:
        line = raw_line.strip()
        if not line:
            continue
        if line in ("/quit", "/exit"):
            break
        if line.startswith("rank"):
            try:
                ordering = [int(tok) for tok in line.split()[1:]]
                if not session.turns:
                    raise MethodForgeError("nothing to rank yet")
                updated = orchestrator.submit_ranking(session, len(session.turns) - 1, ordering)
                for mid, eff in updated.items():
                    out(f"  {mid[:12]} effectiveness -> {eff:.4f}")
                if not updated:
                    out("  ranking stored (no scored methods on this turn)")
            except (MethodForgeError, ValueError) as exc:
                out(f"  error: {exc}")
            continue
        try:
            response = orchestrator.handle_query(session, line)
        except MethodForgeError as exc:
            out(f"  error: {exc}")
            continue
        for i, (tag, text) in enumerate(response.outputs, start=1):
            label = tag[:12] if tag != "no-method" else tag
            out(f"[{i}] ({label}) {text}")
        if response.fallback_used:
            out("  (fallback: no stored method matched)")


def cmd_chat(args) -> int:
    settings = _build_settings(args)
    repository = _open_repository(args, settings)
    orchestrator = Orchestrator(repository, make_backend(settings), settings)
    try:
        run_chat(orchestrator, sys.stdin, print, user_id=args.user)
    except (KeyboardInterrupt, EOFError):
        pass
    _save_repository(args, repository)
    return 0


def cmd_ingest(args) -> int:
    settings = _build_settings(args)
    repository = _open_repository(args, settings)
    backend = make_backend(settings)
    from .extraction import ingest

    text = Path(args.file).read_text(encoding="utf-8")
    chunks = [chunk.strip() for chunk in text.split("\n\n") if chunk.strip()]
    source = ContentSource(args.source)
    scope = _parse_scope(args.scope)
    stored: list[str] = []
    for chunk in chunks:
        stored.extend(ingest(repository, backend, chunk, source, scope=scope))
    _save_repository(args, repository)
    print(f"ingested {len(chunks)} chunk(s), stored {len(stored)} method(s)")
    for mid in stored:
        print(f"  {mid}")
    return 0


def cmd_methods(args) -> int:
    settings = _build_settings(args)
    repository = _open_repository(args, settings)
    if args.action == "list":
        if not repository.methods:
            print("no methods stored")
            return 0
        print(f"{'id':<14}{'eff':>7}{'used':>6}{'top':>5}  {'scope':<12}problem")
        for method in repository.list_methods():
            scope_key, _ = repository.placement_of(method.id)
            problem = " ".join(method.problem.text.split())
            if len(problem) > 60:
                problem = problem[:57] + "..."
            print(
                f"{method.id[:12]:<14}{method.score.effectiveness:>7.3f}"
                f"{method.score.times_used:>6}{method.score.times_top_ranked:>5}"
                f"  {scope_key:<12}{problem}"
            )
        return 0
    matches = [mid for mid in repository.methods if mid.startswith(args.id)]
    if len(matches) != 1:
        print(f"{'no' if not matches else 'ambiguous'} method for prefix {args.id!r}", file=sys.stderr)
        return 1
    method_id = matches[0]
    if args.action == "show":
        method = repository.get(method_id)
        scope_key, node_id = repository.placement_of(method_id)
        print(f"id: {method.id}")
        print(f"scope: {scope_key}  node: {node_id}  format: {method.format.value}")
        print(f"source: {method.source.value}  created_at: {method.created_at}")
        score = method.score
        print(
            f"effectiveness: {score.effectiveness:.4f}  rated: {score.rated}  "
            f"used: {score.times_used}  top: {score.times_top_ranked}"
        )
        print(f"problem: {method.problem.text}")
        for i, part in enumerate(method.solution.parts, start=1):
            print(f"  {i}. [{part.role}] {part.text}")
        for ref in method.solution.external_refs:
            print(f"  ref: {ref.descriptor} -> {ref.link}")
    else:  # rm
        repository.remove_method(method_id)
        _save_repository(args, repository)
        print(f"removed {method_id}")
    return 0


def cmd_eval(args) -> int:
    settings = _build_settings(args)
    scenario = load_scenario(args.scenario)
    if args.trials:
        scenario = replace(scenario, trials=args.trials)
    report = run_scenario(scenario, settings)
    print(report_render(report, out_dir=args.out))
    if args.out:
        print(f"\nwrote {args.out}/{report.scenario}_trials.csv and _means.png")
    return 1 if report.errors else 0


def cmd_reset(args) -> int:
    settings = _build_settings(args)
    repository = _open_repository(args, settings)
    repository.reset()
    _save_repository(args, repository)
    print("repository cleared")
    return 0


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="methodforge", description=__doc__)
    parser.add_argument("--config", help="settings file (YAML)")
    parser.add_argument("--repo", help="repository snapshot path")
    parser.add_argument("--backend", choices=["mock", "live"], help="gateway backend")
    parser.add_argument("--fixture", help="mock fixture file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8470)
    p_serve.set_defaults(func=cmd_serve)

    p_chat = sub.add_parser("chat", help="interactive REPL")
    p_chat.add_argument("--user", help="user id for user-scoped methods")
    p_chat.set_defaults(func=cmd_chat)

    p_ingest = sub.add_parser("ingest", help="mine methods from a text file")
    p_ingest.add_argument("file")
    p_ingest.add_argument(
        "--source",
        default="user_input",
        choices=[s.value for s in ContentSource],
    )
    p_ingest.add_argument("--scope", default="global", help="global or user:<id>")
    p_ingest.set_defaults(func=cmd_ingest)

    p_methods = sub.add_parser("methods", help="inspect stored methods")
    methods_sub = p_methods.add_subparsers(dest="action", required=True)
    methods_sub.add_parser("list").set_defaults(func=cmd_methods)
    p_show = methods_sub.add_parser("show")
    p_show.add_argument("id")
    p_show.set_defaults(func=cmd_methods)
    p_rm = methods_sub.add_parser("rm")
    p_rm.add_argument("id")
    p_rm.set_defaults(func=cmd_methods)

    p_eval = sub.add_parser("eval", help="replay a scenario and report scores")
    p_eval.add_argument("scenario", help="scenario file or bundled name")
    p_eval.add_argument("--out", default="eval_results", help="output directory")
    p_eval.add_argument("--trials", type=int, help="override the scenario's trial count")
    p_eval.set_defaults(func=cmd_eval)

    sub.add_parser("reset", help="clear the repository").set_defaults(func=cmd_reset)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MethodForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
