"""Scenario replay and scoring.

A scenario is a scripted chat: prompt turns (optionally scored against a
reference sentence under a named condition), teach turns, rank submissions,
and resets. Every trial starts from a cleared repository. Scores are raw
cosine similarities from the deterministic token embedder, so compare
conditions by their ordering; the magnitudes are fixture-dependent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .config import Settings
from .embedding import HashingEmbedder, cosine
from .errors import ScenarioError
from .gateway import load_fixture, make_backend
from .orchestrator import Orchestrator
from .repository import MethodRepository

REPORT_NOTE = (
    "scores are cosine similarities under the deterministic token embedder; "
    "compare conditions by ordering, not magnitude"
)

_STEP_KINDS = ("prompt", "teach", "rank", "reset")


@dataclass(frozen=True)
class ScenarioStep:
    kind: str
    text: str | None = None
    condition: str | None = None
    ordering: tuple[int, ...] | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    steps: tuple[ScenarioStep, ...]
    reference: str
    trials: int
    fixture: str

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1")
        if not self.reference.strip():
            raise ScenarioError("reference sentence must be non-empty")


@dataclass
class ConditionSeries:
    label: str
    scores: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return sum(self.scores) / len(self.scores) if self.scores else float("nan")


@dataclass
class EvalReport:
    scenario: str
    trials: int
    conditions: list[ConditionSeries]
    errors: list[str] = field(default_factory=list)

    def condition(self, label: str) -> ConditionSeries:
        for series in self.conditions:
            if series.label == label:
                return series
        raise KeyError(label)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("methodforge") / "fixtures" / f"{name}.yaml"))


def _resolve(reference: str, relative_to: Path | None) -> Path:
    candidate = Path(reference)
    if candidate.exists():
        return candidate
    if relative_to is not None and (relative_to / reference).exists():
        return relative_to / reference
    bundled = bundled_path(Path(reference).stem)
    if bundled.exists():
        return bundled
    raise ScenarioError(f"cannot resolve file reference: {reference}")


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load a scenario by file path or bundled name (e.g. "sufhongkey")."""
    path = _resolve(str(path_or_name), relative_to=None)
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ScenarioError(f"scenario {path} must contain a mapping")
    steps: list[ScenarioStep] = []
    for i, entry in enumerate(raw.get("steps", [])):
        kind = entry.get("kind")
        if kind not in _STEP_KINDS:
            raise ScenarioError(f"step {i}: kind must be one of {_STEP_KINDS}, got {kind!r}")
        if kind in ("prompt", "teach") and not str(entry.get("text", "")).strip():
            raise ScenarioError(f"step {i}: {kind} step needs text")
        ordering = entry.get("ordering")
        if kind == "rank":
            if not ordering:
                raise ScenarioError(f"step {i}: rank step needs an ordering")
            ordering = tuple(int(v) for v in ordering)
        steps.append(
            ScenarioStep(
                kind=kind,
                text=entry.get("text"),
                condition=entry.get("condition"),
                ordering=ordering,
            )
        )
    try:
        fixture_path = _resolve(str(raw["fixture"]), relative_to=path.parent)
        return Scenario(
            name=str(raw["name"]),
            steps=tuple(steps),
            reference=str(raw["reference"]),
            trials=int(raw.get("trials", 1)),
            fixture=str(fixture_path),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario {path} is missing required key {exc}") from exc


def score(response_text: str, reference_text: str, embedder: HashingEmbedder | None = None) -> float:
    """Raw cosine between embedded texts (not the [0,1]-mapped relevance)."""
    embedder = embedder or HashingEmbedder()
    return cosine(embedder.embed(response_text), embedder.embed(reference_text))


def run_scenario(scenario: Scenario, settings: Settings | None = None) -> EvalReport:
    """Replay the scenario `trials` times, clearing storage before each trial."""
    settings = settings or Settings()
    fixture = load_fixture(scenario.fixture)
    backend = make_backend(settings, fixture=fixture)
    scorer = HashingEmbedder(dimension=settings.dimension, seed=settings.seed)
    repository = MethodRepository(settings)
    orchestrator = Orchestrator(repository, backend, settings)

    conditions: dict[str, ConditionSeries] = {}
    for step in scenario.steps:
        if step.kind == "prompt" and step.condition:
            conditions.setdefault(step.condition, ConditionSeries(label=step.condition))
    report = EvalReport(
        scenario=scenario.name, trials=scenario.trials, conditions=list(conditions.values())
    )

    for trial in range(scenario.trials):
        repository.reset()
        session = orchestrator.create_session()
        collected: dict[str, float] = {}
        try:
            for step in scenario.steps:
                if step.kind == "reset":
                    repository.reset()
                elif step.kind == "rank":
                    if not session.turns:
                        raise ScenarioError("rank step before any prompt")
                    orchestrator.submit_ranking(
                        session, len(session.turns) - 1, list(step.ordering or ())
                    )
                else:
                    response = orchestrator.handle_query(session, step.text or "")
                    if step.kind == "prompt" and step.condition:
                        collected[step.condition] = score(
                            response.outputs[0][1], scenario.reference, scorer
                        )
        except Exception as exc:  # noqa: BLE001 - a failed trial is reported, not fatal
            report.errors.append(f"trial {trial + 1}: {type(exc).__name__}: {exc}")
            continue
        for label, value in collected.items():
            conditions[label].scores.append(value)
    return report


# -- rendering -----------------------------------------------------------


def render_table(report: EvalReport) -> str:
    lines = [
        f"scenario: {report.scenario}  (trials: {report.trials})",
        f"note: {REPORT_NOTE}",
        "",
        f"{'condition':<14}{'mean':>10}{'min':>10}{'max':>10}{'trials':>8}",
    ]
    for series in report.conditions:
        if series.scores:
            lines.append(
                f"{series.label:<14}{series.mean:>10.4f}{min(series.scores):>10.4f}"
                f"{max(series.scores):>10.4f}{len(series.scores):>8}"
            )
        else:
            lines.append(f"{series.label:<14}{'n/a':>10}{'n/a':>10}{'n/a':>10}{0:>8}")
    for error in report.errors:
        lines.append(f"error: {error}")
    return "\n".join(lines)


def write_csv(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["condition", "trial", "score"])
        for series in report.conditions:
            for trial, value in enumerate(series.scores, start=1):
                writer.writerow([series.label, trial, repr(value)])
    return path


def write_figure(report: EvalReport, path: str | Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = [s.label for s in report.conditions]
    means = [s.mean for s in report.conditions]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, means, color=["#7f7f7f", "#2c7fb8", "#41ab5d", "#e6550d"][: len(labels)])
    ax.bar_label(bars, fmt="%.3f", padding=2, fontsize=9)
    ax.set_ylabel("mean cosine similarity")
    ax.set_ylim(0, 1.0)
    ax.set_title(f"{report.scenario}: mean response similarity to reference")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def report_render(report: EvalReport, out_dir: str | Path | None = None) -> str:
    """Text table; when out_dir is given also writes the CSV and the figure."""
    table = render_table(report)
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_csv(report, out_dir / f"{report.scenario}_trials.csv")
        write_figure(report, out_dir / f"{report.scenario}_means.png")
        (out_dir / f"{report.scenario}_summary.txt").write_text(table + "\n", encoding="utf-8")
    return table
