from __future__ import annotations

import csv
import math

import pytest

from methodforge.embedding import HashingEmbedder
from methodforge.errors import ScenarioError
from methodforge.evalharness import (
    EvalReport,
    ConditionSeries,
    load_scenario,
    render_table,
    report_render,
    run_scenario,
    score,
    write_csv,
)


def test_score_identical_texts():
    assert score("the same sentence", "the same sentence") == pytest.approx(1.0, abs=1e-12)


def test_score_symmetry_and_disjoint():
    a = "completely unrelated musical instruments"
    b = "quarterly finance report numbers"
    assert score(a, b) == pytest.approx(score(b, a), abs=1e-12)
    assert score(a, b) <= 0.05  # hashed bags are orthogonal up to collisions


def test_score_reference_prefers_existence_check_reply():
    reference = "Verify whether SuHongKey is a real and identifiable piece of software."
    existence_reply = (
        "Before giving any steps I need to verify whether HongHanKey is a real and "
        "identifiable piece of software."
    )
    fabricated_reply = (
        "To re-create your project, open the dashboard, select New Project, then copy "
        "the previous settings into the new workspace."
    )
    assert score(existence_reply, reference) > score(fabricated_reply, reference)


def test_score_uses_raw_cosine():
    # Zero-norm pairs score 0, not the 0.5 relevance mapping.
    assert score("", "anything") == 0.0


def test_load_bundled_scenarios():
    for name in ("sufhongkey", "honghankey"):
        scenario = load_scenario(name)
        assert scenario.trials == 20
        assert scenario.steps[0].kind in ("prompt", "teach")


def test_load_rejects_unknown_kind(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(
        "name: bad\nreference: r\ntrials: 1\nfixture: software_existence.yaml\n"
        "steps:\n  - kind: dance\n",
        encoding="utf-8",
    )
    with pytest.raises(ScenarioError):
        load_scenario(path)


def test_sufhongkey_directional_result():
    report = run_scenario(load_scenario("sufhongkey"))
    assert report.errors == []
    no_method = report.condition("NoMethod")
    taught = report.condition("method1")
    assert len(no_method.scores) == len(taught.scores) == 20
    assert taught.mean - no_method.mean >= 0.2
    assert len(set(taught.scores)) == 1  # deterministic across trials


def test_honghankey_directional_result():
    report = run_scenario(load_scenario("honghankey"))
    assert report.errors == []
    assert report.condition("method2").mean - report.condition("method1").mean >= 0.2


def test_report_mean_is_arithmetic_mean():
    series = ConditionSeries(label="x", scores=[0.25, 0.5, 0.75])
    assert abs(series.mean - 0.5) < 1e-12


def test_render_and_files(tmp_path):
    report = run_scenario(load_scenario("sufhongkey"))
    table = report_render(report, out_dir=tmp_path)
    assert "NoMethod" in table and "method1" in table
    csv_path = tmp_path / "sufhongkey_trials.csv"
    png_path = tmp_path / "sufhongkey_means.png"
    assert csv_path.exists() and png_path.exists()
    assert png_path.stat().st_size > 1000
    # Means recomputed from the machine-readable file match the table values.
    by_condition: dict[str, list[float]] = {}
    with csv_path.open() as handle:
        for row in csv.DictReader(handle):
            by_condition.setdefault(row["condition"], []).append(float(row["score"]))
    for series in report.conditions:
        recomputed = sum(by_condition[series.label]) / len(by_condition[series.label])
        assert abs(recomputed - series.mean) < 1e-9


def test_write_csv_roundtrip_precision(tmp_path):
    report = EvalReport(
        scenario="t",
        trials=2,
        conditions=[ConditionSeries(label="c", scores=[1 / 3, 2 / 7])],
    )
    path = write_csv(report, tmp_path / "t.csv")
    with path.open() as handle:
        values = [float(row["score"]) for row in csv.DictReader(handle)]
    assert values == [1 / 3, 2 / 7]


def test_single_trial_determinism_across_runs():
    import dataclasses

    scenario = dataclasses.replace(load_scenario("honghankey"), trials=1)
    first = run_scenario(scenario)
    second = run_scenario(scenario)
    for s1, s2 in zip(first.conditions, second.conditions):
        assert s1.scores == s2.scores


def test_scorer_dimension_follows_settings():
    embedder = HashingEmbedder(dimension=16, seed=3)
    value = score("alpha beta", "alpha gamma", embedder)
    assert -1.0 <= value <= 1.0 and not math.isnan(value)
