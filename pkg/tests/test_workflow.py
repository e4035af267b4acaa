from fractions import Fraction

import pytest

from lexgap import workflow as wf
from lexgap.agreement import Answer, parse_answer
from lexgap.errors import (
    AllDontKnow,
    BadAnswerSyntax,
    BadConfig,
    KOutOfRange,
    MissingDecision,
    RunnerFailure,
)


LABELS = {
    "A": Answer.gap(),
    "B": Answer.equivalent(["e1"]),
    "C": Answer.new_word("x"),
    "K": Answer.dont_know(),
}

# item-column patterns with exact alpha values (3 annotators, labels A/B):
# counts are (AAA, AAB, BBB)
PATTERNS = {
    "0.75": (2, 1, 2),
    "0.80": (5, 2, 6),
    "0.50": (1, 2, 2),
    "0.89": (8, 2, 16),
    "0.59": (17, 17, 21),
}


PASSING = {"0.75", "0.80", "0.89"}


def columns_for(pattern_name, width=3):
    if width == 3:
        aaa, aab, bbb = PATTERNS[pattern_name]
        return [("A", "A", "A")] * aaa + [("A", "A", "B")] * aab + [("B", "B", "B")] * bbb
    # narrower runs only need to land on the right side of the threshold
    if pattern_name in PASSING:
        base = [("A", "A"), ("B", "B"), ("A", "A"), ("B", "B")]
    else:
        base = [("A", "B"), ("B", "A"), ("A", "A"), ("B", "B")]
    return [labels[:width] for labels in base]


def build_run(run_id, participants, columns):
    responses = []
    for index, labels in enumerate(columns, start=1):
        assert len(labels) == len(participants)
        for worker, label in zip(participants, labels):
            responses.append(
                wf.RunResponse(f"i{index}", worker, LABELS[label], duration_seconds=90.0)
            )
    return wf.TaskRun(run_id, tuple(participants), tuple(responses))


class ScriptedRunner:
    """Maps participant sets to fixed response patterns; records every call."""

    def __init__(self, script, default="0.50"):
        self.script = {frozenset(k): v for k, v in script.items()}
        self.default = default
        self.calls = []

    def __call__(self, participants):
        self.calls.append(tuple(participants))
        name = self.script.get(frozenset(participants), self.default)
        columns = columns_for(name, width=len(participants))
        return build_run(f"r{len(self.calls)}", tuple(participants), columns)


EXPERT = wf.Worker("exp", role="expert")


def test_pattern_alphas_are_exact():
    for name, expected in [("0.75", Fraction(3, 4)), ("0.89", Fraction(89, 100)),
                           ("0.59", Fraction(59, 100)), ("0.50", Fraction(1, 2)),
                           ("0.80", Fraction(4, 5))]:
        run = build_run("r", ("w1", "w2", "w3"), columns_for(name))
        assert run.report().alpha == expected


# ------------------------------------------------------------- combinations


def test_combinations_lexicographic():
    assert wf.combinations(["w1", "w2", "w3"], 2) == [
        ("w1", "w2"),
        ("w1", "w3"),
        ("w2", "w3"),
    ]


def test_combinations_edges():
    workers = ["w1", "w2"]
    assert wf.combinations(workers, 2) == [("w1", "w2")]
    assert wf.combinations(workers, 0) == [()]
    with pytest.raises(KOutOfRange):
        wf.combinations(workers, 3)
    with pytest.raises(KOutOfRange):
        wf.combinations(workers, -1)


# ------------------------------------------------------------- filter_crowd


def test_filter_crowd_passes_first_run():
    runner = ScriptedRunner({("w1", "w2", "w3"): "0.75"})
    outcome = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.70, runner)
    assert outcome.high_quality == {"w1", "w2", "w3"}
    assert outcome.low_quality == set()
    assert len(outcome.runs_executed) == 1
    assert outcome.passing_alpha == Fraction(3, 4)


def test_filter_crowd_identifies_w3_low_quality():
    runner = ScriptedRunner(
        {
            ("w1", "w2", "w3"): "0.50",
            ("exp", "w1", "w2"): "0.80",
        }
    )
    outcome = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.70, runner)
    assert outcome.low_quality == {"w3"}
    assert outcome.high_quality == {"w1", "w2"}
    assert runner.calls == [("w1", "w2", "w3"), ("exp", "w1", "w2")]
    assert outcome.passing_alpha == Fraction(4, 5)


def test_filter_crowd_all_fail_run_count():
    runner = ScriptedRunner({})  # everything 0.50
    outcome = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.70, runner)
    assert outcome.high_quality == set()
    assert outcome.low_quality == {"w1", "w2", "w3"}
    # 1 full run + C(3,2) + C(3,1)
    assert len(outcome.runs_executed) == 1 + 3 + 3 == 7
    sizes = [len(call) for call in runner.calls]
    assert sizes == [3, 3, 3, 3, 2, 2, 2]
    # partition invariant
    assert outcome.high_quality | outcome.low_quality == {"w1", "w2", "w3"}


def test_filter_crowd_expert_joins_in_order():
    runner = ScriptedRunner({("exp", "w2"): "0.80"})
    outcome = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.70, runner)
    assert outcome.high_quality == {"w2"}
    assert outcome.low_quality == {"w1", "w3"}
    expected_calls = [
        ("w1", "w2", "w3"),
        ("exp", "w1", "w2"),
        ("exp", "w1", "w3"),
        ("exp", "w2", "w3"),
        ("exp", "w1"),
        ("exp", "w2"),
    ]
    assert runner.calls == expected_calls


def test_filter_crowd_runner_failure_wrapped():
    def broken(participants):
        raise RuntimeError("network down")

    with pytest.raises(RunnerFailure):
        wf.filter_crowd(["w1", "w2"], EXPERT, 0.7, broken)


def test_filter_crowd_unanimous_counts_as_pass():
    # single-category runs give indeterminate alpha, which passes
    def unanimous(participants):
        columns = [("A",) * len(participants)] * 4
        return build_run("r1", tuple(participants), columns)

    outcome = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.99, unanimous)
    assert outcome.high_quality == {"w1", "w2", "w3"}
    assert outcome.passing_alpha is None


# -------------------------------------------------------- validate_responses


def g1_run(pattern="0.89"):
    return build_run("orig", ("w1", "w2", "w3"), columns_for(pattern))


def test_validate_happy_path_queues_disputed_items():
    runner = ScriptedRunner({})
    result = wf.validate_responses(
        ["w1", "w2", "w3"], g1_run("0.89"), ["x1", "x2", "x3"], EXPERT, 0.70, runner
    )
    assert result.outcome.high_quality == {"w1", "w2", "w3"}
    assert runner.calls == []  # no re-runs
    # the 0.89 pattern has exactly two split items (positions 9 and 10)
    assert result.expert_queue == ["i9", "i10"]
    assert not result.queued_in_full


def test_validate_happy_path_queues_dontknow_even_at_full_agreement():
    columns = [("A", "A", "A"), ("A", "K", "A"), ("B", "B", "B")]
    run = build_run("orig", ("w1", "w2", "w3"), columns)
    result = wf.validate_responses(
        ["w1", "w2", "w3"], run, ["x1"], EXPERT, 0.70, ScriptedRunner({})
    )
    assert result.outcome.high_quality == {"w1", "w2", "w3"}
    assert result.expert_queue == ["i2"]


def test_validate_task5_narrative_one_worker_replaced():
    # original agreement 0.59, first mixed re-run 0.89
    runner = ScriptedRunner({("w1", "w2", "x1"): "0.89"})
    result = wf.validate_responses(
        ["w1", "w2", "w3"], g1_run("0.59"), ["x1", "x2", "x3"], EXPERT, 0.70, runner
    )
    assert result.outcome.low_quality == {"w3"}
    assert result.outcome.high_quality == {"w1", "w2"}
    assert result.outcome.passing_alpha == Fraction(89, 100)
    assert len(result.outcome.runs_executed) == 1
    assert runner.calls == [("w1", "w2", "x1")]
    assert result.expert_queue == ["i9", "i10"]


def test_validate_enumeration_order_replacements_outer():
    # force failure until the very last size-1 stage combination
    runner = ScriptedRunner({("w2", "w3", "x3"): "0.80"})
    result = wf.validate_responses(
        ["w1", "w2", "w3"], g1_run("0.59"), ["x1", "x2", "x3"], EXPERT, 0.70, runner
    )
    expected_calls = [
        ("w1", "w2", "x1"), ("w1", "w3", "x1"), ("w2", "w3", "x1"),
        ("w1", "w2", "x2"), ("w1", "w3", "x2"), ("w2", "w3", "x2"),
        ("w1", "w2", "x3"), ("w1", "w3", "x3"), ("w2", "w3", "x3"),
    ]
    assert runner.calls == expected_calls
    assert result.outcome.high_quality == {"w2", "w3"}
    assert result.outcome.low_quality == {"w1"}


def test_validate_terminal_branch_queues_everything():
    runner = ScriptedRunner({})  # all 0.50
    original = g1_run("0.59")
    result = wf.validate_responses(
        ["w1", "w2", "w3"], original, ["x1", "x2", "x3"], EXPERT, 0.70, runner
    )
    assert result.outcome.high_quality == set()
    assert result.outcome.low_quality == {"w1", "w2", "w3"}
    assert result.g2_low_quality == {"x1", "x2", "x3"}
    # stage run counts: C(3,2)C(3,1) + C(3,1)C(3,2) + C(3,0)C(3,3)
    assert len(result.outcome.runs_executed) == 9 + 9 + 1 == 19
    assert runner.calls[-1] == ("x1", "x2", "x3")
    assert result.queued_in_full
    assert result.expert_queue == original.items()
    assert len(result.expert_queue) == 55


def test_validate_g2_smaller_than_g1_stops_at_m():
    runner = ScriptedRunner({})
    result = wf.validate_responses(
        ["w1", "w2", "w3"], g1_run("0.59"), ["x1"], EXPERT, 0.70, runner
    )
    # only the k=1 stage is possible: C(3,2) runs
    assert len(result.outcome.runs_executed) == 3
    assert result.queued_in_full


def test_validate_run_counts_match_closed_forms():
    from math import comb

    runner = ScriptedRunner({})
    g2 = ["x1", "x2"]
    result = wf.validate_responses(
        ["w1", "w2", "w3"], g1_run("0.59"), g2, EXPERT, 0.70, runner
    )
    expected = sum(comb(3, 3 - k) * comb(len(g2), k) for k in range(1, 4))
    assert len(result.outcome.runs_executed) == expected


def test_procedures_reproducible_with_deterministic_runner():
    script = {("exp", "w1", "w3"): "0.80"}
    first_runner = ScriptedRunner(script)
    second_runner = ScriptedRunner(script)
    first = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.70, first_runner)
    second = wf.filter_crowd(["w1", "w2", "w3"], EXPERT, 0.70, second_runner)
    assert first_runner.calls == second_runner.calls
    assert (first.high_quality, first.low_quality) == (second.high_quality, second.low_quality)
    assert first.passing_alpha == second.passing_alpha

    v_script = {("w2", "w3", "x2"): "0.89"}
    run = g1_run("0.59")
    a = wf.validate_responses(["w1", "w2", "w3"], run, ["x1", "x2"], EXPERT, 0.70,
                              ScriptedRunner(v_script))
    b = wf.validate_responses(["w1", "w2", "w3"], run, ["x1", "x2"], EXPERT, 0.70,
                              ScriptedRunner(v_script))
    assert a.expert_queue == b.expert_queue
    assert a.outcome.high_quality == b.outcome.high_quality
    assert a.outcome.runs_executed == b.outcome.runs_executed


# ---------------------------------------------------------------- consensus


def test_consensus_unanimous():
    result = wf.consensus([Answer.gap()] * 3)
    assert result.kind == "gap"


def test_consensus_majority():
    result = wf.consensus([Answer.gap(), Answer.gap(), Answer.equivalent(["e1"])])
    assert result.kind == "gap"


def test_consensus_tie_unresolved():
    result = wf.consensus(
        [Answer.gap(), Answer.equivalent(["e1"]), Answer.new_word("x")]
    )
    assert result is None


def test_consensus_ignores_abstentions():
    result = wf.consensus([Answer.dont_know(), Answer.equivalent(["e1"])])
    assert result.kind == "equivalent"


def test_consensus_all_dont_know():
    with pytest.raises(AllDontKnow):
        wf.consensus([Answer.dont_know(), Answer.dont_know()])


# ------------------------------------------------------------- expert sheet


def sheet_fixture():
    items = {f"i{k}": (f"lemma{k}", f"gloss{k}") for k in range(1, 21)}
    responses = {}
    # ten disputed items: 2 gap + 1 equivalent
    for k in range(1, 11):
        responses[f"i{k}"] = [
            ("w1", Answer.gap()),
            ("w2", Answer.gap()),
            ("w3", Answer.equivalent(["e1"])),
        ]
    # ten unanimous items
    for k in range(11, 21):
        responses[f"i{k}"] = [
            ("w1", Answer.gap()),
            ("w2", Answer.gap()),
            ("w3", Answer.gap()),
        ]
    queue = [f"i{k}" for k in range(1, 11)]
    return queue, responses, items


def test_sheet_ten_disputed_yields_one_sanity_row():
    queue, responses, items = sheet_fixture()
    rows = wf.export_expert_sheet(queue, responses, items, sanity_rate=0.10, seed=7)
    kinds = [r.row_kind for r in rows]
    assert kinds.count("sanity") == 1
    assert kinds.count("disputed") == 30
    sanity = [r for r in rows if r.row_kind == "sanity"][0]
    assert sanity.item_id in {f"i{k}" for k in range(11, 21)}


def test_sheet_zero_sanity_rate():
    queue, responses, items = sheet_fixture()
    rows = wf.export_expert_sheet(queue, responses, items, sanity_rate=0, seed=7)
    assert all(r.row_kind != "sanity" for r in rows)


def test_sheet_deterministic_for_seed():
    queue, responses, items = sheet_fixture()
    first = wf.export_expert_sheet(queue, responses, items, 0.10, seed=42)
    second = wf.export_expert_sheet(queue, responses, items, 0.10, seed=42)
    assert wf.sheet_to_csv(first) == wf.sheet_to_csv(second)
    different = wf.export_expert_sheet(queue, responses, items, 0.5, seed=43)
    assert len(different) >= len(first)


def test_sheet_not_enough_unanimous_takes_all(caplog):
    items = {"i1": ("l1", "g1"), "i2": ("l2", "g2"), "i3": ("l3", "g3")}
    responses = {
        "i1": [("w1", Answer.gap()), ("w2", Answer.equivalent(["e1"]))],
        "i2": [("w1", Answer.gap()), ("w2", Answer.gap())],
        "i3": [("w1", Answer.gap()), ("w2", Answer.new_word("z"))],
    }
    # two queued items at rate 1.0 want two sanity rows; only i2 is unanimous
    with caplog.at_level("WARNING"):
        rows = wf.export_expert_sheet(["i1", "i3"], responses, items, 1.0, seed=1)
    sanity_rows = [r for r in rows if r.row_kind == "sanity"]
    assert len(sanity_rows) == 1
    assert sanity_rows[0].item_id == "i2"
    assert "unanimous" in caplog.text


def test_sheet_dontknow_rows_marked():
    items = {"i1": ("l1", "g1")}
    responses = {"i1": [("w1", Answer.dont_know()), ("w2", Answer.gap())]}
    rows = wf.export_expert_sheet(["i1"], responses, items, 0, 0)
    assert [r.row_kind for r in rows] == ["dontknow", "disputed"]


def test_sheet_csv_round_trip():
    queue, responses, items = sheet_fixture()
    rows = wf.export_expert_sheet(queue, responses, items, 0.10, seed=5)
    for row in rows:
        if row.row_kind == "disputed" and row.worker_answer.kind == "gap":
            row.expert_decision = wf.Decision("confirm-gap")
        elif row.row_kind == "disputed":
            row.expert_decision = wf.Decision("correct-word", "mawz", "banana fruit")
    text = wf.sheet_to_csv(rows)
    parsed = wf.sheet_from_csv(text)
    assert len(parsed) == len(rows)
    assert wf.sheet_to_csv(parsed) == text
    header = text.splitlines()[0]
    assert header == "worker_id,source_lemma,source_gloss,worker_answer,row_kind,expert_decision"


def test_decision_serialization():
    assert wf.serialize_decision(wf.Decision("confirm-gap")) == "CONFIRM_GAP"
    token = wf.serialize_decision(wf.Decision("correct-word", "khubz shrak", "flat bread"))
    assert token == "CORRECT_WORD:khubz shrak|flat bread"
    parsed = wf.parse_decision(token)
    assert parsed.word == "khubz shrak" and parsed.gloss == "flat bread"
    assert wf.parse_decision("") is None
    with pytest.raises(BadAnswerSyntax):
        wf.parse_decision("NOPE")
    with pytest.raises(BadAnswerSyntax):
        wf.Decision("correct-word", "")


def row(lemma, answer, decision=None, kind="disputed", item_id=""):
    return wf.ExpertSheetRow(
        worker_id="w1",
        source_lemma=lemma,
        source_gloss=f"{lemma} gloss",
        worker_answer=answer,
        row_kind=kind,
        expert_decision=decision,
        item_id=item_id or lemma,
    )


def test_apply_decisions_chapatti_correction():
    rows = [
        row("chapatti", Answer.gap(), wf.Decision("reject-gap", "khubz shrak", "flat bread")),
    ]
    records = wf.apply_expert_decisions(rows)
    assert records[0].kind == "word"
    assert records[0].word == "khubz shrak"
    assert records[0].provenance == "expert-corrected"
    assert records[0].overridden


def test_apply_decisions_pudding_becomes_gap():
    rows = [row("mihallabiya", Answer.equivalent(["e_pudding"]), wf.Decision("confirm-gap"))]
    records = wf.apply_expert_decisions(rows)
    assert records[0].kind == "gap"
    assert records[0].provenance == "expert"
    assert records[0].overridden


def test_apply_decisions_confirmations_keep_crowd_provenance():
    rows = [
        row("banana", Answer.equivalent(["e_mawz"]), wf.Decision("confirm-word")),
        row("cider", Answer.gap(), wf.Decision("confirm-gap")),
    ]
    records = wf.apply_expert_decisions(rows)
    by_lemma = {r.source_lemma: r for r in records}
    assert by_lemma["banana"].kind == "word"
    assert by_lemma["banana"].entries == ("e_mawz",)
    assert by_lemma["banana"].provenance == "crowd"
    assert by_lemma["cider"].kind == "gap"
    assert by_lemma["cider"].provenance == "crowd"


def test_apply_decisions_dontknow_resolution():
    rows = [
        row("kembili", Answer.dont_know(), wf.Decision("resolve-gap"), kind="dontknow"),
        row("rabuk", Answer.dont_know(), wf.Decision("resolve-word", "abon", "ground meat"), kind="dontknow"),
    ]
    records = wf.apply_expert_decisions(rows)
    by_lemma = {r.source_lemma: r for r in records}
    assert by_lemma["kembili"].kind == "gap"
    assert by_lemma["kembili"].provenance == "expert"
    assert by_lemma["rabuk"].kind == "word"
    assert by_lemma["rabuk"].word == "abon"


def test_apply_decisions_word_beats_gap_within_item():
    rows = [
        row("stout", Answer.gap(), wf.Decision("confirm-gap"), item_id="i1"),
        row("stout", Answer.new_word("stawt"), wf.Decision("confirm-word"), item_id="i1"),
    ]
    records = wf.apply_expert_decisions(rows)
    assert len(records) == 1
    assert records[0].kind == "word"
    assert records[0].word == "stawt"


def test_apply_decisions_missing_decision_rejected():
    rows = [row("cider", Answer.gap())]
    with pytest.raises(MissingDecision):
        wf.apply_expert_decisions(rows)


def test_apply_decisions_sanity_rows_ignored():
    rows = [
        row("banana", Answer.equivalent(["e1"]), None, kind="sanity"),
        row("cider", Answer.gap(), wf.Decision("confirm-gap")),
    ]
    records = wf.apply_expert_decisions(rows)
    assert [r.source_lemma for r in records] == ["cider"]


def test_apply_decisions_confirm_word_on_gap_is_rejected():
    rows = [row("cider", Answer.gap(), wf.Decision("confirm-word"))]
    with pytest.raises(BadAnswerSyntax):
        wf.apply_expert_decisions(rows)
