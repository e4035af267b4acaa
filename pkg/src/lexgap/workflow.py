"""Combinatorial crowd procedures: agreement-gated worker filtering,
collected-data validation with replacement workers, consensus aggregation,
and the expert-sheet round trip.

Both procedures drive an injected runner callback, so the same code paths
serve scripted tests, seeded simulations, and the live service (where the
runner looks up responses that workers have already submitted).
"""

from __future__ import annotations

import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .agreement import (
    AgreementReport,
    Answer,
    agreement_report,
    item_iaa,
    parse_answer,
    serialize_answer,
)
from .errors import (
    AllDontKnow,
    BadAnswerSyntax,
    BadConfig,
    KOutOfRange,
    LexgapError,
    MissingDecision,
    NoPairableItems,
    RunnerFailure,
)

log = logging.getLogger(__name__)

WORKER_ROLES = ("candidate", "qualified", "expert")
WORKER_STATUSES = ("active", "low-quality", "replaced")


@dataclass
class Worker:
    id: str
    role: str = "candidate"
    status: str = "active"


@dataclass(frozen=True)
class RunResponse:
    item: str
    worker: str
    answer: Answer
    duration_seconds: float = 0.0


@dataclass(frozen=True)
class TaskRun:
    run_id: str
    participants: tuple[str, ...]
    responses: tuple[RunResponse, ...]

    def __post_init__(self):
        allowed = set(self.participants)
        for response in self.responses:
            if response.worker not in allowed:
                raise BadConfig(
                    f"run {self.run_id}: response by non-participant {response.worker}"
                )

    def items(self) -> list[str]:
        seen: list[str] = []
        for response in self.responses:
            if response.item not in seen:
                seen.append(response.item)
        return seen

    def answers_for(self, item: str) -> list[Answer]:
        return [r.answer for r in self.responses if r.item == item]

    def report(self) -> AgreementReport:
        return agreement_report((r.item, r.worker, r.answer) for r in self.responses)


Runner = Callable[[tuple[str, ...]], TaskRun]


@dataclass
class ClassificationOutcome:
    high_quality: set[str]
    low_quality: set[str]
    runs_executed: list[str] = field(default_factory=list)
    passing_alpha: Optional[Fraction] = None


def combinations(workers: Sequence[str], k: int) -> list[tuple[str, ...]]:
    """All C(n, k) subsets, lexicographic by member position."""
    if not 0 <= k <= len(workers):
        raise KOutOfRange(f"k={k} outside 0..{len(workers)}")
    return list(itertools.combinations(workers, k))


def _execute(
    runner: Runner, participants: tuple[str, ...]
) -> tuple[TaskRun, Optional[AgreementReport]]:
    try:
        run = runner(participants)
    except LexgapError:
        raise
    except Exception as exc:
        raise RunnerFailure(f"runner failed for {participants}: {exc}") from exc
    if set(run.participants) != set(participants):
        raise RunnerFailure(
            f"runner returned participants {run.participants}, wanted {participants}"
        )
    try:
        return run, run.report()
    except NoPairableItems:
        # a run nobody could pair cannot clear any threshold
        return run, None


def _passes(report: Optional[AgreementReport], threshold: float) -> bool:
    return report is not None and report.passes(threshold)


def filter_crowd(
    group: Sequence[str],
    expert: Worker,
    threshold: float,
    runner: Runner,
) -> ClassificationOutcome:
    """Split a worker group into high/low quality by agreement.

    The whole group runs first, without the expert. Below threshold, the
    expert joins every subset of size n-1 down to 1 in lexicographic order
    (the expert's answers count toward agreement); the first passing run
    marks its subset high quality and the complement low, and stops. If no
    run passes, the whole group is low quality.
    """
    group = tuple(group)
    if len(group) < 2:
        raise BadConfig("filtering needs at least two workers")
    if expert.id in group:
        raise BadConfig("the expert cannot be a member of the filtered group")
    if not 0 < threshold <= 1:
        raise BadConfig(f"threshold must be in (0, 1], got {threshold}")

    runs: list[str] = []
    run, report = _execute(runner, group)
    runs.append(run.run_id)
    if _passes(report, threshold):
        return ClassificationOutcome(set(group), set(), runs, report.alpha)

    for size in range(len(group) - 1, 0, -1):
        for subset in combinations(group, size):
            run, report = _execute(runner, (expert.id,) + subset)
            runs.append(run.run_id)
            if _passes(report, threshold):
                return ClassificationOutcome(
                    set(subset), set(group) - set(subset), runs, report.alpha
                )
    return ClassificationOutcome(set(), set(group), runs, None)


def expert_queue_for(run: TaskRun) -> list[str]:
    """Items that need the expert: below-100% agreement or any abstention."""
    queue: list[str] = []
    for item in run.items():
        answers = run.answers_for(item)
        if any(a.is_missing for a in answers):
            queue.append(item)
            continue
        percent, _ = item_iaa(answers)
        if percent < 100:
            queue.append(item)
    return queue


@dataclass
class ValidationResult:
    outcome: ClassificationOutcome
    expert_queue: list[str]
    deciding_run: TaskRun
    queued_in_full: bool = False
    g2_low_quality: set[str] = field(default_factory=set)


def validate_responses(
    g1: Sequence[str],
    g1_run: TaskRun,
    g2: Sequence[str],
    expert: Worker,
    threshold: float,
    runner: Runner,
) -> ValidationResult:
    """Validate collected responses, replacing workers when agreement fails.

    If the original run's agreement clears the threshold, the first group
    is high quality and only contested or abstained items go to the expert.
    Otherwise the task re-runs with k first-group workers swapped for k
    replacements (k = 1..n, total annotators held at n): for every
    replacement subset in lexicographic order, every remaining-first-group
    subset in lexicographic order. The first passing run fixes the
    classification and its contested items feed the expert; the final stage
    is the replacement group alone. When nothing passes, everyone is low
    quality and the original responses go to the expert in full.
    """
    g1 = tuple(g1)
    g2 = tuple(g2)
    n = len(g1)
    if n < 2:
        raise BadConfig("validation needs at least two original workers")
    if not g2:
        raise BadConfig("validation needs at least one replacement worker")
    if not 0 < threshold <= 1:
        raise BadConfig(f"threshold must be in (0, 1], got {threshold}")
    if set(g1_run.participants) != set(g1):
        raise BadConfig("original run participants differ from the first group")

    runs: list[str] = []
    try:
        report: Optional[AgreementReport] = g1_run.report()
    except NoPairableItems:
        report = None
    if _passes(report, threshold):
        outcome = ClassificationOutcome(set(g1), set(), runs, report.alpha)
        return ValidationResult(outcome, expert_queue_for(g1_run), g1_run)

    for k in range(1, n + 1):
        if k > len(g2):
            break
        for replacement in combinations(g2, k):
            for kept in combinations(g1, n - k):
                run, report = _execute(runner, kept + replacement)
                runs.append(run.run_id)
                if _passes(report, threshold):
                    outcome = ClassificationOutcome(
                        set(kept), set(g1) - set(kept), runs, report.alpha
                    )
                    return ValidationResult(outcome, expert_queue_for(run), run)

    outcome = ClassificationOutcome(set(), set(g1), runs, None)
    return ValidationResult(
        outcome,
        g1_run.items(),
        g1_run,
        queued_in_full=True,
        g2_low_quality=set(g2),
    )


def consensus(answers: Sequence[Answer]) -> Optional[Answer]:
    """Unique modal non-abstention answer, or None when tied (expert-bound)."""
    judged = [a for a in answers if not a.is_missing]
    if not judged:
        raise AllDontKnow("no judgment to aggregate")
    _, modal = item_iaa(judged)
    return modal


# ------------------------------------------------------------ expert sheet

DECISION_KINDS = (
    "confirm-word",
    "correct-word",
    "confirm-gap",
    "reject-gap",
    "resolve-gap",
    "resolve-word",
)
_WORD_BEARING = {"correct-word", "reject-gap", "resolve-word"}
_DECISION_TOKENS = {
    "confirm-word": "CONFIRM_WORD",
    "correct-word": "CORRECT_WORD",
    "confirm-gap": "CONFIRM_GAP",
    "reject-gap": "REJECT_GAP",
    "resolve-gap": "RESOLVE_GAP",
    "resolve-word": "RESOLVE_WORD",
}
_TOKEN_DECISIONS = {v: k for k, v in _DECISION_TOKENS.items()}


@dataclass(frozen=True)
class Decision:
    kind: str
    word: str = ""
    gloss: str = ""

    def __post_init__(self):
        if self.kind not in DECISION_KINDS:
            raise BadAnswerSyntax(f"unknown decision kind {self.kind!r}")
        if self.kind in _WORD_BEARING and not self.word.strip():
            raise BadAnswerSyntax(f"{self.kind} needs a word")


def serialize_decision(decision: Optional[Decision]) -> str:
    if decision is None:
        return ""
    token = _DECISION_TOKENS[decision.kind]
    if decision.kind in _WORD_BEARING:
        payload = decision.word
        if decision.gloss:
            payload += f"|{decision.gloss}"
        return f"{token}:{payload}"
    return token


def parse_decision(text: str) -> Optional[Decision]:
    token = text.strip()
    if not token:
        return None
    name, _, payload = token.partition(":")
    kind = _TOKEN_DECISIONS.get(name)
    if kind is None:
        raise BadAnswerSyntax(f"unrecognized decision {text!r}")
    word, _, gloss = payload.partition("|")
    return Decision(kind, word.strip(), gloss.strip())


@dataclass
class ExpertSheetRow:
    worker_id: str
    source_lemma: str
    source_gloss: str
    worker_answer: Answer
    row_kind: str  # disputed | dontknow | sanity
    expert_decision: Optional[Decision] = None
    item_id: str = ""  # in-process only; not serialized


SHEET_COLUMNS = (
    "worker_id",
    "source_lemma",
    "source_gloss",
    "worker_answer",
    "row_kind",
    "expert_decision",
)


def export_expert_sheet(
    queue: Sequence[str],
    responses: Mapping[str, Sequence[tuple[str, Answer]]],
    items: Mapping[str, tuple[str, str]],
    sanity_rate: float,
    seed: int,
) -> list[ExpertSheetRow]:
    """Build the expert's review sheet.

    One row per (queued item, worker response); abstention rows are kind
    `dontknow`, judgment rows `disputed`. ceil(sanity_rate x queued items)
    extra `sanity` rows are drawn seeded, without replacement, from
    unanimously answered items outside the queue; if too few exist, all are
    taken and a warning is logged.
    """
    if not 0 <= sanity_rate <= 1:
        raise BadConfig(f"sanity_rate must be in [0, 1], got {sanity_rate}")
    rows: list[ExpertSheetRow] = []
    queued = list(dict.fromkeys(queue))
    for item in queued:
        lemma, gloss = items[item]
        for worker, answer in responses.get(item, ()):
            rows.append(
                ExpertSheetRow(
                    worker_id=worker,
                    source_lemma=lemma,
                    source_gloss=gloss,
                    worker_answer=answer,
                    row_kind="dontknow" if answer.is_missing else "disputed",
                    item_id=item,
                )
            )

    wanted = math.ceil(sanity_rate * len(queued))
    if wanted:
        candidates = []
        for item in items:
            if item in queued:
                continue
            answered = [a for _, a in responses.get(item, ())]
            if not answered or any(a.is_missing for a in answered):
                continue
            percent, modal = item_iaa(answered)
            if percent == 100 and modal is not None:
                candidates.append(item)
        if len(candidates) < wanted:
            log.warning(
                "only %d unanimous items available for %d sanity rows; taking all",
                len(candidates),
                wanted,
            )
        chosen = random.Random(seed).sample(candidates, min(wanted, len(candidates)))
        for item in chosen:
            lemma, gloss = items[item]
            pairs = responses[item]
            _, modal = item_iaa([a for _, a in pairs])
            worker = next(w for w, a in pairs if a.same_category(modal))
            rows.append(
                ExpertSheetRow(
                    worker_id=worker,
                    source_lemma=lemma,
                    source_gloss=gloss,
                    worker_answer=modal,
                    row_kind="sanity",
                    item_id=item,
                )
            )
    return rows


def sheet_to_csv(rows: Sequence[ExpertSheetRow]) -> str:
    import csv
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SHEET_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.worker_id,
                row.source_lemma,
                row.source_gloss,
                serialize_answer(row.worker_answer),
                row.row_kind,
                serialize_decision(row.expert_decision),
            ]
        )
    return buffer.getvalue()


def sheet_from_csv(text: str) -> list[ExpertSheetRow]:
    import csv
    import io

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SHEET_COLUMNS:
        raise BadAnswerSyntax(f"bad sheet header {header!r}")
    rows = []
    for record in reader:
        if not record:
            continue
        worker, lemma, gloss, answer, kind, decision = record
        rows.append(
            ExpertSheetRow(
                worker_id=worker,
                source_lemma=lemma,
                source_gloss=gloss,
                worker_answer=parse_answer(answer),
                row_kind=kind,
                expert_decision=parse_decision(decision),
            )
        )
    return rows


@dataclass(frozen=True)
class FinalRecord:
    """The adjudicated verdict for one source item."""

    item_id: str
    source_lemma: str
    kind: str  # gap | word
    entries: tuple[str, ...] = ()
    word: str = ""
    gloss: str = ""
    provenance: str = "crowd"  # crowd | expert | expert-corrected
    overridden: bool = False


def _row_outcome(row: ExpertSheetRow) -> FinalRecord:
    answer = row.worker_answer
    decision = row.expert_decision
    assert decision is not None
    key = row.item_id or row.source_lemma
    if decision.kind == "confirm-word":
        if answer.kind == "equivalent":
            return FinalRecord(key, row.source_lemma, "word", entries=tuple(sorted(answer.entries)))
        if answer.kind == "new-word":
            return FinalRecord(key, row.source_lemma, "word", word=answer.lemma, gloss=answer.gloss)
        raise BadAnswerSyntax(
            f"CONFIRM_WORD on a {answer.kind} answer for {row.source_lemma!r}"
        )
    if decision.kind == "correct-word":
        return FinalRecord(
            key, row.source_lemma, "word",
            word=decision.word, gloss=decision.gloss,
            provenance="expert-corrected", overridden=True,
        )
    if decision.kind == "reject-gap":
        return FinalRecord(
            key, row.source_lemma, "word",
            word=decision.word, gloss=decision.gloss,
            provenance="expert-corrected", overridden=True,
        )
    if decision.kind == "confirm-gap":
        overrode = answer.kind not in ("gap",)
        return FinalRecord(
            key, row.source_lemma, "gap",
            provenance="expert" if overrode else "crowd", overridden=overrode,
        )
    if decision.kind == "resolve-gap":
        return FinalRecord(key, row.source_lemma, "gap", provenance="expert")
    if decision.kind == "resolve-word":
        return FinalRecord(
            key, row.source_lemma, "word",
            word=decision.word, gloss=decision.gloss, provenance="expert",
        )
    raise BadAnswerSyntax(f"unhandled decision {decision.kind}")


def apply_expert_decisions(rows: Sequence[ExpertSheetRow]) -> list[FinalRecord]:
    """Collapse a completed sheet into one verdict per item.

    Every non-sanity row needs a decision; sanity rows are spot checks and
    are skipped whether or not the expert marked them. When rows of one
    item disagree, a word verdict beats a gap verdict (a found equivalence
    falsifies the gap), and an expert-provided word beats a confirmation.
    """
    outcomes: dict[str, list[FinalRecord]] = {}
    order: list[str] = []
    for index, row in enumerate(rows, start=2):  # 2 = first CSV data line
        if row.row_kind == "sanity":
            continue
        if row.expert_decision is None:
            raise MissingDecision(index, f"row {index} ({row.source_lemma!r}) undecided")
        record = _row_outcome(row)
        if record.item_id not in outcomes:
            order.append(record.item_id)
        outcomes.setdefault(record.item_id, []).append(record)

    final: list[FinalRecord] = []
    for key in order:
        records = outcomes[key]
        words = [r for r in records if r.kind == "word"]
        if words:
            provided = [r for r in words if r.word]
            if provided:
                best = provided[0]
                final.append(best)
            else:
                entries = tuple(sorted({e for r in words for e in r.entries}))
                final.append(
                    FinalRecord(key, words[0].source_lemma, "word", entries=entries)
                )
        else:
            gaps = records
            provenance = "crowd" if any(r.provenance == "crowd" for r in gaps) else "expert"
            overridden = any(r.overridden for r in gaps)
            final.append(
                FinalRecord(
                    key, gaps[0].source_lemma, "gap",
                    provenance=provenance, overridden=overridden,
                )
            )
    return final
