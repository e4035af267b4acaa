"""Campaign lifecycle: task partitioning with attention checks, the
three-step worker session state machine, quality gates, aggregation, and
reporting.

A campaign compares a source dataset against a target dataset for one
semantic field in one direction. Source items are partitioned into
microtasks; workers judge each item as gap / equivalent / new word through
sequential steps; attention-check and completion-time gates drop unreliable
responses before agreement scoring and validation.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .agreement import Answer, parse_answer, serialize_answer
from .errors import (
    ACQBankTooSmall,
    ACQsUnanswered,
    BadConfig,
    BadGuidelines,
    Direction1NotFinal,
    EmptyDataset,
    EmptyField,
    EmptyNewWord,
    IllegalLifecycle,
    InvalidTransition,
    NoSurvivingResponses,
    NotConsented,
    NotFinal,
    SessionDone,
    UnknownCampaign,
)
from .lexicon import LexiconStore, normalize_lemma
from .workflow import (
    RunResponse,
    Runner,
    TaskRun,
    ValidationResult,
    Worker,
    apply_expert_decisions,
    consensus,
    export_expert_sheet,
    validate_responses,
)

DRAFT, ACTIVE, CLOSED = "draft", "active", "closed"


@dataclass(frozen=True)
class CampaignConfig:
    source_language: str
    target_language: str
    semantic_field: str
    questions_per_task: int = 35
    acqs_per_task: int = 3
    time_budget_minutes: int = 60
    alpha_threshold: float = 0.70
    acq_pass_rate: float = 0.90
    sanity_rate: float = 0.10
    outlier_low_ratio: float = 0.25
    outlier_high_ratio: float = 4.0
    shuffle_seed: Optional[int] = None

    def __post_init__(self):
        if self.questions_per_task < 1:
            raise BadConfig("questions_per_task must be positive")
        if self.acqs_per_task < 0:
            raise BadConfig("acqs_per_task cannot be negative")
        if self.questions_per_task >= 10:
            needed = self.questions_per_task // 10
            if self.acqs_per_task < needed:
                raise BadConfig(
                    f"{self.questions_per_task} questions need >= {needed} attention checks"
                )
        if not 0 < self.alpha_threshold <= 1:
            raise BadConfig("alpha_threshold must be in (0, 1]")
        for name in ("acq_pass_rate", "sanity_rate"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise BadConfig(f"{name} must be in [0, 1]")
        if self.outlier_low_ratio < 0 or self.outlier_high_ratio <= 0:
            raise BadConfig("outlier ratios must be non-negative / positive")
        if self.outlier_low_ratio > self.outlier_high_ratio:
            raise BadConfig("outlier_low_ratio cannot exceed outlier_high_ratio")


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    word: str
    gloss: str


@dataclass
class Microtask:
    task_id: str
    items: list[str]
    acq_expected: dict[str, Answer]
    assigned_group: tuple[str, ...] = ()

    @property
    def acq_items(self) -> set[str]:
        return set(self.acq_expected)

    def question_items(self) -> list[str]:
        return [item for item in self.items if item not in self.acq_expected]


@dataclass(frozen=True)
class Response:
    item: str
    worker: str
    answer: Answer
    duration_seconds: float
    submitted_at: float

    def __post_init__(self):
        if self.duration_seconds <= 0:
            raise BadConfig("response duration must be positive")


STEP1, STEP2, STEP3, DONE = "step1", "step2", "step3", "done"


@dataclass
class WorkerSession:
    session_id: str
    worker: str
    task_id: str
    cursor: int = 0
    step: str = STEP1
    consent: Optional[bool] = None
    item_started_at: float = 0.0
    withdrawn: bool = False


def parse_guidelines(document: str) -> list[tuple[str, str]]:
    """Parse the `tip,answer` guidelines spreadsheet."""
    reader = csv.reader(io.StringIO(document))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header[:2]] != ["tip", "answer"]:
        raise BadGuidelines(f"expected header tip,answer, got {header!r}")
    rows = [(r[0].strip(), r[1].strip()) for r in reader if r and r[0].strip()]
    if not rows:
        raise BadGuidelines("no guideline rows")
    return rows


def default_guidelines() -> list[tuple[str, str]]:
    from importlib import resources

    text = (
        resources.files("lexgap").joinpath("data/default_guidelines.csv").read_text("utf-8")
    )
    return parse_guidelines(text)


def parse_acq_bank(document: str) -> list[tuple[str, str, Answer]]:
    """Parse the attention-check bank CSV: word,gloss,expected_answer."""
    reader = csv.reader(io.StringIO(document))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header[:3]] != [
        "word",
        "gloss",
        "expected_answer",
    ]:
        raise BadConfig(f"expected header word,gloss,expected_answer, got {header!r}")
    bank = []
    for row in reader:
        if not row or not row[0].strip():
            continue
        bank.append((row[0].strip(), row[1].strip(), parse_answer(row[2])))
    return bank


def timing_filter(
    responses: Sequence[Response], low_ratio: float, high_ratio: float
) -> tuple[list[Response], list[Response]]:
    """Drop one worker's responses that deviate from their median duration.

    Cutoffs are strict: a duration exactly at low_ratio x median (or
    high_ratio x median) is retained. Fewer than three responses disable
    filtering entirely.
    """
    responses = list(responses)
    if len(responses) < 3:
        return responses, []
    median = statistics.median(r.duration_seconds for r in responses)
    retained, excluded = [], []
    for response in responses:
        duration = response.duration_seconds
        if duration < low_ratio * median or duration > high_ratio * median:
            excluded.append(response)
        else:
            retained.append(response)
    return retained, excluded


@dataclass
class TaskAggregate:
    task_id: str
    run: TaskRun
    consensus: dict[str, Optional[Answer]]
    acq_failed: list[str]
    timing_excluded: list[Response]
    alpha: Optional[Fraction]


@dataclass
class ReportRow:
    task: str
    gaps: int
    words: int
    new_concepts: int
    alpha: Optional[float]


@dataclass
class CampaignReport:
    rows: list[ReportRow]
    total_gaps: int
    total_words: int
    total_new_concepts: int
    average_alpha: Optional[float]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["task", "gaps", "words", "new_concepts", "alpha"])
        for row in self.rows:
            writer.writerow(
                [
                    row.task,
                    row.gaps,
                    row.words,
                    row.new_concepts,
                    "" if row.alpha is None else f"{row.alpha:.2f}",
                ]
            )
        writer.writerow(
            ["total", self.total_gaps, self.total_words, self.total_new_concepts,
             "" if self.average_alpha is None else f"{self.average_alpha:.2f}"]
        )
        return buffer.getvalue()


class Campaign:
    """One direction of a language-pair comparison over a semantic field."""

    def __init__(
        self,
        campaign_id: str,
        config: CampaignConfig,
        source_dataset: Sequence[tuple[str, str]],
        target_dataset: Sequence[tuple[str, str]],
        guidelines: Sequence[tuple[str, str]],
    ):
        if not source_dataset:
            raise EmptyDataset("source dataset is empty")
        if not target_dataset:
            raise EmptyDataset("target dataset is empty")
        if not guidelines:
            raise BadGuidelines("guidelines are empty")
        self.id = campaign_id
        self.config = config
        self.state = DRAFT
        self.guidelines = list(guidelines)
        self.source_items: list[DatasetEntry] = [
            DatasetEntry(f"s{i}", word, gloss)
            for i, (word, gloss) in enumerate(source_dataset, start=1)
        ]
        self.target_items: list[DatasetEntry] = [
            DatasetEntry(f"t{i}", word, gloss)
            for i, (word, gloss) in enumerate(target_dataset, start=1)
        ]
        self._by_item: dict[str, DatasetEntry] = {
            e.id: e for e in (*self.source_items, *self.target_items)
        }
        self._target_by_lemma = {
            normalize_lemma(e.word): e for e in self.target_items
        }
        self.tasks: list[Microtask] = []
        self.rerun_tasks: dict[str, Microtask] = {}
        self._task_by_id: dict[str, Microtask] = {}
        self.sessions: dict[str, WorkerSession] = {}
        self.responses: dict[tuple[str, str, str], Response] = {}  # (task, worker, item)
        self._response_order: list[tuple[str, str, str]] = []
        self.aggregates: dict[str, TaskAggregate] = {}
        self.validations: dict[str, ValidationResult] = {}
        self.final_records: dict[str, dict] = {}  # item id -> verdict record
        self._next_session = 1

    # ---------------------------------------------------------- lifecycle

    def _require_state(self, *states: str) -> None:
        if self.state not in states:
            raise IllegalLifecycle(f"campaign {self.id} is {self.state}, wanted {states}")

    def item(self, item_id: str) -> DatasetEntry:
        entry = self._by_item.get(item_id)
        if entry is None:
            raise EmptyField(f"unknown item {item_id}")
        return entry

    def task(self, task_id: str) -> Microtask:
        task = self._task_by_id.get(task_id)
        if task is None:
            raise UnknownCampaign(f"unknown task {task_id}")
        return task

    def add_rerun_task(self, base_task_id: str, participants: Sequence[str]) -> Microtask:
        """Clone a task's real questions for a validation re-run.

        Re-run tasks are addressable for sessions and answers but stay out
        of self.tasks, so partitioning, reports, and gates ignore them.
        """
        base = self.task(base_task_id)
        number = 1 + sum(1 for t in self.rerun_tasks if t.startswith(f"{base_task_id}-r"))
        task = Microtask(
            f"{base_task_id}-r{number}", list(base.question_items()), {}, tuple(participants)
        )
        self.rerun_tasks[task.task_id] = task
        self._task_by_id[task.task_id] = task
        return task

    def generate_tasks(self, acq_bank: Sequence[tuple[str, str, Answer]]) -> list[Microtask]:
        """Partition the source dataset in order into fixed-size tasks and
        inject attention checks at every 10th position (0-based indices 10,
        20, ...; never first). The bank is cycled across tasks; leftovers in
        a short final task are appended at the tail.
        """
        self._require_state(DRAFT)
        config = self.config
        if config.acqs_per_task and len(acq_bank) < config.acqs_per_task:
            raise ACQBankTooSmall(
                f"bank holds {len(acq_bank)}, task needs {config.acqs_per_task}"
            )
        order = list(self.source_items)
        if config.shuffle_seed is not None:
            random.Random(config.shuffle_seed).shuffle(order)

        resolved_bank: list[tuple[str, str, Answer]] = []
        for word, gloss, expected in acq_bank:
            resolved_bank.append((word, gloss, self._resolve_expected(expected)))

        tasks: list[Microtask] = []
        bank_cursor = 0
        acq_counter = 1
        for start in range(0, len(order), config.questions_per_task):
            chunk = order[start : start + config.questions_per_task]
            questions = [e.id for e in chunk]
            acqs: dict[str, Answer] = {}
            acq_queue: list[str] = []
            for _ in range(config.acqs_per_task):
                word, gloss, expected = resolved_bank[bank_cursor % len(resolved_bank)]
                bank_cursor += 1
                acq_id = f"q{acq_counter}"
                acq_counter += 1
                self._by_item[acq_id] = DatasetEntry(acq_id, word, gloss)
                acqs[acq_id] = expected
                acq_queue.append(acq_id)
            items: list[str] = []
            q_iter = iter(questions)
            a_iter = iter(acq_queue)
            pending_q = list(questions)
            pending_a = list(acq_queue)
            index = 0
            while pending_q or pending_a:
                take_acq = index % 10 == 0 and index > 0 and pending_a
                if take_acq or not pending_q:
                    items.append(pending_a.pop(0) if pending_a else pending_q.pop(0))
                else:
                    items.append(pending_q.pop(0))
                index += 1
            task = Microtask(f"task{len(tasks) + 1}", items, acqs)
            tasks.append(task)
        self.tasks = tasks
        self._task_by_id = {t.task_id: t for t in tasks}
        self.state = ACTIVE
        return tasks

    def _resolve_expected(self, expected: Answer) -> Answer:
        # bank EQ answers name target words; resolve them to candidate ids
        if expected.kind != "equivalent":
            return expected
        ids = []
        for token in expected.entries:
            entry = self._target_by_lemma.get(normalize_lemma(token))
            ids.append(entry.id if entry else token)
        return Answer.equivalent(ids)

    def assign_group(self, task_id: str, workers: Sequence[str]) -> None:
        self._require_state(ACTIVE)
        self.task(task_id).assigned_group = tuple(workers)

    def close(self) -> None:
        self._require_state(ACTIVE, DRAFT)
        self.state = CLOSED

    # ----------------------------------------------------------- sessions

    def open_session(self, worker: str, task_id: str, at: float) -> WorkerSession:
        self._require_state(ACTIVE)
        self.task(task_id)
        session = WorkerSession(
            session_id=f"sess{self._next_session}",
            worker=worker,
            task_id=task_id,
            item_started_at=at,
        )
        self._next_session += 1
        self.sessions[session.session_id] = session
        return session

    def record_consent(self, session: WorkerSession, given: bool, at: float) -> None:
        session.consent = given
        session.item_started_at = at
        if not given:
            session.withdrawn = True
            session.step = DONE

    def _current_item(self, session: WorkerSession) -> str:
        return self.task(session.task_id).items[session.cursor]

    def next_prompt(self, session: WorkerSession) -> dict:
        if session.withdrawn:
            raise SessionDone("session was withdrawn")
        if session.consent is not True:
            raise NotConsented("consent must be recorded before prompts are served")
        task = self.task(session.task_id)
        if session.step == DONE or session.cursor >= len(task.items):
            return {"step": DONE, "task": task.task_id, "answered": session.cursor}
        item = self.item(self._current_item(session))
        base = {
            "step": session.step,
            "item": item.id,
            "position": session.cursor + 1,
            "of": len(task.items),
        }
        if session.step == STEP1:
            base.update(
                word=item.word,
                gloss=item.gloss,
                question=(
                    f"Does {self.config.target_language} have a word for this meaning?"
                ),
                choices=["yes", "no", "dont-know"],
            )
        elif session.step == STEP2:
            base.update(
                candidates=[
                    {"id": e.id, "word": e.word, "gloss": e.gloss}
                    for e in self.target_items
                ],
                actions=["submit", "not-in-list", "back"],
            )
        else:
            base.update(form=["lemma", "gloss"], actions=["submit", "back"])
        return base

    def submit_answer(self, session: WorkerSession, payload: dict, at: float) -> dict:
        """Advance the three-step machine and store at most one response.

        `payload["item"]` must name the current item; a retry naming an
        already-answered item with the same content is a no-op success.
        Going back never stores anything.
        """
        if session.consent is not True:
            raise NotConsented("consent must be recorded before answers")
        task = self.task(session.task_id)
        if session.step == DONE or session.cursor >= len(task.items):
            raise SessionDone("all items answered")
        current = self._current_item(session)
        claimed = payload.get("item", current)
        if claimed != current:
            existing = self.responses.get((task.task_id, session.worker, claimed))
            if existing is not None:
                return {"stored": False, "duplicate": True, "item": claimed}
            raise InvalidTransition(f"expected an answer for {current}, got {claimed}")

        if session.step == STEP1:
            return self._submit_step1(session, task, payload, at)
        if session.step == STEP2:
            return self._submit_step2(session, task, payload, at)
        return self._submit_step3(session, task, payload, at)

    def _submit_step1(self, session, task, payload, at):
        choice = payload.get("choice")
        if choice == "yes":
            session.step = STEP2
            return {"stored": False, "step": STEP2}
        if choice == "no":
            return self._store_and_advance(session, task, Answer.gap(), at)
        if choice == "dont-know":
            return self._store_and_advance(session, task, Answer.dont_know(), at)
        raise InvalidTransition(f"step1 expects yes/no/dont-know, got {choice!r}")

    def _submit_step2(self, session, task, payload, at):
        if payload.get("choice") == "back":
            session.step = STEP1
            return {"stored": False, "step": STEP1}
        if payload.get("choice") == "not-in-list":
            session.step = STEP3
            return {"stored": False, "step": STEP3}
        selected = payload.get("selected")
        if not selected:
            raise EmptyField("select at least one candidate word")
        valid = {e.id for e in self.target_items}
        unknown = [s for s in selected if s not in valid]
        if unknown:
            raise InvalidTransition(f"unknown candidate ids {unknown}")
        return self._store_and_advance(session, task, Answer.equivalent(selected), at)

    def _submit_step3(self, session, task, payload, at):
        if payload.get("choice") == "back":
            session.step = STEP1
            return {"stored": False, "step": STEP1}
        lemma = (payload.get("lemma") or "").strip()
        gloss = (payload.get("gloss") or "").strip()
        if not lemma:
            raise EmptyNewWord("a new word needs a lemma")
        return self._store_and_advance(session, task, Answer.new_word(lemma, gloss), at)

    def _store_and_advance(self, session, task, answer: Answer, at: float) -> dict:
        item = self._current_item(session)
        key = (task.task_id, session.worker, item)
        existing = self.responses.get(key)
        if existing is not None:
            if existing.answer.kind == answer.kind and (
                existing.answer.is_missing or existing.answer.same_category(answer)
            ):
                return {"stored": False, "duplicate": True, "item": item}
            raise InvalidTransition(f"{item} already answered differently")
        duration = at - session.item_started_at
        if duration <= 0:
            duration = 0.001  # tolerate clock ties on immediate retries
        self.responses[key] = Response(item, session.worker, answer, duration, at)
        self._response_order.append(key)
        session.cursor += 1
        session.step = STEP1 if session.cursor < len(task.items) else DONE
        session.item_started_at = at
        return {"stored": True, "item": item, "next_step": session.step}

    # -------------------------------------------------------------- gates

    def task_responses(self, task_id: str, worker: Optional[str] = None) -> list[Response]:
        out = []
        for key in self._response_order:
            t, w, _ = key
            if t == task_id and (worker is None or w == worker):
                out.append(self.responses[key])
        return out

    def acq_gate(self, worker: str, task_id: str) -> bool:
        """Pass iff the worker got >= acq_pass_rate of the task's checks right."""
        task = self.task(task_id)
        if not task.acq_expected:
            return True
        answered = {
            r.item: r for r in self.task_responses(task_id, worker) if r.item in task.acq_expected
        }
        missing = task.acq_items - set(answered)
        if missing:
            raise ACQsUnanswered(f"{worker} left checks {sorted(missing)} unanswered")
        correct = sum(
            1
            for item, expected in task.acq_expected.items()
            if not answered[item].answer.is_missing
            and answered[item].answer.same_category(expected)
        )
        return correct / len(task.acq_expected) >= self.config.acq_pass_rate

    def aggregate_task(self, task_id: str) -> TaskAggregate:
        """Apply both gates, build the agreement run, and take consensus.

        Attention-check items never reach the reliability matrix. Workers
        failing the check gate lose all their responses for the task.
        """
        task = self.task(task_id)
        survivors: list[str] = []
        acq_failed: list[str] = []
        timing_excluded: list[Response] = []
        kept: list[Response] = []
        workers = sorted({w for (t, w, _) in self.responses if t == task_id})
        for worker in workers:
            if not self.acq_gate(worker, task_id):
                acq_failed.append(worker)
                continue
            survivors.append(worker)
            retained, excluded = timing_filter(
                self.task_responses(task_id, worker),
                self.config.outlier_low_ratio,
                self.config.outlier_high_ratio,
            )
            timing_excluded.extend(excluded)
            kept.extend(r for r in retained if r.item not in task.acq_expected)
        if not kept:
            raise NoSurvivingResponses(f"task {task_id} has no usable responses")
        ordered = sorted(kept, key=lambda r: (task.items.index(r.item), r.worker))
        run = TaskRun(
            f"{task_id}-run1",
            tuple(survivors),
            tuple(
                RunResponse(r.item, r.worker, r.answer, r.duration_seconds)
                for r in ordered
            ),
        )
        try:
            report = run.report()
            alpha = report.alpha
        except Exception:
            alpha = None
        verdicts: dict[str, Optional[Answer]] = {}
        for item in run.items():
            answers = run.answers_for(item)
            if all(a.is_missing for a in answers):
                verdicts[item] = None
            else:
                verdicts[item] = consensus(answers)
        aggregate = TaskAggregate(task_id, run, verdicts, acq_failed, timing_excluded, alpha)
        self.aggregates[task_id] = aggregate
        return aggregate

    # --------------------------------------------------------- validation

    def validate_task(
        self,
        task_id: str,
        g2: Sequence[str],
        expert: Worker,
        runner: Runner,
    ) -> ValidationResult:
        aggregate = self.aggregates.get(task_id) or self.aggregate_task(task_id)
        result = validate_responses(
            aggregate.run.participants,
            aggregate.run,
            g2,
            expert,
            self.config.alpha_threshold,
            runner,
        )
        self.validations[task_id] = result
        # consensus follows the deciding run's responses
        run = result.deciding_run
        verdicts: dict[str, Optional[Answer]] = {}
        for item in run.items():
            answers = run.answers_for(item)
            verdicts[item] = None if all(a.is_missing for a in answers) else consensus(answers)
        aggregate.consensus = verdicts
        aggregate.alpha = result.outcome.passing_alpha if result.outcome.high_quality else aggregate.alpha
        return result

    def expert_sheet(self, task_id: str, seed: int):
        validation = self.validations.get(task_id)
        if validation is None:
            raise IllegalLifecycle(f"task {task_id} not validated yet")
        run = validation.deciding_run
        responses = {
            item: [(r.worker, r.answer) for r in run.responses if r.item == item]
            for item in run.items()
        }
        items = {item: (self.item(item).word, self.item(item).gloss) for item in run.items()}
        return export_expert_sheet(
            validation.expert_queue, responses, items, self.config.sanity_rate, seed
        )

    def apply_expert_sheet(self, task_id: str, rows) -> None:
        for row in rows:
            if not row.item_id:
                entry = next(
                    (e for e in self.source_items if e.word == row.source_lemma), None
                )
                if entry is not None:
                    row.item_id = entry.id
        for record in apply_expert_decisions(rows):
            self.final_records[record.item_id] = {
                "kind": record.kind,
                "entries": list(record.entries),
                "word": record.word,
                "gloss": record.gloss,
                "provenance": record.provenance,
                "source": "expert",
            }

    # -------------------------------------------------------- finalization

    def final_verdicts(self) -> dict[str, dict]:
        """Per-item verdicts: expert decisions override crowd consensus."""
        verdicts: dict[str, dict] = {}
        for task in self.tasks:
            aggregate = self.aggregates.get(task.task_id)
            if aggregate is None:
                continue
            validation = self.validations.get(task.task_id)
            queued = set(validation.expert_queue) if validation else set()
            for item, answer in aggregate.consensus.items():
                if item in self.final_records:
                    continue  # expert decision wins
                if answer is None:
                    continue  # unresolved tie or all-abstain; expert-bound
                if validation and validation.queued_in_full:
                    continue  # everything awaits the expert
                record = {
                    "kind": None,
                    "entries": [],
                    "word": "",
                    "gloss": "",
                    "provenance": "crowd",
                    "source": "crowd",
                }
                if answer.kind == "gap":
                    record["kind"] = "gap"
                elif answer.kind == "equivalent":
                    record["kind"] = "word"
                    record["entries"] = sorted(answer.entries)
                else:
                    record["kind"] = "word"
                    record["word"] = answer.lemma
                    record["gloss"] = answer.gloss
                verdicts[item] = record
        verdicts.update(self.final_records)
        return verdicts

    def apply_to_lexicon(self, store: LexiconStore) -> dict[str, str]:
        """Write the campaign's outcome into a lexicon store.

        Source and target datasets enter as imported entries; verdicts
        create gaps, equivalence links, and crowd-new/expert words. Returns
        item id -> lexicon entry id for the source items.
        """
        config = self.config
        source_ids: dict[str, str] = {}
        for entry in self.source_items:
            existing = store.find_entry(config.source_language, entry.word, entry.gloss)
            source_ids[entry.id] = existing.id if existing else store.add_entry(
                config.source_language, entry.word, entry.gloss, "imported"
            )
        target_ids: dict[str, str] = {}
        for entry in self.target_items:
            existing = store.find_entry(config.target_language, entry.word, entry.gloss)
            target_ids[entry.id] = existing.id if existing else store.add_entry(
                config.target_language, entry.word, entry.gloss, "imported"
            )
        for item, record in sorted(
            self.final_verdicts().items(), key=lambda kv: int(kv[0][1:])
        ):
            source_entry = source_ids[item]
            if record["kind"] == "gap":
                provenance = "expert" if record["source"] == "expert" and record[
                    "provenance"
                ] != "crowd" else "crowd"
                store.assert_gap(
                    store.concept_for_entry(source_entry),
                    config.target_language,
                    provenance,
                    campaign=self.id,
                )
                continue
            if record["entries"]:
                for target_item in record["entries"]:
                    store.link_equivalent(source_entry, target_ids[target_item])
            elif record["word"]:
                gloss = record["gloss"] or self.item(item).gloss
                provenance = (
                    "expert-corrected" if record["provenance"] == "expert-corrected"
                    else "crowd-new"
                )
                existing = store.find_entry(config.target_language, record["word"])
                target_entry = existing.id if existing else store.add_entry(
                    config.target_language, record["word"], gloss, provenance
                )
                store.link_equivalent(source_entry, target_entry)
        return source_ids

    # ------------------------------------------------------------- report

    def report(self) -> CampaignReport:
        if self.state != CLOSED:
            raise NotFinal(f"campaign {self.id} is {self.state}")
        verdicts = self.final_verdicts()
        rows: list[ReportRow] = []
        alphas: list[float] = []
        for task in self.tasks:
            gaps = words = new_concepts = 0
            for item in task.question_items():
                record = verdicts.get(item)
                if record is None:
                    continue
                if record["kind"] == "gap":
                    gaps += 1
                elif record["entries"] or (
                    # expert-written words may name existing candidates
                    record["word"] and normalize_lemma(record["word"]) in self._target_by_lemma
                ):
                    words += 1
                else:
                    new_concepts += 1
            aggregate = self.aggregates.get(task.task_id)
            alpha = None
            if aggregate is not None and aggregate.alpha is not None:
                alpha = float(aggregate.alpha)
                alphas.append(alpha)
            rows.append(ReportRow(task.task_id, gaps, words, new_concepts, alpha))
        return CampaignReport(
            rows,
            sum(r.gaps for r in rows),
            sum(r.words for r in rows),
            sum(r.new_concepts for r in rows),
            sum(alphas) / len(alphas) if alphas else None,
        )


    # ------------------------------------------------------- serialization

    def to_dict(self) -> dict:
        """Full canonical state, JSON-safe and deterministic."""

        def answer_token(answer: Optional[Answer]) -> Optional[str]:
            return None if answer is None else serialize_answer(answer)

        def run_dict(run: TaskRun) -> dict:
            return {
                "run_id": run.run_id,
                "participants": list(run.participants),
                "responses": [
                    [r.item, r.worker, serialize_answer(r.answer), r.duration_seconds]
                    for r in run.responses
                ],
            }

        def response_dict(r: Response) -> list:
            return [r.item, r.worker, serialize_answer(r.answer), r.duration_seconds, r.submitted_at]

        def task_dict(t: Microtask) -> dict:
            return {
                "task_id": t.task_id,
                "items": list(t.items),
                "acq_expected": {k: serialize_answer(v) for k, v in t.acq_expected.items()},
                "assigned_group": list(t.assigned_group),
            }

        from dataclasses import asdict

        return {
            "id": self.id,
            "config": asdict(self.config),
            "state": self.state,
            "guidelines": [list(g) for g in self.guidelines],
            "source_items": [[e.id, e.word, e.gloss] for e in self.source_items],
            "target_items": [[e.id, e.word, e.gloss] for e in self.target_items],
            "acq_entries": [
                [e.id, e.word, e.gloss]
                for e in self._by_item.values()
                if e.id.startswith("q")
            ],
            "tasks": [task_dict(t) for t in self.tasks],
            "rerun_tasks": [task_dict(t) for t in self.rerun_tasks.values()],
            "sessions": [
                [s.session_id, s.worker, s.task_id, s.cursor, s.step, s.consent,
                 s.item_started_at, s.withdrawn]
                for s in self.sessions.values()
            ],
            "responses": [
                [key[0], response_dict(self.responses[key])] for key in self._response_order
            ],
            "aggregates": {
                task_id: {
                    "run": run_dict(a.run),
                    "consensus": {k: answer_token(v) for k, v in a.consensus.items()},
                    "acq_failed": list(a.acq_failed),
                    "timing_excluded": [response_dict(r) for r in a.timing_excluded],
                    "alpha": None if a.alpha is None else str(a.alpha),
                }
                for task_id, a in sorted(self.aggregates.items())
            },
            "validations": {
                task_id: {
                    "high": sorted(v.outcome.high_quality),
                    "low": sorted(v.outcome.low_quality),
                    "runs": list(v.outcome.runs_executed),
                    "passing_alpha": None
                    if v.outcome.passing_alpha is None
                    else str(v.outcome.passing_alpha),
                    "expert_queue": list(v.expert_queue),
                    "deciding_run": run_dict(v.deciding_run),
                    "queued_in_full": v.queued_in_full,
                    "g2_low": sorted(v.g2_low_quality),
                }
                for task_id, v in sorted(self.validations.items())
            },
            "final_records": dict(sorted(self.final_records.items())),
            "next_session": self._next_session,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Campaign":
        from .workflow import ClassificationOutcome

        def parse_optional(token: Optional[str]) -> Optional[Answer]:
            return None if token is None else parse_answer(token)

        def run_from(d: dict) -> TaskRun:
            return TaskRun(
                d["run_id"],
                tuple(d["participants"]),
                tuple(
                    RunResponse(item, worker, parse_answer(token), duration)
                    for item, worker, token, duration in d["responses"]
                ),
            )

        def task_from(d: dict) -> Microtask:
            return Microtask(
                d["task_id"],
                list(d["items"]),
                {k: parse_answer(v) for k, v in d["acq_expected"].items()},
                tuple(d["assigned_group"]),
            )

        campaign = cls(
            data["id"],
            CampaignConfig(**data["config"]),
            [(w, g) for _, w, g in data["source_items"]],
            [(w, g) for _, w, g in data["target_items"]],
            [tuple(g) for g in data["guidelines"]],
        )
        campaign.state = data["state"]
        for acq_id, word, gloss in data["acq_entries"]:
            campaign._by_item[acq_id] = DatasetEntry(acq_id, word, gloss)
        campaign.tasks = [task_from(t) for t in data["tasks"]]
        campaign.rerun_tasks = {t["task_id"]: task_from(t) for t in data["rerun_tasks"]}
        campaign._task_by_id = {
            t.task_id: t for t in (*campaign.tasks, *campaign.rerun_tasks.values())
        }
        for sid, worker, task_id, cursor, step, consent, started, withdrawn in data["sessions"]:
            campaign.sessions[sid] = WorkerSession(
                sid, worker, task_id, cursor, step, consent, started, withdrawn
            )
        for task_id, (item, worker, token, duration, at) in data["responses"]:
            key = (task_id, worker, item)
            campaign.responses[key] = Response(item, worker, parse_answer(token), duration, at)
            campaign._response_order.append(key)
        for task_id, a in data["aggregates"].items():
            campaign.aggregates[task_id] = TaskAggregate(
                task_id,
                run_from(a["run"]),
                {k: parse_optional(v) for k, v in a["consensus"].items()},
                list(a["acq_failed"]),
                [
                    Response(item, worker, parse_answer(token), duration, at)
                    for item, worker, token, duration, at in a["timing_excluded"]
                ],
                None if a["alpha"] is None else Fraction(a["alpha"]),
            )
        for task_id, v in data["validations"].items():
            outcome = ClassificationOutcome(
                set(v["high"]),
                set(v["low"]),
                list(v["runs"]),
                None if v["passing_alpha"] is None else Fraction(v["passing_alpha"]),
            )
            campaign.validations[task_id] = ValidationResult(
                outcome,
                list(v["expert_queue"]),
                run_from(v["deciding_run"]),
                v["queued_in_full"],
                set(v["g2_low"]),
            )
        campaign.final_records = dict(data["final_records"])
        campaign._next_session = data["next_session"]
        return campaign


def create_campaign(
    campaign_id: str,
    config: CampaignConfig,
    source_dataset: Sequence[tuple[str, str]],
    target_dataset: Sequence[tuple[str, str]],
    guidelines: Sequence[tuple[str, str]],
) -> Campaign:
    return Campaign(campaign_id, config, source_dataset, target_dataset, guidelines)


def derive_reverse_dataset(
    direction1: Campaign,
    target_dataset: Sequence[tuple[str, str]],
) -> list[tuple[str, str]]:
    """Source list for the reverse direction: drop every target entry
    confirmed equivalent in direction 1, then drop entries sharing a
    normalized lemma with a dropped entry.
    """
    if direction1.state != CLOSED:
        raise Direction1NotFinal(f"campaign {direction1.id} is {direction1.state}")
    confirmed: set[str] = set()
    for record in direction1.final_verdicts().values():
        if record["kind"] == "word":
            confirmed.update(record["entries"])
            if record["word"]:
                confirmed.add(f"word:{normalize_lemma(record['word'])}")
    removed_lemmas: set[str] = set()
    for entry in direction1.target_items:
        if entry.id in confirmed:
            removed_lemmas.add(normalize_lemma(entry.word))
    for token in confirmed:
        if token.startswith("word:"):
            removed_lemmas.add(token[5:])
    return [
        (word, gloss)
        for word, gloss in target_dataset
        if normalize_lemma(word) not in removed_lemmas
    ]
