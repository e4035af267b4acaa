"""Seeded end-to-end campaign simulation against planted ground truth.

Synthetic workers of configurable accuracy answer every microtask through
the real session state machine; gates, agreement, validation, and expert
adjudication then run exactly as they would for humans. The planted truth
doubles as the oracle: a perfect crowd must reproduce it verbatim, and an
imperfect crowd's expert queue must be exactly the items somebody got
wrong.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .agreement import Answer
from .campaign import (
    Campaign,
    CampaignConfig,
    CampaignReport,
    create_campaign,
    default_guidelines,
)
from .lexicon import LexiconStore
from .workflow import Decision, RunResponse, TaskRun, Worker


@dataclass
class PlantedWorld:
    source: list[tuple[str, str]]
    target: list[tuple[str, str]]
    truth: dict[str, Answer] = field(default_factory=dict)  # item id -> answer
    acq_bank: list[tuple[str, str, Answer]] = field(default_factory=list)


def build_world(n_items: int, seed: int, n_target: int = 30) -> PlantedWorld:
    """Plant a ground truth: ~half gaps, ~35% equivalents, rest new words."""
    rng = random.Random(f"world:{seed}")
    target = [(f"tw{i}", f"target meaning {i}") for i in range(1, n_target + 1)]
    source = [(f"sw{i}", f"source meaning {i}") for i in range(1, n_items + 1)]
    world = PlantedWorld(source, target)
    for i in range(1, n_items + 1):
        item = f"s{i}"
        roll = rng.random()
        if roll < 0.5:
            world.truth[item] = Answer.gap()
        elif roll < 0.85:
            world.truth[item] = Answer.equivalent([f"t{rng.randrange(1, n_target + 1)}"])
        else:
            world.truth[item] = Answer.new_word(f"nw{i}", f"new target meaning {i}")
    world.acq_bank = [
        (f"attn{k}", f"obviously untranslatable check {k}", Answer.gap())
        for k in (1, 2, 3)
    ]
    return world


def _deviate(truth: Answer, rng: random.Random, n_target: int) -> Answer:
    """A wrong answer in a different category than the truth."""
    options = []
    if truth.kind != "gap":
        options.append(Answer.gap())
    wrong_target = f"t{rng.randrange(1, n_target + 1)}"
    candidate = Answer.equivalent([wrong_target])
    if not (truth.kind == "equivalent" and truth.same_category(candidate)):
        options.append(candidate)
    options.append(Answer.new_word(f"bogus-{rng.randrange(1000)}"))
    options.append(Answer.dont_know())
    return options[rng.randrange(len(options))]


def _synthetic_answer(
    truth: Answer, accuracy: float, seed: int, worker: str, item: str,
    n_target: int, salt: str = "",
) -> Answer:
    rng = random.Random(f"answer:{seed}:{worker}:{item}:{salt}")
    if rng.random() < accuracy:
        return truth
    return _deviate(truth, rng, n_target)


def _duration(seed: int, worker: str, item: str) -> float:
    rng = random.Random(f"duration:{seed}:{worker}:{item}")
    return 80.0 + 40.0 * rng.random()


@dataclass
class SimulationResult:
    campaign: Campaign
    world: PlantedWorld
    store: LexiconStore
    report: CampaignReport
    expert_queue: list[str]
    expected_queue: set[str]
    hidden_deviations: set[str]  # items where every worker deviated identically

    def lexicon_document(self) -> dict:
        return self.store.export_document()


def expected_lexicon(world: PlantedWorld, config: CampaignConfig) -> LexiconStore:
    """Oracle store built straight from the planted truth, mirroring the
    deterministic order the campaign uses when applying verdicts."""
    store = LexiconStore()
    source_ids = {}
    for index, (word, gloss) in enumerate(world.source, start=1):
        source_ids[f"s{index}"] = store.add_entry(config.source_language, word, gloss, "imported")
    target_ids = {}
    for index, (word, gloss) in enumerate(world.target, start=1):
        target_ids[f"t{index}"] = store.add_entry(config.target_language, word, gloss, "imported")
    for index in range(1, len(world.source) + 1):
        item = f"s{index}"
        truth = world.truth[item]
        if truth.kind == "gap":
            store.assert_gap(
                store.concept_for_entry(source_ids[item]),
                config.target_language,
                "crowd",
                campaign="sim1",
            )
        elif truth.kind == "equivalent":
            for target_item in sorted(truth.entries):
                store.link_equivalent(source_ids[item], target_ids[target_item])
        else:
            new_id = store.add_entry(
                config.target_language, truth.lemma, truth.gloss, "crowd-new"
            )
            store.link_equivalent(source_ids[item], new_id)
    return store


def _answer_via_session(campaign: Campaign, worker: str, task, answers, seed: int):
    session = campaign.open_session(worker, task.task_id, at=1_000.0)
    campaign.record_consent(session, True, at=1_000.0)
    now = 1_000.0
    for item in task.items:
        answer = answers[item]
        now += _duration(seed, worker, item)
        if answer.kind == "gap":
            campaign.submit_answer(session, {"choice": "no", "item": item}, at=now)
        elif answer.kind == "dont-know":
            campaign.submit_answer(session, {"choice": "dont-know", "item": item}, at=now)
        elif answer.kind == "equivalent":
            campaign.submit_answer(session, {"choice": "yes"}, at=now - 1.0)
            campaign.submit_answer(
                session, {"selected": sorted(answer.entries), "item": item}, at=now
            )
        else:
            campaign.submit_answer(session, {"choice": "yes"}, at=now - 2.0)
            campaign.submit_answer(session, {"choice": "not-in-list"}, at=now - 1.0)
            campaign.submit_answer(
                session, {"lemma": answer.lemma, "gloss": answer.gloss, "item": item}, at=now
            )


def _decide_from_truth(row, truth: Answer) -> Decision:
    """The simulated expert always rules per the planted truth."""
    answer = row.worker_answer
    if truth.kind == "gap":
        if answer.is_missing:
            return Decision("resolve-gap")
        return Decision("confirm-gap")
    if truth.kind == "equivalent":
        word = "|".join(sorted(truth.entries))  # resolved to words by the caller
        if answer.kind == "equivalent" and answer.same_category(truth):
            return Decision("confirm-word")
        if answer.is_missing:
            return Decision("resolve-word", word)
        if answer.kind == "gap":
            return Decision("reject-gap", word)
        return Decision("correct-word", word)
    # new word truth
    if answer.kind == "new-word" and answer.same_category(truth):
        return Decision("confirm-word")
    if answer.is_missing:
        return Decision("resolve-word", truth.lemma, truth.gloss)
    if answer.kind == "gap":
        return Decision("reject-gap", truth.lemma, truth.gloss)
    return Decision("correct-word", truth.lemma, truth.gloss)


def run_simulation(
    n_items: int = 100,
    n_workers: int = 3,
    accuracy: float = 1.0,
    seed: int = 7,
    alpha_threshold: float = 0.70,
    questions_per_task: int = 35,
    acqs_per_task: int = 3,
    source_language: str = "eng",
    target_language: str = "arb",
    semantic_field: str = "food",
    expert_pass: bool = True,
    sheet_seed: Optional[int] = None,
) -> SimulationResult:
    world = build_world(n_items, seed)
    config = CampaignConfig(
        source_language=source_language,
        target_language=target_language,
        semantic_field=semantic_field,
        questions_per_task=questions_per_task,
        acqs_per_task=acqs_per_task,
        alpha_threshold=alpha_threshold,
    )
    campaign = create_campaign(
        "sim1", config, world.source, world.target, default_guidelines()
    )
    tasks = campaign.generate_tasks(world.acq_bank)
    group = [f"w{k}" for k in range(1, n_workers + 1)]
    spares = [f"x{k}" for k in range(1, n_workers + 1)]
    n_target = len(world.target)

    for task in tasks:
        campaign.assign_group(task.task_id, group)
        for worker in group:
            answers = {}
            for item in task.items:
                if item in task.acq_expected:
                    answers[item] = task.acq_expected[item]  # attentive by design
                else:
                    answers[item] = _synthetic_answer(
                        world.truth[item], accuracy, seed, worker, item, n_target
                    )
            _answer_via_session(campaign, worker, task, answers, seed)

    expert = Worker("exp", role="expert")
    expert_queue: list[str] = []
    expected_queue: set[str] = set()
    hidden: set[str] = set()

    def runner_for(task):
        counter = [0]

        def run(participants):
            counter[0] += 1
            responses = []
            for item in task.question_items():
                for worker in participants:
                    answer = _synthetic_answer(
                        world.truth[item], accuracy, seed, worker, item, n_target,
                        salt=f"rerun{counter[0]}",
                    )
                    responses.append(
                        RunResponse(item, worker, answer, _duration(seed, worker, item))
                    )
            return TaskRun(
                f"{task.task_id}-rerun{counter[0]}", tuple(participants), tuple(responses)
            )

        return run

    target_words = {f"t{i}": word for i, (word, _) in enumerate(world.target, start=1)}

    for task in tasks:
        campaign.aggregate_task(task.task_id)
        result = campaign.validate_task(task.task_id, spares, expert, runner_for(task))
        expert_queue.extend(result.expert_queue)
        run = result.deciding_run
        for item in task.question_items():
            answers = run.answers_for(item)
            truth = world.truth[item]
            deviations = [
                a for a in answers if a.is_missing or not a.same_category(truth)
            ]
            if deviations:
                if len(deviations) == len(answers) and not any(
                    a.is_missing for a in answers
                ) and all(
                    a.same_category(answers[0]) for a in answers
                ):
                    hidden.add(item)  # unanimous wrong answer: invisible to IAA
                else:
                    expected_queue.add(item)
        if expert_pass and result.expert_queue:
            rows = campaign.expert_sheet(
                task.task_id, seed if sheet_seed is None else sheet_seed
            )
            for row in rows:
                if row.row_kind == "sanity":
                    continue
                truth = world.truth[row.item_id]
                decision = _decide_from_truth(row, truth)
                if truth.kind == "equivalent" and decision.kind in (
                    "correct-word", "reject-gap", "resolve-word",
                ):
                    words = [target_words[t] for t in sorted(truth.entries)]
                    decision = Decision(decision.kind, words[0])
                row.expert_decision = decision
            campaign.apply_expert_sheet(task.task_id, rows)

    campaign.close()
    store = LexiconStore()
    campaign.apply_to_lexicon(store)
    report = campaign.report()
    return SimulationResult(
        campaign, world, store, report, expert_queue, expected_queue, hidden
    )
