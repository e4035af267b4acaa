"""Model-as-annotator baseline: batch prompting, verdict parsing, replay
fixtures, and accuracy scoring against an expert-validated sheet.

Batches of up to fifty source entries are rendered into one deterministic
zero-shot prompt together with the target-language catalog; the model must
answer one line per entry, either naming an equivalent target word or
declaring a gap. Scoring consumes the same expert-sheet CSV the human
pipeline uses.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import httpx

from .errors import (
    BatchTooLarge,
    ParseError,
    TransportError,
    UnmatchedAnnotation,
)
from .lexicon import normalize_lemma
from .workflow import ExpertSheetRow

MAX_BATCH = 50

PROMPT_VERSION = "lexgap-prompt-v1"

ENV_BASE_URL = "LEXGAP_LLM_BASE_URL"
ENV_API_KEY = "LEXGAP_LLM_API_KEY"
ENV_MODEL = "LEXGAP_LLM_MODEL"


@dataclass(frozen=True)
class BatchEntry:
    entry_id: str
    word: str
    gloss: str


@dataclass(frozen=True)
class AnnotationBatch:
    source_language: str
    target_language: str
    field_name: str
    entries: tuple[BatchEntry, ...]
    catalog: tuple[str, ...]  # target words offered as candidates
    catalog_name: str = "target catalog"

    def __post_init__(self):
        if len(self.entries) > MAX_BATCH:
            raise BatchTooLarge(f"{len(self.entries)} entries; the limit is {MAX_BATCH}")


VERDICT_EQUIVALENT = "equivalent"
VERDICT_NEW_WORD = "new-word-proposal"
VERDICT_GAP = "gap"
VERDICT_UNPARSED = "unparsed"


@dataclass
class LlmAnnotation:
    entry_id: str
    verdict: str
    word: str = ""
    raw: str = ""


def build_prompt(batch: AnnotationBatch, catalog_limit: Optional[int] = None) -> str:
    """Deterministic zero-shot prompt for one batch.

    The output contract is machine-parseable: `<index>. EQUIVALENT: <word>`
    when a target word expresses the meaning (from the catalog or proposed),
    `<index>. GAP` when no single target word does.
    """
    catalog = batch.catalog[:catalog_limit] if catalog_limit else batch.catalog
    lines = [
        f"[{PROMPT_VERSION}]",
        f"You are annotating lexical translatability from {batch.source_language} "
        f"to {batch.target_language} in the semantic field '{batch.field_name}'.",
        f"For each numbered {batch.source_language} entry below, decide whether "
        f"{batch.target_language} has a single word with the same meaning.",
        f"Prefer words from the {batch.catalog_name}; you may propose a word that "
        "is missing from it. If no single word expresses the meaning, it is a gap.",
        "Answer with exactly one line per entry, in order, formatted as either:",
        "  <index>. EQUIVALENT: <target word>",
        "  <index>. GAP",
        "No other text.",
        "",
        f"{batch.catalog_name} ({batch.target_language}, {len(catalog)} words):",
        "; ".join(catalog),
        "",
        f"Entries ({batch.source_language}):",
    ]
    for index, entry in enumerate(batch.entries, start=1):
        lines.append(f"{index}. {entry.word} = {entry.gloss}")
    return "\n".join(lines) + "\n"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class CompletionClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class ReplayClient:
    """Serves recorded completions; never touches the network.

    Fixture format: JSON array of {"prompt_hash": ..., "completion_text": ...}.
    """

    def __init__(self, fixture: Sequence[dict]):
        self._by_hash = {row["prompt_hash"]: row["completion_text"] for row in fixture}

    @classmethod
    def from_file(cls, path: str) -> "ReplayClient":
        with open(path, encoding="utf-8") as handle:
            return cls(json.load(handle))

    def complete(self, prompt: str) -> str:
        digest = prompt_hash(prompt)
        if digest not in self._by_hash:
            raise TransportError(f"no recorded completion for prompt {digest[:12]}")
        return self._by_hash[digest]


class HttpChatClient:
    """Chat-completion-style HTTP client configured from the environment."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        client: Optional[httpx.Client] = None,
        timeout: float = 120.0,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        if not self.base_url:
            raise TransportError(f"{ENV_BASE_URL} is not configured")
        if not self.api_key:
            raise TransportError(f"{ENV_API_KEY} is not configured")
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, prompt: str) -> str:
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self.api_key}"},
                json={
                    "model": self.model or "default",
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": 0,
                },
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc


_LINE = re.compile(
    r"^\s*(?P<index>\d+)\s*[.)]\s*(?:(?P<gap>GAP)|EQUIVALENT\s*:\s*(?P<word>.+?))\s*$",
    re.IGNORECASE,
)


def parse_completion(
    batch: AnnotationBatch, completion: str
) -> tuple[list[LlmAnnotation], list[str]]:
    """One verdict per entry; lines that fit no format are flagged, not fatal.

    An EQUIVALENT word found in the catalog is an equivalence; an unknown
    word is a new-word proposal. Entries the completion never covers come
    back as `unparsed` and score as errors downstream.
    """
    if not completion.strip():
        raise ParseError(1, "empty completion")
    catalog_lemmas = {normalize_lemma(word) for word in batch.catalog}
    verdicts: dict[int, LlmAnnotation] = {}
    bad_lines: list[str] = []
    for raw_line in completion.splitlines():
        if not raw_line.strip():
            continue
        match = _LINE.match(raw_line)
        if not match:
            bad_lines.append(raw_line)
            continue
        index = int(match.group("index"))
        if not 1 <= index <= len(batch.entries) or index in verdicts:
            bad_lines.append(raw_line)
            continue
        entry = batch.entries[index - 1]
        if match.group("gap"):
            verdicts[index] = LlmAnnotation(entry.entry_id, VERDICT_GAP, raw=raw_line)
        else:
            word = match.group("word").strip()
            kind = (
                VERDICT_EQUIVALENT
                if normalize_lemma(word) in catalog_lemmas
                else VERDICT_NEW_WORD
            )
            verdicts[index] = LlmAnnotation(entry.entry_id, kind, word=word, raw=raw_line)
    annotations = []
    for index, entry in enumerate(batch.entries, start=1):
        annotations.append(
            verdicts.get(
                index, LlmAnnotation(entry.entry_id, VERDICT_UNPARSED, raw="")
            )
        )
    return annotations, bad_lines


def annotate_batch(
    batch: AnnotationBatch,
    client: CompletionClient,
    catalog_limit: Optional[int] = None,
) -> tuple[list[LlmAnnotation], list[str]]:
    prompt = build_prompt(batch, catalog_limit)
    return parse_completion(batch, client.complete(prompt))


# ----------------------------------------------------------------- scoring

ERROR_WRONG_WORD = "wrong-word"
ERROR_LITERAL = "literal-translation-instead-of-gap"
ERROR_OTHER = "other"


@dataclass
class AccuracyReport:
    correct: int
    total: int
    breakdown: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


def evaluate_accuracy(
    annotations: Sequence[LlmAnnotation],
    sheet: Sequence[ExpertSheetRow],
    batch: AnnotationBatch,
) -> AccuracyReport:
    """Score annotations against the expert's decisions on the shared sheet.

    Confirmations are correct; a corrected word is a wrong-word error; a
    word the expert turns into a gap is the literal-translation error; gaps
    the expert overturns, and unparseable verdicts, count as `other`.
    """
    rows_by_lemma = {normalize_lemma(r.source_lemma): r for r in sheet}
    entries_by_id = {e.entry_id: e for e in batch.entries}
    correct = 0
    breakdown = {ERROR_WRONG_WORD: 0, ERROR_LITERAL: 0, ERROR_OTHER: 0}
    for annotation in annotations:
        entry = entries_by_id.get(annotation.entry_id)
        if entry is None:
            raise UnmatchedAnnotation(f"annotation for unknown entry {annotation.entry_id}")
        row = rows_by_lemma.get(normalize_lemma(entry.word))
        if row is None or row.expert_decision is None:
            raise UnmatchedAnnotation(f"no expert verdict for {entry.word!r}")
        decision = row.expert_decision.kind
        if annotation.verdict == VERDICT_UNPARSED:
            breakdown[ERROR_OTHER] += 1
        elif decision == "confirm-word" and annotation.verdict in (
            VERDICT_EQUIVALENT,
            VERDICT_NEW_WORD,
        ):
            correct += 1
        elif decision == "confirm-gap" and annotation.verdict == VERDICT_GAP:
            correct += 1
        elif decision == "confirm-gap":
            breakdown[ERROR_LITERAL] += 1
        elif decision == "correct-word":
            breakdown[ERROR_WRONG_WORD] += 1
        else:
            breakdown[ERROR_OTHER] += 1
    return AccuracyReport(correct, len(annotations), breakdown)
