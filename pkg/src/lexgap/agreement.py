"""Chance-corrected inter-annotator agreement over categorical answers.

Implements the nominal-metric reliability coefficient via the coincidence
matrix construction, with missing cells allowed, plus per-item percent
agreement. All agreement math is exact rational arithmetic; floats appear
only at display boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import (
    AllMissing,
    BadAnswerSyntax,
    DuplicateResponse,
    EmptyField,
    EmptyNewWord,
    NoPairableItems,
)
from .lexicon import normalize_lemma

GAP = "gap"
EQUIVALENT = "equivalent"
NEW_WORD = "new-word"
DONT_KNOW = "dont-know"


@dataclass(frozen=True)
class Answer:
    """One categorical judgment about a source item.

    Category equality is deliberately looser than object equality: two
    new-word answers with identically normalized lemmas are the same
    category even when their glosses differ, and `dont-know` is an
    abstention that never forms a category.
    """

    kind: str
    entries: frozenset[str] = frozenset()
    lemma: str = ""
    gloss: str = ""

    @staticmethod
    def gap() -> "Answer":
        return Answer(GAP)

    @staticmethod
    def equivalent(entry_ids: Iterable[str]) -> "Answer":
        ids = frozenset(entry_ids)
        if not ids:
            raise EmptyField("equivalent answer needs at least one entry")
        return Answer(EQUIVALENT, entries=ids)

    @staticmethod
    def new_word(lemma: str, gloss: str = "") -> "Answer":
        if not lemma.strip():
            raise EmptyNewWord("new-word answer needs a lemma")
        return Answer(NEW_WORD, lemma=lemma.strip(), gloss=gloss.strip())

    @staticmethod
    def dont_know() -> "Answer":
        return Answer(DONT_KNOW)

    @property
    def is_missing(self) -> bool:
        return self.kind == DONT_KNOW

    def category_key(self) -> tuple:
        """Hashable category identity under the answer-equality rules."""
        if self.kind == GAP:
            return (GAP,)
        if self.kind == EQUIVALENT:
            return (EQUIVALENT, tuple(sorted(self.entries)))
        if self.kind == NEW_WORD:
            return (NEW_WORD, normalize_lemma(self.lemma))
        raise ValueError("dont-know forms no category")

    def same_category(self, other: "Answer") -> bool:
        if self.is_missing or other.is_missing:
            return False
        return self.category_key() == other.category_key()


def serialize_answer(answer: Answer) -> str:
    """Wire form used in sheets and banks: GAP, EQ:<id>[;<id>...], NEW:<lemma>|<gloss>, DK."""
    if answer.kind == GAP:
        return "GAP"
    if answer.kind == DONT_KNOW:
        return "DK"
    if answer.kind == EQUIVALENT:
        return "EQ:" + ";".join(sorted(answer.entries))
    if answer.kind == NEW_WORD:
        return f"NEW:{answer.lemma}|{answer.gloss}"
    raise ValueError(f"unknown answer kind {answer.kind!r}")


def parse_answer(text: str) -> Answer:
    token = text.strip()
    if token == "GAP":
        return Answer.gap()
    if token == "DK":
        return Answer.dont_know()
    if token.startswith("EQ:"):
        ids = [part for part in token[3:].split(";") if part]
        if not ids:
            raise BadAnswerSyntax(f"empty equivalent list in {text!r}")
        return Answer.equivalent(ids)
    if token.startswith("NEW:"):
        body = token[4:]
        lemma, _, gloss = body.partition("|")
        if not lemma.strip():
            raise BadAnswerSyntax(f"empty lemma in {text!r}")
        return Answer.new_word(lemma, gloss)
    raise BadAnswerSyntax(f"unrecognized answer {text!r}")


@dataclass
class ReliabilityMatrix:
    """Items x annotators categorical matrix with missing cells.

    Category ids are dense integers in order of first appearance; `cells`
    omits missing pairs entirely. `unpairable` flags items with fewer than
    two filled cells (they contribute nothing to agreement).
    """

    items: list[str]
    annotators: list[str]
    cells: dict[tuple[str, str], int]
    categories: list[tuple] = field(default_factory=list)
    unpairable: set[str] = field(default_factory=set)

    def values_for(self, item: str) -> list[int]:
        return [
            self.cells[(item, a)] for a in self.annotators if (item, a) in self.cells
        ]

    @property
    def pairable_items(self) -> list[str]:
        return [i for i in self.items if i not in self.unpairable]


def encode_responses(
    responses: Iterable[tuple[str, str, Answer]],
) -> ReliabilityMatrix:
    """Assign dense category ids and lay responses out as a matrix.

    Abstentions (`dont-know`) become missing cells. Duplicate
    (item, annotator) pairs are rejected.
    """
    items: list[str] = []
    annotators: list[str] = []
    cells: dict[tuple[str, str], int] = {}
    categories: list[tuple] = []
    category_ids: dict[tuple, int] = {}
    seen: set[tuple[str, str]] = set()

    for item, annotator, answer in responses:
        if (item, annotator) in seen:
            raise DuplicateResponse(f"({item}, {annotator}) answered twice")
        seen.add((item, annotator))
        if item not in items:
            items.append(item)
        if annotator not in annotators:
            annotators.append(annotator)
        if answer.is_missing:
            continue
        key = answer.category_key()
        if key not in category_ids:
            category_ids[key] = len(categories)
            categories.append(key)
        cells[(item, annotator)] = category_ids[key]

    if len(annotators) < 2:
        raise NoPairableItems("a reliability matrix needs at least 2 annotators")

    matrix = ReliabilityMatrix(items, annotators, cells, categories)
    for item in items:
        if len(matrix.values_for(item)) < 2:
            matrix.unpairable.add(item)
    return matrix


def coincidence_matrix(matrix: ReliabilityMatrix) -> list[list[Fraction]]:
    """Square category-by-category coincidence counts.

    Each item with m >= 2 values contributes every ordered pair of values
    from distinct annotators with weight 1/(m - 1), so the matrix is
    symmetric and sums to the number of pairable values.
    """
    if not matrix.pairable_items:
        raise NoPairableItems("no item carries two or more filled cells")
    size = len(matrix.categories)
    counts = [[Fraction(0)] * size for _ in range(size)]
    for item in matrix.pairable_items:
        values = matrix.values_for(item)
        weight = Fraction(1, len(values) - 1)
        for i, c in enumerate(values):
            for j, k in enumerate(values):
                if i != j:
                    counts[c][k] += weight
    return counts


def krippendorff_alpha(matrix: ReliabilityMatrix) -> Optional[Fraction]:
    """Nominal-metric agreement coefficient; None when expected disagreement is zero.

    alpha = 1 - D_o / D_e with D_o the observed off-diagonal coincidence
    share and D_e the chance expectation from the category margins.
    """
    counts = coincidence_matrix(matrix)
    size = len(counts)
    margins = [sum(row) for row in counts]
    n = sum(margins)
    observed = sum(
        counts[c][k] for c in range(size) for k in range(size) if c != k
    )
    expected = sum(
        margins[c] * margins[k] for c in range(size) for k in range(size) if c != k
    )
    if expected == 0:
        return None
    d_o = Fraction(observed, n)
    d_e = Fraction(expected, n * (n - 1))
    return 1 - d_o / d_e


def alpha_passes(alpha: Optional[Fraction], threshold: float) -> bool:
    """Threshold rule shared by the filtering and validation procedures.

    An indeterminate alpha only arises from a single category everywhere,
    i.e. unanimous annotators, which the pipeline treats as passing.
    """
    if alpha is None:
        return True
    # str() round-trips 0.7 to the intended 7/10 rather than its binary float
    return alpha >= Fraction(str(threshold))


def item_iaa(answers: Sequence[Answer]) -> tuple[float, Optional[Answer]]:
    """Percent agreement for one item: share of the modal category.

    Returns (percent in [0, 100], modal answer) with modal None on a tie.
    Abstentions are excluded from both numerator and denominator.
    """
    judged = [a for a in answers if not a.is_missing]
    if not judged:
        raise AllMissing("every response for the item is an abstention")
    tallies: dict[tuple, int] = {}
    representative: dict[tuple, Answer] = {}
    for answer in judged:
        key = answer.category_key()
        tallies[key] = tallies.get(key, 0) + 1
        representative.setdefault(key, answer)
    best = max(tallies.values())
    winners = [key for key, count in tallies.items() if count == best]
    percent = 100 * best / len(judged)
    if len(winners) != 1:
        return percent, None
    return percent, representative[winners[0]]


@dataclass
class AgreementReport:
    """Alpha plus per-item agreement for one task's worth of responses."""

    alpha: Optional[Fraction]
    pairable_values: int
    per_item: dict[str, tuple[float, Optional[Answer]]]

    def passes(self, threshold: float) -> bool:
        return alpha_passes(self.alpha, threshold)


def agreement_report(
    responses: Iterable[tuple[str, str, Answer]],
) -> AgreementReport:
    """Encode, score, and summarize responses in one step.

    Items whose responses are all abstentions are left out of per_item;
    callers route those to the expert independently.
    """
    triples = list(responses)
    matrix = encode_responses(triples)
    alpha = krippendorff_alpha(matrix)
    pairable = sum(len(matrix.values_for(i)) for i in matrix.pairable_items)
    by_item: dict[str, list[Answer]] = {}
    for item, _, answer in triples:
        by_item.setdefault(item, []).append(answer)
    per_item = {
        item: item_iaa(answers)
        for item, answers in by_item.items()
        if any(not a.is_missing for a in answers)
    }
    return AgreementReport(alpha, pairable, per_item)
