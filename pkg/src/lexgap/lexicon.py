"""Two-layer lexical model: supra-lingual concepts over per-language lexicons.

A lexicon holds (word, gloss) entries per language. Concepts live either on
the supra-lingual layer (lexicalized by two or more languages) or on a
language-specific layer. A lexical gap is an explicit assertion that a
language has no word for a concept. Linking entries across languages
promotes language-specific concepts upward and retracts contradicted gaps.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import (
    BadDocument,
    ConflictingLexicalization,
    DuplicateEntry,
    EmptyField,
    InvalidCounts,
    RelationCycle,
    SameLanguage,
    UnknownConcept,
    UnknownEntry,
    UnknownLanguage,
)

SUPRA = "supra-lingual"

ENTRY_PROVENANCES = ("imported", "crowd-new", "expert-corrected", "llm")
GAP_PROVENANCES = ("crowd", "expert", "llm")
RELATION_KINDS = ("hypernym", "hyponym", "meronym", "holonym")

_WS = re.compile(r"\s+")


def normalize_gloss(gloss: str) -> str:
    """Uniqueness key for glosses: case-fold, collapse whitespace, drop terminal punctuation."""
    text = _WS.sub(" ", gloss.strip()).casefold()
    return text.rstrip(".!?;:,")


def normalize_lemma(word: str) -> str:
    """Equality key for lemmas: case-fold and collapse whitespace."""
    return _WS.sub(" ", word.strip()).casefold()


def check_language_code(code: str) -> str:
    if not code or not code.strip():
        raise EmptyField("language code is empty")
    if code != code.strip().lower():
        raise EmptyField(f"language code must be lowercase with no padding: {code!r}")
    return code


@dataclass(frozen=True)
class LexicalEntry:
    id: str
    language: str
    word: str
    gloss: str
    provenance: str


@dataclass
class Concept:
    id: str
    layer: str            # SUPRA or "language-specific"
    language: Optional[str]  # set iff layer is language-specific
    gloss: str
    relations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def is_supra(self) -> bool:
        return self.layer == SUPRA


@dataclass(frozen=True)
class LexicalGap:
    concept: str
    language: str
    provenance: str
    campaign: Optional[str] = None


@dataclass(frozen=True)
class OverlapStat:
    shared: int
    size_a: int
    size_b: int
    ratio: Fraction

    @property
    def percent(self) -> float:
        """Display value, rounded to one decimal (e.g. 27.4)."""
        return round(float(self.ratio) * 100, 1)


def overlap(shared: int, size_a: int, size_b: int) -> OverlapStat:
    """Shared-lexicalization ratio for two languages over one domain.

    ratio = shared / (size_a + size_b), kept as an exact rational; rounding
    happens only at display time.
    """
    if min(shared, size_a, size_b) < 0:
        raise InvalidCounts("counts must be non-negative")
    if size_a + size_b <= 0:
        raise InvalidCounts("size_a + size_b must be positive")
    if shared > min(size_a, size_b):
        raise InvalidCounts(
            f"shared={shared} exceeds min(size_a, size_b)={min(size_a, size_b)}"
        )
    return OverlapStat(shared, size_a, size_b, Fraction(shared, size_a + size_b))


class LexiconStore:
    """In-memory two-layer lexicon with serialized mutations.

    All mutating methods take one internal lock, so any number of threads can
    mutate safely; reads hand out immutable values or fresh copies.
    """

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._entries: dict[str, LexicalEntry] = {}
        self._concepts: dict[str, Concept] = {}
        self._gaps: dict[tuple[str, str], LexicalGap] = {}
        self._entry_concept: dict[str, str] = {}          # entry id -> concept id
        self._concept_entries: dict[str, set[str]] = {}   # concept id -> entry ids
        self._unique: dict[tuple[str, str, str], str] = {}  # (lang, word, norm gloss) -> entry id
        self._languages: set[str] = set()
        self._audit: list[dict] = []
        self._next_entry = 1
        self._next_concept = 1

    # ------------------------------------------------------------ entries

    def add_entry(self, language: str, word: str, gloss: str, provenance: str = "imported") -> str:
        check_language_code(language)
        word = word.strip()
        gloss = gloss.strip()
        if not word:
            raise EmptyField("word is empty")
        if not gloss:
            raise EmptyField("gloss is empty")
        if provenance not in ENTRY_PROVENANCES:
            raise EmptyField(f"unknown entry provenance {provenance!r}")
        key = (language, word, normalize_gloss(gloss))
        with self._lock:
            if key in self._unique:
                raise DuplicateEntry(f"{language}: {word!r} / {gloss!r} already present")
            entry_id = f"e{self._next_entry}"
            self._next_entry += 1
            self._entries[entry_id] = LexicalEntry(entry_id, language, word, gloss, provenance)
            self._unique[key] = entry_id
            self._languages.add(language)
            return entry_id

    def entry(self, entry_id: str) -> LexicalEntry:
        try:
            return self._entries[entry_id]
        except KeyError:
            raise UnknownEntry(entry_id) from None

    def entries(self, language: Optional[str] = None) -> list[LexicalEntry]:
        values = sorted(self._entries.values(), key=lambda e: int(e.id[1:]))
        if language is None:
            return values
        return [e for e in values if e.language == language]

    def find_entry(self, language: str, word: str, gloss: Optional[str] = None) -> Optional[LexicalEntry]:
        if gloss is not None:
            eid = self._unique.get((language, word.strip(), normalize_gloss(gloss)))
            return self._entries.get(eid) if eid else None
        lemma = normalize_lemma(word)
        for e in self.entries(language):
            if normalize_lemma(e.word) == lemma:
                return e
        return None

    # ----------------------------------------------------------- concepts

    def concept(self, concept_id: str) -> Concept:
        try:
            return self._concepts[concept_id]
        except KeyError:
            raise UnknownConcept(concept_id) from None

    def concepts(self) -> list[Concept]:
        return sorted(self._concepts.values(), key=lambda c: int(c.id[1:]))

    def concept_of(self, entry_id: str) -> Optional[str]:
        self.entry(entry_id)
        return self._entry_concept.get(entry_id)

    def concept_for_entry(self, entry_id: str) -> str:
        """Concept lexicalized by the entry, creating a language-specific one if absent."""
        entry = self.entry(entry_id)
        with self._lock:
            existing = self._entry_concept.get(entry_id)
            if existing:
                return existing
            cid = self._new_concept("language-specific", entry.language, entry.gloss)
            self._attach(entry_id, cid)
            return cid

    def _new_concept(self, layer: str, language: Optional[str], gloss: str) -> str:
        cid = f"c{self._next_concept}"
        self._next_concept += 1
        self._concepts[cid] = Concept(cid, layer, language, gloss)
        self._concept_entries[cid] = set()
        return cid

    def _attach(self, entry_id: str, concept_id: str) -> None:
        self._entry_concept[entry_id] = concept_id
        self._concept_entries[concept_id].add(entry_id)
        self._drop_contradicted_gap(concept_id, self._entries[entry_id].language)

    def lexicalizing_languages(self, concept_id: str) -> set[str]:
        self.concept(concept_id)
        return {self._entries[e].language for e in self._concept_entries.get(concept_id, ())}

    def lexicalized_concepts(self, language: str) -> set[str]:
        """Concept ids lexicalized by the language (both layers)."""
        return {
            cid
            for cid, eids in self._concept_entries.items()
            if any(self._entries[e].language == language for e in eids)
        }

    def add_relation(self, concept_id: str, kind: str, other_id: str) -> None:
        if kind not in RELATION_KINDS:
            raise BadDocument(f"unknown relation kind {kind!r}")
        concept = self.concept(concept_id)
        self.concept(other_id)
        with self._lock:
            if kind == "hypernym" and self._reaches(other_id, concept_id, via="hypernym"):
                raise RelationCycle(f"{concept_id} -hypernym-> {other_id} closes a cycle")
            if (kind, other_id) not in concept.relations:
                concept.relations.append((kind, other_id))

    def _reaches(self, start: str, goal: str, via: str) -> bool:
        stack, seen = [start], set()
        while stack:
            current = stack.pop()
            if current == goal:
                return True
            if current in seen:
                continue
            seen.add(current)
            stack.extend(o for k, o in self._concepts[current].relations if k == via)
        return False

    # ----------------------------------------------------------- gaps

    def assert_gap(
        self,
        concept_id: str,
        language: str,
        provenance: str = "crowd",
        campaign: Optional[str] = None,
    ) -> LexicalGap:
        check_language_code(language)
        self.concept(concept_id)
        if provenance not in GAP_PROVENANCES:
            raise EmptyField(f"unknown gap provenance {provenance!r}")
        with self._lock:
            existing = self._gaps.get((concept_id, language))
            if existing is not None:
                return existing
            if language in self.lexicalizing_languages(concept_id):
                raise ConflictingLexicalization(
                    f"{language} already lexicalizes {concept_id}"
                )
            gap = LexicalGap(concept_id, language, provenance, campaign)
            self._gaps[(concept_id, language)] = gap
            self._languages.add(language)
            return gap

    def gaps(self, language: Optional[str] = None) -> list[LexicalGap]:
        values = sorted(self._gaps.values(), key=lambda g: (int(g.concept[1:]), g.language))
        if language is None:
            return values
        return [g for g in values if g.language == language]

    def _drop_contradicted_gap(self, concept_id: str, language: str) -> None:
        gap = self._gaps.pop((concept_id, language), None)
        if gap is not None:
            self._audit.append(
                {
                    "event": "gap-retracted",
                    "concept": concept_id,
                    "language": language,
                    "reason": "equivalence found",
                }
            )

    @property
    def audit_log(self) -> list[dict]:
        return list(self._audit)

    # ----------------------------------------------------------- linking

    def link_equivalent(self, entry_a: str, entry_b: str) -> str:
        """Attach two entries from distinct languages to one shared concept.

        A language-specific concept on either side is promoted to the
        supra-lingual layer; promotion never reverses. Gaps contradicted by
        the new lexicalization are retracted with an audit note.
        """
        a = self.entry(entry_a)
        b = self.entry(entry_b)
        if a.language == b.language:
            raise SameLanguage(f"{entry_a} and {entry_b} are both {a.language}")
        with self._lock:
            ca = self._entry_concept.get(entry_a)
            cb = self._entry_concept.get(entry_b)
            if ca and cb:
                target = ca if ca == cb else self._merge(ca, cb)
            elif ca or cb:
                target = ca or cb  # type: ignore[assignment]
            else:
                target = self._new_concept(SUPRA, None, a.gloss)
            for eid in (entry_a, entry_b):
                if self._entry_concept.get(eid) != target:
                    self._attach(eid, target)
            self._promote_if_shared(target)
            return target

    def _merge(self, keep: str, drop: str) -> str:
        if keep == drop:
            return keep
        keep, drop = sorted((keep, drop), key=lambda c: int(c[1:]))
        dropped = self._concepts.pop(drop)
        kept = self._concepts[keep]
        for rel in dropped.relations:
            if rel not in kept.relations and rel[1] != keep:
                kept.relations.append(rel)
        for concept in self._concepts.values():
            concept.relations = [
                (k, keep if o == drop else o)
                for k, o in concept.relations
                if not (o == drop and (k, keep) in concept.relations)
            ]
        for eid in self._concept_entries.pop(drop, set()):
            self._entry_concept[eid] = keep
            self._concept_entries[keep].add(eid)
            self._drop_contradicted_gap(keep, self._entries[eid].language)
        for (cid, lang), gap in list(self._gaps.items()):
            if cid == drop:
                del self._gaps[(cid, lang)]
                if lang not in self.lexicalizing_languages(keep) and (keep, lang) not in self._gaps:
                    self._gaps[(keep, lang)] = LexicalGap(keep, lang, gap.provenance, gap.campaign)
                else:
                    self._audit.append(
                        {
                            "event": "gap-retracted",
                            "concept": keep,
                            "language": lang,
                            "reason": "merged concept is lexicalized",
                        }
                    )
        self._audit.append({"event": "concept-merged", "kept": keep, "dropped": drop})
        return keep

    def _promote_if_shared(self, concept_id: str) -> None:
        concept = self._concepts[concept_id]
        if not concept.is_supra and len(self.lexicalizing_languages(concept_id)) >= 2:
            concept.layer = SUPRA
            concept.language = None
            self._audit.append({"event": "concept-promoted", "concept": concept_id})

    # ------------------------------------------------------ import/export

    @property
    def languages(self) -> set[str]:
        return set(self._languages)

    def export_document(self, languages: Optional[Iterable[str]] = None) -> dict:
        """Serializable lexicon document; restricted to `languages` when given.

        Concepts are included when lexicalized by, or gapped in, a selected
        language. The full-store document round-trips through
        import_document with no loss.
        """
        selected = set(languages) if languages is not None else None
        entries = [
            e for e in self.entries() if selected is None or e.language in selected
        ]
        gaps = [g for g in self.gaps() if selected is None or g.language in selected]
        concept_ids = {self._entry_concept[e.id] for e in entries if e.id in self._entry_concept}
        concept_ids.update(g.concept for g in gaps)
        concepts = [c for c in self.concepts() if selected is None or c.id in concept_ids]
        links = [
            {"entry": e.id, "concept": self._entry_concept[e.id]}
            for e in entries
            if e.id in self._entry_concept
        ]
        return {
            "entries": [
                {
                    "id": e.id,
                    "language": e.language,
                    "word": e.word,
                    "gloss": e.gloss,
                    "provenance": e.provenance,
                }
                for e in entries
            ],
            "concepts": [
                {
                    "id": c.id,
                    "layer": c.layer,
                    "language": c.language,
                    "gloss": c.gloss,
                    "relations": [list(r) for r in c.relations],
                }
                for c in concepts
            ],
            "gaps": [
                {
                    "concept": g.concept,
                    "language": g.language,
                    "provenance": g.provenance,
                    "campaign": g.campaign,
                }
                for g in gaps
            ],
            "links": links,
        }

    def export_lexicon(self, language: str) -> dict:
        check_language_code(language)
        if language not in self._languages:
            raise UnknownLanguage(language)
        return self.export_document([language])

    def export_json(self, languages: Optional[Iterable[str]] = None) -> str:
        return json.dumps(self.export_document(languages), ensure_ascii=False, indent=2)

    @classmethod
    def import_document(cls, document: dict) -> "LexiconStore":
        for key in ("entries", "concepts", "gaps", "links"):
            if key not in document:
                raise BadDocument(f"missing top-level array {key!r}")
        store = cls()
        for rec in document["entries"]:
            entry = LexicalEntry(
                rec["id"], rec["language"], rec["word"], rec["gloss"], rec["provenance"]
            )
            store._entries[entry.id] = entry
            store._unique[(entry.language, entry.word, normalize_gloss(entry.gloss))] = entry.id
            store._languages.add(entry.language)
            store._next_entry = max(store._next_entry, int(entry.id[1:]) + 1)
        for rec in document["concepts"]:
            concept = Concept(
                rec["id"],
                rec["layer"],
                rec.get("language"),
                rec["gloss"],
                [tuple(r) for r in rec.get("relations", [])],
            )
            store._concepts[concept.id] = concept
            store._concept_entries[concept.id] = set()
            store._next_concept = max(store._next_concept, int(concept.id[1:]) + 1)
        for rec in document["links"]:
            eid, cid = rec["entry"], rec["concept"]
            if eid not in store._entries or cid not in store._concepts:
                raise BadDocument(f"dangling link {eid} -> {cid}")
            store._entry_concept[eid] = cid
            store._concept_entries[cid].add(eid)
        for rec in document["gaps"]:
            if rec["concept"] not in store._concepts:
                raise BadDocument(f"gap for unknown concept {rec['concept']}")
            gap = LexicalGap(rec["concept"], rec["language"], rec["provenance"], rec.get("campaign"))
            if gap.language in store.lexicalizing_languages(gap.concept):
                raise BadDocument(
                    f"gap ({gap.concept}, {gap.language}) contradicts a lexicalization"
                )
            store._gaps[(gap.concept, gap.language)] = gap
            store._languages.add(gap.language)
        return store

    @classmethod
    def import_json(cls, text: str) -> "LexiconStore":
        return cls.import_document(json.loads(text))
