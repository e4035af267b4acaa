"""Input dataset construction: parsing word lists, embedding-based field
filtering, and gloss retrieval.

Candidate words for a semantic field are scored by cosine similarity
between their (mean-token) vector and the field centroid built from the
field's definition and seed terms. Glosses come from an offline dump or a
live HTTP article source; the first sentence of the article is the gloss.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

import httpx
import numpy as np

from .errors import (
    AllTokensUnknown,
    BadHeader,
    DimensionMismatch,
    EmptyField,
    EmptyTable,
    MalformedRow,
    SourceUnavailable,
    ZeroNormVector,
)


@dataclass(frozen=True)
class SemanticFieldSpec:
    """A meaning domain: a name, a prose definition, and seed terms."""

    name: str
    definition: str
    seed_terms: tuple[str, ...]

    def __post_init__(self):
        if not self.definition.strip():
            raise EmptyField("field definition is empty")
        if not self.seed_terms:
            raise EmptyField("field needs at least one seed term")

    @classmethod
    def from_json(cls, text: str) -> "SemanticFieldSpec":
        data = json.loads(text)
        return cls(data["name"], data["definition"], tuple(data["seed_terms"]))


@dataclass(frozen=True)
class CandidateEntry:
    word: str
    gloss: Optional[str] = None
    similarity: Optional[float] = None


@dataclass
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def parse_dataset(document: str) -> list[CandidateEntry]:
    """Parse a `word,gloss` CSV/TSV into candidate entries.

    The delimiter is sniffed from the header line (tab wins over comma).
    A row missing the gloss column or with a blank word is rejected with
    its 1-based line number.
    """
    lines = document.splitlines()
    if not lines or not lines[0].strip():
        raise BadHeader("document is empty")
    delimiter = "\t" if "\t" in lines[0] else ","
    reader = csv.reader(io.StringIO(document), delimiter=delimiter)
    header = next(reader)
    if [h.strip().lower() for h in header[:2]] != ["word", "gloss"]:
        raise BadHeader(f"expected header word{delimiter}gloss, got {header!r}")
    entries: list[CandidateEntry] = []
    for number, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 2:
            raise MalformedRow(number, "missing gloss column")
        word = row[0].strip()
        if not word:
            raise MalformedRow(number, "empty word")
        gloss = row[1].strip()
        entries.append(CandidateEntry(word, gloss or None))
    return entries


def load_embeddings(document: str) -> EmbeddingTable:
    """Parse text word vectors: optional `count dim` header, then
    `token f1 ... fd` per line. Dimensions must agree; zero-norm vectors
    are rejected because cosine similarity is undefined on them.
    """
    dimension: Optional[int] = None
    vectors: dict[str, np.ndarray] = {}
    lines = document.splitlines()
    start = 0
    if lines:
        head = lines[0].split()
        if len(head) == 2 and all(part.lstrip("-").isdigit() for part in head):
            dimension = int(head[1])
            start = 1
    for number, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split()
        token, values = parts[0], parts[1:]
        if dimension is None:
            dimension = len(values)
        if len(values) != dimension:
            raise DimensionMismatch(number, dimension, len(values))
        vector = np.asarray([float(v) for v in values], dtype=np.float64)
        if not np.linalg.norm(vector) > 0:
            raise ZeroNormVector(number, token)
        vectors[token] = vector
    if not vectors:
        raise EmptyTable("no vectors in document")
    return EmbeddingTable(dimension or 0, vectors)


def _tokens(phrase: str) -> list[str]:
    return phrase.casefold().split()


def embed_phrase(phrase: str, table: EmbeddingTable) -> np.ndarray:
    """Unweighted mean of the known tokens' vectors; unknown tokens are skipped."""
    if not phrase.strip():
        raise EmptyField("phrase is empty")
    known = [table.vectors[t] for t in _tokens(phrase) if t in table.vectors]
    if not known:
        raise AllTokensUnknown(phrase)
    return np.mean(known, axis=0)


def field_centroid(spec: SemanticFieldSpec, table: EmbeddingTable) -> np.ndarray:
    """Mean of the seed-term vectors and the definition vector.

    Seeds or a definition that resolve to no known token are skipped; if
    nothing resolves the field cannot be embedded.
    """
    parts: list[np.ndarray] = []
    for text in (*spec.seed_terms, spec.definition):
        try:
            parts.append(embed_phrase(text, table))
        except AllTokensUnknown:
            continue
    if not parts:
        raise AllTokensUnknown(f"field {spec.name!r} has no embeddable text")
    return np.mean(parts, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def semantic_filter(
    entries: list[CandidateEntry],
    centroid: np.ndarray,
    table: EmbeddingTable,
    threshold: float,
) -> tuple[list[CandidateEntry], list[CandidateEntry]]:
    """Keep entries whose word vector is cosine-similar to the centroid.

    Returns (retained, excluded); entries whose words have no known token
    land in `excluded` with similarity None rather than failing the run.
    Retained entries carry their similarity.
    """
    if not 0 < threshold <= 1:
        raise EmptyField(f"threshold must be in (0, 1], got {threshold}")
    retained: list[CandidateEntry] = []
    excluded: list[CandidateEntry] = []
    for entry in entries:
        try:
            vector = embed_phrase(entry.word, table)
        except AllTokensUnknown:
            excluded.append(entry)
            continue
        similarity = cosine(vector, centroid)
        scored = replace(entry, similarity=similarity)
        if similarity >= threshold:
            retained.append(scored)
        else:
            excluded.append(scored)
    return retained, excluded


# -------------------------------------------------------------- glosses

class Discard:
    """Sentinel: the source has no article for the word, generate no task."""

    _instance: Optional["Discard"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DISCARD"

    def __bool__(self) -> bool:
        return False


DISCARD = Discard()

_PARENTHETICAL = re.compile(r"\([^()]*\)")
_TERMINATOR = re.compile(r"[.?!](?:\s|$)")


def first_sentence(text: str) -> str:
    """Cut an article down to its opening sentence.

    Parenthetical asides (pronunciation guides and the like) are removed
    first; the sentence ends at the first `.`/`?`/`!` followed by space or
    end of text, else at the end of the first paragraph.
    """
    paragraph = text.strip().split("\n", 1)[0]
    previous = None
    while previous != paragraph:
        previous = paragraph
        paragraph = _PARENTHETICAL.sub("", paragraph)
    paragraph = re.sub(r"\s+", " ", paragraph).strip()
    match = _TERMINATOR.search(paragraph)
    if match:
        return paragraph[: match.start() + 1]
    return paragraph


class GlossSource(Protocol):
    def article(self, word: str) -> "str | Discard": ...


class DumpGlossSource:
    """Offline gloss source backed by a JSON map of word -> article text."""

    def __init__(self, articles: dict[str, str]):
        self._articles = articles

    @classmethod
    def from_json(cls, text: str) -> "DumpGlossSource":
        return cls(json.loads(text))

    def article(self, word: str) -> "str | Discard":
        return self._articles.get(word, DISCARD)


class HttpGlossSource:
    """Live gloss source: GET <base_url><path template> returning article text.

    404 means the word has no article (a discard, not an error); transport
    failures and server errors surface as SourceUnavailable so the caller
    can keep the candidate pending.
    """

    def __init__(
        self,
        base_url: str,
        path_template: str = "/{word}",
        client: Optional[httpx.Client] = None,
        timeout: float = 10.0,
    ):
        self._base_url = base_url.rstrip("/")
        self._path_template = path_template
        self._client = client or httpx.Client(timeout=timeout)

    def article(self, word: str) -> "str | Discard":
        url = self._base_url + self._path_template.format(word=word)
        try:
            response = self._client.get(url)
        except httpx.HTTPError as exc:
            raise SourceUnavailable(str(exc)) from exc
        if response.status_code == 404:
            return DISCARD
        if response.status_code >= 500:
            raise SourceUnavailable(f"{url} -> {response.status_code}")
        return response.text


def fetch_gloss(word: str, source: GlossSource) -> "str | Discard":
    """First sentence of the source's article for the word, or DISCARD."""
    article = source.article(word)
    if isinstance(article, Discard):
        return DISCARD
    sentence = first_sentence(article)
    return sentence if sentence else DISCARD
