import numpy as np
import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexgap import ingestion as ing
from lexgap.errors import (
    AllTokensUnknown,
    BadHeader,
    DimensionMismatch,
    EmptyField,
    EmptyTable,
    MalformedRow,
    SourceUnavailable,
    ZeroNormVector,
)


# ------------------------------------------------------------------ parsing


def test_parse_two_row_csv():
    entries = ing.parse_dataset("word,gloss\ncider,fermented apple drink\nmead,honey wine\n")
    assert [e.word for e in entries] == ["cider", "mead"]
    assert entries[0].gloss == "fermented apple drink"


def test_parse_tsv_variant():
    entries = ing.parse_dataset("word\tgloss\ncider\tfermented apple drink\n")
    assert entries[0].word == "cider"


def test_parse_header_only_is_empty():
    assert ing.parse_dataset("word,gloss\n") == []


def test_parse_rejects_bad_header():
    with pytest.raises(BadHeader):
        ing.parse_dataset("lemma,definition\nx,y\n")


def test_parse_rejects_missing_gloss_column():
    with pytest.raises(MalformedRow) as err:
        ing.parse_dataset("word,gloss\ncider\n")
    assert err.value.line == 2


def test_parse_rejects_empty_word_with_line_number():
    with pytest.raises(MalformedRow) as err:
        ing.parse_dataset("word,gloss\ncider,apple drink\n ,something\n")
    assert err.value.line == 3


def test_parse_empty_gloss_becomes_none():
    entries = ing.parse_dataset("word,gloss\ncider,\n")
    assert entries[0].gloss is None


# --------------------------------------------------------------- embeddings

EMB = """4 3
food 1.0 0.0 0.0
drink 0.0 1.0 0.0
stone 0.0 0.0 1.0
bread 0.6 0.8 0.0
"""


def test_load_embeddings_with_header():
    table = ing.load_embeddings(EMB)
    assert table.dimension == 3
    assert len(table) == 4
    assert np.allclose(table.vectors["bread"], [0.6, 0.8, 0.0])


def test_load_embeddings_without_header():
    table = ing.load_embeddings("a 1 0\nb 0 1\nc 1 1\n")
    assert table.dimension == 2 and len(table) == 3


def test_load_embeddings_dimension_mismatch():
    with pytest.raises(DimensionMismatch) as err:
        ing.load_embeddings("a 1 0 0 0\nb 1 0 0\n")
    assert err.value.line == 2


def test_load_embeddings_header_only():
    with pytest.raises(EmptyTable):
        ing.load_embeddings("10 5\n")


def test_load_embeddings_rejects_zero_norm():
    with pytest.raises(ZeroNormVector):
        ing.load_embeddings("a 0 0 0\n")


# ------------------------------------------------------------ phrase vectors


@pytest.fixture
def table():
    return ing.load_embeddings(EMB)


def test_embed_single_known_token_is_identity(table):
    assert np.allclose(ing.embed_phrase("food", table), [1, 0, 0])


def test_embed_two_tokens_is_mean(table):
    assert np.allclose(ing.embed_phrase("food drink", table), [0.5, 0.5, 0])


def test_embed_skips_unknown_tokens(table):
    assert np.allclose(ing.embed_phrase("tasty food", table), [1, 0, 0])


def test_embed_case_folds(table):
    assert np.allclose(ing.embed_phrase("FOOD", table), [1, 0, 0])


def test_embed_all_unknown(table):
    with pytest.raises(AllTokensUnknown):
        ing.embed_phrase("xyzzy plugh", table)
    with pytest.raises(EmptyField):
        ing.embed_phrase("   ", table)


@given(st.permutations(["food", "drink", "bread"]))
def test_embed_is_permutation_invariant(order):
    table = ing.load_embeddings(EMB)
    base = ing.embed_phrase("food drink bread", table)
    assert np.allclose(ing.embed_phrase(" ".join(order), table), base)


def test_field_centroid_single_seed_unresolvable_definition(table):
    spec = ing.SemanticFieldSpec("food", "qqq www", ("food",))
    assert np.allclose(ing.field_centroid(spec, table), [1, 0, 0])


def test_field_centroid_mean_of_seeds_and_definition(table):
    spec = ing.SemanticFieldSpec("food", "bread", ("food", "drink"))
    expected = (np.array([1.0, 0, 0]) + np.array([0, 1.0, 0]) + np.array([0.6, 0.8, 0])) / 3
    assert np.allclose(ing.field_centroid(spec, table), expected)


def test_field_centroid_nothing_resolvable(table):
    spec = ing.SemanticFieldSpec("food", "qqq", ("zzz",))
    with pytest.raises(AllTokensUnknown):
        ing.field_centroid(spec, table)


# ------------------------------------------------------------- cosine filter


def test_cosine_self_and_negation(table):
    for token in ("food", "drink", "bread"):
        v = table.vectors[token]
        assert abs(ing.cosine(v, v) - 1.0) < 1e-12
        assert abs(ing.cosine(v, -v) + 1.0) < 1e-12


def test_filter_identical_token_retained_any_threshold(table):
    centroid = table.vectors["food"]
    retained, _ = ing.semantic_filter(
        [ing.CandidateEntry("food")], centroid, table, threshold=1.0
    )
    assert len(retained) == 1
    assert retained[0].similarity == pytest.approx(1.0)


def test_filter_orthogonal_excluded(table):
    centroid = table.vectors["food"]
    retained, excluded = ing.semantic_filter(
        [ing.CandidateEntry("stone")], centroid, table, threshold=0.8
    )
    assert retained == []
    assert excluded[0].similarity == pytest.approx(0.0)


def planted_fixture():
    """5 in-domain words near the centroid, 5 off-domain words orthogonal."""
    lines = []
    for i, word in enumerate(["apple", "pear", "soup", "rice", "stew"]):
        lines.append(f"{word} 1.0 {0.01 * i:.2f} 0.0")
    for i, word in enumerate(["rock", "car", "glass", "wire", "sand"]):
        lines.append(f"{word} 0.0 {0.01 * i + 0.1:.2f} 1.0")
    lines.append("food 1.0 0.0 0.0")
    table = ing.load_embeddings("\n".join(lines))
    entries = [ing.CandidateEntry(w) for w in
               ["apple", "rock", "pear", "car", "soup", "glass", "rice", "wire", "stew", "sand"]]
    return table, entries


def test_filter_planted_fixture_against_direct_cosine():
    table, entries = planted_fixture()
    centroid = table.vectors["food"]
    retained, excluded = ing.semantic_filter(entries, centroid, table, 0.8)
    assert {e.word for e in retained} == {"apple", "pear", "soup", "rice", "stew"}
    # oracle: recompute every similarity directly
    for entry in retained:
        direct = ing.cosine(table.vectors[entry.word], centroid)
        assert entry.similarity == pytest.approx(direct)
        assert direct >= 0.8
    for entry in excluded:
        direct = ing.cosine(table.vectors[entry.word], centroid)
        assert direct < 0.8


def test_filter_monotone_in_threshold(table):
    entries = [ing.CandidateEntry(w) for w in ["food", "drink", "bread", "stone"]]
    centroid = table.vectors["food"]
    previous = None
    for threshold in (0.2, 0.4, 0.6, 0.8, 1.0):
        retained, _ = ing.semantic_filter(entries, centroid, table, threshold)
        words = {e.word for e in retained}
        if previous is not None:
            assert words <= previous
        previous = words


def test_filter_output_subset_and_similarity_range(table):
    entries = [ing.CandidateEntry(w) for w in ["food", "stone", "zzz"]]
    centroid = table.vectors["bread"]
    retained, excluded = ing.semantic_filter(entries, centroid, table, 0.5)
    assert len(retained) + len(excluded) == len(entries)
    for entry in retained:
        assert -1 <= entry.similarity <= 1


def test_filter_unknown_word_reported_not_fatal(table):
    retained, excluded = ing.semantic_filter(
        [ing.CandidateEntry("xyzzy")], table.vectors["food"], table, 0.8
    )
    assert retained == []
    assert excluded[0].word == "xyzzy"
    assert excluded[0].similarity is None


# ------------------------------------------------------------------- glosses


def test_first_sentence_rules():
    assert ing.first_sentence("Cider is a drink. It is made from apples.") == "Cider is a drink."
    assert ing.first_sentence("Cider (pron: SY-der) is a drink. More.") == "Cider is a drink."
    assert ing.first_sentence("Is it a drink? Yes.") == "Is it a drink?"
    assert ing.first_sentence("A drink made from apples\nSecond paragraph.") == "A drink made from apples"
    assert ing.first_sentence("Ends at end of text.") == "Ends at end of text."


def test_dump_source_hit_and_miss():
    source = ing.DumpGlossSource({"cider": "Cider is a fermented drink. More text."})
    assert ing.fetch_gloss("cider", source) == "Cider is a fermented drink."
    assert ing.fetch_gloss("zzz", source) is ing.DISCARD


def test_http_source_ok_404_and_failure():
    def handler(request: httpx.Request) -> httpx.Response:
        word = request.url.path.rsplit("/", 1)[-1]
        if word == "cider":
            return httpx.Response(200, text="Cider is a fermented drink. Etc.")
        if word == "missing":
            return httpx.Response(404)
        return httpx.Response(503)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    source = ing.HttpGlossSource("http://glosses.test", "/article/{word}", client=client)
    assert ing.fetch_gloss("cider", source) == "Cider is a fermented drink."
    assert ing.fetch_gloss("missing", source) is ing.DISCARD
    with pytest.raises(SourceUnavailable):
        ing.fetch_gloss("broken", source)


def test_http_source_transport_error():
    def handler(request):
        raise httpx.ConnectError("nope", request=request)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    source = ing.HttpGlossSource("http://unreachable.test", client=client)
    with pytest.raises(SourceUnavailable):
        ing.fetch_gloss("cider", source)
