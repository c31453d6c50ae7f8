import math
from datetime import date

import pytest

from fixture_corpus import LABELS, VENUE_TABLE, build_corpus
from figseek.docmodel import DocLevelMetadata
from figseek.featurize import analyze, load_stopwords
from figseek.metadata import FigureMetadata, corpus_baseline_line_count, extract_all
from figseek.search import (
    RankingConfig,
    ScoredHit,
    boost,
    build_index,
    index_from_dict,
    index_to_dict,
    query,
    score_bm25f,
    score_linear,
)

STOP = load_stopwords()
NOW = date(2020, 1, 1)


def _doc_meta(title="", abstract="", pub=date(2000, 1, 1), citations=0, venue="v"):
    return DocLevelMetadata(title, abstract, (), pub, citations, venue)


def _map(doc_id, figure_number, caption, references=(), title="", abstract="",
         pub=date(2000, 1, 1), citations=0, venue="v"):
    meta = FigureMetadata(doc_id, figure_number, 1, caption, tuple(references), None)
    return meta, _doc_meta(title, abstract, pub, citations, venue)


@pytest.fixture(scope="module")
def fixture_maps():
    docs = build_corpus()
    baseline = corpus_baseline_line_count(docs)
    return [
        (m, d.metadata)
        for d in docs
        for m in extract_all(d, baseline)
        if LABELS[m.map_key]
    ]


@pytest.fixture(scope="module")
def fixture_index(fixture_maps):
    return build_index(fixture_maps, VENUE_TABLE, STOP)


def reference_bm25(field_texts: dict, query_terms: list[str], key, k1: float, b: float):
    """Standalone BM25 oracle over one field, written independently.

    Scores idf(t) * (tf/B) / (k1 + tf/B) with B the usual length
    normalization, idf = ln((N - df + 0.5)/(df + 0.5) + 1).
    """
    token_lists = {k: analyze(text, STOP) for k, text in field_texts.items()}
    n_docs = len(token_lists)
    avg_len = sum(len(toks) for toks in token_lists.values()) / n_docs
    toks = token_lists[key]
    score = 0.0
    for term in dict.fromkeys(query_terms):
        tf = toks.count(term)
        if tf == 0:
            continue
        df = sum(1 for other in token_lists.values() if term in other)
        idf = math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)
        norm = 1.0 - b + b * len(toks) / avg_len
        weighted = tf / norm
        score += idf * weighted / (k1 + weighted)
    return score


class TestBuildIndex:
    def test_shared_document_fields(self):
        shared = _doc_meta(title="Regional Settlement Atlas")
        maps = [
            (FigureMetadata("d", i, 1, f"Figure {i}. Map of area.", (), None), shared)
            for i in (1, 2, 3)
        ]
        index = build_index(maps, stopwords=STOP)
        atlas_postings = index.postings["title"]["atla"]
        assert sorted(atlas_postings) == [("d", 1), ("d", 2), ("d", 3)]

    def test_empty_reference_field(self):
        index = build_index(
            [_map("d", 1, "Figure 1. Map of sites.", references=())], stopwords=STOP
        )
        assert index.field_lengths["reference"][("d", 1)] == 0
        assert index.postings["reference"] == {}

    def test_rebuild_is_identical(self, fixture_maps):
        a = index_to_dict(build_index(fixture_maps, VENUE_TABLE, STOP))
        b = index_to_dict(build_index(fixture_maps, VENUE_TABLE, STOP))
        assert a == b

    def test_round_trip(self, fixture_index):
        again = index_from_dict(index_to_dict(fixture_index))
        assert index_to_dict(again) == index_to_dict(fixture_index)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            build_index([], stopwords=STOP)

    def test_unknown_venue_weight_defaults_to_one(self, fixture_index):
        # doc-trade-networks uses a venue missing from the table
        assert fixture_index.doc_attrs[("doc-trade-networks", 2)].venue_weight == 1.0
        assert fixture_index.doc_attrs[("doc-excavation-nile", 1)].venue_weight == 1.5

    def test_length_statistics_consistent(self, fixture_index):
        for fld in ("caption", "reference", "title", "abstract"):
            total = sum(fixture_index.field_lengths[fld].values())
            assert fixture_index.avg_field_length[fld] == pytest.approx(
                total / fixture_index.map_count
            )


class TestBm25f:
    def test_absent_term_scores_zero(self, fixture_index):
        cfg = RankingConfig()
        key = ("doc-survey-peru", 1)
        assert score_bm25f(["zzzunseen"], key, fixture_index, cfg) == 0.0

    def test_single_field_reduction_matches_oracle(self, fixture_maps, fixture_index):
        cfg = RankingConfig(field_weights={"caption": 1.0}, k1=1.2, b=0.75)
        field_texts = {m.map_key: m.caption for m, _ in fixture_maps}
        for terms in (["map"], ["map", "survei"], ["settlement", "cusco"], ["rout"]):
            for key in field_texts:
                expected = reference_bm25(field_texts, terms, key, 1.2, 0.75)
                got = score_bm25f(terms, key, fixture_index, cfg)
                assert got == pytest.approx(expected, abs=1e-9)

    def test_micro_corpus_hand_value(self):
        # one map; query term with tf 2 in its caption; caption weight 2
        index = build_index(
            [_map("m", 1, "Figure 1. ridge ridge basin slope.")],
            stopwords=frozenset(),
        )
        cfg = RankingConfig(
            field_weights={"caption": 2.0}, k1=1.2, b=0.75,
        )
        score = score_bm25f(["ridg"], ("m", 1), index, cfg)
        assert score == pytest.approx(0.22129, abs=1e-5)

    def test_repeated_query_terms_count_once(self, fixture_index):
        cfg = RankingConfig()
        key = ("doc-survey-peru", 1)
        assert score_bm25f(["map", "map"], key, fixture_index, cfg) == (
            score_bm25f(["map"], key, fixture_index, cfg)
        )

    def test_tf_monotonicity(self):
        texts = [
            "Figure 1. basin basin slope ridge.",
            "Figure 1. basin slope ridge terrace.",
        ]
        cfg = RankingConfig(field_weights={"caption": 1.0})
        scores = []
        for text in texts:
            index = build_index(
                [_map("m", 1, text), _map("o", 1, "Figure 1. unrelated words here.")],
                stopwords=frozenset(),
            )
            scores.append(score_bm25f(["basin"], ("m", 1), index, cfg))
        assert scores[0] >= scores[1]

    def test_idf_everywhere_term_is_minimal(self, fixture_index):
        # "map" occurs in every fixture caption; it must have the smallest idf
        from figseek.search import _idf

        n = fixture_index.map_count
        df_map = len(fixture_index.postings["caption"]["map"])
        assert df_map == n
        for term, postings in fixture_index.postings["caption"].items():
            assert _idf(n, df_map) <= _idf(n, len(postings))


class TestLinearMode:
    def test_caption_only_equals_field_bm25(self, fixture_maps, fixture_index):
        cfg = RankingConfig(mode="linear", field_weights={"caption": 1.0})
        field_texts = {m.map_key: m.caption for m, _ in fixture_maps}
        for key in field_texts:
            expected = reference_bm25(field_texts, ["map", "survei"], key, 1.2, 0.75)
            got = score_linear(["map", "survei"], key, fixture_index, cfg)
            assert got == pytest.approx(expected, abs=1e-9)

    def test_doubling_weights_doubles_scores(self, fixture_index):
        base = RankingConfig(mode="linear")
        doubled = RankingConfig(
            mode="linear",
            field_weights={f: 2 * w for f, w in base.field_weights.items()},
        )
        terms = ["settlement", "map"]
        for key in fixture_index.doc_attrs:
            assert score_linear(terms, key, fixture_index, doubled) == pytest.approx(
                2 * score_linear(terms, key, fixture_index, base)
            )

    def test_second_matching_field_never_hurts(self, fixture_index):
        cfg_two = RankingConfig(mode="linear", field_weights={"caption": 1.0, "title": 1.0})
        cfg_one = RankingConfig(mode="linear", field_weights={"caption": 1.0})
        for key in fixture_index.doc_attrs:
            assert score_linear(
                ["settlement", "map"], key, fixture_index, cfg_two
            ) >= score_linear(["settlement", "map"], key, fixture_index, cfg_one)


class TestBoost:
    def test_all_zero_betas(self, fixture_index):
        cfg = RankingConfig(beta_age=0.0, beta_cite=0.0, beta_venue=0.0)
        for key in fixture_index.doc_attrs:
            assert boost(key, fixture_index, cfg, NOW) == 0.0

    def test_maxima(self):
        index = build_index(
            [_map("m", 1, "Figure 1. Map.", pub=NOW, citations=50, venue="best")],
            venue_table={"best": 1.0},
            stopwords=STOP,
        )
        cfg = RankingConfig(beta_age=0.4, beta_cite=0.3, beta_venue=0.2)
        assert boost(("m", 1), index, cfg, NOW) == pytest.approx(0.4 + 0.3 + 0.2)

    def test_half_life(self):
        pub = date(2010, 1, 1)
        now = date(2020, 1, 1)
        age_years = (now - pub).days / 365.25
        index = build_index(
            [_map("m", 1, "Figure 1. Map.", pub=pub)], stopwords=STOP
        )
        cfg = RankingConfig(
            beta_age=1.0, beta_cite=0.0, beta_venue=0.0, half_life_years=age_years
        )
        assert boost(("m", 1), index, cfg, now) == pytest.approx(0.5)


class TestQuery:
    def test_stop_word_query_is_empty(self, fixture_index, caplog):
        with caplog.at_level("WARNING"):
            hits = query("the of and", fixture_index, RankingConfig(), 10, now=NOW, stopwords=STOP)
        assert hits == []
        assert any("empty after preprocessing" in r.message for r in caplog.records)

    def test_top_k_larger_than_matches(self, fixture_index):
        hits = query("cusco", fixture_index, RankingConfig(), 100, now=NOW, stopwords=STOP)
        assert 0 < len(hits) < 100

    def test_top_k_zero(self, fixture_index):
        assert query("map", fixture_index, RankingConfig(), 0, now=NOW, stopwords=STOP) == []

    def test_zero_boost_preserves_text_order(self, fixture_index):
        cfg = RankingConfig(beta_age=0.0, beta_cite=0.0, beta_venue=0.0)
        hits = query("settlement map survey", fixture_index, cfg, 20, now=NOW, stopwords=STOP)
        text_sorted = sorted(hits, key=lambda h: (-h.text_score, h.map_key))
        assert [h.map_key for h in hits] == [h.map_key for h in text_sorted]
        for hit in hits:
            assert hit.final_score == hit.text_score
            assert hit.boost == 0.0

    def test_citations_break_text_ties(self):
        caption = "Figure 1. Map of basalt quarries."
        pub = date(2000, 1, 1)
        maps = [
            _map("low", 1, caption, pub=pub, citations=0),
            _map("high", 1, caption, pub=pub, citations=90),
        ]
        index = build_index(maps, stopwords=STOP)
        cfg = RankingConfig(beta_age=0.0, beta_cite=0.5, beta_venue=0.0)
        hits = query("basalt quarries", index, cfg, 10, now=NOW, stopwords=STOP)
        assert hits[0].map_key == ("high", 1)
        assert hits[0].text_score == pytest.approx(hits[1].text_score)

    def test_final_score_identity(self, fixture_index):
        for hit in query("map", fixture_index, RankingConfig(), 10, now=NOW, stopwords=STOP):
            assert hit.final_score == pytest.approx(
                hit.text_score * (1.0 + hit.boost), abs=1e-12
            )

    def test_deterministic(self, fixture_index):
        cfg = RankingConfig()
        a = query("settlement map", fixture_index, cfg, 10, now=NOW, stopwords=STOP)
        b = query("settlement map", fixture_index, cfg, 10, now=NOW, stopwords=STOP)
        assert a == b

    def test_matched_fields_reported(self, fixture_index):
        hits = query("settlement", fixture_index, RankingConfig(), 10, now=NOW, stopwords=STOP)
        top = hits[0]
        assert isinstance(top, ScoredHit)
        assert "caption" in top.matched_fields or "title" in top.matched_fields


class TestRankingConfigValidation:
    def test_all_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            RankingConfig(field_weights={"caption": 0.0})

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            RankingConfig(field_weights={"footnotes": 1.0})

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            RankingConfig(mode="cosine")

    def test_b_range(self):
        with pytest.raises(ValueError):
            RankingConfig(b=1.5)
