import pytest
from hypothesis import given, strategies as st

from figseek.featurize import (
    FeatureVector,
    Gazetteer,
    LOCATION_BUCKETS,
    Vocabulary,
    analyze,
    begins_with_features,
    build_vocabulary,
    feature_space,
    featurize_all,
    featurize_one,
    figure_no_feature,
    load_gazetteer,
    load_stopwords,
    location_bucket,
    location_name_features,
    preprocess,
    size_feature,
    term_features,
    tokenize,
)
from figseek.metadata import FigureMetadata
from figseek.stem import stem


class TestTokenize:
    def test_separators(self):
        assert tokenize("Map of Site-42, Peru.") == ["map", "of", "site", "peru"]

    def test_empty(self):
        assert tokenize("") == []

    def test_digits_separate(self):
        assert tokenize("a1b2c") == ["a", "b", "c"]

    @given(st.text(max_size=200))
    def test_only_alphabetic_lowercase(self, text):
        for token in tokenize(text):
            assert token.isalpha()
            assert token == token.lower()


class TestStemmer:
    @pytest.mark.parametrize(
        "word,expected",
        [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("plastered", "plaster"),
            ("motoring", "motor"),
            ("hopping", "hop"),
            ("falling", "fall"),
            ("filing", "file"),
            ("happy", "happi"),
            ("sky", "sky"),
            ("conditional", "condit"),
            ("rational", "ration"),
            ("formalize", "formal"),
            ("electrical", "electr"),
            ("hopeful", "hope"),
            ("adjustable", "adjust"),
            ("replacement", "replac"),
            ("dependent", "depend"),
            ("mapping", "map"),
            ("maps", "map"),
            ("map", "map"),
            ("sites", "site"),
            ("studies", "studi"),
            ("figure", "figur"),
        ],
    )
    def test_known_pairs(self, word, expected):
        assert stem(word) == expected

    def test_short_words_unchanged(self):
        assert stem("is") == "is"
        assert stem("a") == "a"


class TestPreprocess:
    def test_stop_stem_singleton(self):
        stop = load_stopwords()
        out = preprocess(["the", "mapping", "of"], stop, {"map": 3})
        assert out == ["map"]

    def test_all_stop_words(self):
        stop = load_stopwords()
        assert preprocess(["the", "of", "and"], stop, {}) == []

    def test_singleton_dropped(self):
        stop = load_stopwords()
        assert preprocess(["quetzal"], stop, {"quetzal": 1}) == []


def _meta(caption="", references=(), figure_number=1, relative_size=None):
    return FigureMetadata(
        doc_id="d",
        figure_number=figure_number,
        page_number=1,
        caption=caption,
        reference_sentences=tuple(references),
        relative_size=relative_size,
    )


def _vocab(*terms):
    return Vocabulary(
        terms=tuple(sorted(terms)),
        corpus_freqs={t: 2 for t in terms},
        stopwords=load_stopwords(),
    )


class TestTermFeatures:
    def test_counts_per_field_and_combined(self):
        meta = _meta(
            caption="Figure 1. map of maps",
            references=["the map in Figure 1"],
        )
        out = term_features(meta, _vocab("map"))
        assert out["term:caption:map"] == 2.0
        assert out["term:reference:map"] == 1.0
        assert out["term:combined:map"] == 3.0

    def test_empty_text_gives_no_features(self):
        assert term_features(_meta(), _vocab("map")) == {}

    def test_out_of_vocabulary_terms_ignored(self):
        meta = _meta(caption="Figure 1. obsidian blades")
        assert term_features(meta, _vocab("map")) == {}

    def test_combined_equals_sum(self):
        meta = _meta(
            caption="Figure 1. Map of sites and more sites.",
            references=["Sites in Figure 1 include the map area."],
        )
        out = term_features(meta, _vocab("map", "site", "area"))
        for term in ("map", "site", "area"):
            assert out.get(f"term:combined:{term}", 0.0) == (
                out.get(f"term:caption:{term}", 0.0)
                + out.get(f"term:reference:{term}", 0.0)
            )


class TestBeginsWith:
    def test_first_surviving_term(self):
        meta = _meta(caption="Figure 1. Map region.")
        out = begins_with_features(meta, _vocab("map", "region"))
        assert out == {"beginswith:caption:map": 1.0}

    def test_empty_caption(self):
        assert begins_with_features(_meta(), _vocab("map")) == {}

    def test_leading_stop_word_skipped(self):
        meta = _meta(caption="Figure 1. The map of the region.")
        out = begins_with_features(meta, _vocab("map", "region"))
        assert out == {"beginswith:caption:map": 1.0}


class TestFigureNo:
    @pytest.mark.parametrize("number,expected", [(1, 1.0), (2, 1.0), (3, 0.0), (7, 0.0)])
    def test_range(self, number, expected):
        out = figure_no_feature(_meta(figure_number=number))
        assert out.get("figno::1_2", 0.0) == expected


class TestLocationNames:
    def test_counts_to_buckets(self):
        gaz = load_gazetteer()
        meta = _meta(caption="Figure 1. Map of the Cusco Valley, Peru.")
        out = location_name_features(meta, gaz)
        assert out["locnames:caption:1_2"] == 1.0
        assert out["locnames:reference:0"] == 1.0

    def test_longest_match_consumes_tokens(self):
        gaz = Gazetteer.from_names(["cusco", "cusco valley", "peru"])
        assert gaz.count_matches("the cusco valley and peru") == 2

    def test_case_insensitive(self):
        gaz = Gazetteer.from_names(["peru"])
        assert gaz.count_matches("PERU and Peru") == 2

    def test_exactly_one_bucket_per_field(self):
        gaz = Gazetteer.from_names([chr(ord("a") + i) * 3 for i in range(26)])
        for count in range(0, 26):
            text = " ".join(chr(ord("a") + i) * 3 for i in range(count))
            meta = _meta(caption=f"Figure 1. {text}" if text else "")
            out = location_name_features(meta, gaz)
            caption_fired = [
                k for k, v in out.items() if k.startswith("locnames:caption:") and v == 1.0
            ]
            assert len(caption_fired) == 1
            assert caption_fired[0] == f"locnames:caption:{location_bucket(count)}"

    def test_partition_is_exhaustive(self):
        bounds = {
            "0": (0, 0),
            "1_2": (1, 2),
            "3_5": (3, 5),
            "6_9": (6, 9),
            "10_20": (10, 20),
            "21_plus": (21, 10**9),
        }
        for count in range(0, 1001):
            label = location_bucket(count)
            matching = [
                name for name, (lo, hi) in bounds.items() if lo <= count <= hi
            ]
            assert matching == [label]

    def test_overlap_at_five_resolves_low(self):
        assert location_bucket(5) == "3_5"


class TestSizeFeature:
    def test_above_threshold(self):
        assert size_feature(_meta(relative_size=0.5)) == {"size::gt_third": 1.0}

    def test_exactly_one_third_is_not_large(self):
        assert size_feature(_meta(relative_size=1.0 / 3.0)) == {}

    def test_absent_size(self):
        assert size_feature(_meta(relative_size=None)) == {}


class TestFeaturizeAll:
    def _metas(self):
        return [
            _meta(
                caption="Figure 1. Map of sites in Peru.",
                references=["Sites in Figure 1 cluster in Peru."],
                figure_number=1,
                relative_size=0.5,
            ),
            _meta(
                caption="Figure 2. Artifact counts by site.",
                references=["Counts appear in Figure 2 by site."],
                figure_number=2,
                relative_size=0.2,
            ),
        ]

    def test_deterministic(self):
        metas = self._metas()
        stop = load_stopwords()
        vocab = build_vocabulary(metas, stop)
        gaz = load_gazetteer()
        first = featurize_all(metas, vocab, gaz)
        second = featurize_all(metas, vocab, gaz)
        assert [v.values for v in first] == [v.values for v in second]

    def test_vectors_stay_inside_feature_space(self):
        metas = self._metas()
        vocab = build_vocabulary(metas, load_stopwords())
        gaz = load_gazetteer()
        universe = set(feature_space(vocab))
        for vec in featurize_all(metas, vocab, gaz):
            assert set(vec.values) <= universe

    def test_labels_attached_or_absent(self):
        metas = self._metas()
        vocab = build_vocabulary(metas, load_stopwords())
        gaz = load_gazetteer()
        labeled = featurize_all(metas, vocab, gaz, {("d", 1): True})
        assert labeled[0].label is True
        assert labeled[1].label is None

    def test_reference_order_does_not_matter(self):
        stop = load_stopwords()
        gaz = load_gazetteer()
        refs = [
            "Sites in Figure 1 cluster near the coast.",
            "The survey in Figure 1 covered Peru.",
        ]
        meta_a = _meta(caption="Figure 1. Map of sites.", references=refs)
        meta_b = _meta(caption="Figure 1. Map of sites.", references=refs[::-1])
        vocab = build_vocabulary([meta_a], stop)
        assert featurize_one(meta_a, vocab, gaz).values == (
            featurize_one(meta_b, vocab, gaz).values
        )


class TestVocabulary:
    def test_singletons_excluded(self):
        metas = [
            _meta(caption="Figure 1. Map of sites."),
            _meta(caption="Figure 2. Map of quarries.", figure_number=2),
        ]
        vocab = build_vocabulary(metas, load_stopwords())
        assert "map" in vocab
        assert "site" not in vocab  # appears once
        assert "quarri" not in vocab

    def test_stop_words_never_enter(self):
        metas = [_meta(caption="Figure 1. The map of the maps.")]
        vocab = build_vocabulary(metas, load_stopwords())
        assert "the" not in vocab.corpus_freqs
        assert "of" not in vocab.corpus_freqs


def test_analyze_matches_manual_pipeline():
    stop = load_stopwords()
    text = "The Maps of Settlement-Sites."
    assert analyze(text, stop) == [stem(t) for t in tokenize(text) if t not in stop]
