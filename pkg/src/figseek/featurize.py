"""Feature extraction for map classification.

Feature identifiers follow the "family:field:term" namespace.  Vectors
are sparse: absent identifiers mean zero.  Bump FEATURE_FORMAT_VERSION
whenever the identifier namespace or a feature definition changes, so
stale models are rejected instead of silently mis-scored.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib.resources import files
from itertools import groupby
from pathlib import Path

from .metadata import FigureMetadata
from .stem import stem

FEATURE_FORMAT_VERSION = 1

# Location-count buckets, named by the count range each one covers.
LOCATION_BUCKETS = ("0", "1_2", "3_5", "6_9", "10_20", "21_plus")

FIGNO_FEATURE = "figno::1_2"
SIZE_FEATURE = "size::gt_third"
SIZE_THRESHOLD = 1.0 / 3.0


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphabetic runs; everything else separates."""
    return ["".join(run).lower() for is_alpha, run in groupby(text, str.isalpha) if is_alpha]


def analyze(text: str, stopwords: frozenset[str]) -> list[str]:
    """Tokenize, drop stop words, stem.  Shared with the search index."""
    return [stem(tok) for tok in tokenize(text) if tok not in stopwords]


def preprocess(
    tokens: list[str], stopwords: frozenset[str], corpus_freqs: dict[str, int]
) -> list[str]:
    """Stop-removal, stemming, then dropping of corpus-singleton stems."""
    return [
        s
        for s in (stem(tok) for tok in tokens if tok not in stopwords)
        if corpus_freqs.get(s, 0) > 1
    ]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = files("figseek").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class Vocabulary:
    """Stemmed terms seen at least twice in the training corpus."""

    terms: tuple[str, ...]
    corpus_freqs: dict[str, int]
    stopwords: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "_term_set", frozenset(self.terms))

    def __contains__(self, term: str) -> bool:
        return term in self._term_set  # type: ignore[attr-defined]


def _figure_text_terms(meta: FigureMetadata, stopwords: frozenset[str]) -> list[str]:
    caption = analyze(meta.caption, stopwords)
    reference = analyze(" ".join(meta.reference_sentences), stopwords)
    return caption + reference


def build_vocabulary(
    metas: list[FigureMetadata], stopwords: frozenset[str]
) -> Vocabulary:
    """Corpus-wide stem frequencies; singleton stems are excluded."""
    freqs: Counter[str] = Counter()
    for meta in metas:
        freqs.update(_figure_text_terms(meta, stopwords))
    terms = tuple(sorted(t for t, c in freqs.items() if c > 1))
    return Vocabulary(terms=terms, corpus_freqs=dict(freqs), stopwords=stopwords)


@dataclass(frozen=True)
class Gazetteer:
    """Normalized location names as token tuples, for longest-match scans."""

    entries: frozenset[tuple[str, ...]]
    max_len: int

    @classmethod
    def from_names(cls, names) -> "Gazetteer":
        entries = set()
        for name in names:
            toks = tuple(tokenize(name))
            if toks:
                entries.add(toks)
        max_len = max((len(e) for e in entries), default=1)
        return cls(entries=frozenset(entries), max_len=max_len)

    def count_matches(self, text: str) -> int:
        """Non-overlapping longest-match count over the token stream."""
        tokens = tokenize(text)
        i = 0
        count = 0
        n = len(tokens)
        while i < n:
            matched = 0
            for length in range(min(self.max_len, n - i), 0, -1):
                if tuple(tokens[i : i + length]) in self.entries:
                    matched = length
                    break
            if matched:
                count += 1
                i += matched
            else:
                i += 1
        return count


def load_gazetteer(path: str | Path | None = None) -> Gazetteer:
    if path is None:
        text = files("figseek").joinpath("data/gazetteer.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return Gazetteer.from_names(
        line.strip() for line in text.splitlines() if line.strip()
    )


@dataclass
class FeatureVector:
    figure_key: tuple[str, int]
    values: dict[str, float]
    label: bool | None = None

    def get(self, feature_id: str) -> float:
        return self.values.get(feature_id, 0.0)


def _vocab_counts(terms: list[str], vocab: Vocabulary) -> Counter:
    return Counter(t for t in terms if t in vocab)


def term_features(meta: FigureMetadata, vocab: Vocabulary) -> dict[str, float]:
    """Per-term frequencies in caption, references, and both combined."""
    caption = _vocab_counts(analyze(meta.caption, vocab.stopwords), vocab)
    reference = _vocab_counts(
        analyze(" ".join(meta.reference_sentences), vocab.stopwords), vocab
    )
    out: dict[str, float] = {}
    for term, count in caption.items():
        out[f"term:caption:{term}"] = float(count)
    for term, count in reference.items():
        out[f"term:reference:{term}"] = float(count)
    for term in set(caption) | set(reference):
        out[f"term:combined:{term}"] = float(caption[term] + reference[term])
    return out


def begins_with_features(meta: FigureMetadata, vocab: Vocabulary) -> dict[str, float]:
    """Marks the first surviving caption term after preprocessing."""
    for term in analyze(meta.caption, vocab.stopwords):
        if term in vocab:
            return {f"beginswith:caption:{term}": 1.0}
    return {}


def figure_no_feature(meta: FigureMetadata) -> dict[str, float]:
    """1 when the figure number is 1 or 2."""
    if meta.figure_number in (1, 2):
        return {FIGNO_FEATURE: 1.0}
    return {}


def location_bucket(count: int) -> str:
    """Bucket label for a location-name count; buckets partition 0..inf."""
    if count < 0:
        raise ValueError(f"negative location count {count}")
    if count == 0:
        return LOCATION_BUCKETS[0]
    if count <= 2:
        return LOCATION_BUCKETS[1]
    if count <= 5:
        return LOCATION_BUCKETS[2]
    if count <= 9:
        return LOCATION_BUCKETS[3]
    if count <= 20:
        return LOCATION_BUCKETS[4]
    return LOCATION_BUCKETS[5]


def location_name_features(meta: FigureMetadata, gaz: Gazetteer) -> dict[str, float]:
    """One fired bucket per field from gazetteer-match counts."""
    caption_count = gaz.count_matches(meta.caption)
    reference_count = gaz.count_matches(" ".join(meta.reference_sentences))
    return {
        f"locnames:caption:{location_bucket(caption_count)}": 1.0,
        f"locnames:reference:{location_bucket(reference_count)}": 1.0,
    }


def size_feature(meta: FigureMetadata) -> dict[str, float]:
    """1 when the figure is known to occupy more than a third of a page."""
    if meta.relative_size is not None and meta.relative_size > SIZE_THRESHOLD:
        return {SIZE_FEATURE: 1.0}
    return {}


def featurize_one(
    meta: FigureMetadata,
    vocab: Vocabulary,
    gaz: Gazetteer,
    label: bool | None = None,
) -> FeatureVector:
    values: dict[str, float] = {}
    values.update(term_features(meta, vocab))
    values.update(begins_with_features(meta, vocab))
    values.update(figure_no_feature(meta))
    values.update(location_name_features(meta, gaz))
    values.update(size_feature(meta))
    return FeatureVector(figure_key=meta.map_key, values=values, label=label)


def featurize_all(
    metas: list[FigureMetadata],
    vocab: Vocabulary,
    gaz: Gazetteer,
    labels: dict[tuple[str, int], bool] | None = None,
) -> list[FeatureVector]:
    labels = labels or {}
    return [
        featurize_one(meta, vocab, gaz, labels.get(meta.map_key)) for meta in metas
    ]


def feature_space(vocab: Vocabulary) -> list[str]:
    """Every feature identifier the current format can emit, sorted."""
    ids = [FIGNO_FEATURE, SIZE_FEATURE]
    for fld in ("caption", "reference"):
        ids.extend(f"locnames:{fld}:{bucket}" for bucket in LOCATION_BUCKETS)
    for term in vocab.terms:
        ids.append(f"beginswith:caption:{term}")
        ids.extend(f"term:{fld}:{term}" for fld in ("caption", "reference", "combined"))
    return sorted(ids)


def vector_to_dict(vec: FeatureVector) -> dict:
    return {
        "doc_id": vec.figure_key[0],
        "figure_number": vec.figure_key[1],
        "values": {k: vec.values[k] for k in sorted(vec.values)},
        "label": vec.label,
    }
