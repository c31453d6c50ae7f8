"""Fielded map index and ranked retrieval.

Each classified map is indexed under four fields (caption, reference,
title, abstract).  Two text-scoring modes are available: "bm25f"
combines per-field term frequencies before saturation, while "linear"
scores each field as a standalone collection and mixes the field scores.
Document-level evidence (age, citations, venue) enters as a
multiplicative (1 + boost) factor on the text score.

Only fields with positive weight influence candidates, frequencies, and
document counts, so zeroing a field's weight removes it entirely.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from datetime import date
from pathlib import Path

from .docmodel import DocLevelMetadata
from .featurize import analyze, load_stopwords
from .metadata import FigureMetadata

logger = logging.getLogger(__name__)

FIELDS = ("caption", "reference", "title", "abstract")

INDEX_FORMAT = "figseek-index/1"

MapKey = tuple[str, int]


@dataclass(frozen=True)
class DocAttrs:
    publication_date: date
    citation_count: int
    venue_weight: float


@dataclass
class FieldedIndex:
    # field -> term -> {map_key: term_frequency}; built in sorted order
    postings: dict[str, dict[str, dict[MapKey, int]]]
    # field -> {map_key: token count}
    field_lengths: dict[str, dict[MapKey, int]]
    avg_field_length: dict[str, float]
    doc_attrs: dict[MapKey, DocAttrs]
    map_count: int
    max_citations: int


def _default_field_weights() -> dict[str, float]:
    return {"caption": 3.0, "reference": 2.0, "title": 1.5, "abstract": 1.0}


@dataclass(frozen=True)
class RankingConfig:
    mode: str = "bm25f"
    field_weights: dict[str, float] = dc_field(default_factory=_default_field_weights)
    k1: float = 1.2
    b: float = 0.75
    beta_age: float = 0.2
    beta_cite: float = 0.2
    beta_venue: float = 0.1
    half_life_years: float = 10.0

    def __post_init__(self):
        if self.mode not in ("bm25f", "linear"):
            raise ValueError(f"unknown ranking mode {self.mode!r}")
        unknown = set(self.field_weights) - set(FIELDS)
        if unknown:
            raise ValueError(f"unknown field(s) in weights: {sorted(unknown)}")
        if not any(w > 0 for w in self.field_weights.values()):
            raise ValueError("at least one field weight must be positive")
        if any(w < 0 for w in self.field_weights.values()):
            raise ValueError("field weights must be non-negative")
        if self.k1 <= 0:
            raise ValueError("k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0,1]")
        if min(self.beta_age, self.beta_cite, self.beta_venue) < 0:
            raise ValueError("boost weights must be non-negative")
        if self.half_life_years <= 0:
            raise ValueError("age half-life must be positive")

    def active_fields(self) -> tuple[str, ...]:
        return tuple(f for f in FIELDS if self.field_weights.get(f, 0.0) > 0)


@dataclass(frozen=True)
class ScoredHit:
    map_key: MapKey
    text_score: float
    boost: float
    final_score: float
    matched_fields: tuple[str, ...]


def build_index(
    maps: list[tuple[FigureMetadata, DocLevelMetadata]],
    venue_table: dict[str, float] | None = None,
    stopwords: frozenset[str] | None = None,
) -> FieldedIndex:
    """Index classifier-approved maps over the four metadata fields."""
    if not maps:
        raise ValueError("cannot build an index from zero maps")
    if stopwords is None:
        stopwords = load_stopwords()
    venue_table = venue_table or {}

    postings: dict[str, dict[str, dict[MapKey, int]]] = {f: {} for f in FIELDS}
    field_lengths: dict[str, dict[MapKey, int]] = {f: {} for f in FIELDS}
    doc_attrs: dict[MapKey, DocAttrs] = {}

    for meta, doc_meta in sorted(maps, key=lambda pair: pair[0].map_key):
        key = meta.map_key
        if key in doc_attrs:
            raise ValueError(f"duplicate map {key}")
        texts = {
            "caption": meta.caption,
            "reference": " ".join(meta.reference_sentences),
            "title": doc_meta.title,
            "abstract": doc_meta.abstract,
        }
        for fld in FIELDS:
            terms = analyze(texts[fld], stopwords)
            field_lengths[fld][key] = len(terms)
            for term in terms:
                postings[fld].setdefault(term, {}).setdefault(key, 0)
                postings[fld][term][key] += 1
        weight = venue_table.get(doc_meta.venue)
        if weight is None:
            weight = 1.0  # unknown venue
        doc_attrs[key] = DocAttrs(
            publication_date=doc_meta.publication_date,
            citation_count=doc_meta.citation_count,
            venue_weight=float(weight),
        )

    n = len(doc_attrs)
    avg = {f: sum(field_lengths[f].values()) / n for f in FIELDS}
    # sort term dicts so iteration (and serialization) order is canonical
    postings = {
        f: {t: postings[f][t] for t in sorted(postings[f])} for f in FIELDS
    }
    return FieldedIndex(
        postings=postings,
        field_lengths=field_lengths,
        avg_field_length=avg,
        doc_attrs=doc_attrs,
        map_count=n,
        max_citations=max(a.citation_count for a in doc_attrs.values()),
    )


def _idf(n_docs: int, df: int) -> float:
    return math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)


def _length_norm(index: FieldedIndex, fld: str, key: MapKey, b: float) -> float:
    avg = index.avg_field_length[fld]
    if avg <= 0:
        return 1.0
    return 1.0 - b + b * (index.field_lengths[fld].get(key, 0) / avg)


def _dedupe(terms: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for t in terms:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def score_bm25f(
    query_terms: list[str], map_key: MapKey, index: FieldedIndex, config: RankingConfig
) -> float:
    """Weighted-frequency score: field tfs are combined before saturation.

    Repeated query terms count once.  Document frequency for a term is
    the number of maps containing it in any active field.
    """
    score = 0.0
    active = config.active_fields()
    for term in _dedupe(query_terms):
        containing: set[MapKey] = set()
        for fld in active:
            containing.update(index.postings[fld].get(term, ()))
        if map_key not in containing:
            continue
        weighted_tf = 0.0
        for fld in active:
            tf = index.postings[fld].get(term, {}).get(map_key, 0)
            if tf == 0:
                continue
            norm = _length_norm(index, fld, map_key, config.b)
            weighted_tf += config.field_weights[fld] * tf / norm
        if weighted_tf <= 0.0:
            continue
        score += _idf(index.map_count, len(containing)) * weighted_tf / (
            config.k1 + weighted_tf
        )
    return score


def score_linear(
    query_terms: list[str], map_key: MapKey, index: FieldedIndex, config: RankingConfig
) -> float:
    """Score each field as its own collection, then mix with field weights."""
    score = 0.0
    for fld in config.active_fields():
        field_score = 0.0
        for term in _dedupe(query_terms):
            term_postings = index.postings[fld].get(term)
            if not term_postings or map_key not in term_postings:
                continue
            norm_tf = term_postings[map_key] / _length_norm(
                index, fld, map_key, config.b
            )
            field_score += _idf(index.map_count, len(term_postings)) * norm_tf / (
                config.k1 + norm_tf
            )
        score += config.field_weights[fld] * field_score
    return score


def boost(
    map_key: MapKey, index: FieldedIndex, config: RankingConfig, now: date
) -> float:
    """Document-level boost from age, citations, and venue weight."""
    attrs = index.doc_attrs[map_key]
    age_years = max((now - attrs.publication_date).days, 0) / 365.25
    age_part = config.beta_age * 2.0 ** (-age_years / config.half_life_years)
    cite_cap = max(index.max_citations, 1)
    cite_part = (
        config.beta_cite * math.log1p(attrs.citation_count) / math.log1p(cite_cap)
    )
    return age_part + cite_part + config.beta_venue * attrs.venue_weight


def query(
    q: str,
    index: FieldedIndex,
    config: RankingConfig,
    top_k: int,
    now: date | None = None,
    stopwords: frozenset[str] | None = None,
) -> list[ScoredHit]:
    """Rank maps for a free-text query; final = text * (1 + boost)."""
    if stopwords is None:
        stopwords = load_stopwords()
    now = now or date.today()
    terms = _dedupe(analyze(q, stopwords))
    if not terms:
        logger.warning("query %r is empty after preprocessing", q)
        return []
    if top_k <= 0:
        return []

    active = config.active_fields()
    candidates: set[MapKey] = set()
    for term in terms:
        for fld in active:
            candidates.update(index.postings[fld].get(term, ()))

    scorer = score_bm25f if config.mode == "bm25f" else score_linear
    hits = []
    for key in sorted(candidates):
        text_score = scorer(terms, key, index, config)
        boost_value = boost(key, index, config, now)
        matched = tuple(
            fld
            for fld in active
            if any(key in index.postings[fld].get(t, {}) for t in terms)
        )
        hits.append(
            ScoredHit(
                map_key=key,
                text_score=text_score,
                boost=boost_value,
                final_score=text_score * (1.0 + boost_value),
                matched_fields=matched,
            )
        )
    hits.sort(key=lambda h: (-h.final_score, h.map_key))
    return hits[:top_k]


def index_to_dict(index: FieldedIndex) -> dict:
    return {
        "format": INDEX_FORMAT,
        "map_count": index.map_count,
        "max_citations": index.max_citations,
        "postings": {
            fld: {
                term: [
                    [list(key), tf]
                    for key, tf in sorted(index.postings[fld][term].items())
                ]
                for term in sorted(index.postings[fld])
            }
            for fld in FIELDS
        },
        "field_lengths": {
            fld: [
                [list(key), length]
                for key, length in sorted(index.field_lengths[fld].items())
            ]
            for fld in FIELDS
        },
        "avg_field_length": {fld: index.avg_field_length[fld] for fld in FIELDS},
        "doc_attrs": [
            {
                "doc_id": key[0],
                "figure_number": key[1],
                "publication_date": attrs.publication_date.isoformat(),
                "citation_count": attrs.citation_count,
                "venue_weight": attrs.venue_weight,
            }
            for key, attrs in sorted(index.doc_attrs.items())
        ],
    }


def index_from_dict(obj: dict) -> FieldedIndex:
    if obj.get("format") != INDEX_FORMAT:
        raise ValueError(
            f"unsupported index format {obj.get('format')!r}; expected {INDEX_FORMAT}"
        )
    postings = {
        fld: {
            term: {(k[0], int(k[1])): int(tf) for k, tf in pairs}
            for term, pairs in obj["postings"][fld].items()
        }
        for fld in FIELDS
    }
    field_lengths = {
        fld: {(k[0], int(k[1])): int(length) for k, length in obj["field_lengths"][fld]}
        for fld in FIELDS
    }
    doc_attrs = {
        (rec["doc_id"], int(rec["figure_number"])): DocAttrs(
            publication_date=date.fromisoformat(rec["publication_date"]),
            citation_count=int(rec["citation_count"]),
            venue_weight=float(rec["venue_weight"]),
        )
        for rec in obj["doc_attrs"]
    }
    return FieldedIndex(
        postings=postings,
        field_lengths=field_lengths,
        avg_field_length={f: float(obj["avg_field_length"][f]) for f in FIELDS},
        doc_attrs=doc_attrs,
        map_count=int(obj["map_count"]),
        max_citations=int(obj["max_citations"]),
    )


def save_index(index: FieldedIndex, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(index_to_dict(index), handle, sort_keys=True, indent=1)
        handle.write("\n")


def load_index(path: str | Path) -> FieldedIndex:
    with open(path, encoding="utf-8") as handle:
        return index_from_dict(json.load(handle))
