"""Document interchange format: types, loading, validation, serialization.

A corpus file is UTF-8 JSON Lines, one self-contained document record per
line.  All downstream stages consume the types defined here; instances are
treated as immutable after load.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import CorpusFormatError

logger = logging.getLogger(__name__)

# Declared regular_font_size must match the recomputed mode within this
# tolerance; the same tolerance defines font-size equality everywhere.
FONT_SIZE_TOLERANCE = 0.01


def font_sizes_equal(a: float, b: float) -> bool:
    return abs(a - b) <= FONT_SIZE_TOLERANCE


def font_size_smaller(a: float, b: float) -> bool:
    """True when a is smaller than b beyond the comparison tolerance."""
    return b - a > FONT_SIZE_TOLERANCE


@dataclass(frozen=True)
class TextLine:
    """One typeset line: the unit over which caption rules operate."""

    text: str
    font: str
    font_size: float
    paragraph_id: int
    line_index: int


@dataclass(frozen=True)
class FigureRegion:
    figure_number: int
    page_number: int
    declared_fraction_of_page: float | None = None


@dataclass(frozen=True)
class Page:
    page_number: int
    lines: tuple[TextLine, ...]
    figures: tuple[FigureRegion, ...]


@dataclass(frozen=True)
class DocLevelMetadata:
    title: str
    abstract: str
    authors: tuple[str, ...]
    publication_date: date
    citation_count: int
    venue: str


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    regular_font_size: float
    pages: tuple[Page, ...]
    metadata: DocLevelMetadata

    def iter_lines(self):
        for page in self.pages:
            yield from page.lines

    def iter_figures(self):
        for page in self.pages:
            yield from page.figures


def compute_regular_font_size(doc: DocumentRecord) -> float:
    """Modal font size over all lines; ties broken by the larger size."""
    counts = Counter(line.font_size for line in doc.iter_lines())
    if not counts:
        raise ValueError(f"document {doc.doc_id!r} has no text lines")
    best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    return best[0]


_LINE_FIELDS = {"text", "font", "font_size", "paragraph_id", "line_index"}
_FIGURE_FIELDS = {"figure_number", "page_number", "declared_fraction_of_page"}
_PAGE_FIELDS = {"page_number", "lines", "figures"}
_META_FIELDS = {"title", "abstract", "authors", "publication_date", "citation_count", "venue"}
_DOC_FIELDS = {"doc_id", "regular_font_size", "metadata", "pages"}


def _check_fields(obj: dict, allowed: set[str], where: str, lineno: int) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise CorpusFormatError(
            f"unknown field(s) {sorted(unknown)} in {where}", lineno
        )


def _require(obj: dict, key: str, where: str, lineno: int):
    if key not in obj:
        raise CorpusFormatError(f"missing field {key!r} in {where}", lineno)
    return obj[key]


def _parse_line(obj: dict, page_no: int, lineno: int) -> TextLine:
    where = f"page {page_no} line entry"
    _check_fields(obj, _LINE_FIELDS, where, lineno)
    line = TextLine(
        text=str(_require(obj, "text", where, lineno)),
        font=str(_require(obj, "font", where, lineno)),
        font_size=float(_require(obj, "font_size", where, lineno)),
        paragraph_id=int(_require(obj, "paragraph_id", where, lineno)),
        line_index=int(_require(obj, "line_index", where, lineno)),
    )
    if line.font_size <= 0:
        raise CorpusFormatError(
            f"font_size must be > 0 on page {page_no}, line_index {line.line_index}",
            lineno,
        )
    if line.paragraph_id < 0 or line.line_index < 0:
        raise CorpusFormatError(
            f"negative paragraph_id/line_index on page {page_no}", lineno
        )
    return line


def _parse_figure(obj: dict, page_no: int, lineno: int) -> FigureRegion:
    where = f"page {page_no} figure entry"
    _check_fields(obj, _FIGURE_FIELDS, where, lineno)
    frac = obj.get("declared_fraction_of_page")
    fig = FigureRegion(
        figure_number=int(_require(obj, "figure_number", where, lineno)),
        page_number=int(_require(obj, "page_number", where, lineno)),
        declared_fraction_of_page=None if frac is None else float(frac),
    )
    if fig.figure_number < 1:
        raise CorpusFormatError(f"figure_number must be >= 1 in {where}", lineno)
    if fig.page_number != page_no:
        raise CorpusFormatError(
            f"figure declares page_number {fig.page_number} inside page {page_no}",
            lineno,
        )
    if fig.declared_fraction_of_page is not None and not (
        0.0 <= fig.declared_fraction_of_page <= 1.0
    ):
        raise CorpusFormatError(
            f"declared_fraction_of_page outside [0,1] in {where}", lineno
        )
    return fig


def _parse_page(obj: dict, lineno: int) -> Page:
    _check_fields(obj, _PAGE_FIELDS, "page", lineno)
    page_no = int(_require(obj, "page_number", "page", lineno))
    if page_no < 1:
        raise CorpusFormatError("page_number must be >= 1", lineno)
    lines = tuple(
        _parse_line(o, page_no, lineno) for o in _require(obj, "lines", "page", lineno)
    )
    indices = [ln.line_index for ln in lines]
    if indices != list(range(len(lines))):
        raise CorpusFormatError(
            f"line_index values on page {page_no} must be 0-based, unique and "
            f"contiguous in order; got {indices}",
            lineno,
        )
    for prev, cur in zip(lines, lines[1:]):
        if cur.paragraph_id < prev.paragraph_id:
            raise CorpusFormatError(
                f"paragraph_id decreases at page {page_no}, line_index {cur.line_index}",
                lineno,
            )
    figures = tuple(
        _parse_figure(o, page_no, lineno)
        for o in _require(obj, "figures", "page", lineno)
    )
    return Page(page_number=page_no, lines=lines, figures=figures)


def _parse_metadata(obj: dict, lineno: int, today: date) -> DocLevelMetadata:
    _check_fields(obj, _META_FIELDS, "metadata", lineno)
    raw_date = _require(obj, "publication_date", "metadata", lineno)
    try:
        pub = date.fromisoformat(str(raw_date))
    except ValueError as exc:
        raise CorpusFormatError(f"bad publication_date {raw_date!r}: {exc}", lineno)
    if pub > today:
        raise CorpusFormatError(
            f"publication_date {pub.isoformat()} is after the ingestion date", lineno
        )
    citations = int(_require(obj, "citation_count", "metadata", lineno))
    if citations < 0:
        raise CorpusFormatError("citation_count must be >= 0", lineno)
    return DocLevelMetadata(
        title=str(_require(obj, "title", "metadata", lineno)),
        abstract=str(_require(obj, "abstract", "metadata", lineno)),
        authors=tuple(str(a) for a in _require(obj, "authors", "metadata", lineno)),
        publication_date=pub,
        citation_count=citations,
        venue=str(_require(obj, "venue", "metadata", lineno)),
    )


def parse_record(obj: dict, lineno: int = 0, today: date | None = None) -> DocumentRecord:
    """Validate one decoded record and build a DocumentRecord."""
    today = today or date.today()
    _check_fields(obj, _DOC_FIELDS, "document", lineno)
    doc_id = str(_require(obj, "doc_id", "document", lineno))
    if not doc_id:
        raise CorpusFormatError("doc_id must be non-empty", lineno)
    declared = float(_require(obj, "regular_font_size", "document", lineno))
    if declared <= 0:
        raise CorpusFormatError("regular_font_size must be > 0", lineno)
    pages = tuple(
        _parse_page(o, lineno) for o in _require(obj, "pages", "document", lineno)
    )
    meta = _parse_metadata(_require(obj, "metadata", "document", lineno), lineno, today)
    doc = DocumentRecord(
        doc_id=doc_id, regular_font_size=declared, pages=pages, metadata=meta
    )
    if any(page.lines for page in pages):
        recomputed = compute_regular_font_size(doc)
        if not font_sizes_equal(recomputed, declared):
            logger.warning(
                "doc %s: declared regular_font_size %.4g != recomputed %.4g; "
                "using recomputed value",
                doc_id,
                declared,
                recomputed,
            )
            doc = DocumentRecord(
                doc_id=doc_id, regular_font_size=recomputed, pages=pages, metadata=meta
            )
    return doc


def load_corpus(path: str | Path, today: date | None = None) -> list[DocumentRecord]:
    """Load and validate a JSON Lines corpus file.

    Raises CorpusFormatError naming the offending line on malformed
    records, duplicate doc_ids, or invariant violations.
    """
    docs: list[DocumentRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc}", lineno)
            if not isinstance(obj, dict):
                raise CorpusFormatError("record must be a JSON object", lineno)
            doc = parse_record(obj, lineno, today=today)
            if doc.doc_id in seen:
                raise CorpusFormatError(f"duplicate doc_id {doc.doc_id!r}", lineno)
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def record_to_dict(doc: DocumentRecord) -> dict:
    return {
        "doc_id": doc.doc_id,
        "regular_font_size": doc.regular_font_size,
        "metadata": {
            "title": doc.metadata.title,
            "abstract": doc.metadata.abstract,
            "authors": list(doc.metadata.authors),
            "publication_date": doc.metadata.publication_date.isoformat(),
            "citation_count": doc.metadata.citation_count,
            "venue": doc.metadata.venue,
        },
        "pages": [
            {
                "page_number": page.page_number,
                "lines": [
                    {
                        "text": ln.text,
                        "font": ln.font,
                        "font_size": ln.font_size,
                        "paragraph_id": ln.paragraph_id,
                        "line_index": ln.line_index,
                    }
                    for ln in page.lines
                ],
                "figures": [
                    {
                        "figure_number": fig.figure_number,
                        "page_number": fig.page_number,
                        **(
                            {"declared_fraction_of_page": fig.declared_fraction_of_page}
                            if fig.declared_fraction_of_page is not None
                            else {}
                        ),
                    }
                    for fig in page.figures
                ],
            }
            for page in doc.pages
        ],
    }


def serialize_corpus(docs: list[DocumentRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(json.dumps(record_to_dict(doc), sort_keys=True))
            handle.write("\n")
