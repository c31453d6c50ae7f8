"""Per-figure metadata extraction: captions, references, relative size.

Captions are found by tagging lines as caption boundaries from font
evidence; references are keyword+number occurrences at the document's
regular font size, expanded to their containing sentence.  Relative
figure size is inferred from text-line counts.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from statistics import median

from .docmodel import (
    DocumentRecord,
    Page,
    font_size_smaller,
    font_sizes_equal,
)

logger = logging.getLogger(__name__)

# Keyword + optional punctuation + figure number.  Longer keyword forms
# first so "Figure" is never half-consumed as "Fig".
_KEYWORD_NUMBER = re.compile(r"(?:FIGURE|Figure|FIG|Fig)[.:]?\s*(\d+)(?!\d)")

TAG_CAPTION_BEGIN = "caption_begin"
TAG_CAPTION_END = "caption_end"
TAG_OTHER = "other"


@dataclass(frozen=True)
class LineTag:
    """Boundary tag for one line; a single-line caption carries both flags."""

    page_number: int
    line_index: int
    begin: bool
    end: bool

    @property
    def tag(self) -> str:
        if self.begin and self.end:
            return TAG_CAPTION_BEGIN + "+" + TAG_CAPTION_END
        if self.begin:
            return TAG_CAPTION_BEGIN
        if self.end:
            return TAG_CAPTION_END
        return TAG_OTHER


@dataclass(frozen=True)
class FigureMetadata:
    doc_id: str
    figure_number: int
    page_number: int
    caption: str
    reference_sentences: tuple[str, ...]
    relative_size: float | None
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.caption:
            parsed = parse_caption_number(self.caption)
            if parsed != self.figure_number:
                raise ValueError(
                    f"caption does not open with a figure keyword and number "
                    f"{self.figure_number}: {self.caption!r}"
                )
        for sentence in self.reference_sentences:
            if not any(
                int(m.group(1)) == self.figure_number
                for m in _KEYWORD_NUMBER.finditer(sentence)
            ):
                raise ValueError(
                    f"reference sentence lacks a reference point for figure "
                    f"{self.figure_number}: {sentence!r}"
                )
        if self.relative_size is not None and not (0.0 <= self.relative_size <= 1.0):
            raise ValueError(f"relative_size {self.relative_size} outside [0,1]")

    @property
    def map_key(self) -> tuple[str, int]:
        return (self.doc_id, self.figure_number)


def parse_caption_number(text: str) -> int | None:
    """Figure number when text begins with keyword+number, else None."""
    m = _KEYWORD_NUMBER.match(text.lstrip())
    return int(m.group(1)) if m else None


def _presentation_differs(line, neighbor) -> bool:
    # A missing neighbor (page boundary) counts as "differs".
    if neighbor is None:
        return True
    return line.font != neighbor.font and not font_sizes_equal(
        line.font_size, neighbor.font_size
    )


def tag_caption_boundaries(page: Page, regular_size: float) -> list[LineTag]:
    """Tag every line of a page as caption begin/end/other.

    A line opens a caption when it starts with a figure keyword and
    number, differs from the previous line in both font and size, and is
    set smaller than the regular size.  A line closes a caption when it
    ends with ".", differs from the following line in both font and
    size, is smaller than the regular size, and everything since the
    most recent opening line shares one paragraph and one presentation.
    An end with no preceding begin is tagged other.
    """
    lines = page.lines
    tags: list[LineTag] = []
    last_begin: int | None = None
    for i, line in enumerate(lines):
        prev_line = lines[i - 1] if i > 0 else None
        next_line = lines[i + 1] if i + 1 < len(lines) else None
        smaller = font_size_smaller(line.font_size, regular_size)

        begin = (
            parse_caption_number(line.text) is not None
            and _presentation_differs(line, prev_line)
            and smaller
        )
        if begin:
            last_begin = i

        end = False
        if (
            last_begin is not None
            and line.text.rstrip().endswith(".")
            and _presentation_differs(line, next_line)
            and smaller
        ):
            opener = lines[last_begin]
            end = all(
                other.paragraph_id == opener.paragraph_id
                and other.font == opener.font
                and font_sizes_equal(other.font_size, opener.font_size)
                for other in lines[last_begin : i + 1]
            )
        tags.append(
            LineTag(
                page_number=page.page_number,
                line_index=line.line_index,
                begin=begin,
                end=end,
            )
        )
    return tags


def extract_caption(
    page: Page, figure_number: int, regular_size: float
) -> tuple[str, list[str]]:
    """Caption text for one figure, plus diagnostics.

    Joins the lines from the opening boundary whose number matches
    figure_number through its matching closing boundary with single
    spaces.  An opener with no closer before the next opener or the page
    end yields an empty caption and a diagnostic.
    """
    tags = tag_caption_boundaries(page, regular_size)
    diagnostics: list[str] = []
    for i, tag in enumerate(tags):
        if not tag.begin:
            continue
        if parse_caption_number(page.lines[i].text) != figure_number:
            continue
        for j in range(i, len(tags)):
            if j > i and tags[j].begin:
                break
            if tags[j].end:
                text = " ".join(line.text.strip() for line in page.lines[i : j + 1])
                return text, diagnostics
        diagnostics.append(
            f"unclosed caption for figure {figure_number} on page "
            f"{page.page_number} (begin at line_index {page.lines[i].line_index})"
        )
        return "", diagnostics
    return "", diagnostics


def find_reference_points(
    doc: DocumentRecord, figure_number: int
) -> list[tuple[int, int, int]]:
    """All keyword+number occurrences at the regular font size.

    Caption lines are excluded by the font-size requirement.  Returns
    (page_number, line_index, char_offset) triples in document order.
    """
    points: list[tuple[int, int, int]] = []
    for page in doc.pages:
        for line in page.lines:
            if not font_sizes_equal(line.font_size, doc.regular_font_size):
                continue
            for m in _KEYWORD_NUMBER.finditer(line.text):
                if int(m.group(1)) == figure_number:
                    points.append((page.page_number, line.line_index, m.start()))
    return points


# Tokens before a "." that do not terminate a sentence.
_DOT_GUARDS = {"fig", "al", "eg", "ie", "cf"}


def _is_guarded_period(text: str, i: int) -> bool:
    j = i - 1
    while j >= 0 and (text[j].isalpha() or text[j] == "."):
        j -= 1
    token = text[j + 1 : i].replace(".", "")
    if not token:
        return False
    if len(token) == 1 and token.isupper():
        return True  # personal initial
    return token.lower() in _DOT_GUARDS


def split_sentences(text: str) -> list[tuple[int, int]]:
    """(start, end) spans of sentences; end index is exclusive.

    Boundaries are ".", "!", "?" followed by whitespace or text end,
    except periods after known abbreviations and initials.
    """
    spans: list[tuple[int, int]] = []
    start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in ".!?":
            continue
        if i + 1 < n and not text[i + 1].isspace():
            continue
        if ch == "." and _is_guarded_period(text, i):
            continue
        spans.append((start, i + 1))
        start = i + 1
        while start < n and text[start].isspace():
            start += 1
    if start < n:
        spans.append((start, n))
    return spans


def _body_runs(page: Page, regular_size: float):
    """Maximal runs of consecutive regular-size lines on a page.

    Yields (run_text, line_offsets) where line_offsets maps line_index to
    the offset of that line's stripped text within run_text.  Keeping
    runs separate stops caption text from leaking into body sentences.
    """
    run: list = []
    for line in list(page.lines) + [None]:
        if line is not None and font_sizes_equal(line.font_size, regular_size):
            run.append(line)
            continue
        if run:
            offsets = {}
            pieces = []
            pos = 0
            for ln in run:
                stripped = ln.text.strip()
                offsets[ln.line_index] = pos
                pieces.append(stripped)
                pos += len(stripped) + 1  # single joining space
            yield " ".join(pieces), offsets
            run = []


def extract_reference_sentences(
    doc: DocumentRecord, figure_number: int
) -> list[str]:
    """Full sentence around each reference point, deduplicated in order."""
    points = find_reference_points(doc, figure_number)
    if not points:
        return []
    by_page: dict[int, list[tuple[int, int]]] = {}
    for page_no, line_index, offset in points:
        by_page.setdefault(page_no, []).append((line_index, offset))

    sentences: list[str] = []
    seen: set[str] = set()
    for page in doc.pages:
        wanted = by_page.get(page.page_number)
        if not wanted:
            continue
        runs = list(_body_runs(page, doc.regular_font_size))
        for line_index, char_offset in wanted:
            line = page.lines[line_index]
            leading_ws = len(line.text) - len(line.text.lstrip())
            for run_text, offsets in runs:
                if line_index not in offsets:
                    continue
                target = offsets[line_index] + (char_offset - leading_ws)
                for s, e in split_sentences(run_text):
                    if s <= target < e:
                        sentence = run_text[s:e].strip()
                        if sentence not in seen:
                            seen.add(sentence)
                            sentences.append(sentence)
                        break
                break
    return sentences


def figure_free_line_counts(docs: list[DocumentRecord]) -> list[int]:
    return [
        len(page.lines)
        for doc in docs
        for page in doc.pages
        if not page.figures
    ]


def corpus_baseline_line_count(docs: list[DocumentRecord]) -> float | None:
    """Median line count of figure-free pages across a corpus, if any."""
    counts = figure_free_line_counts(docs)
    return float(median(counts)) if counts else None


def compute_relative_size(
    doc: DocumentRecord, page: Page, corpus_baseline: float | None = None
) -> float | None:
    """Average page fraction occupied by each figure on this page.

    With t text lines on the page, f figures on it, and T the largest
    line count among the document's figure-free pages, the value is
    (1 - t/T) / f, clamped to [0,1].  When the document has no
    figure-free page, corpus_baseline (a corpus-level median of
    figure-free page line counts) stands in for T; with neither, the
    size is unknown and None is returned.  Declared per-figure fractions
    override this value downstream.
    """
    if not page.figures:
        raise ValueError(f"page {page.page_number} has no figures")
    own = [len(p.lines) for p in doc.pages if not p.figures]
    baseline = float(max(own)) if own else corpus_baseline
    if baseline is None or baseline <= 0:
        return None
    value = (1.0 - len(page.lines) / baseline) / len(page.figures)
    return min(1.0, max(0.0, value))


def extract_all(
    doc: DocumentRecord, corpus_baseline: float | None = None
) -> list[FigureMetadata]:
    """One FigureMetadata per figure region, in (page, figure) order."""
    results: list[FigureMetadata] = []
    for page in doc.pages:
        if not page.figures:
            continue
        page_size = compute_relative_size(doc, page, corpus_baseline)
        for fig in sorted(page.figures, key=lambda f: f.figure_number):
            caption, diagnostics = extract_caption(
                page, fig.figure_number, doc.regular_font_size
            )
            references = extract_reference_sentences(doc, fig.figure_number)
            if not caption:
                diagnostics.append(
                    f"empty caption for figure {fig.figure_number} "
                    f"on page {page.page_number}"
                )
            if not references:
                diagnostics.append(
                    f"figure {fig.figure_number} is never referenced in the body"
                )
            size = (
                fig.declared_fraction_of_page
                if fig.declared_fraction_of_page is not None
                else page_size
            )
            results.append(
                FigureMetadata(
                    doc_id=doc.doc_id,
                    figure_number=fig.figure_number,
                    page_number=page.page_number,
                    caption=caption,
                    reference_sentences=tuple(references),
                    relative_size=size,
                    diagnostics=tuple(diagnostics),
                )
            )
    results.sort(key=lambda m: (m.page_number, m.figure_number))
    return results


def metadata_to_dict(meta: FigureMetadata) -> dict:
    return {
        "doc_id": meta.doc_id,
        "figure_number": meta.figure_number,
        "page_number": meta.page_number,
        "caption": meta.caption,
        "reference_sentences": list(meta.reference_sentences),
        "relative_size": meta.relative_size,
    }


_META_DICT_FIELDS = {
    "doc_id",
    "figure_number",
    "page_number",
    "caption",
    "reference_sentences",
    "relative_size",
}


def metadata_from_dict(obj: dict) -> FigureMetadata:
    missing = _META_DICT_FIELDS - set(obj)
    if missing:
        raise ValueError(f"figure metadata record missing field(s) {sorted(missing)}")
    size = obj["relative_size"]
    return FigureMetadata(
        doc_id=str(obj["doc_id"]),
        figure_number=int(obj["figure_number"]),
        page_number=int(obj["page_number"]),
        caption=str(obj["caption"]),
        reference_sentences=tuple(str(s) for s in obj["reference_sentences"]),
        relative_size=None if size is None else float(size),
    )
