"""Statement document model and ingestion-file parsing.

An ingestion file is a single JSON object produced by the upstream
detector/OCR stack:

    {
      "pages":   [{"index": 0, "width": 1700, "height": 2200, "dpi": 200}],
      "tdc":     [{"page": 0, "label": "CreditDebit", "score": 0.97,
                   "box": [x1, y1, x2, y2]}, ...],
      "tsr":     [{"page": 0, "label": "TableRow", "score": 0.91,
                   "box": [...]}, ...],
      "ocr":     [{"page": 0, "text": "1,204.33", "box": [...],
                   "confidence": 0.99}, ...],
      "summary": {"opening_cents": 100000, "closing_cents": 85000,
                  "currency": "USD"}
    }

Coordinates are top-left-origin pixels, y growing downward; money is
integer cents. ``summary`` may be absent at parse time (detector-only
exports); spreading requires it and says so. Unknown keys anywhere are
ignored with a warning. Boxes are clamped to their page bounds, which
never grows them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Union

from .geometry import Box, intersection_area


class ParseError(ValueError):
    """Malformed ingestion input; the message names the offending record."""


class TableCategory(str, Enum):
    """Detector taxonomy for page-level regions (tables plus auxiliaries)."""

    CREDIT = "Credit"
    DEBIT = "Debit"
    CREDIT_DEBIT = "CreditDebit"
    CHECK = "Check"
    TXN_BAL = "Txn_bal"
    TXN_AMT_BAL = "Txn_amt_bal"
    TXN_CHECK_BAL = "Txn_check_bal"
    OTHER = "Other"
    CHECK_IMAGE = "Check_image"
    TABLE_CAPTION = "Table_caption"
    TABLE_HEADER = "Table_header"


class TsrClass(str, Enum):
    """Structure-recognition taxonomy within one table region."""

    TABLE = "Table"
    ROW = "TableRow"
    COLUMN = "TableColumn"
    COLUMN_HEADER = "TableColumnHeader"
    SPANNING_ROW = "TableSpanningRow"


Label = Union[TableCategory, TsrClass]

# Categories that can head a table region (vision output before and
# after text refinement), as opposed to the auxiliary region classes.
TABLE_CATEGORIES = frozenset(
    {
        TableCategory.CREDIT,
        TableCategory.DEBIT,
        TableCategory.CREDIT_DEBIT,
        TableCategory.CHECK,
        TableCategory.TXN_BAL,
        TableCategory.TXN_AMT_BAL,
        TableCategory.TXN_CHECK_BAL,
        TableCategory.OTHER,
    }
)

# Categories whose rows become ledger transactions once refined.
TRANSACTION_CATEGORIES = frozenset(
    {
        TableCategory.CREDIT,
        TableCategory.DEBIT,
        TableCategory.CHECK,
        TableCategory.TXN_BAL,
        TableCategory.TXN_AMT_BAL,
        TableCategory.TXN_CHECK_BAL,
    }
)

# Wire-label aliases seen in upstream exports.
_TDC_ALIASES = {"Credit/Debit": TableCategory.CREDIT_DEBIT}


@dataclass(frozen=True)
class PageImage:
    page_index: int
    width: float
    height: float
    dpi: float | None = None


@dataclass(frozen=True)
class DetectedObject:
    box: Box
    label: Label
    score: float
    page_index: int


@dataclass(frozen=True)
class OcrWord:
    text: str
    box: Box
    page_index: int
    confidence: float | None = None


@dataclass(frozen=True)
class Summary:
    opening_cents: int
    closing_cents: int
    currency: str = "USD"


@dataclass
class StatementDocument:
    pages: list[PageImage]
    tdc_objects: list[DetectedObject]
    tsr_objects: list[DetectedObject]
    ocr: list[OcrWord]
    summary: Summary | None = None
    parse_warnings: list[str] = field(default_factory=list, compare=False)

    def page(self, index: int) -> PageImage:
        for p in self.pages:
            if p.page_index == index:
                return p
        raise KeyError(f"no page with index {index}")

    def words_on_page(self, index: int) -> list[OcrWord]:
        return [w for w in self.ocr if w.page_index == index]

    def tdc_on_page(self, index: int) -> list[DetectedObject]:
        return [o for o in self.tdc_objects if o.page_index == index]

    def tsr_on_page(self, index: int) -> list[DetectedObject]:
        return [o for o in self.tsr_objects if o.page_index == index]


def _load(source: Union[str, Path, dict]) -> dict:
    if isinstance(source, dict):
        return source
    try:
        raw = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read ingestion file {source}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be a JSON object")
    return data


def _warn_unknown(
    record: dict, known: Iterable[str], where: str, warnings: list[str]
) -> None:
    for key in record:
        if key not in known:
            warnings.append(f"{where}: ignoring unknown field {key!r}")


def _parse_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_box(value: Any, where: str) -> Box:
    if not isinstance(value, list) or len(value) != 4:
        raise ParseError(f"{where}: box must be [x1, y1, x2, y2]")
    x1, y1, x2, y2 = (_parse_number(v, where) for v in value)
    if x2 < x1:
        raise ParseError(f"{where}: x2 < x1")
    if y2 < y1:
        raise ParseError(f"{where}: y2 < y1")
    return Box(x1, y1, x2, y2)


def _parse_pages(data: dict, warnings: list[str]) -> list[PageImage]:
    raw_pages = data.get("pages")
    if not isinstance(raw_pages, list) or not raw_pages:
        raise ParseError("missing or empty 'pages' array")
    pages = []
    seen = set()
    for i, rec in enumerate(raw_pages):
        where = f"pages[{i}]"
        if not isinstance(rec, dict):
            raise ParseError(f"{where}: expected an object")
        _warn_unknown(rec, ("index", "width", "height", "dpi"), where, warnings)
        for key in ("index", "width", "height"):
            if key not in rec:
                raise ParseError(f"{where}: missing {key!r}")
        index = rec["index"]
        if isinstance(index, bool) or not isinstance(index, int):
            raise ParseError(f"{where}: page index must be an integer")
        if index in seen:
            raise ParseError(f"{where}: duplicate page index {index}")
        seen.add(index)
        width = _parse_number(rec["width"], where)
        height = _parse_number(rec["height"], where)
        if width <= 0 or height <= 0:
            raise ParseError(f"{where}: page dimensions must be positive")
        dpi = None
        if rec.get("dpi") is not None:
            dpi = _parse_number(rec["dpi"], where)
        pages.append(PageImage(index, width, height, dpi))
    return pages


def _resolve_label(raw: Any, taxonomy: str, where: str) -> Label:
    if not isinstance(raw, str):
        raise ParseError(f"{where}: label must be a string")
    if taxonomy == "tdc":
        if raw in _TDC_ALIASES:
            return _TDC_ALIASES[raw]
        try:
            return TableCategory(raw)
        except ValueError:
            raise ParseError(f"{where}: unknown label {raw!r}") from None
    try:
        return TsrClass(raw)
    except ValueError:
        raise ParseError(f"{where}: unknown label {raw!r}") from None


def _parse_objects(
    data: dict,
    taxonomy: str,
    pages: dict[int, PageImage],
    warnings: list[str],
) -> list[DetectedObject]:
    raw = data.get(taxonomy, [])
    if raw is None:
        raw = []
    if not isinstance(raw, list):
        raise ParseError(f"'{taxonomy}' must be an array")
    out = []
    for i, rec in enumerate(raw):
        where = f"{taxonomy}[{i}]"
        if not isinstance(rec, dict):
            raise ParseError(f"{where}: expected an object")
        _warn_unknown(rec, ("page", "label", "score", "box"), where, warnings)
        for key in ("page", "label", "score", "box"):
            if key not in rec:
                raise ParseError(f"{where}: missing {key!r}")
        page = rec["page"]
        if page not in pages:
            raise ParseError(f"{where}: references missing page {page!r}")
        label = _resolve_label(rec["label"], taxonomy, where)
        score = _parse_number(rec["score"], where)
        if not (0.0 <= score <= 1.0):
            raise ParseError(f"{where}: score {score} outside [0, 1]")
        box = _parse_box(rec["box"], where)
        bounds = pages[page]
        box = box.clamp(0.0, 0.0, bounds.width, bounds.height)
        out.append(DetectedObject(box=box, label=label, score=score, page_index=page))
    return out


def _parse_ocr_words(
    data: dict, pages: dict[int, PageImage], warnings: list[str]
) -> list[OcrWord]:
    raw = data.get("ocr", [])
    if raw is None:
        raw = []
    if not isinstance(raw, list):
        raise ParseError("'ocr' must be an array")
    out = []
    for i, rec in enumerate(raw):
        where = f"ocr[{i}]"
        if not isinstance(rec, dict):
            raise ParseError(f"{where}: expected an object")
        _warn_unknown(rec, ("page", "text", "box", "confidence"), where, warnings)
        for key in ("page", "text", "box"):
            if key not in rec:
                raise ParseError(f"{where}: missing {key!r}")
        page = rec["page"]
        if page not in pages:
            raise ParseError(f"{where}: references missing page {page!r}")
        text = rec["text"]
        if not isinstance(text, str) or not text:
            raise ParseError(f"{where}: text must be a non-empty string")
        box = _parse_box(rec["box"], where)
        bounds = pages[page]
        box = box.clamp(0.0, 0.0, bounds.width, bounds.height)
        confidence = None
        if rec.get("confidence") is not None:
            confidence = _parse_number(rec["confidence"], where)
            if not (0.0 <= confidence <= 1.0):
                raise ParseError(f"{where}: confidence outside [0, 1]")
        out.append(OcrWord(text=text, box=box, page_index=page, confidence=confidence))
    return out


def _parse_summary(data: dict, warnings: list[str]) -> Summary | None:
    raw = data.get("summary")
    if raw is None:
        return None
    where = "summary"
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: expected an object")
    _warn_unknown(raw, ("opening_cents", "closing_cents", "currency"), where, warnings)
    for key in ("opening_cents", "closing_cents"):
        if key not in raw:
            raise ParseError(f"{where}: missing {key!r}")
        if isinstance(raw[key], bool) or not isinstance(raw[key], int):
            raise ParseError(f"{where}: {key} must be integer cents")
    currency = raw.get("currency", "USD")
    if not isinstance(currency, str) or not currency:
        raise ParseError(f"{where}: currency must be a non-empty string")
    return Summary(raw["opening_cents"], raw["closing_cents"], currency)


def parse_document(source: Union[str, Path, dict]) -> StatementDocument:
    """Parse one ingestion file (path or pre-loaded dict) into a document.

    Raises ParseError on structural problems; collects ignored-field
    notes into ``parse_warnings``.
    """
    data = _load(source)
    warnings: list[str] = []
    _warn_unknown(data, ("pages", "tdc", "tsr", "ocr", "summary"), "document", warnings)
    pages = _parse_pages(data, warnings)
    by_index = {p.page_index: p for p in pages}
    tdc = _parse_objects(data, "tdc", by_index, warnings)
    tsr = _parse_objects(data, "tsr", by_index, warnings)
    ocr = _parse_ocr_words(data, by_index, warnings)
    summary = _parse_summary(data, warnings)
    return StatementDocument(
        pages=pages,
        tdc_objects=tdc,
        tsr_objects=tsr,
        ocr=ocr,
        summary=summary,
        parse_warnings=warnings,
    )


def parse_detections(source: Union[str, Path, dict], taxonomy: str) -> list[DetectedObject]:
    """Parse only one taxonomy's detections ('tdc' or 'tsr') from a file."""
    if taxonomy not in ("tdc", "tsr"):
        raise ValueError("taxonomy must be 'tdc' or 'tsr'")
    doc = parse_document(source)
    return doc.tdc_objects if taxonomy == "tdc" else doc.tsr_objects


def parse_ocr(source: Union[str, Path, dict]) -> list[OcrWord]:
    """Parse only the OCR words from an ingestion file."""
    return parse_document(source).ocr


def validate_document(doc: StatementDocument) -> list[str]:
    """Cross-checks that do not block parsing. Returns warnings, mutates nothing.

    Flags pages that carry tables but no OCR words, table regions with no
    overlapping row detections, and duplicate identical detection records.
    """
    warnings: list[str] = []
    for page in doc.pages:
        tables = [
            o
            for o in doc.tdc_on_page(page.page_index)
            if o.label in TABLE_CATEGORIES
        ]
        if tables and not doc.words_on_page(page.page_index):
            warnings.append(
                f"page {page.page_index}: has {len(tables)} table(s) but no OCR words"
            )
        rows = [
            o
            for o in doc.tsr_on_page(page.page_index)
            if o.label in (TsrClass.ROW, TsrClass.SPANNING_ROW)
        ]
        for t, table in enumerate(tables):
            if not any(intersection_area(table.box, r.box) > 0 for r in rows):
                warnings.append(
                    f"page {page.page_index}: table {t} ({table.label.value}) "
                    f"has no overlapping row detections"
                )
    seen: dict[tuple, int] = {}
    for kind, objects in (("tdc", doc.tdc_objects), ("tsr", doc.tsr_objects)):
        for i, o in enumerate(objects):
            key = (kind, o.page_index, o.label, o.box.as_tuple(), o.score)
            if key in seen:
                warnings.append(
                    f"{kind}[{i}]: duplicate of {kind}[{seen[key]}] "
                    f"({o.label.value} at {o.box.as_tuple()})"
                )
            else:
                seen[key] = i
    return warnings


def serialize_document(doc: StatementDocument) -> dict:
    """Inverse of parse_document: a dict that reparses to an equal document."""

    def obj(o: DetectedObject) -> dict:
        return {
            "page": o.page_index,
            "label": o.label.value,
            "score": o.score,
            "box": list(o.box.as_tuple()),
        }

    data: dict[str, Any] = {
        "pages": [
            {
                "index": p.page_index,
                "width": p.width,
                "height": p.height,
                **({"dpi": p.dpi} if p.dpi is not None else {}),
            }
            for p in doc.pages
        ],
        "tdc": [obj(o) for o in doc.tdc_objects],
        "tsr": [obj(o) for o in doc.tsr_objects],
        "ocr": [
            {
                "page": w.page_index,
                "text": w.text,
                "box": list(w.box.as_tuple()),
                **(
                    {"confidence": w.confidence}
                    if w.confidence is not None
                    else {}
                ),
            }
            for w in doc.ocr
        ],
    }
    if doc.summary is not None:
        data["summary"] = {
            "opening_cents": doc.summary.opening_cents,
            "closing_cents": doc.summary.closing_cents,
            "currency": doc.summary.currency,
        }
    return data


def write_document(doc: StatementDocument, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(serialize_document(doc), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
