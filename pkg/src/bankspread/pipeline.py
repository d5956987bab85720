"""End-to-end orchestration: detections in, certified ledger out.

One call to :func:`run_pipeline` takes a parsed statement document and
returns the spread transactions together with the zero-sum completeness
check against the summary balances. The stages, in order:

1. per page, pair captions and header bands with their tables and pull
   the OCR text out of those regions;
2. settle each table's category (text refinement applies only where the
   vision label is ambiguous or generic);
3. for transaction tables, reconcile the structure detections into a
   grid: oversize tables take the split/merge detour, then separator
   bands inferred from the date column drive row repair;
4. read every grid into transactions, discarding rows that fail hard
   field rules (each discard carries its reason);
5. certify: opening - debits + credits - closing must equal zero.

Failures that make certification impossible (no balance summary, a
table whose structure cannot be reconciled) raise ``PipelineError``
rather than degrade silently.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

from .docmodel import (
    DetectedObject,
    StatementDocument,
    Summary,
    TABLE_CATEGORIES,
    TableCategory,
    TRANSACTION_CATEGORIES,
    TsrClass,
    validate_document,
)
from .geometry import Box, containment_ratio, iou
from .spreading import (
    ColumnRole,
    DiscardedRow,
    SpreadTable,
    Transaction,
    compute_checksum,
    extract_transactions,
)
from .tdc import (
    CATEGORY_ORDER,
    NBModelSet,
    RegionText,
    extract_region_text,
    map_captions_to_tables,
    map_headers_to_tables,
    refine_category,
    train_model_set,
)
from .tsr import (
    DEFAULT_COLUMN_UNION_IOU,
    DEFAULT_FLAG_IOU,
    DEFAULT_GAP_FACTOR,
    DEFAULT_MAX_ROWS_PER_PART,
    DEFAULT_MISSING_ROW_IOU,
    DEFAULT_NMS_IOU,
    DEFAULT_SEPARATOR_GAP_FACTOR,
    DEFAULT_SPLIT_MARGIN,
    PART_OBJECT_BUDGET,
    TableGrid,
    assign_text,
    build_grid,
    infer_row_separators,
    merge_split_outputs,
    refine_structure,
    slice_detections,
    split_long_table,
)

TRANSACTION_FIELDS = (
    "date",
    "description",
    "category",
    "amount_cents",
    "check_number",
    "balance_cents",
    "page",
    "table",
    "row",
)


class PipelineError(RuntimeError):
    """The document cannot be spread and certified as requested."""


@dataclass(frozen=True)
class Thresholds:
    """Every tunable knob of the structure-reconciliation stage."""

    nms_iou: float = DEFAULT_NMS_IOU
    column_union_iou: float = DEFAULT_COLUMN_UNION_IOU
    missing_row_iou: float = DEFAULT_MISSING_ROW_IOU
    gap_factor: float = DEFAULT_GAP_FACTOR
    separator_gap_factor: float = DEFAULT_SEPARATOR_GAP_FACTOR
    flag_iou: float = DEFAULT_FLAG_IOU
    split_margin: float = DEFAULT_SPLIT_MARGIN
    max_rows_per_part: int = DEFAULT_MAX_ROWS_PER_PART
    table_assign_containment: float = 0.5
    table_box_iou: float = 0.5

    @classmethod
    def from_mapping(cls, data: Mapping[str, object]) -> "Thresholds":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown threshold names: {unknown}")
        return cls(**data)  # type: ignore[arg-type]


@lru_cache(maxsize=1)
def default_models() -> NBModelSet:
    """Classifier set trained on the built-in synthetic corpus."""
    from .synthgen import build_text_corpus

    return train_model_set(build_text_corpus(), classes=CATEGORY_ORDER)


@dataclass(frozen=True)
class PipelineConfig:
    models: NBModelSet | None = None  # None: lazily use default_models()
    statement_year: int | None = 2024
    synonyms: Mapping[ColumnRole, Sequence[str]] | None = None
    thresholds: Thresholds = Thresholds()

    def resolved_models(self) -> NBModelSet:
        return self.models if self.models is not None else default_models()


@dataclass(frozen=True)
class TableOutcome:
    """What became of one detected table."""

    page_index: int
    table_index: int
    box: Box
    vision_label: TableCategory
    category: TableCategory
    spread: bool  # whether it went through structure + extraction


@dataclass
class PipelineResult:
    document: StatementDocument
    tables: list[TableOutcome]
    spread_tables: list[SpreadTable]
    transactions: list[Transaction]
    discards: list[DiscardedRow]
    checksum_cents: int
    balanced: bool
    warnings: list[str] = field(default_factory=list)


def _best_caption_for_table(
    captions: Sequence[DetectedObject],
    mapping: Mapping[int, int | None],
    table_index: int,
    table: DetectedObject,
) -> DetectedObject | None:
    best = None
    best_key = None
    for ci, ti in mapping.items():
        if ti != table_index:
            continue
        cap = captions[ci]
        key = (abs(cap.box.y1 - table.box.y1), abs(cap.box.x1 - table.box.x1), ci)
        if best_key is None or key < best_key:
            best, best_key = cap, key
    return best


def _best_header_for_table(
    headers: Sequence[DetectedObject],
    mapping: Mapping[int, int | None],
    table_index: int,
    table: DetectedObject,
) -> DetectedObject | None:
    best = None
    best_ratio = -1.0
    for hi, ti in mapping.items():
        if ti != table_index:
            continue
        ratio = containment_ratio(headers[hi].box, table.box)
        if ratio > best_ratio:
            best, best_ratio = headers[hi], ratio
    return best


def _structure_one_table(
    table_det: DetectedObject,
    tsr_objects: Sequence[DetectedObject],
    page_words: Sequence,
    thresholds: Thresholds,
    warnings: list[str],
    where: str,
) -> tuple[Box, TableGrid]:
    assigned = [
        o
        for o in tsr_objects
        if containment_ratio(o.box, table_det.box) >= thresholds.table_assign_containment
    ]
    # prefer the structure model's own table box when it agrees
    working = table_det.box
    best = 0.0
    for o in assigned:
        if o.label is TsrClass.TABLE:
            overlap = iou(o.box, table_det.box)
            if overlap >= thresholds.table_box_iou and overlap > best:
                working, best = o.box, overlap

    rows = [o for o in assigned if o.label is TsrClass.ROW]
    if len(rows) > thresholds.max_rows_per_part:
        plan = split_long_table(
            working,
            [o.box for o in rows],
            thresholds.max_rows_per_part,
            thresholds.split_margin,
        )
        parts = slice_detections(plan, assigned)
        for pi, dets in enumerate(parts):
            if len(dets) > PART_OBJECT_BUDGET:
                warnings.append(
                    f"{where}: sub-table {pi} carries {len(dets)} objects, "
                    f"over the {PART_OBJECT_BUDGET}-object budget"
                )
        merged = merge_split_outputs(
            plan, parts, thresholds.nms_iou, thresholds.column_union_iou
        )
    else:
        merged = list(assigned)

    columns = sorted(
        (o for o in merged if o.label is TsrClass.COLUMN), key=lambda o: o.box.x1
    )
    date_column = columns[0].box if columns else None
    separators = infer_row_separators(
        working, page_words, date_column, thresholds.separator_gap_factor
    )
    try:
        structure = refine_structure(
            merged,
            separators,
            working,
            nms_iou=thresholds.nms_iou,
            missing_row_iou=thresholds.missing_row_iou,
            gap_factor=thresholds.gap_factor,
            flag_iou=thresholds.flag_iou,
        )
        grid = build_grid(structure)
    except ValueError as exc:
        raise PipelineError(f"{where}: {exc}") from exc
    return working, assign_text(grid, page_words)


def run_pipeline(
    doc: StatementDocument, config: PipelineConfig | None = None
) -> PipelineResult:
    """Spread the statement and certify the ledger against its summary."""
    config = config or PipelineConfig()
    models = config.resolved_models()
    warnings = list(doc.parse_warnings)
    warnings.extend(validate_document(doc))

    # every table in reading order gets a document-wide index
    all_tables: list[tuple[int, DetectedObject]] = []
    for page in doc.pages:
        for det in doc.tdc_on_page(page.page_index):
            if det.label in TABLE_CATEGORIES:
                all_tables.append((page.page_index, det))
    all_tables.sort(key=lambda item: (item[0], item[1].box.y1, item[1].box.x1))

    # per-page caption/header pairing
    caption_by_table: dict[int, RegionText | None] = {}
    header_by_table: dict[int, RegionText | None] = {}
    for page in doc.pages:
        page_idx = page.page_index
        page_words = doc.words_on_page(page_idx)
        page_tables = [
            (gi, det)
            for gi, (p, det) in enumerate(all_tables)
            if p == page_idx
        ]
        dets = [det for _, det in page_tables]
        captions = [
            o for o in doc.tdc_on_page(page_idx) if o.label is TableCategory.TABLE_CAPTION
        ]
        headers = [
            o for o in doc.tdc_on_page(page_idx) if o.label is TableCategory.TABLE_HEADER
        ]
        cap_map = map_captions_to_tables(captions, dets)
        head_map = map_headers_to_tables(headers, dets)
        for local_i, (global_i, det) in enumerate(page_tables):
            cap = _best_caption_for_table(captions, cap_map, local_i, det)
            head = _best_header_for_table(headers, head_map, local_i, det)
            caption_by_table[global_i] = (
                extract_region_text(cap.box, page_words) if cap else None
            )
            header_by_table[global_i] = (
                extract_region_text(head.box, page_words) if head else None
            )

    outcomes: list[TableOutcome] = []
    spread_tables: list[SpreadTable] = []
    for global_i, (page_idx, det) in enumerate(all_tables):
        category = refine_category(
            det, caption_by_table[global_i], header_by_table[global_i], models
        )
        is_txn = category in TRANSACTION_CATEGORIES
        box = det.box
        if is_txn:
            where = f"page {page_idx}, table {global_i}"
            page_words = doc.words_on_page(page_idx)
            tsr_objects = doc.tsr_on_page(page_idx)
            box, grid = _structure_one_table(
                det, tsr_objects, page_words, config.thresholds, warnings, where
            )
            spread_tables.append(
                SpreadTable(
                    page_index=page_idx,
                    table_index=global_i,
                    box=box,
                    category=category,
                    grid=grid,
                )
            )
        outcomes.append(
            TableOutcome(
                page_index=page_idx,
                table_index=global_i,
                box=box,
                vision_label=det.label,  # type: ignore[arg-type]
                category=category,
                spread=is_txn,
            )
        )

    transactions, discards = extract_transactions(
        spread_tables, statement_year=config.statement_year, synonyms=config.synonyms
    )

    if doc.summary is None:
        raise PipelineError(
            "cannot certify the ledger: the document has no 'summary' with "
            "opening_cents and closing_cents"
        )
    checksum = compute_checksum(
        transactions, doc.summary.opening_cents, doc.summary.closing_cents
    )
    return PipelineResult(
        document=doc,
        tables=outcomes,
        spread_tables=spread_tables,
        transactions=transactions,
        discards=discards,
        checksum_cents=checksum,
        balanced=checksum == 0,
        warnings=warnings,
    )


def transaction_row(txn: Transaction) -> dict:
    """One CSV/JSON row per transaction; empty strings stand in for absent
    optionals so the CSV round-trips cleanly."""
    return {
        "date": txn.date.isoformat(),
        "description": txn.description,
        "category": txn.category.value,
        "amount_cents": txn.amount_cents,
        "check_number": txn.check_number or "",
        "balance_cents": txn.balance_cents if txn.balance_cents is not None else "",
        "page": txn.page_index,
        "table": txn.table_index,
        "row": txn.row_index,
    }


def transactions_to_csv(transactions: Sequence[Transaction]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(TRANSACTION_FIELDS), lineterminator="\n")
    writer.writeheader()
    for txn in transactions:
        writer.writerow(transaction_row(txn))
    return buf.getvalue()


def report_dict(result: PipelineResult) -> dict:
    """JSON-ready run report: tables, ledger, discards, certification."""
    summary: Summary = result.document.summary  # run_pipeline guarantees it
    return {
        "summary": {
            "opening_cents": summary.opening_cents,
            "closing_cents": summary.closing_cents,
            "currency": summary.currency,
        },
        "tables": [
            {
                "page": t.page_index,
                "table": t.table_index,
                "vision_label": t.vision_label.value,
                "category": t.category.value,
                "spread": t.spread,
                "box": list(t.box.as_tuple()),
            }
            for t in result.tables
        ],
        "transactions": [transaction_row(t) for t in result.transactions],
        "discards": [
            {
                "page": d.page_index,
                "table": d.table_index,
                "row": d.row_index,
                "reason": d.reason,
                "row_text": d.row_text,
            }
            for d in result.discards
        ],
        "checksum_cents": result.checksum_cents,
        "balanced": result.balanced,
        "warnings": list(result.warnings),
    }


__all__ = [
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "TableOutcome",
    "Thresholds",
    "TRANSACTION_FIELDS",
    "default_models",
    "report_dict",
    "run_pipeline",
    "transaction_row",
    "transactions_to_csv",
]
