"""Deterministic synthetic statement generator.

Produces matched (ingestion JSON, expected transactions) pairs for
end-to-end testing: page geometry, table/caption/header detections,
structure detections, per-cell OCR words on a fixed monospace metric
(8 px per character, 14 px line height), and summary balances built so
the ledger checksum is exactly zero. Visual realism is out of scope;
geometric and arithmetic consistency are the point.

The generator shares its caption keyword pools with the text-classifier
training corpus (``build_text_corpus``), so captions of generated
credit/debit tables are classifiable by construction. All randomness
comes from one seeded ``random.Random``; equal configs yield identical
output, byte for byte.

An optional uniform jitter (default off) displaces every detection box
corner by up to the configured pixel count while OCR words and the
expected transactions stay clean, for robustness testing.
"""

from __future__ import annotations

import copy
import csv
import io
import random
from dataclasses import dataclass, field
from typing import Iterable

from .docmodel import TableCategory
from .geometry import Box
from .pipeline import TRANSACTION_FIELDS
from .spreading import ColumnRole
from .tsr import pad

PAGE_WIDTH = 1700
PAGE_HEIGHT = 2200
CHAR_W = 8
CHAR_H = 14
ROW_H = 28
TWO_LINE_ROW_H = 46
SPAN_ROW_H = 24
HEADER_ROW_H = 28
CAPTION_GAP = 30
TABLE_GAP = 56
TOP_MARGIN = 80
BOTTOM_MARGIN = 140
LEFT_MARGIN = 100

# Caption keyword pools, one per text class, pairwise disjoint. The
# classifier corpus and the generated captions draw from the same pool
# so the text-refinement stage can always recover the class.
CAPTION_KEYWORDS: dict[TableCategory, tuple[str, ...]] = {
    TableCategory.CREDIT: ("deposits", "credits", "additions", "refunds", "incoming"),
    TableCategory.DEBIT: ("withdrawals", "debits", "deductions", "purchases", "outgoing"),
    TableCategory.CHECK: ("checks", "cheques", "drafts", "negotiated"),
    TableCategory.TXN_BAL: ("activity", "history", "register", "chronological"),
    TableCategory.TXN_AMT_BAL: ("itemized", "netted", "consolidated", "flows"),
    TableCategory.TXN_CHECK_BAL: ("reconciliation", "cleared", "presented", "outstanding"),
    TableCategory.OTHER: ("summary", "overview", "snapshot", "service", "fee", "fees"),
}

# Neutral words allowed in any caption.
CAPTION_FILLER = ("account", "total", "and", "for", "period", "statement")

# Header label variants per role; all tokens resolve through the
# default synonym table.
HEADER_LABELS: dict[ColumnRole, tuple[str, ...]] = {
    ColumnRole.DATE: ("DATE", "DATE POSTED", "POSTING DATE"),
    ColumnRole.DESCRIPTION: ("DESCRIPTION", "TRANSACTION DETAILS", "DETAILS"),
    ColumnRole.AMOUNT: ("AMOUNT", "AMT"),
    ColumnRole.CHECK_NUMBER: ("CHECK NUMBER", "CHECK NO", "CHK NO"),
    ColumnRole.CREDIT: ("CREDITS", "DEPOSITS", "CREDIT"),
    ColumnRole.DEBIT: ("DEBITS", "WITHDRAWALS", "DEBIT"),
    ColumnRole.BALANCE: ("BALANCE", "DAILY BALANCE", "BAL"),
}

COLUMN_WIDTHS: dict[ColumnRole, int] = {
    ColumnRole.DATE: 140,
    ColumnRole.DESCRIPTION: 430,
    ColumnRole.AMOUNT: 170,
    ColumnRole.CHECK_NUMBER: 160,
    ColumnRole.CREDIT: 170,
    ColumnRole.DEBIT: 170,
    ColumnRole.BALANCE: 180,
}

_DESCRIPTION_WORDS = (
    "PAYROLL", "ACME", "MARKET", "UTILITY", "TRANSFER", "ONLINE", "CARD",
    "POS", "GROCER", "RENT", "SUBSCRIPTION", "VENDOR", "INVOICE", "FUEL",
    "CLINIC", "AIRLINE", "HOTEL", "BOOKS", "MUSIC", "HARDWARE",
)

_SPAN_WORDS = ("REF", "CONF", "AUTH", "TRACE", "MEMO")

# Vision-stage table labels the generator can emit.
GENERATABLE_CATEGORIES = (
    TableCategory.CREDIT_DEBIT,
    TableCategory.CHECK,
    TableCategory.TXN_BAL,
    TableCategory.TXN_AMT_BAL,
    TableCategory.TXN_CHECK_BAL,
    TableCategory.OTHER,
)

_SCHEMAS: dict[TableCategory, tuple[ColumnRole, ...]] = {
    TableCategory.CREDIT: (ColumnRole.DATE, ColumnRole.DESCRIPTION, ColumnRole.AMOUNT),
    TableCategory.DEBIT: (ColumnRole.DATE, ColumnRole.DESCRIPTION, ColumnRole.AMOUNT),
    TableCategory.CHECK: (ColumnRole.CHECK_NUMBER, ColumnRole.DATE, ColumnRole.AMOUNT),
    TableCategory.TXN_BAL: (
        ColumnRole.DATE,
        ColumnRole.DESCRIPTION,
        ColumnRole.CREDIT,
        ColumnRole.DEBIT,
        ColumnRole.BALANCE,
    ),
    TableCategory.TXN_AMT_BAL: (
        ColumnRole.DATE,
        ColumnRole.DESCRIPTION,
        ColumnRole.AMOUNT,
        ColumnRole.BALANCE,
    ),
    TableCategory.TXN_CHECK_BAL: (
        ColumnRole.DATE,
        ColumnRole.CHECK_NUMBER,
        ColumnRole.DESCRIPTION,
        ColumnRole.CREDIT,
        ColumnRole.DEBIT,
        ColumnRole.BALANCE,
    ),
}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    pages: int = 1
    categories: tuple[TableCategory, ...] = GENERATABLE_CATEGORIES
    rows_range: tuple[int, int] = (3, 11)
    long_rows_range: tuple[int, int] = (24, 40)
    long_table_prob: float = 0.25
    multiline_prob: float = 0.12
    spanning_prob: float = 0.08
    jitter_px: int = 0
    statement_year: int = 2024
    check_image_prob: float = 0.3

    def __post_init__(self) -> None:
        if self.pages < 1:
            raise ValueError("pages must be >= 1")
        if self.jitter_px < 0:
            raise ValueError("jitter_px must be >= 0")
        bad = [c for c in self.categories if c not in GENERATABLE_CATEGORIES]
        if bad:
            raise ValueError(f"cannot generate categories: {[c.value for c in bad]}")


@dataclass
class GeneratedStatement:
    """Ingestion document (as a dict) plus the ground-truth ledger rows."""

    document: dict
    expected: list[dict]


@dataclass
class _Builder:
    rng: random.Random
    jitter: int
    pages: list[dict] = field(default_factory=list)
    tdc: list[dict] = field(default_factory=list)
    tsr: list[dict] = field(default_factory=list)
    ocr: list[dict] = field(default_factory=list)

    def _jittered(self, box: Box) -> list[int]:
        if self.jitter:
            j = self.rng.randint
            box = Box(
                box.x1 + j(-self.jitter, self.jitter),
                box.y1 + j(-self.jitter, self.jitter),
                box.x2 + j(-self.jitter, self.jitter),
                box.y2 + j(-self.jitter, self.jitter),
            )
        return [int(box.x1), int(box.y1), int(box.x2), int(box.y2)]

    def _score(self) -> float:
        return round(self.rng.uniform(0.82, 0.99), 4)

    def add_page(self, index: int) -> None:
        self.pages.append(
            {"index": index, "width": PAGE_WIDTH, "height": PAGE_HEIGHT, "dpi": 200}
        )

    def add_tdc(self, page: int, label: TableCategory, box: Box) -> None:
        self.tdc.append(
            {
                "page": page,
                "label": label.value,
                "score": self._score(),
                "box": self._jittered(box),
            }
        )

    def add_tsr(self, page: int, label: str, box: Box) -> None:
        self.tsr.append(
            {
                "page": page,
                "label": label,
                "score": self._score(),
                "box": self._jittered(box),
            }
        )

    def add_words(self, page: int, text: str, x: int, y: int) -> Box:
        """Lay out ``text`` word by word starting at (x, y); returns the
        covering box. OCR boxes are never jittered."""
        cx = x
        boxes = []
        for word in text.split():
            w = len(word) * CHAR_W
            box = Box(cx, y, cx + w, y + CHAR_H)
            self.ocr.append(
                {
                    "page": page,
                    "text": word,
                    "box": [int(box.x1), int(box.y1), int(box.x2), int(box.y2)],
                    "confidence": round(self.rng.uniform(0.93, 1.0), 4),
                }
            )
            boxes.append(box)
            cx += w + CHAR_W
        if not boxes:
            return Box(x, y, x, y + CHAR_H)
        return Box(boxes[0].x1, y, boxes[-1].x2, y + CHAR_H)


def _format_cents(
    rng: random.Random, cents: int, with_dollar: bool, style: str = "plain"
) -> str:
    """Printed form of signed cents. ``style``: plain, brackets or
    trailing (only consulted for negatives)."""
    sign = "-" if cents < 0 else ""
    magnitude = abs(cents)
    units, frac = divmod(magnitude, 100)
    if magnitude % 100 == 0 and rng.random() < 0.05:
        body = f"{units:,}"
    else:
        body = f"{units:,}.{frac:02d}"
    if with_dollar:
        body = "$" + body
    if cents < 0:
        if style == "brackets":
            return f"({body})"
        if style == "trailing":
            return body + "-"
        return sign + body
    return body


_DATE_STYLES = ("mdyyyy", "mdyy", "md", "mon_dd", "dd_mon_yyyy")
_MONTH_ABBR = (
    "JAN", "FEB", "MAR", "APR", "MAY", "JUN",
    "JUL", "AUG", "SEP", "OCT", "NOV", "DEC",
)


def _format_date(style: str, year: int, month: int, day: int) -> str:
    if style == "mdyyyy":
        return f"{month:02d}/{day:02d}/{year}"
    if style == "mdyy":
        return f"{month:02d}/{day:02d}/{year % 100:02d}"
    if style == "md":
        return f"{month:02d}/{day:02d}"
    if style == "mon_dd":
        return f"{_MONTH_ABBR[month - 1]} {day:02d}"
    return f"{day:02d} {_MONTH_ABBR[month - 1]} {year}"


def _caption_text(rng: random.Random, category: TableCategory, service_fee: bool) -> str:
    if service_fee:
        lead = rng.choice(("MONTHLY", "ACCOUNT", "PERIODIC"))
        tail = rng.choice(("SUMMARY", "DETAIL", "CHARGES"))
        return f"{lead} SERVICE FEE {tail}"
    pool = CAPTION_KEYWORDS[category]
    kws = rng.sample(pool, k=min(rng.randint(1, 2), len(pool)))
    shape = rng.randrange(3)
    if shape == 0:
        words = ["TOTAL", *kws]
    elif shape == 1 and len(kws) == 2:
        words = [kws[0], "AND", kws[1]]
    else:
        words = [rng.choice(("ACCOUNT", "STATEMENT")), *kws, "FOR", "PERIOD"]
    return " ".join(w.upper() for w in words)


def _header_text(rng: random.Random, role: ColumnRole) -> str:
    return rng.choice(HEADER_LABELS[role])


@dataclass
class _TablePlan:
    category: TableCategory  # vision label
    final_category: TableCategory  # after text refinement
    schema: tuple[ColumnRole, ...]
    caption: str
    spread: bool  # rows land in the expected ledger
    two_line: tuple[bool, ...]  # per data row
    span_after: tuple[bool, ...]  # per data row

    @property
    def n_rows(self) -> int:
        return len(self.two_line)

    def height(self) -> int:
        h = CAPTION_GAP + HEADER_ROW_H
        for two, span in zip(self.two_line, self.span_after):
            h += TWO_LINE_ROW_H if two else ROW_H
            if span:
                h += SPAN_ROW_H
        return h

    def truncated(self, n: int) -> "_TablePlan":
        return _TablePlan(
            self.category,
            self.final_category,
            self.schema,
            self.caption,
            self.spread,
            self.two_line[:n],
            self.span_after[:n],
        )


def _row_flags(
    rng: random.Random, cfg: GenConfig, rows: int, schema: tuple[ColumnRole, ...], spread: bool
) -> tuple[tuple[bool, ...], tuple[bool, ...]]:
    can_wrap = ColumnRole.DESCRIPTION in schema
    two_line = tuple(can_wrap and rng.random() < cfg.multiline_prob for _ in range(rows))
    span_after = tuple(spread and rng.random() < cfg.spanning_prob for _ in range(rows))
    return two_line, span_after


def _plan_table(rng: random.Random, vision: TableCategory, cfg: GenConfig) -> _TablePlan:
    long_table = rng.random() < cfg.long_table_prob
    rows = rng.randint(*(cfg.long_rows_range if long_table else cfg.rows_range))
    if vision is TableCategory.CREDIT_DEBIT:
        side = rng.choice((TableCategory.CREDIT, TableCategory.DEBIT))
        schema = _SCHEMAS[side]
        if rng.random() < 0.5:
            schema = schema + (ColumnRole.BALANCE,)
        flags = _row_flags(rng, cfg, rows, schema, True)
        return _TablePlan(vision, side, schema, _caption_text(rng, side, False), True, *flags)
    if vision is TableCategory.OTHER:
        fee = rng.random() < 0.5
        if fee:
            # service-fee table: re-marked Debit by the caption word check
            schema = (ColumnRole.DATE, ColumnRole.DESCRIPTION, ColumnRole.AMOUNT)
            rows = min(rows, max(cfg.rows_range[0], 4))
            flags = _row_flags(rng, cfg, rows, schema, True)
            return _TablePlan(
                vision,
                TableCategory.DEBIT,
                schema,
                _caption_text(rng, TableCategory.OTHER, True),
                True,
                *flags,
            )
        schema = (ColumnRole.DESCRIPTION, ColumnRole.AMOUNT)
        rows = min(rows, 6)
        flags = _row_flags(rng, cfg, rows, schema, False)
        return _TablePlan(
            vision,
            TableCategory.OTHER,
            schema,
            _caption_text(rng, TableCategory.OTHER, False),
            False,
            *flags,
        )
    schema = _SCHEMAS[vision]
    flags = _row_flags(rng, cfg, rows, schema, True)
    return _TablePlan(vision, vision, schema, _caption_text(rng, vision, False), True, *flags)


def generate_statement(cfg: GenConfig) -> GeneratedStatement:
    """Build one statement per the config. Same config, same bytes."""
    rng = random.Random(cfg.seed)
    builder = _Builder(rng=rng, jitter=cfg.jitter_px)
    opening = rng.randrange(500_000, 5_000_000)
    balance = opening
    expected: list[dict] = []
    table_counter = 0
    category_cursor = cfg.seed % len(cfg.categories)

    for page in range(cfg.pages):
        builder.add_page(page)
        y = TOP_MARGIN + CAPTION_GAP
        while True:
            vision = cfg.categories[category_cursor % len(cfg.categories)]
            category_cursor += 1
            plan = _plan_table(rng, vision, cfg)
            # shrink until the table fits what's left of the page
            while plan.n_rows > 2 and y + plan.height() > PAGE_HEIGHT - BOTTOM_MARGIN:
                plan = plan.truncated(plan.n_rows // 2)
            if y + plan.height() > PAGE_HEIGHT - BOTTOM_MARGIN:
                break
            balance, bottom = _emit_table(
                builder, cfg, rng, plan, page, table_counter, y, balance, expected
            )
            table_counter += 1
            y = bottom + TABLE_GAP
            if rng.random() < 0.35:
                break
        if rng.random() < cfg.check_image_prob:
            img_w, img_h = rng.randint(280, 420), rng.randint(100, 130)
            x = rng.randint(LEFT_MARGIN, PAGE_WIDTH - img_w - 60)
            top = PAGE_HEIGHT - BOTTOM_MARGIN + 5
            builder.add_tdc(
                page, TableCategory.CHECK_IMAGE, Box(x, top, x + img_w, top + img_h)
            )

    document = {
        "pages": builder.pages,
        "tdc": builder.tdc,
        "tsr": builder.tsr,
        "ocr": builder.ocr,
        "summary": {
            "opening_cents": opening,
            "closing_cents": balance,
            "currency": "USD",
        },
    }
    return GeneratedStatement(document=document, expected=expected)


def _emit_table(
    builder: _Builder,
    cfg: GenConfig,
    rng: random.Random,
    plan: _TablePlan,
    page: int,
    table_index: int,
    y_top: int,
    balance: int,
    expected: list[dict],
) -> tuple[int, int]:
    """Emit one table's detections, words and expected rows. Returns the
    updated running balance and the table's bottom edge."""
    x0 = LEFT_MARGIN + rng.randint(0, 40)
    widths = [COLUMN_WIDTHS[r] for r in plan.schema]
    col_edges = [x0]
    for w in widths:
        col_edges.append(col_edges[-1] + w)
    table_w = col_edges[-1] - x0

    date_style = rng.choice(_DATE_STYLES)
    with_dollar = rng.random() < 0.4
    neg_style = rng.choice(("plain", "brackets", "trailing"))
    month = rng.randint(1, 12)
    day = rng.randint(1, 5)

    # caption sits above the table
    cap_box = builder.add_words(page, plan.caption, x0, y_top - CAPTION_GAP + 4)

    # geometry pass: data rows and their optional continuation rows
    y = y_top + HEADER_ROW_H
    data_boxes: list[Box] = []
    span_boxes: dict[int, Box] = {}
    for i, two_line in enumerate(plan.two_line):
        h = TWO_LINE_ROW_H if two_line else ROW_H
        data_boxes.append(Box(x0, y, x0 + table_w, y + h))
        y += h
        if plan.span_after[i]:
            span_boxes[i] = Box(x0, y, x0 + table_w, y + SPAN_ROW_H)
            y += SPAN_ROW_H
    table_box = Box(x0, y_top, x0 + table_w, y)

    # detector objects: table category region, caption, header region
    builder.add_tdc(page, plan.category, table_box)
    builder.add_tdc(page, TableCategory.TABLE_CAPTION, pad(cap_box, 5))
    header_row_box = Box(x0, y_top, x0 + table_w, y_top + HEADER_ROW_H)
    builder.add_tdc(
        page,
        TableCategory.TABLE_HEADER,
        Box(x0 + 4, y_top + 4, x0 + table_w - 4, y_top + HEADER_ROW_H - 2),
    )

    # structure objects
    builder.add_tsr(page, "Table", table_box)
    builder.add_tsr(page, "TableColumnHeader", header_row_box)
    builder.add_tsr(page, "TableRow", header_row_box)
    for i, box in enumerate(data_boxes):
        builder.add_tsr(page, "TableRow", box)
        if i in span_boxes:
            builder.add_tsr(page, "TableRow", span_boxes[i])
            builder.add_tsr(page, "TableSpanningRow", span_boxes[i])
    for j in range(len(plan.schema)):
        builder.add_tsr(
            page,
            "TableColumn",
            Box(col_edges[j], y_top, col_edges[j + 1], int(table_box.y2)),
        )

    # header words
    for j, role in enumerate(plan.schema):
        builder.add_words(page, _header_text(rng, role), col_edges[j] + 6, y_top + 7)

    # data rows
    grid_row = 1  # grid row 0 is the header row
    last_expected: dict | None = None
    for i, row_box in enumerate(data_boxes):
        two_line = plan.two_line[i]
        day = min(day + rng.randint(0, 2), 28)
        date_text = _format_date(date_style, cfg.statement_year, month, day)
        amount = rng.randrange(500, 400_000)
        check_number = None
        desc_words: list[str] = []
        if ColumnRole.DESCRIPTION in plan.schema:
            desc_words = rng.sample(_DESCRIPTION_WORDS, k=rng.randint(2, 3))

        if plan.category is TableCategory.CHECK:
            side = TableCategory.DEBIT
        elif plan.category in (
            TableCategory.TXN_BAL,
            TableCategory.TXN_AMT_BAL,
            TableCategory.TXN_CHECK_BAL,
        ):
            side = rng.choice((TableCategory.CREDIT, TableCategory.DEBIT))
        else:
            # CreditDebit tables carry their refined side; fee tables are
            # debits; summary tables never reach the ledger
            side = plan.final_category

        if plan.category in (TableCategory.CHECK, TableCategory.TXN_CHECK_BAL):
            if plan.category is TableCategory.CHECK or side is TableCategory.DEBIT:
                check_number = str(rng.randrange(1000, 99999))

        if plan.spread:
            balance = balance + amount if side is TableCategory.CREDIT else balance - amount

        # cell texts per column
        texts: dict[ColumnRole, str] = {}
        for role in plan.schema:
            if role is ColumnRole.DATE:
                texts[role] = date_text
            elif role is ColumnRole.CHECK_NUMBER:
                texts[role] = check_number or ""
            elif role is ColumnRole.DESCRIPTION:
                texts[role] = " ".join(desc_words[:1]) if two_line else " ".join(desc_words)
            elif role is ColumnRole.AMOUNT:
                signed = -amount if (
                    plan.category is TableCategory.TXN_AMT_BAL
                    and side is TableCategory.DEBIT
                ) else amount
                texts[role] = _format_cents(rng, signed, with_dollar, neg_style)
            elif role is ColumnRole.CREDIT:
                texts[role] = (
                    _format_cents(rng, amount, with_dollar)
                    if side is TableCategory.CREDIT
                    else ""
                )
            elif role is ColumnRole.DEBIT:
                texts[role] = (
                    _format_cents(rng, amount, with_dollar)
                    if side is TableCategory.DEBIT
                    else ""
                )
            elif role is ColumnRole.BALANCE:
                texts[role] = _format_cents(rng, balance, with_dollar)

        for j, role in enumerate(plan.schema):
            if texts.get(role):
                builder.add_words(page, texts[role], col_edges[j] + 6, int(row_box.y1) + 7)
        description = " ".join(desc_words)
        if two_line:
            rest = " ".join(desc_words[1:])
            if rest:
                j = plan.schema.index(ColumnRole.DESCRIPTION)
                builder.add_words(page, rest, col_edges[j] + 6, int(row_box.y1) + 25)

        if plan.spread:
            row_expected = {
                "date": f"{cfg.statement_year:04d}-{month:02d}-{day:02d}",
                "description": description,
                "category": side.value,
                "amount_cents": amount,
                "check_number": check_number or "",
                "balance_cents": balance if ColumnRole.BALANCE in plan.schema else "",
                "page": page,
                "table": table_index,
                "row": grid_row,
            }
            expected.append(row_expected)
            last_expected = row_expected
        grid_row += 1

        # spanning continuation row, if the geometry reserved one
        if i in span_boxes:
            span_box = span_boxes[i]
            span_text = (
                f"{rng.choice(_SPAN_WORDS)} {rng.randrange(10000, 99999)} "
                f"{rng.choice(_SPAN_WORDS)} {rng.randrange(100, 999)}"
            )
            desc_col = (
                plan.schema.index(ColumnRole.DESCRIPTION)
                if ColumnRole.DESCRIPTION in plan.schema
                else 0
            )
            builder.add_words(page, span_text, col_edges[desc_col] + 6, int(span_box.y1) + 5)
            if last_expected is not None:
                joined = (last_expected["description"] + " " + span_text).strip()
                last_expected["description"] = joined
            grid_row += 1

    return balance, int(table_box.y2)


def build_text_corpus(
    samples_per_class: int = 40, seed: int = 7
) -> list[tuple[str, str, TableCategory]]:
    """(caption, header, category) rows for training the text classifiers.

    Caption keywords come from the disjoint per-class pools; header text
    mirrors the column layout each class ships with. Deterministic for a
    given seed.
    """
    rng = random.Random(seed)
    corpus: list[tuple[str, str, TableCategory]] = []
    header_schemas: dict[TableCategory, tuple[ColumnRole, ...]] = dict(_SCHEMAS)
    header_schemas[TableCategory.OTHER] = (ColumnRole.DESCRIPTION, ColumnRole.AMOUNT)
    for category in CAPTION_KEYWORDS:
        for i in range(samples_per_class):
            fee = category is TableCategory.OTHER and i % 3 == 0
            caption = _caption_text(rng, category, fee)
            schema = header_schemas[category]
            if category in (TableCategory.CREDIT, TableCategory.DEBIT) and rng.random() < 0.5:
                schema = schema + (ColumnRole.BALANCE,)
            if fee:
                schema = (ColumnRole.DATE, ColumnRole.DESCRIPTION, ColumnRole.AMOUNT)
            header = " ".join(_header_text(rng, role) for role in schema)
            corpus.append((caption, header, category))
    return corpus


def jitter_detections(document: dict, px: int, seed: int = 0) -> dict:
    """Copy of ``document`` with every detection corner nudged by up to
    ``px`` pixels (uniform, per corner). OCR words and summary stay
    untouched, so the copy is the same statement seen through a noisier
    detector. Boxes are clamped to their page.
    """
    if px < 0:
        raise ValueError("px must be >= 0")
    rng = random.Random(seed)
    out = copy.deepcopy(document)
    bounds = {p["index"]: (p["width"], p["height"]) for p in out.get("pages", [])}
    for section in ("tdc", "tsr"):
        for rec in out.get(section, []):
            x1, y1, x2, y2 = rec["box"]
            x1 += rng.randint(-px, px)
            y1 += rng.randint(-px, px)
            x2 += rng.randint(-px, px)
            y2 += rng.randint(-px, px)
            w, h = bounds[rec["page"]]
            x1, x2 = max(0, min(x1, w)), max(0, min(x2, w))
            y1, y2 = max(0, min(y1, h)), max(0, min(y2, h))
            rec["box"] = [min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2)]
    return out


def expected_rows_as_csv(rows: Iterable[dict]) -> str:
    """The ground-truth ledger in the same CSV shape the spreader emits."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(TRANSACTION_FIELDS), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
