"""Positional parsing: table grids to a standardized transaction ledger.

Tables are visited in reading order (page, then top edge, then left
edge). For each table the header row resolves to column roles via a
synonym table (configs may extend it); headerless tables fall back to a
per-category default schema. Rows become transactions under the
category rules:

  * Credit / Debit tables tag every row with their own category.
  * Check tables are debits carrying a check number.
  * Txn_bal / Txn_check_bal tables decide per row by which of the
    Credit / Debit columns is non-empty; both non-empty is ambiguous
    and the row is discarded with a logged reason.
  * Txn_amt_bal tables decide by the sign of the amount (minus sign or
    bracketed amounts are negative, i.e. debits).

Rows without a parseable date or amount are discarded with provenance;
spanning-row text is appended to the previous transaction's
description. Amounts are integer cents throughout; the final checksum
is opening - sum(debits) + sum(credits) - closing, and 0 certifies the
extraction as complete.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .docmodel import TableCategory
from .geometry import Box
from .tsr import TableGrid


class ColumnRole(Enum):
    DATE = "Date"
    DESCRIPTION = "Description"
    AMOUNT = "Amount"
    CHECK_NUMBER = "CheckNumber"
    CREDIT = "Credit"
    DEBIT = "Debit"
    BALANCE = "Balance"


# Header token -> role synonyms. Matching is on tokenized header text;
# any synonym token present claims the column. Config files may extend
# these lists but the defaults always apply.
DEFAULT_SYNONYMS: dict[ColumnRole, tuple[str, ...]] = {
    ColumnRole.DATE: ("date", "posted", "posting"),
    ColumnRole.DESCRIPTION: ("description", "details", "transaction", "activity"),
    ColumnRole.AMOUNT: ("amount", "amt"),
    ColumnRole.CHECK_NUMBER: ("check", "cheque", "chk", "number", "no"),
    ColumnRole.CREDIT: ("credit", "credits", "deposit", "deposits", "additions"),
    ColumnRole.DEBIT: (
        "debit",
        "debits",
        "withdrawal",
        "withdrawals",
        "deductions",
        "subtractions",
        "payments",
    ),
    ColumnRole.BALANCE: ("balance", "bal"),
}

# Resolution order: specific, value-bearing roles claim their columns
# before the catch-all Description (whose synonyms are generic words).
_ROLE_PRIORITY = (
    ColumnRole.DATE,
    ColumnRole.CHECK_NUMBER,
    ColumnRole.CREDIT,
    ColumnRole.DEBIT,
    ColumnRole.BALANCE,
    ColumnRole.AMOUNT,
    ColumnRole.DESCRIPTION,
)

# Column layouts assumed for tables whose grid carries no header row.
DEFAULT_SCHEMAS: dict[TableCategory, dict[ColumnRole, int]] = {
    TableCategory.CREDIT: {
        ColumnRole.DATE: 0,
        ColumnRole.DESCRIPTION: 1,
        ColumnRole.AMOUNT: 2,
    },
    TableCategory.DEBIT: {
        ColumnRole.DATE: 0,
        ColumnRole.DESCRIPTION: 1,
        ColumnRole.AMOUNT: 2,
    },
    TableCategory.CHECK: {
        ColumnRole.CHECK_NUMBER: 0,
        ColumnRole.DATE: 1,
        ColumnRole.AMOUNT: 2,
    },
    TableCategory.TXN_BAL: {
        ColumnRole.DATE: 0,
        ColumnRole.DESCRIPTION: 1,
        ColumnRole.CREDIT: 2,
        ColumnRole.DEBIT: 3,
        ColumnRole.BALANCE: 4,
    },
    TableCategory.TXN_AMT_BAL: {
        ColumnRole.DATE: 0,
        ColumnRole.DESCRIPTION: 1,
        ColumnRole.AMOUNT: 2,
        ColumnRole.BALANCE: 3,
    },
    TableCategory.TXN_CHECK_BAL: {
        ColumnRole.DATE: 0,
        ColumnRole.CHECK_NUMBER: 1,
        ColumnRole.DESCRIPTION: 2,
        ColumnRole.CREDIT: 3,
        ColumnRole.DEBIT: 4,
        ColumnRole.BALANCE: 5,
    },
}


@dataclass(frozen=True)
class HeaderIndexMap:
    """Resolved role -> column index assignment for one table."""

    indices: Mapping[ColumnRole, int]

    def __post_init__(self) -> None:
        seen: dict[int, ColumnRole] = {}
        for role, idx in self.indices.items():
            if idx in seen:
                raise ValueError(
                    f"column {idx} claimed by both {seen[idx].value} and {role.value}"
                )
            seen[idx] = role

    def get(self, role: ColumnRole) -> int | None:
        return self.indices.get(role)

    def __contains__(self, role: ColumnRole) -> bool:
        return role in self.indices


class HeaderResolutionError(ValueError):
    """The table's header (or lack of one) cannot be mapped to roles."""


def merge_synonyms(
    extra: Mapping[str, Sequence[str]] | None,
) -> dict[ColumnRole, tuple[str, ...]]:
    """Default synonym table extended (never shrunk) by a config mapping
    of role name -> extra tokens."""
    table = {role: list(tokens) for role, tokens in DEFAULT_SYNONYMS.items()}
    if extra:
        for name, tokens in extra.items():
            try:
                role = ColumnRole(name)
            except ValueError:
                raise ValueError(f"unknown column role in synonyms config: {name!r}")
            for tok in tokens:
                tok = str(tok).lower()
                if tok not in table[role]:
                    table[role].append(tok)
    return {role: tuple(tokens) for role, tokens in table.items()}


def _tokenize_header(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def resolve_header_indices(
    grid: TableGrid,
    category: TableCategory | None = None,
    synonyms: Mapping[ColumnRole, Sequence[str]] | None = None,
) -> HeaderIndexMap:
    """Map column roles to grid column indices from the header row text.

    Roles are resolved in priority order; for each role the leftmost
    still-unclaimed column containing one of its synonym tokens wins
    (first match per role). Multiple header rows contribute jointly.
    Without any header row the category's default schema applies,
    trimmed to the column count. Tables resolving neither an Amount
    nor a Credit/Debit column are unmappable.
    """
    synonyms = synonyms or DEFAULT_SYNONYMS
    header_rows = sorted(grid.header_row_indices)
    assigned: dict[ColumnRole, int] = {}
    if header_rows:
        n_cols = len(grid.columns)
        col_tokens: list[list[str]] = [[] for _ in range(n_cols)]
        for i in header_rows:
            if i in grid.spanning_row_indices:
                continue
            for cell in grid.cells[i]:
                col_tokens[cell.col_index].extend(_tokenize_header(cell.text))
        claimed: set[int] = set()
        for role in _ROLE_PRIORITY:
            vocab = set(synonyms.get(role, ()))
            for j in range(n_cols):
                if j in claimed:
                    continue
                if vocab.intersection(col_tokens[j]):
                    assigned[role] = j
                    claimed.add(j)
                    break
    else:
        if category is None or category not in DEFAULT_SCHEMAS:
            raise HeaderResolutionError(
                "unmappable header: no header row and no default schema"
                + (f" for {category.value}" if category else "")
            )
        assigned = {
            role: idx
            for role, idx in DEFAULT_SCHEMAS[category].items()
            if idx < len(grid.columns)
        }

    if ColumnRole.AMOUNT not in assigned and not (
        ColumnRole.CREDIT in assigned or ColumnRole.DEBIT in assigned
    ):
        raise HeaderResolutionError(
            "unmappable header: no Amount and no Credit/Debit column resolved"
        )
    return HeaderIndexMap(assigned)


class AmountParseError(ValueError):
    pass


_AMOUNT_ALLOWED = re.compile(r"^[0-9,.\s()$€£¥+-]+$")
_CURRENCY_STRIP = str.maketrans("", "", "$€£¥, \t")


def parse_amount(text: str) -> int:
    """Signed integer cents from a printed amount.

    Strips currency symbols and thousands separators; brackets, a
    leading minus or a trailing minus all mean negative. A decimal point
    fixes two implied decimals ("1,234.5" tops up to 123450); a bare
    integer means whole currency units. Raises AmountParseError when no
    digits survive or the text carries foreign characters.
    """
    raw = text.strip()
    if not raw or not _AMOUNT_ALLOWED.match(raw):
        raise AmountParseError(f"not an amount: {text!r}")
    negative = False
    if "(" in raw or ")" in raw:
        if not (raw.startswith("(") and raw.endswith(")")):
            raise AmountParseError(f"unbalanced brackets in amount: {text!r}")
        negative = True
        raw = raw[1:-1].strip()
    if raw.startswith("+"):
        raw = raw[1:]
    if raw.startswith("-"):
        negative = True
        raw = raw[1:]
    if raw.endswith("-"):
        negative = True
        raw = raw[:-1]
    raw = raw.translate(_CURRENCY_STRIP)
    if raw.startswith("-"):  # sign after a currency symbol, e.g. "$-45"
        negative = True
        raw = raw[1:]
    if not raw or not raw.replace(".", "").isdigit():
        raise AmountParseError(f"not an amount: {text!r}")
    if "." in raw:
        units, _, frac = raw.partition(".")
        if "." in frac:
            raise AmountParseError(f"multiple decimal points: {text!r}")
        frac = (frac + "00")[:2]
        cents = int(units or "0") * 100 + int(frac or "0")
    else:
        cents = int(raw) * 100
    return -cents if negative else cents


class DateParseError(ValueError):
    pass


_MONTHS = {
    m.lower(): i
    for i, m in enumerate(
        ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"],
        start=1,
    )
}

_MDY_RE = re.compile(r"^(\d{1,2})/(\d{1,2})(?:/(\d{2}|\d{4}))?$")
_MON_DD_RE = re.compile(r"^([a-z]{3})\.?\s+(\d{1,2})$", re.IGNORECASE)
_DD_MON_YYYY_RE = re.compile(r"^(\d{1,2})\s+([a-z]{3})\.?\s+(\d{4})$", re.IGNORECASE)


def parse_date(text: str, statement_year: int | None = None) -> dt.date:
    """Date from the printed forms MM/DD, MM/DD/YY, MM/DD/YYYY, "Mon DD"
    or "DD Mon YYYY". Year-less forms need ``statement_year``. Raises
    DateParseError on anything else (including impossible dates).
    """
    raw = text.strip()
    m = _MDY_RE.match(raw)
    if m:
        month, day = int(m.group(1)), int(m.group(2))
        year_str = m.group(3)
        if year_str is None:
            if statement_year is None:
                raise DateParseError(f"year-less date {text!r} with no statement year")
            year = statement_year
        elif len(year_str) == 2:
            year = 2000 + int(year_str)
        else:
            year = int(year_str)
        return _make_date(year, month, day, text)
    m = _MON_DD_RE.match(raw)
    if m:
        month = _MONTHS.get(m.group(1).lower())
        if month is None:
            raise DateParseError(f"unknown month in {text!r}")
        if statement_year is None:
            raise DateParseError(f"year-less date {text!r} with no statement year")
        return _make_date(statement_year, month, int(m.group(2)), text)
    m = _DD_MON_YYYY_RE.match(raw)
    if m:
        month = _MONTHS.get(m.group(2).lower())
        if month is None:
            raise DateParseError(f"unknown month in {text!r}")
        return _make_date(int(m.group(3)), month, int(m.group(1)), text)
    raise DateParseError(f"unrecognized date: {text!r}")


def _make_date(year: int, month: int, day: int, text: str) -> dt.date:
    try:
        return dt.date(year, month, day)
    except ValueError as exc:
        raise DateParseError(f"impossible date {text!r}: {exc}") from None


@dataclass(frozen=True)
class Transaction:
    """One standardized ledger entry. ``amount_cents`` is positive; the
    category (Credit or Debit) carries the direction."""

    date_raw: str
    date: dt.date
    description: str
    category: TableCategory
    amount_cents: int
    check_number: str | None = None
    balance_cents: int | None = None
    page_index: int = 0
    table_index: int = 0
    row_index: int = 0


@dataclass(frozen=True)
class DiscardedRow:
    page_index: int
    table_index: int
    row_index: int
    reason: str
    row_text: str


@dataclass(frozen=True)
class SpreadTable:
    """One refined table ready for extraction."""

    page_index: int
    table_index: int
    box: Box
    category: TableCategory
    grid: TableGrid


def order_tables(tables: Iterable[SpreadTable]) -> list[SpreadTable]:
    """Reading order: page index, then top edge, then left edge. Stable."""
    return sorted(
        tables, key=lambda t: (t.page_index, t.box.y1, t.box.x1)
    )


def _cell_text(grid: TableGrid, row: int, role_map: HeaderIndexMap, role: ColumnRole) -> str:
    idx = role_map.get(role)
    if idx is None or idx >= len(grid.cells[row]):
        return ""
    return grid.cells[row][idx].text.strip()


def _row_text(grid: TableGrid, row: int) -> str:
    return " ".join(c.text for c in grid.cells[row] if c.text).strip()


def _amended(txn: Transaction, extra_desc: str) -> Transaction:
    desc = (txn.description + " " + extra_desc).strip()
    return Transaction(
        date_raw=txn.date_raw,
        date=txn.date,
        description=desc,
        category=txn.category,
        amount_cents=txn.amount_cents,
        check_number=txn.check_number,
        balance_cents=txn.balance_cents,
        page_index=txn.page_index,
        table_index=txn.table_index,
        row_index=txn.row_index,
    )


def extract_transactions(
    tables: Sequence[SpreadTable],
    statement_year: int | None = None,
    synonyms: Mapping[ColumnRole, Sequence[str]] | None = None,
) -> tuple[list[Transaction], list[DiscardedRow]]:
    """Walk ordered tables and emit transactions plus the discard log.

    Every non-header data row of a transaction-category table either
    becomes exactly one transaction or lands in the discard log with a
    reason; spanning rows fold their text into the previous
    transaction's description (or are logged when there is none yet).
    Non-transaction tables are skipped entirely.
    """
    transactions: list[Transaction] = []
    discards: list[DiscardedRow] = []
    for table in order_tables(tables):
        if table.category not in DEFAULT_SCHEMAS:
            continue  # Other / auxiliary regions carry no ledger rows
        grid = table.grid
        try:
            role_map = resolve_header_indices(grid, table.category, synonyms)
        except HeaderResolutionError as exc:
            for i in range(len(grid.cells)):
                if i in grid.header_row_indices:
                    continue
                discards.append(
                    DiscardedRow(
                        table.page_index,
                        table.table_index,
                        i,
                        str(exc),
                        _row_text(grid, i),
                    )
                )
            continue
        last_emitted: Transaction | None = None
        for i in range(len(grid.cells)):
            if i in grid.header_row_indices:
                continue
            if i in grid.spanning_row_indices:
                extra = grid.cells[i][0].text.strip()
                if last_emitted is None:
                    discards.append(
                        DiscardedRow(
                            table.page_index,
                            table.table_index,
                            i,
                            "spanning row with no preceding transaction",
                            extra,
                        )
                    )
                elif extra:
                    # last_emitted is always the tail of the list here
                    amended = _amended(last_emitted, extra)
                    transactions[-1] = amended
                    last_emitted = amended
                continue
            outcome = _extract_row(table, grid, i, role_map, statement_year)
            if isinstance(outcome, DiscardedRow):
                discards.append(outcome)
            else:
                transactions.append(outcome)
                last_emitted = outcome
    return transactions, discards


def _extract_row(
    table: SpreadTable,
    grid: TableGrid,
    row: int,
    role_map: HeaderIndexMap,
    statement_year: int | None,
) -> Transaction | DiscardedRow:
    def discard(reason: str) -> DiscardedRow:
        return DiscardedRow(
            table.page_index, table.table_index, row, reason, _row_text(grid, row)
        )

    date_text = _cell_text(grid, row, role_map, ColumnRole.DATE)
    if not date_text:
        return discard("missing date")
    try:
        date = parse_date(date_text, statement_year)
    except DateParseError as exc:
        return discard(f"bad date: {exc}")

    category = table.category
    check_number = _cell_text(grid, row, role_map, ColumnRole.CHECK_NUMBER) or None
    amount_text = ""
    if category in (TableCategory.TXN_BAL, TableCategory.TXN_CHECK_BAL):
        credit_text = _cell_text(grid, row, role_map, ColumnRole.CREDIT)
        debit_text = _cell_text(grid, row, role_map, ColumnRole.DEBIT)
        if credit_text and debit_text:
            return discard("both credit and debit cells non-empty")
        if credit_text:
            category, amount_text = TableCategory.CREDIT, credit_text
        elif debit_text:
            category, amount_text = TableCategory.DEBIT, debit_text
        else:
            return discard("missing amount: credit and debit cells both empty")
    else:
        if category is TableCategory.CHECK:
            category = TableCategory.DEBIT
        elif category is TableCategory.TXN_AMT_BAL:
            category = TableCategory.CREDIT  # sign decides below
        amount_text = _cell_text(grid, row, role_map, ColumnRole.AMOUNT)
        if not amount_text and table.category is not TableCategory.TXN_AMT_BAL:
            # One-sided tables often head their amount column "Deposits"
            # or "Withdrawals", which resolves the side role, not Amount.
            side = (
                ColumnRole.CREDIT
                if category is TableCategory.CREDIT
                else ColumnRole.DEBIT
            )
            amount_text = _cell_text(grid, row, role_map, side)
        if not amount_text:
            return discard("missing amount")

    try:
        amount = parse_amount(amount_text)
    except AmountParseError as exc:
        return discard(f"bad amount: {exc}")
    if table.category is TableCategory.TXN_AMT_BAL:
        category = TableCategory.DEBIT if amount < 0 else TableCategory.CREDIT
    amount = abs(amount)
    if amount == 0:
        return discard("zero amount")

    balance_cents = None
    balance_text = _cell_text(grid, row, role_map, ColumnRole.BALANCE)
    if balance_text:
        try:
            balance_cents = parse_amount(balance_text)
        except AmountParseError:
            balance_cents = None  # advisory column; never discards a row

    return Transaction(
        date_raw=date_text,
        date=date,
        description=_cell_text(grid, row, role_map, ColumnRole.DESCRIPTION),
        category=category,
        amount_cents=amount,
        check_number=check_number if table.category in (TableCategory.CHECK, TableCategory.TXN_CHECK_BAL) else None,
        balance_cents=balance_cents,
        page_index=table.page_index,
        table_index=table.table_index,
        row_index=row,
    )


def compute_checksum(
    transactions: Iterable[Transaction],
    opening_cents: int,
    closing_cents: int,
) -> int:
    """opening - sum(debits) + sum(credits) - closing, exact integer cents.

    Zero certifies that the extracted ledger fully explains the balance
    movement; any other value means transactions were missed, invented
    or mis-signed.
    """
    total = opening_cents - closing_cents
    for txn in transactions:
        if txn.category is TableCategory.CREDIT:
            total += txn.amount_cents
        elif txn.category is TableCategory.DEBIT:
            total -= txn.amount_cents
        else:
            raise ValueError(
                f"transaction with non-ledger category {txn.category.value!r}"
            )
    return total
