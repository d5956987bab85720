"""Table-structure post-processing.

Raw structure detections for one table region (rows, columns, column
headers, spanning rows) come out of the detector noisy: duplicated,
overlapping, missing entire rows. This module turns them into a clean
cell grid:

  * ``split_long_table`` / ``slice_detections`` / ``merge_split_outputs``
    handle the long-table path: tables with more than 20 row candidates
    are recursively split at the inter-row gap nearest the vertical
    midpoint (sub-boxes keep a 10 px overlap margin), processed per
    part, then merged back, deduplicating via NMS and vertically
    unioning column pieces whose x-extents agree.
  * ``infer_row_separators`` derives row bands from the OCR words in the
    date (leftmost) column, clustering word y-centers with a gap
    threshold of 0.6 x the median word height.
  * ``refine_structure`` applies the ordered cleanup: per-class NMS,
    overlap snapping to the shared midline, separator-driven insertion
    of missed rows, extension to the full table extent, gap filling,
    and header/spanning flag assignment.
  * ``build_grid`` intersects rows with columns into cells (spanning
    rows become one full-width cell) and ``assign_text`` drops OCR words
    into the cell with the largest overlap.

All steps are pure functions over value objects; thresholds are
keyword arguments with the tuned defaults.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from typing import Sequence
from xml.sax.saxutils import escape

from .docmodel import DetectedObject, OcrWord, TsrClass
from .geometry import Box, containment_ratio, intersection_area, iou, nms

DEFAULT_MAX_ROWS_PER_PART = 20
DEFAULT_SPLIT_MARGIN = 10.0
DEFAULT_NMS_IOU = 0.5
DEFAULT_COLUMN_UNION_IOU = 0.7
DEFAULT_MISSING_ROW_IOU = 0.25
DEFAULT_GAP_FACTOR = 1.5
DEFAULT_SEPARATOR_GAP_FACTOR = 0.6
DEFAULT_FLAG_IOU = 0.5

# Above this many detections in one part the upstream detector's query
# budget is exhausted and recall silently degrades; no hard cap here.
PART_OBJECT_BUDGET = 125


def pad(box: Box, pixels: float) -> Box:
    """Symmetric expansion used when carving training crops; not on the runtime path."""
    if pixels < 0:
        raise ValueError("pad expects a non-negative pixel count")
    return Box(box.x1 - pixels, box.y1 - pixels, box.x2 + pixels, box.y2 + pixels)


@dataclass(frozen=True)
class SplitPlan:
    """How one long table was cut into overlapping vertical parts."""

    original: Box
    parts: tuple[Box, ...]
    margin: float


def split_long_table(
    table: Box,
    row_candidates: Sequence[Box],
    max_rows: int = DEFAULT_MAX_ROWS_PER_PART,
    margin: float = DEFAULT_SPLIT_MARGIN,
) -> SplitPlan:
    """Split ``table`` until no part holds more than ``max_rows`` candidates.

    The cut goes through the inter-row gap center nearest the current
    part's vertical midpoint; both sides keep ``margin`` px beyond the
    cut so boundary rows stay whole in at least one part. A table at or
    under the limit comes back as a single-part plan.
    """
    if max_rows < 1:
        raise ValueError("max_rows must be at least 1")
    rows = sorted(row_candidates, key=lambda b: (b.y1, b.x1))
    parts: list[Box] = []

    def cut(bounds: Box, rs: list[Box]) -> None:
        if len(rs) <= max_rows:
            parts.append(bounds)
            return
        mid = (bounds.y1 + bounds.y2) / 2.0
        centers = [(rs[i].y2 + rs[i + 1].y1) / 2.0 for i in range(len(rs) - 1)]
        i = min(range(len(centers)), key=lambda k: (abs(centers[k] - mid), k))
        g = centers[i]
        top = Box(bounds.x1, bounds.y1, bounds.x2, min(bounds.y2, g + margin))
        bottom = Box(bounds.x1, max(bounds.y1, g - margin), bounds.x2, bounds.y2)
        cut(top, rs[: i + 1])
        cut(bottom, rs[i + 1 :])

    cut(table, rows)
    return SplitPlan(original=table, parts=tuple(parts), margin=margin)


def _contains(outer: Box, inner: Box) -> bool:
    return (
        outer.x1 <= inner.x1
        and outer.y1 <= inner.y1
        and inner.x2 <= outer.x2
        and inner.y2 <= outer.y2
    )


def slice_detections(
    plan: SplitPlan, detections: Sequence[DetectedObject]
) -> list[list[DetectedObject]]:
    """Distribute whole-table detections onto the plan's parts, part-local coords.

    Mirrors what a detector run on each sub-image would see: rows,
    spanning rows and column headers land in every part that fully
    contains them (margin-zone rows may appear twice); columns and the
    table box are clipped to each part they touch. A box contained
    nowhere falls back to its maximum-overlap part unclipped, so a
    later merge restores it exactly.
    """
    out: list[list[DetectedObject]] = [[] for _ in plan.parts]
    for det in detections:
        if det.label in (TsrClass.COLUMN, TsrClass.TABLE):
            for pi, part in enumerate(plan.parts):
                if intersection_area(det.box, part) > 0:
                    clipped = det.box.clamp(part.x1, part.y1, part.x2, part.y2)
                    out[pi].append(
                        replace(det, box=clipped.translate(-part.x1, -part.y1))
                    )
            continue
        holders = [pi for pi, part in enumerate(plan.parts) if _contains(part, det.box)]
        if not holders:
            best = max(
                range(len(plan.parts)),
                key=lambda pi: (intersection_area(det.box, plan.parts[pi]), -pi),
            )
            holders = [best]
        for pi in holders:
            part = plan.parts[pi]
            out[pi].append(replace(det, box=det.box.translate(-part.x1, -part.y1)))
    return out


def _interval_iou(a_lo: float, a_hi: float, b_lo: float, b_hi: float) -> float:
    inter = min(a_hi, b_hi) - max(a_lo, b_lo)
    if inter <= 0:
        return 0.0
    union = (a_hi - a_lo) + (b_hi - b_lo) - inter
    return inter / union if union > 0 else 0.0


def merge_split_outputs(
    plan: SplitPlan,
    per_part: Sequence[Sequence[DetectedObject]],
    nms_iou: float = DEFAULT_NMS_IOU,
    column_union_iou: float = DEFAULT_COLUMN_UNION_IOU,
) -> list[DetectedObject]:
    """Translate per-part detections back and reconcile the overlap zones.

    Column (and table) pieces whose x-extents agree at 1-D IoU >= 0.7
    are vertically unioned into one box carrying the best piece's score;
    everything is then deduplicated with class-aware NMS at 0.5.
    """
    if len(per_part) != len(plan.parts):
        raise ValueError(
            f"plan has {len(plan.parts)} parts but got {len(per_part)} detection lists"
        )
    translated: list[DetectedObject] = []
    for part, dets in zip(plan.parts, per_part):
        translated.extend(
            replace(d, box=d.box.translate(part.x1, part.y1)) for d in dets
        )

    merged: list[DetectedObject] = [
        d for d in translated if d.label not in (TsrClass.COLUMN, TsrClass.TABLE)
    ]
    for label in (TsrClass.COLUMN, TsrClass.TABLE):
        pieces = sorted(
            (d for d in translated if d.label is label),
            key=lambda d: (d.box.x1, d.box.y1, d.box.x2, d.box.y2),
        )
        clusters: list[list[DetectedObject]] = []
        for piece in pieces:
            home = None
            for cluster in clusters:
                if any(
                    _interval_iou(piece.box.x1, piece.box.x2, c.box.x1, c.box.x2)
                    >= column_union_iou
                    for c in cluster
                ):
                    home = cluster
                    break
            if home is None:
                clusters.append([piece])
            else:
                home.append(piece)
        for cluster in clusters:
            box = Box(
                min(c.box.x1 for c in cluster),
                min(c.box.y1 for c in cluster),
                max(c.box.x2 for c in cluster),
                max(c.box.y2 for c in cluster),
            )
            best = max(cluster, key=lambda c: c.score)
            merged.append(replace(best, box=box))
    return nms(merged, nms_iou)


def infer_row_separators(
    table: Box,
    words: Sequence[OcrWord],
    date_column: Box | None = None,
    gap_factor: float = DEFAULT_SEPARATOR_GAP_FACTOR,
) -> list[Box]:
    """Row bands derived from the words of the leftmost (date) column.

    Words majority-inside both the table and the column are clustered on
    their y-centers; a jump larger than ``gap_factor`` x the median word
    height opens a new cluster. Each cluster's top edge starts a band;
    bands run to the next band's top (the last one to the table bottom)
    and span the full table width. A wrapped two-line description under
    a single date word therefore stays one band. No words, no bands.
    """
    if date_column is None:
        # No column detection available: fall back to the leftmost
        # quarter of the table as the presumed date strip.
        date_column = Box(table.x1, table.y1, table.x1 + table.width / 4.0, table.y2)
    hits = [
        w
        for w in words
        if containment_ratio(w.box, table) >= 0.5
        and containment_ratio(w.box, date_column) >= 0.5
    ]
    if not hits:
        return []
    threshold = gap_factor * statistics.median(w.box.height for w in hits)
    hits.sort(key=lambda w: ((w.box.y1 + w.box.y2) / 2.0, w.box.x1))
    clusters: list[list[OcrWord]] = [[hits[0]]]
    for prev, cur in zip(hits, hits[1:]):
        prev_c = (prev.box.y1 + prev.box.y2) / 2.0
        cur_c = (cur.box.y1 + cur.box.y2) / 2.0
        if cur_c - prev_c > threshold:
            clusters.append([cur])
        else:
            clusters[-1].append(cur)
    tops = [min(w.box.y1 for w in cluster) for cluster in clusters]
    bands = []
    for i, top in enumerate(tops):
        bottom = tops[i + 1] if i + 1 < len(tops) else table.y2
        if bottom > top:
            bands.append(Box(table.x1, top, table.x2, bottom))
    return bands


@dataclass(frozen=True)
class RefinedStructure:
    """Disjoint, sorted, table-spanning rows and columns plus role flags."""

    table: Box
    rows: tuple[Box, ...]
    columns: tuple[Box, ...]
    header_row_indices: frozenset[int]
    spanning_row_indices: frozenset[int]


def _snap_axis(boxes: list[Box], axis: str) -> list[Box]:
    """Resolve pairwise overlaps along one axis by splitting at the midline.

    Boxes that collapse to (nearly) nothing in the process are dropped.
    Runs passes until stable; each pass only shrinks boxes.
    """
    lo_attr, hi_attr = ("y1", "y2") if axis == "y" else ("x1", "x2")
    spans = [[getattr(b, lo_attr), getattr(b, hi_attr), b] for b in boxes]
    for _ in range(len(spans) + 1):
        spans.sort(key=lambda s: (s[0], s[1]))
        dirty = False
        for a, b in zip(spans, spans[1:]):
            if a[1] > b[0] + 1e-9:
                mid = (a[1] + b[0]) / 2.0
                mid = max(a[0], min(mid, b[1]))
                a[1] = mid
                b[0] = mid
                dirty = True
        if not dirty:
            break
    out = []
    for lo, hi, box in spans:
        if hi - lo > 1e-9:
            if axis == "y":
                out.append(Box(box.x1, lo, box.x2, hi))
            else:
                out.append(Box(lo, box.y1, hi, box.y2))
    return out


def _fill_gaps(
    spans: list[Box], table: Box, axis: str, gap_factor: float
) -> list[Box]:
    """Insert a new full-size box into any uncovered span larger than
    gap_factor x the median extent. Needs at least one existing box to
    estimate the pitch."""
    if not spans:
        return spans
    if axis == "y":
        sizes = [b.height for b in spans]
        lo, hi = table.y1, table.y2
        edges = [(b.y1, b.y2) for b in spans]
    else:
        sizes = [b.width for b in spans]
        lo, hi = table.x1, table.x2
        edges = [(b.x1, b.x2) for b in spans]
    threshold = gap_factor * statistics.median(sizes)
    filled = list(spans)
    cursor = lo
    for start, end in edges + [(hi, hi)]:
        if start - cursor > threshold:
            if axis == "y":
                filled.append(Box(table.x1, cursor, table.x2, start))
            else:
                filled.append(Box(cursor, table.y1, start, table.y2))
        cursor = max(cursor, end)
    key = (lambda b: (b.y1, b.x1)) if axis == "y" else (lambda b: (b.x1, b.y1))
    return sorted(filled, key=key)


def refine_structure(
    detections: Sequence[DetectedObject],
    separators: Sequence[Box],
    table: Box,
    nms_iou: float = DEFAULT_NMS_IOU,
    missing_row_iou: float = DEFAULT_MISSING_ROW_IOU,
    gap_factor: float = DEFAULT_GAP_FACTOR,
    flag_iou: float = DEFAULT_FLAG_IOU,
) -> RefinedStructure:
    """Ordered cleanup of raw structure detections into a usable lattice.

    Steps: (1) class-aware NMS at 0.5; (2) snap overlapping rows/columns
    to the shared overlap midline; (3) insert any separator band with
    IoU < 0.25 against every surviving row as a missed row (snapping
    again so the result stays disjoint); (4) extend rows to the table's
    width and columns to its height; (5) fill uncovered spans larger
    than 1.5 x the median row height / column width; (6) flag rows
    agreeing with a column-header or spanning-row detection at IoU >=
    0.5. A table with no columns at the end is unstructurable.
    """
    kept = nms([d for d in detections if isinstance(d.label, TsrClass)], nms_iou)

    def clamped(boxes: list[Box]) -> list[Box]:
        out = []
        for b in boxes:
            c = b.clamp(table.x1, table.y1, table.x2, table.y2)
            if c.width > 1e-9 and c.height > 1e-9:
                out.append(c)
        return out

    rows = clamped([d.box for d in kept if d.label is TsrClass.ROW])
    columns = clamped([d.box for d in kept if d.label is TsrClass.COLUMN])
    header_boxes = clamped([d.box for d in kept if d.label is TsrClass.COLUMN_HEADER])
    spanning_boxes = clamped([d.box for d in kept if d.label is TsrClass.SPANNING_ROW])

    rows = _snap_axis(rows, "y")
    columns = _snap_axis(columns, "x")

    inserted = False
    for sep in separators:
        band = sep.clamp(table.x1, table.y1, table.x2, table.y2)
        if band.height <= 1e-9:
            continue
        if all(iou(band, r) < missing_row_iou for r in rows):
            rows.append(band)
            inserted = True
    if inserted:
        rows = _snap_axis(rows, "y")

    rows = sorted(
        (Box(table.x1, r.y1, table.x2, r.y2) for r in rows), key=lambda b: b.y1
    )
    columns = sorted(
        (Box(c.x1, table.y1, c.x2, table.y2) for c in columns), key=lambda b: b.x1
    )

    rows = _fill_gaps(rows, table, "y", gap_factor)
    columns = _fill_gaps(columns, table, "x", gap_factor)

    if not columns:
        raise ValueError("unstructurable table: no columns after refinement")

    header_rows = frozenset(
        i
        for i, r in enumerate(rows)
        if any(iou(r, h) >= flag_iou for h in header_boxes)
    )
    spanning_rows = frozenset(
        i
        for i, r in enumerate(rows)
        if any(iou(r, s) >= flag_iou for s in spanning_boxes)
    )
    return RefinedStructure(
        table=table,
        rows=tuple(rows),
        columns=tuple(columns),
        header_row_indices=header_rows,
        spanning_row_indices=spanning_rows,
    )


@dataclass(frozen=True)
class Cell:
    box: Box
    row_index: int
    col_index: int
    is_header: bool = False
    is_spanning: bool = False
    text: str = ""
    words: tuple[OcrWord, ...] = ()


@dataclass(frozen=True)
class TableGrid:
    """Cell lattice of one table. ``cells[i]`` holds row i's cells in
    column order; a spanning row holds exactly one full-width cell."""

    table: Box
    rows: tuple[Box, ...]
    columns: tuple[Box, ...]
    header_row_indices: frozenset[int]
    spanning_row_indices: frozenset[int]
    cells: tuple[tuple[Cell, ...], ...]
    unassigned_words: tuple[OcrWord, ...] = ()

    def row_cells(self, i: int) -> tuple[Cell, ...]:
        return self.cells[i]

    def cell_text(self, i: int, j: int) -> str:
        return self.cells[i][j].text


def build_grid(structure: RefinedStructure) -> TableGrid:
    """Intersect rows and columns into the cell lattice."""
    if not structure.rows:
        raise ValueError("unstructurable table: no rows")
    if not structure.columns:
        raise ValueError("unstructurable table: no columns")
    lattice: list[tuple[Cell, ...]] = []
    for i, row in enumerate(structure.rows):
        is_header = i in structure.header_row_indices
        if i in structure.spanning_row_indices:
            lattice.append(
                (
                    Cell(
                        box=row,
                        row_index=i,
                        col_index=0,
                        is_header=is_header,
                        is_spanning=True,
                    ),
                )
            )
            continue
        lattice.append(
            tuple(
                Cell(
                    box=Box(col.x1, row.y1, col.x2, row.y2),
                    row_index=i,
                    col_index=j,
                    is_header=is_header,
                )
                for j, col in enumerate(structure.columns)
            )
        )
    return TableGrid(
        table=structure.table,
        rows=structure.rows,
        columns=structure.columns,
        header_row_indices=structure.header_row_indices,
        spanning_row_indices=structure.spanning_row_indices,
        cells=tuple(lattice),
    )


def assign_text(grid: TableGrid, words: Sequence[OcrWord]) -> TableGrid:
    """Attach OCR words to cells by maximum overlap.

    Only words intersecting the table box participate; a word goes to
    the cell with the largest intersection area (ties to the leftmost,
    then topmost cell), or to the unassigned list when it overlaps no
    cell. Cell text joins its words in reading order with single
    spaces. Every participating word lands exactly once.
    """
    in_table = [w for w in words if intersection_area(w.box, grid.table) > 0]
    per_cell: dict[tuple[int, int], list[OcrWord]] = {}
    unassigned: list[OcrWord] = []
    for w in in_table:
        best_key: tuple[int, int] | None = None
        best = (0.0, 0.0, 0.0)
        for i, row in enumerate(grid.rows):
            if min(row.y2, w.box.y2) <= max(row.y1, w.box.y1):
                continue
            for cell in grid.cells[i]:
                area = intersection_area(cell.box, w.box)
                if area <= 0:
                    continue
                cand = (area, -cell.box.x1, -cell.box.y1)
                if cand > best:
                    best = cand
                    best_key = (cell.row_index, cell.col_index)
        if best_key is None:
            unassigned.append(w)
        else:
            per_cell.setdefault(best_key, []).append(w)

    new_rows = []
    for row_cells in grid.cells:
        new_cells = []
        for cell in row_cells:
            assigned = per_cell.get((cell.row_index, cell.col_index), [])
            assigned.sort(key=lambda w: (w.box.y1, w.box.x1))
            new_cells.append(
                replace(
                    cell,
                    words=tuple(assigned),
                    text=" ".join(w.text for w in assigned),
                )
            )
        new_rows.append(tuple(new_cells))
    return replace(grid, cells=tuple(new_rows), unassigned_words=tuple(unassigned))


def render_overlay(grid: TableGrid, separators: Sequence[Box] = ()) -> str:
    """Debug SVG of the grid: cells, header shading, spanning stripes,
    separator bands, and each cell's text."""
    pad_px = 10.0
    x0, y0 = grid.table.x1 - pad_px, grid.table.y1 - pad_px
    width = grid.table.width + 2 * pad_px
    height = grid.table.height + 2 * pad_px

    def rect(box: Box, style: str) -> str:
        return (
            f'<rect x="{box.x1 - x0:.1f}" y="{box.y1 - y0:.1f}" '
            f'width="{box.width:.1f}" height="{box.height:.1f}" style="{style}"/>'
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.1f} {height:.1f}">',
        rect(grid.table, "fill:none;stroke:#333;stroke-width:2"),
    ]
    for sep in separators:
        parts.append(rect(sep, "fill:none;stroke:#c86;stroke-width:1;stroke-dasharray:4 3"))
    for row_cells in grid.cells:
        for cell in row_cells:
            fill = "#dde8ff" if cell.is_header else ("#ffeedd" if cell.is_spanning else "none")
            parts.append(rect(cell.box, f"fill:{fill};fill-opacity:0.5;stroke:#789;stroke-width:0.7"))
            if cell.text:
                parts.append(
                    f'<text x="{cell.box.x1 - x0 + 2:.1f}" '
                    f'y="{cell.box.y2 - y0 - 3:.1f}" font-size="10" '
                    f'font-family="monospace">{escape(cell.text)}</text>'
                )
    parts.append("</svg>")
    return "\n".join(parts)
