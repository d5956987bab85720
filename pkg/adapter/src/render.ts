// Deterministic renderer for synthetic statement page images. Test
// fixtures and the shipped sample pages are drawn with this; the models
// in model.ts analyze the pixels with no access to the layout data
// returned here.

import { GLYPH_HEIGHT, GLYPH_PITCH, GLYPH_WIDTH, glyphRows } from "./font.js";
import { Box, PageBitmap } from "./types.js";

export const RULE_THICKNESS = 2;
export const DEFAULT_ROW_HEIGHT = 30;
export const HEADER_SHADE = 210;

export function newPage(width: number, height: number): PageBitmap {
  return { width, height, gray: new Uint8Array(width * height).fill(255) };
}

export function fillRect(
  page: PageBitmap,
  x: number,
  y: number,
  w: number,
  h: number,
  shade: number,
): void {
  for (let yy = y; yy < y + h; yy++) {
    if (yy < 0 || yy >= page.height) continue;
    const row = yy * page.width;
    for (let xx = x; xx < x + w; xx++) {
      if (xx >= 0 && xx < page.width) page.gray[row + xx] = shade;
    }
  }
}

/** Stamp one text line; returns the glyph-grid box. Unknown chars throw. */
export function drawText(
  page: PageBitmap,
  x: number,
  y: number,
  text: string,
  scale = 2,
): Box {
  let cx = x;
  for (const ch of text) {
    if (ch === " ") {
      cx += GLYPH_PITCH * scale;
      continue;
    }
    const rows = glyphRows(ch);
    if (!rows) throw new Error(`cannot render ${JSON.stringify(ch)}: no glyph`);
    for (let r = 0; r < GLYPH_HEIGHT; r++) {
      for (let c = 0; c < GLYPH_WIDTH; c++) {
        if (rows[r][c] === "1") {
          fillRect(page, cx + c * scale, y + r * scale, scale, scale, 0);
        }
      }
    }
    cx += GLYPH_PITCH * scale;
  }
  return [x, y, cx - scale, y + GLYPH_HEIGHT * scale];
}

export interface TableBand {
  kind: "header" | "row" | "spanning";
  /** Interior pixel rows [y0, y1), between the bounding rules. */
  y0: number;
  y1: number;
}

export interface TableLayout {
  box: Box;
  bands: TableBand[];
  /** Left edge of each interior column separator. */
  separators: number[];
}

export interface TableSpec {
  x: number;
  y: number;
  columnWidths: number[];
  /** One cell text per column; omit for a headerless table. */
  header?: string[];
  /** Data cells, one array per row; empty string leaves the cell blank. */
  rows: string[][];
  /** Full-width section texts keyed by the data-row index they precede. */
  spanningBefore?: Map<number, string>;
  rowHeight?: number;
  scale?: number;
}

/**
 * Draw a bordered table: shaded header band, one rule between bands,
 * column separators through every non-spanning band.
 */
export function drawTable(page: PageBitmap, spec: TableSpec): TableLayout {
  const rh = spec.rowHeight ?? DEFAULT_ROW_HEIGHT;
  const scale = spec.scale ?? 2;
  const width = spec.columnWidths.reduce((a, b) => a + b, 0);
  const t = RULE_THICKNESS;

  const bands: { kind: TableBand["kind"]; cells?: string[]; text?: string }[] = [];
  if (spec.header) bands.push({ kind: "header", cells: spec.header });
  spec.rows.forEach((cells, i) => {
    const spanning = spec.spanningBefore?.get(i);
    if (spanning !== undefined) bands.push({ kind: "spanning", text: spanning });
    bands.push({ kind: "row", cells });
  });

  const ruleYs: number[] = [];
  for (let i = 0; i <= bands.length; i++) ruleYs.push(spec.y + i * rh);
  const height = bands.length * rh + t;
  const box: Box = [spec.x, spec.y, spec.x + width, spec.y + height];

  for (const ry of ruleYs) fillRect(page, spec.x, ry, width, t, 0);
  fillRect(page, spec.x, spec.y, t, height, 0);
  fillRect(page, spec.x + width - t, spec.y, t, height, 0);

  const separators: number[] = [];
  let cum = 0;
  for (let c = 0; c < spec.columnWidths.length - 1; c++) {
    cum += spec.columnWidths[c];
    separators.push(spec.x + cum);
  }

  const out: TableBand[] = [];
  bands.forEach((band, i) => {
    const y0 = ruleYs[i] + t;
    const y1 = ruleYs[i + 1];
    out.push({ kind: band.kind, y0, y1 });
    if (band.kind === "header") {
      fillRect(page, spec.x + t, y0, width - 2 * t, y1 - y0, HEADER_SHADE);
    }
    if (band.kind !== "spanning") {
      for (const sx of separators) {
        fillRect(page, sx, ruleYs[i], t, ruleYs[i + 1] + t - ruleYs[i], 0);
      }
    }
    const textY = y0 + Math.floor((y1 - y0 - GLYPH_HEIGHT * scale) / 2);
    if (band.kind === "spanning") {
      drawText(page, spec.x + t + 6, textY, band.text!, scale);
    } else {
      let cx = spec.x;
      band.cells!.forEach((cell, c) => {
        if (cell) drawText(page, cx + t + 6, textY, cell, scale);
        cx += spec.columnWidths[c];
      });
    }
  });

  return { box, bands: out, separators };
}

export interface SamplePage {
  page: PageBitmap;
  tables: { layout: TableLayout; rawLabel: string }[];
  captionCount: number;
  hasPageHeader: boolean;
}

/** Credit page: bank masthead, caption, one deposits table. */
export function renderSample1(): SamplePage {
  const page = newPage(850, 1100);
  drawText(page, 60, 48, "ACME BANK", 3);
  drawText(page, 60, 100, "STATEMENT PERIOD 01/01/2024 - 01/31/2024");
  drawText(page, 60, 196, "DEPOSITS AND OTHER CREDITS");
  const layout = drawTable(page, {
    x: 60,
    y: 240,
    columnWidths: [130, 420, 160],
    header: ["DATE", "DESCRIPTION", "AMOUNT"],
    rows: [
      ["01/03", "PAYROLL ACME CORP", "2,450.00"],
      ["01/07", "MOBILE DEPOSIT", "310.25"],
      ["01/12", "TRANSFER FROM SAVINGS", "500.00"],
      ["01/18", "REFUND AMAZON MKTP", "42.99"],
      ["01/25", "PAYROLL ACME CORP", "2,450.00"],
      ["01/29", "INTEREST PAYMENT", "1.17"],
    ],
  });
  return {
    page,
    tables: [{ layout, rawLabel: "deposits table" }],
    captionCount: 1,
    hasPageHeader: true,
  };
}

/** Debit page: withdrawals table with a spanning section row, then checks. */
export function renderSample2(): SamplePage {
  const page = newPage(850, 1100);
  drawText(page, 60, 48, "ACME BANK PAGE 2 OF 3");
  drawText(page, 60, 150, "WITHDRAWALS AND OTHER DEBITS");
  const debits = drawTable(page, {
    x: 60,
    y: 190,
    columnWidths: [130, 420, 160],
    header: ["DATE", "DESCRIPTION", "AMOUNT"],
    rows: [
      ["01/02", "GROCERY MART 0443", "86.12"],
      ["01/05", "ELECTRIC UTILITY CO", "134.50"],
      ["01/09", "STREAMFLIX SUBSCRIPTION", "15.99"],
      ["01/16", "CITY WATER AUTHORITY", "61.75"],
      ["01/23", "GYM MEMBERSHIP", "29.00"],
    ],
    spanningBefore: new Map([[2, "RECURRING PAYMENTS"]]),
  });
  drawText(page, 60, 502, "CHECKS PAID");
  const checks = drawTable(page, {
    x: 60,
    y: 550,
    columnWidths: [140, 130, 160],
    header: ["CHECK NO.", "DATE", "AMOUNT"],
    rows: [
      ["1041", "01/04", "250.00"],
      ["1042", "01/11", "87.30"],
      ["1043", "01/19", "600.00"],
      ["1044", "01/27", "45.00"],
    ],
  });
  return {
    page,
    tables: [
      { layout: debits, rawLabel: "withdrawals table" },
      { layout: checks, rawLabel: "check register" },
    ],
    captionCount: 2,
    hasPageHeader: true,
  };
}

/** Combined-activity page plus a daily balance table. */
export function renderSample3(): SamplePage {
  const page = newPage(850, 1100);
  drawText(page, 60, 48, "ACME BANK", 3);
  drawText(page, 60, 104, "ACCOUNT 000004417 02/01/2024 - 02/29/2024");
  drawText(page, 60, 170, "ACCOUNT ACTIVITY");
  const activity = drawTable(page, {
    x: 60,
    y: 210,
    columnWidths: [120, 330, 130, 150],
    header: ["DATE", "DESCRIPTION", "DEBIT", "CREDIT"],
    rows: [
      ["02/02", "CARD PURCHASE CAFE RIO", "12.40", ""],
      ["02/05", "PAYROLL ACME CORP", "", "2,450.00"],
      ["02/08", "ATM WITHDRAWAL MAIN ST", "200.00", ""],
      ["02/11", "MONTHLY SERVICE FEE", "25.00", ""],
      ["02/14", "REFUND GROCERY MART", "", "18.60"],
      ["02/21", "CARD PURCHASE FUEL STOP", "44.12", ""],
    ],
    spanningBefore: new Map([[3, "SERVICE FEES AND ADJUSTMENTS"]]),
  });
  drawText(page, 60, 540, "DAILY ENDING BALANCE");
  const balances = drawTable(page, {
    x: 60,
    y: 580,
    columnWidths: [150, 200],
    header: ["DATE", "BALANCE"],
    rows: [
      ["02/07", "4,210.11"],
      ["02/14", "6,420.52"],
      ["02/28", "6,351.40"],
    ],
  });
  return {
    page,
    tables: [
      { layout: activity, rawLabel: "combined activity table" },
      { layout: balances, rawLabel: "running balance table" },
    ],
    captionCount: 2,
    hasPageHeader: true,
  };
}

export const SAMPLE_BUILDERS = [renderSample1, renderSample2, renderSample3];
