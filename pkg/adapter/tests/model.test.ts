import { describe, expect, it } from "vitest";
import { loadDetectionModel, loadStructureModel } from "../src/model.js";
import { recognizeGlyphs } from "../src/ocr.js";
import { drawTable, drawText, fillRect, newPage, renderSample2 } from "../src/render.js";
import { PageBitmap, RawDetection } from "../src/types.js";

const detector = loadDetectionModel("rules-table-det-v1");
const structurer = loadStructureModel("rules-table-struct-v1");

function detect(page: PageBitmap): RawDetection[] {
  return detector.detect(page, recognizeGlyphs(page));
}

function labels(parts: RawDetection[], label: string): RawDetection[] {
  return parts.filter((p) => p.label === label);
}

describe("rules-table-det-v1", () => {
  it("finds a captioned table and classifies it by caption text", () => {
    const page = newPage(850, 400);
    drawText(page, 60, 40, "DEPOSITS THIS PERIOD", 2);
    const layout = drawTable(page, {
      x: 60,
      y: 80,
      columnWidths: [130, 300, 160],
      header: ["DATE", "DESCRIPTION", "AMOUNT"],
      rows: [
        ["01/03", "PAYROLL", "2,450.00"],
        ["01/07", "REFUND", "42.99"],
      ],
    });
    const dets = detect(page);
    const tables = dets.filter((d) => d.table);
    expect(tables).toHaveLength(1);
    expect(tables[0].label).toBe("deposits table");
    expect(tables[0].box).toEqual(layout.box);
    expect(tables[0].score).toBeGreaterThan(0.95);
    expect(labels(dets, "caption")).toHaveLength(1);
  });

  it("labels a captionless table uncategorized", () => {
    const page = newPage(850, 400);
    drawTable(page, {
      x: 60,
      y: 80,
      columnWidths: [130, 160],
      header: ["DATE", "AMOUNT"],
      rows: [["01/03", "2,450.00"]],
    });
    const tables = detect(page).filter((d) => d.table);
    expect(tables).toHaveLength(1);
    expect(tables[0].label).toBe("uncategorized table");
  });

  it("separates stacked tables and keeps the masthead out of captions", () => {
    const sample = renderSample2();
    const dets = detect(sample.page);
    const tables = dets.filter((d) => d.table);
    expect(tables.map((t) => t.label)).toEqual(["withdrawals table", "check register"]);
    expect(tables.map((t) => t.box)).toEqual(sample.tables.map((t) => t.layout.box));
    expect(labels(dets, "caption")).toHaveLength(2);
    expect(labels(dets, "page header")).toHaveLength(1);
  });

  it("reports nothing on a blank page", () => {
    expect(detect(newPage(850, 400))).toEqual([]);
  });
});

describe("rules-table-struct-v1", () => {
  it("recovers header, rows, spanning section, and columns", () => {
    const page = newPage(850, 420);
    const layout = drawTable(page, {
      x: 60,
      y: 40,
      columnWidths: [130, 300, 160],
      header: ["DATE", "DESCRIPTION", "AMOUNT"],
      rows: [
        ["01/02", "GROCERY MART", "86.12"],
        ["01/05", "ELECTRIC CO", "134.50"],
        ["01/09", "STREAMFLIX", "15.99"],
        ["01/16", "WATER", "61.75"],
      ],
      spanningBefore: new Map([[2, "RECURRING PAYMENTS"]]),
    });
    const parts = structurer.recognize(page, layout.box);

    expect(labels(parts, "table")).toHaveLength(1);
    expect(labels(parts, "table")[0].box).toEqual(layout.box);
    expect(labels(parts, "table column header")).toHaveLength(1);
    expect(labels(parts, "table spanning cell")).toHaveLength(1);
    expect(labels(parts, "table row")).toHaveLength(4);
    expect(labels(parts, "table column")).toHaveLength(3);

    const bandBoxes = (kind: string) =>
      layout.bands.filter((b) => b.kind === kind).map((b) => [60, b.y0, layout.box[2], b.y1]);
    expect(labels(parts, "table row").map((p) => p.box)).toEqual(bandBoxes("row"));
    expect(labels(parts, "table spanning cell").map((p) => p.box)).toEqual(
      bandBoxes("spanning"),
    );
    expect(labels(parts, "table column header").map((p) => p.box)).toEqual(
      bandBoxes("header"),
    );

    const cols = labels(parts, "table column");
    expect(cols[0].box[0]).toBe(layout.box[0]);
    expect(cols[cols.length - 1].box[2]).toBe(layout.box[2]);
    for (const col of cols) {
      expect(col.box[1]).toBe(layout.box[1]);
      expect(col.box[3]).toBe(layout.box[3]);
    }
    for (let i = 0; i + 1 < cols.length; i++) {
      expect(cols[i].box[2]).toBe(cols[i + 1].box[0]);
    }
    for (const part of parts) {
      expect(part.score).toBeGreaterThan(0.9);
      expect(part.score).toBeLessThanOrEqual(1);
    }
  });

  it("treats a headerless table as plain rows", () => {
    const page = newPage(850, 300);
    const layout = drawTable(page, {
      x: 60,
      y: 40,
      columnWidths: [140, 160],
      rows: [
        ["1041", "250.00"],
        ["1042", "87.30"],
        ["1043", "600.00"],
      ],
    });
    const parts = structurer.recognize(page, layout.box);
    expect(labels(parts, "table column header")).toHaveLength(0);
    expect(labels(parts, "table spanning cell")).toHaveLength(0);
    expect(labels(parts, "table row")).toHaveLength(3);
    expect(labels(parts, "table column")).toHaveLength(2);
  });

  it("degrades to one band and one column inside a bare frame", () => {
    const page = newPage(400, 200);
    fillRect(page, 60, 40, 280, 2, 0);
    fillRect(page, 60, 140, 280, 2, 0);
    fillRect(page, 60, 40, 2, 102, 0);
    fillRect(page, 338, 40, 2, 102, 0);
    const parts = structurer.recognize(page, [60, 40, 340, 142]);
    expect(labels(parts, "table")).toHaveLength(1);
    expect(labels(parts, "table row")).toHaveLength(1);
    expect(labels(parts, "table column")).toHaveLength(1);
  });

  it("emits only the table when the region has no rules", () => {
    const page = newPage(400, 200);
    const parts = structurer.recognize(page, [50, 50, 350, 150]);
    expect(parts.map((p) => p.label)).toEqual(["table"]);
  });
});

describe("model registry", () => {
  it("fails loudly for unknown model identifiers", () => {
    expect(() => loadDetectionModel("detr-r50")).toThrow(
      /cannot load detection model "detr-r50" \(available: .*rules-table-det-v1.*\)/,
    );
    expect(() => loadStructureModel("tatr-v1.1")).toThrow(
      /cannot load structure model "tatr-v1\.1"/,
    );
  });
});
