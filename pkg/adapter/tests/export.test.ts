import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";
import { exportDocument, validateConfig } from "../src/export.js";
import { writePng } from "../src/image.js";
import { TDC_LABELS, loadLabelMap, validateLabelMap } from "../src/labels.js";
import { registerDetectionModel, registerStructureModel } from "../src/model.js";
import { newPage, renderSample1 } from "../src/render.js";
import { AdapterConfig } from "../src/types.js";

let dir: string;
let blankPng: string;
let samplePng: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "adapter-export-"));
  blankPng = join(dir, "blank.png");
  writePng(newPage(850, 1100), blankPng);
  samplePng = join(dir, "sample.png");
  writePng(renderSample1().page, samplePng);
});

function cfg(overrides: Partial<AdapterConfig> = {}): AdapterConfig {
  return {
    detectionModel: "rules-table-det-v1",
    structureModel: "rules-table-struct-v1",
    ocrEngine: "glyph-matcher-v1",
    minScore: 0.5,
    outputPath: join(dir, "out.json"),
    ...overrides,
  };
}

registerDetectionModel("stub-regions", () => ({
  id: "stub-regions",
  detect: () => [
    { label: "caption", box: [10, 10, 100, 30], score: 0.9 },
    { label: "page header", box: [10, 40, 100, 60], score: 0.4 },
  ],
}));

registerDetectionModel("stub-foreign", () => ({
  id: "stub-foreign",
  detect: () => [{ label: "logo region", box: [0, 0, 10, 10], score: 0.9 }],
}));

registerDetectionModel("stub-one-table", () => ({
  id: "stub-one-table",
  detect: () => [{ label: "uncategorized table", box: [0, 0, 200, 100], score: 0.9, table: true }],
}));

registerStructureModel("stub-cell", () => ({
  id: "stub-cell",
  recognize: () => [{ label: "cell", box: [0, 0, 50, 20], score: 0.9 }],
}));

describe("validateConfig", () => {
  it("accepts the closed floor interval endpoints", () => {
    validateConfig(cfg({ minScore: 0 }));
    validateConfig(cfg({ minScore: 1 }));
  });

  it("rejects floors outside [0, 1]", () => {
    expect(() => validateConfig(cfg({ minScore: -0.1 }))).toThrow(
      /confidence floor -0.1 outside \[0, 1\]/,
    );
    expect(() => validateConfig(cfg({ minScore: 1.5 }))).toThrow(/confidence floor/);
    expect(() => validateConfig(cfg({ minScore: Number.NaN }))).toThrow(/confidence floor/);
  });

  it("rejects an empty output path and bad balances", () => {
    expect(() => validateConfig(cfg({ outputPath: "" }))).toThrow(/output path/);
    expect(() =>
      validateConfig(cfg({ summary: { openingCents: 10.5, closingCents: 0 } })),
    ).toThrow(/integer cents/);
  });
});

describe("label map", () => {
  it("ships a bundled map whose targets are all taxonomy labels", () => {
    const map = loadLabelMap();
    expect(Object.keys(map.detection).length).toBeGreaterThan(0);
    for (const target of Object.values(map.detection)) {
      expect(TDC_LABELS).toContain(target);
    }
  });

  it("rejects maps that target labels outside the taxonomy", () => {
    expect(() =>
      validateLabelMap({ detection: { "credit table": "CreditTable" }, structure: {} }),
    ).toThrow(/targets "CreditTable"/);
    expect(() =>
      validateLabelMap({ detection: {}, structure: { row: "Row" } }),
    ).toThrow(/targets "Row"/);
  });
});

describe("exportDocument", () => {
  it("writes a pages entry with empty arrays for a blank page", () => {
    const file = exportDocument([blankPng], cfg());
    expect(file.pages).toEqual([{ index: 0, width: 850, height: 1100 }]);
    expect(file.tdc).toEqual([]);
    expect(file.tsr).toEqual([]);
    expect(file.ocr).toEqual([]);
    expect(file.summary).toBeUndefined();
  });

  it("errors on a foreign structure label, naming it", () => {
    expect(() =>
      exportDocument(
        [blankPng],
        cfg({ detectionModel: "stub-one-table", structureModel: "stub-cell" }),
      ),
    ).toThrow(/unmappable structure label "cell"/);
  });

  it("errors on a foreign detection label, naming it", () => {
    expect(() =>
      exportDocument([blankPng], cfg({ detectionModel: "stub-foreign" })),
    ).toThrow(/unmappable detection label "logo region"/);
  });

  it("drops detections below the confidence floor", () => {
    const file = exportDocument([blankPng], cfg({ detectionModel: "stub-regions" }));
    expect(file.tdc.map((r) => r.label)).toEqual(["Table_caption"]);
    expect(file.tdc[0].score).toBe(0.9);
  });

  it("keeps everything at floor zero", () => {
    const file = exportDocument(
      [blankPng],
      cfg({ detectionModel: "stub-regions", minScore: 0 }),
    );
    expect(file.tdc.map((r) => r.label)).toEqual(["Table_caption", "Table_header"]);
  });

  it("records dpi and summary when configured", () => {
    const file = exportDocument(
      [blankPng],
      cfg({
        pageDpi: 100,
        summary: { openingCents: 100000, closingCents: 85000 },
      }),
    );
    expect(file.pages[0].dpi).toBe(100);
    expect(file.summary).toEqual({
      opening_cents: 100000,
      closing_cents: 85000,
      currency: "USD",
    });
  });

  it("rejects an empty image list and unknown models", () => {
    expect(() => exportDocument([], cfg())).toThrow(/no page images/);
    expect(() => exportDocument([blankPng], cfg({ detectionModel: "detr" }))).toThrow(
      /cannot load detection model "detr"/,
    );
    expect(() => exportDocument([blankPng], cfg({ ocrEngine: "gpt" }))).toThrow(
      /cannot load OCR engine "gpt"/,
    );
  });

  it("emits integer boxes, bounded scores, and position-sorted records", () => {
    const file = exportDocument([samplePng], cfg());
    for (const records of [file.tdc, file.tsr]) {
      expect(records.length).toBeGreaterThan(0);
      for (const r of records) {
        expect(r.box.every(Number.isInteger)).toBe(true);
        expect(r.score).toBeGreaterThanOrEqual(0);
        expect(r.score).toBeLessThanOrEqual(1);
        expect(r.box[0]).toBeLessThan(r.box[2]);
        expect(r.box[1]).toBeLessThan(r.box[3]);
      }
      for (let i = 0; i + 1 < records.length; i++) {
        const a = records[i];
        const b = records[i + 1];
        expect(
          a.page < b.page ||
            a.box[1] < b.box[1] ||
            (a.box[1] === b.box[1] && a.box[0] <= b.box[0]),
        ).toBe(true);
      }
    }
  });

  it("is byte-deterministic for identical input and config", () => {
    const out1 = join(dir, "det-1.json");
    const out2 = join(dir, "det-2.json");
    exportDocument([samplePng], cfg({ outputPath: out1 }));
    exportDocument([samplePng], cfg({ outputPath: out2 }));
    expect(readFileSync(out1, "utf-8")).toBe(readFileSync(out2, "utf-8"));
  });
});
