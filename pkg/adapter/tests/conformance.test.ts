import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { beforeAll, describe, expect, it } from "vitest";
import { runCli } from "../src/cli.js";
import { exportDocument } from "../src/export.js";
import { loadPageImage, writePng } from "../src/image.js";
import { TABLE_REGION_LABELS, TDC_LABELS, TSR_LABELS } from "../src/labels.js";
import { SAMPLE_BUILDERS } from "../src/render.js";
import { AdapterConfig, IngestionFile } from "../src/types.js";

const fixtureDir = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");
const fixtures = [1, 2, 3].map((n) => join(fixtureDir, `sample-${n}.png`));

let dir: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "adapter-conf-"));
});

function cfg(outputPath: string): AdapterConfig {
  return {
    detectionModel: "rules-table-det-v1",
    structureModel: "rules-table-struct-v1",
    ocrEngine: "glyph-matcher-v1",
    minScore: 0.5,
    outputPath,
  };
}

// The consumer-side check: the Python CLI must accept the file verbatim.
function validate(path: string) {
  return spawnSync("bankspread", ["validate", path], { encoding: "utf-8" });
}

describe("fixtures", () => {
  it("match the deterministic renderer pixel for pixel", () => {
    SAMPLE_BUILDERS.forEach((build, i) => {
      const rendered = build().page;
      const stored = loadPageImage(fixtures[i]);
      expect(stored.width).toBe(rendered.width);
      expect(stored.height).toBe(rendered.height);
      expect(Buffer.from(stored.gray).equals(Buffer.from(rendered.gray))).toBe(true);
    });
  });
});

describe("downstream conformance", () => {
  it("each sample page validates with zero warnings", () => {
    fixtures.forEach((fixture, i) => {
      const out = join(dir, `single-${i}.json`);
      exportDocument([fixture], cfg(out));
      const res = validate(out);
      expect(res.error).toBeUndefined();
      expect(res.status).toBe(0);
      expect(res.stdout).toMatch(/^ok: /m);
      expect(res.stdout).not.toContain("warning:");
      expect(res.stderr).toBe("");
    });
  });

  it("emits only taxonomy labels, with a table region on every page", () => {
    fixtures.forEach((fixture, i) => {
      const out = join(dir, `labels-${i}.json`);
      const file = exportDocument([fixture], cfg(out));
      const tableRegions = file.tdc.filter((r) => TABLE_REGION_LABELS.has(r.label));
      expect(tableRegions.length).toBeGreaterThan(0);
      for (const r of file.tdc) expect(TDC_LABELS).toContain(r.label);
      for (const r of file.tsr) expect(TSR_LABELS).toContain(r.label);
      expect(file.ocr.length).toBeGreaterThan(0);
      for (const w of file.ocr) expect(w.text.length).toBeGreaterThan(0);
    });
  });

  it("covers all five statement table categories across the corpus", () => {
    const out = join(dir, "all-categories.json");
    const file = exportDocument(fixtures, cfg(out));
    const seen = new Set(file.tdc.map((r) => r.label));
    for (const label of ["Credit", "Debit", "CreditDebit", "Check", "Txn_bal"]) {
      expect(seen).toContain(label);
    }
  });
});

describe("command line", () => {
  it("exports the corpus in one run that validates and spreads balanced", () => {
    const out = join(dir, "cli-corpus.json");
    // Closing chosen so the fixtures' printed amounts reconcile exactly:
    // credits 8223.01 minus debits 1591.18 on top of a 1000.00 opening.
    const code = runCli([
      "-o",
      out,
      "--opening",
      "100000",
      "--closing",
      "763183",
      ...fixtures,
    ]);
    expect(code).toBe(0);

    const file = JSON.parse(readFileSync(out, "utf-8")) as IngestionFile;
    expect(file.pages.length).toBe(3);
    expect(file.pages.map((p) => p.index)).toEqual([0, 1, 2]);
    expect(file.summary).toEqual({
      opening_cents: 100000,
      closing_cents: 763183,
      currency: "USD",
    });

    const res = validate(out);
    expect(res.status).toBe(0);
    expect(res.stdout).toMatch(/^ok: 3 pages, /m);
    expect(res.stdout).not.toContain("warning:");

    // Strongest downstream claim: the consumer extracts a ledger whose
    // checksum closes to zero against the printed balances.
    const spread = spawnSync(
      "bankspread",
      ["spread", out, "-o", join(dir, "spread-out")],
      { encoding: "utf-8" },
    );
    expect(spread.status).toBe(0);
    expect(spread.stdout).toContain("balanced");
  });

  it("rejects bad usage without writing output", () => {
    expect(runCli([])).toBe(1);
    expect(runCli(["-o", join(dir, "x.json")])).toBe(1);
    expect(runCli(["-o", join(dir, "x.json"), "--min-score", "2", fixtures[0]])).toBe(1);
    expect(runCli(["-o", join(dir, "x.json"), "--opening", "5", fixtures[0]])).toBe(1);
    expect(runCli(["-o", join(dir, "x.json"), "--min-score", "abc", fixtures[0]])).toBe(1);
  });

  it("prints usage on --help", () => {
    expect(runCli(["--help"])).toBe(0);
  });
});
