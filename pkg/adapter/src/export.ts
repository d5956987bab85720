// Orchestration: run OCR plus the detection and structure models over
// page images, map every raw label onto the ingestion taxonomies, apply
// the confidence floor, and write the ingestion JSON.

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";
import { loadPageImage } from "./image.js";
import { loadLabelMap, mapLabel, validateLabelMap } from "./labels.js";
import { loadDetectionModel, loadStructureModel } from "./model.js";
import { loadOcrEngine } from "./ocr.js";
import {
  AdapterConfig,
  AdapterError,
  Box,
  DetectionRecord,
  IngestionFile,
  WordRecord,
} from "./types.js";

function round4(v: number): number {
  return Math.round(Math.min(1, Math.max(0, v)) * 10000) / 10000;
}

function intBox(box: Box, width: number, height: number): Box {
  const clamp = (v: number, hi: number) => Math.min(hi, Math.max(0, Math.round(v)));
  return [clamp(box[0], width), clamp(box[1], height), clamp(box[2], width), clamp(box[3], height)];
}

export function validateConfig(cfg: AdapterConfig): void {
  if (!Number.isFinite(cfg.minScore) || cfg.minScore < 0 || cfg.minScore > 1) {
    throw new AdapterError(`confidence floor ${cfg.minScore} outside [0, 1]`);
  }
  if (!cfg.outputPath) {
    throw new AdapterError("output path must not be empty");
  }
  if (cfg.pageDpi !== undefined && !(cfg.pageDpi > 0)) {
    throw new AdapterError(`page dpi ${cfg.pageDpi} must be positive`);
  }
  if (cfg.summary) {
    for (const v of [cfg.summary.openingCents, cfg.summary.closingCents]) {
      if (!Number.isInteger(v)) {
        throw new AdapterError(`summary balances must be integer cents, got ${v}`);
      }
    }
  }
  if (cfg.labelMap) validateLabelMap(cfg.labelMap);
}

function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeys);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = sortKeys((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export function serializeIngestion(file: IngestionFile): string {
  return JSON.stringify(sortKeys(file), null, 2) + "\n";
}

function recordKey(r: DetectionRecord): string {
  return `${r.page}|${r.label}|${r.box.join(",")}|${r.score}`;
}

/**
 * Run the configured models over the page images (one ingestion page per
 * path, in order) and write the result to cfg.outputPath.
 */
export function exportDocument(imagePaths: string[], cfg: AdapterConfig): IngestionFile {
  validateConfig(cfg);
  if (imagePaths.length === 0) {
    throw new AdapterError("no page images given");
  }
  const labelMap = cfg.labelMap ?? loadLabelMap();
  const detector = loadDetectionModel(cfg.detectionModel);
  const structurer = loadStructureModel(cfg.structureModel);
  const ocrEngine = loadOcrEngine(cfg.ocrEngine);

  const file: IngestionFile = { pages: [], tdc: [], tsr: [], ocr: [] };
  for (const [index, path] of imagePaths.entries()) {
    const page = loadPageImage(path);
    file.pages.push({
      index,
      width: page.width,
      height: page.height,
      ...(cfg.pageDpi !== undefined ? { dpi: cfg.pageDpi } : {}),
    });

    const words = ocrEngine.recognize(page);
    for (const w of words) {
      file.ocr.push({
        page: index,
        text: w.text,
        box: intBox(w.box, page.width, page.height),
        confidence: round4(w.confidence),
      });
    }

    for (const raw of detector.detect(page, words)) {
      const label = mapLabel(raw.label, "detection", labelMap);
      if (raw.score < cfg.minScore) continue;
      file.tdc.push({
        page: index,
        label,
        score: round4(raw.score),
        box: intBox(raw.box, page.width, page.height),
      });
      if (!raw.table) continue;
      for (const part of structurer.recognize(page, raw.box)) {
        const structLabel = mapLabel(part.label, "structure", labelMap);
        if (part.score < cfg.minScore) continue;
        file.tsr.push({
          page: index,
          label: structLabel,
          score: round4(part.score),
          box: intBox(part.box, page.width, page.height),
        });
      }
    }
  }

  const byPosition = (a: DetectionRecord, b: DetectionRecord) =>
    a.page - b.page ||
    a.box[1] - b.box[1] ||
    a.box[0] - b.box[0] ||
    a.label.localeCompare(b.label);
  for (const kind of ["tdc", "tsr"] as const) {
    const seen = new Set<string>();
    file[kind] = file[kind]
      .filter((r) => {
        const key = recordKey(r);
        if (seen.has(key)) return false;
        seen.add(key);
        return true;
      })
      .sort(byPosition);
  }
  file.ocr.sort(
    (a: WordRecord, b: WordRecord) =>
      a.page - b.page || a.box[1] - b.box[1] || a.box[0] - b.box[0] || a.text.localeCompare(b.text),
  );

  if (cfg.summary) {
    file.summary = {
      opening_cents: cfg.summary.openingCents,
      closing_cents: cfg.summary.closingCents,
      currency: cfg.summary.currency ?? "USD",
    };
  }

  mkdirSync(dirname(cfg.outputPath), { recursive: true });
  writeFileSync(cfg.outputPath, serializeIngestion(file), "utf-8");
  return file;
}
