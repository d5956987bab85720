// Shared types for the page-image exporter.

/** Pixel box as [x1, y1, x2, y2], top-left origin, y growing downward. */
export type Box = [number, number, number, number];

/** One decoded page image, 8-bit grayscale, row-major. */
export interface PageBitmap {
  width: number;
  height: number;
  gray: Uint8Array;
}

/** A recognized word with its tight pixel box. */
export interface RawWord {
  text: string;
  box: Box;
  confidence: number;
}

/** One raw model output, labelled in the model's own vocabulary. */
export interface RawDetection {
  label: string;
  box: Box;
  score: number;
  /** Set by detection models on regions that structure recognition should visit. */
  table?: boolean;
}

export interface DetectionModel {
  id: string;
  detect(page: PageBitmap, words: RawWord[]): RawDetection[];
}

export interface StructureModel {
  id: string;
  recognize(page: PageBitmap, table: Box): RawDetection[];
}

export interface OcrEngine {
  id: string;
  recognize(page: PageBitmap): RawWord[];
}

/** Upstream-vocabulary to ingestion-taxonomy mapping, user editable. */
export interface LabelMap {
  detection: Record<string, string>;
  structure: Record<string, string>;
}

export interface StatementSummary {
  openingCents: number;
  closingCents: number;
  currency?: string;
}

export interface AdapterConfig {
  detectionModel: string;
  structureModel: string;
  ocrEngine: string;
  /** Confidence floor; detections scoring below it are dropped. Must be in [0, 1]. */
  minScore: number;
  outputPath: string;
  /** Defaults to the bundled config/labelmap.json. */
  labelMap?: LabelMap;
  pageDpi?: number;
  /** Optional account balances to embed; the detector itself never knows them. */
  summary?: StatementSummary;
}

export interface DetectionRecord {
  page: number;
  label: string;
  score: number;
  box: Box;
}

export interface WordRecord {
  page: number;
  text: string;
  box: Box;
  confidence: number;
}

export interface PageRecord {
  index: number;
  width: number;
  height: number;
  dpi?: number;
}

/** The ingestion-file shape the spreading engine consumes. */
export interface IngestionFile {
  pages: PageRecord[];
  tdc: DetectionRecord[];
  tsr: DetectionRecord[];
  ocr: WordRecord[];
  summary?: { opening_cents: number; closing_cents: number; currency: string };
}

export class AdapterError extends Error {}
