// Template-matching OCR over the shared glyph table. Ruling lines are
// masked out, text lines found by projection, and each glyph cell
// compared bit-exactly against the font, trying a few sub-pitch
// alignments because glyphs like "1" or "," start with a blank column.

import { GLYPH_HEIGHT, GLYPH_PITCH, GLYPH_WIDTH, charForSignature } from "./font.js";
import { analyze } from "./raster.js";
import { AdapterError, OcrEngine, PageBitmap, RawWord } from "./types.js";

interface Band {
  y0: number;
  /** Inclusive. */
  y1: number;
}

interface Cluster {
  x0: number;
  /** Inclusive. */
  x1: number;
}

function findBands(page: PageBitmap, textInk: Uint8Array): Band[] {
  const bands: Band[] = [];
  let start = -1;
  for (let y = 0; y <= page.height; y++) {
    let any = false;
    if (y < page.height) {
      const row = y * page.width;
      for (let x = 0; x < page.width; x++) {
        if (textInk[row + x] === 1) {
          any = true;
          break;
        }
      }
    }
    if (any && start < 0) start = y;
    if (!any && start >= 0) {
      bands.push({ y0: start, y1: y - 1 });
      start = -1;
    }
  }
  return bands;
}

function findClusters(
  page: PageBitmap,
  textInk: Uint8Array,
  band: Band,
  maxGap: number,
): Cluster[] {
  const hasInk = new Array<boolean>(page.width).fill(false);
  for (let y = band.y0; y <= band.y1; y++) {
    const row = y * page.width;
    for (let x = 0; x < page.width; x++) {
      if (textInk[row + x] === 1) hasInk[x] = true;
    }
  }
  const clusters: Cluster[] = [];
  let start = -1;
  let last = -1;
  for (let x = 0; x < page.width; x++) {
    if (!hasInk[x]) continue;
    if (start < 0) {
      start = x;
    } else if (x - last > maxGap) {
      clusters.push({ x0: start, x1: last });
      start = x;
    }
    last = x;
  }
  if (start >= 0) clusters.push({ x0: start, x1: last });
  return clusters;
}

function cellSignature(
  page: PageBitmap,
  textInk: Uint8Array,
  bx: number,
  by: number,
  scale: number,
): string {
  let sig = "";
  for (let r = 0; r < GLYPH_HEIGHT; r++) {
    for (let c = 0; c < GLYPH_WIDTH; c++) {
      let on = false;
      for (let y = by + r * scale; y < by + (r + 1) * scale && !on; y++) {
        if (y < 0 || y >= page.height) continue;
        const row = y * page.width;
        for (let x = bx + c * scale; x < bx + (c + 1) * scale; x++) {
          if (x >= 0 && x < page.width && textInk[row + x] === 1) {
            on = true;
            break;
          }
        }
      }
      sig += on ? "1" : "0";
    }
  }
  return sig;
}

function matchWord(
  page: PageBitmap,
  textInk: Uint8Array,
  band: Band,
  cluster: Cluster,
  scale: number,
): RawWord | null {
  let best: { chars: string[]; matched: number; offset: number } | null = null;
  for (let k = 0; k <= 2; k++) {
    const startX = cluster.x0 - k * scale;
    const chars: string[] = [];
    let matched = 0;
    for (let bx = startX; bx <= cluster.x1; bx += GLYPH_PITCH * scale) {
      const ch = charForSignature(cellSignature(page, textInk, bx, band.y0, scale));
      if (ch !== undefined) matched++;
      chars.push(ch ?? "?");
    }
    if (best === null || matched > best.matched) best = { chars, matched, offset: k };
  }
  if (!best || best.chars.length === 0) return null;
  return {
    text: best.chars.join(""),
    box: [cluster.x0, band.y0, cluster.x1 + 1, band.y1 + 1],
    confidence: best.matched / best.chars.length,
  };
}

/** Recognize every word on the page, reading order (top to bottom, left to right). */
export function recognizeGlyphs(page: PageBitmap): RawWord[] {
  const { textInk } = analyze(page);
  const words: RawWord[] = [];
  for (const band of findBands(page, textInk)) {
    const height = band.y1 - band.y0 + 1;
    const scale = Math.max(1, Math.round(height / GLYPH_HEIGHT));
    for (const cluster of findClusters(page, textInk, band, 5 * scale)) {
      const word = matchWord(page, textInk, band, cluster, scale);
      if (word) words.push(word);
    }
  }
  return words;
}

const ENGINES = new Map<string, () => OcrEngine>();

export function registerOcrEngine(id: string, factory: () => OcrEngine): void {
  ENGINES.set(id, factory);
}

export function loadOcrEngine(id: string): OcrEngine {
  const factory = ENGINES.get(id);
  if (!factory) {
    const known = [...ENGINES.keys()].sort().join(", ");
    throw new AdapterError(`cannot load OCR engine "${id}" (available: ${known})`);
  }
  return factory();
}

registerOcrEngine("glyph-matcher-v1", () => ({
  id: "glyph-matcher-v1",
  recognize: recognizeGlyphs,
}));
