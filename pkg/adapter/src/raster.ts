// Shared low-level pixel analysis: binarization plus ruling-line
// separation, so text recognition and table detection work from the
// same notion of what is a line and what is a glyph.

import { PageBitmap } from "./types.js";

export const INK_THRESHOLD = 128;
/** Shortest horizontal ink run treated as a ruling line, px. */
export const MIN_H_RULE = 60;
/** Shortest vertical ink run treated as a ruling line, px. */
export const MIN_V_RULE = 30;

export interface HSegment {
  y: number;
  x1: number;
  /** Exclusive. */
  x2: number;
}

export interface RasterAnalysis {
  /** 1 where the pixel is ink. */
  ink: Uint8Array;
  /** Ink with ruling-line pixels removed; what glyphs are made of. */
  textInk: Uint8Array;
  hSegments: HSegment[];
}

export function binarize(page: PageBitmap): Uint8Array {
  const ink = new Uint8Array(page.gray.length);
  for (let i = 0; i < ink.length; i++) ink[i] = page.gray[i] < INK_THRESHOLD ? 1 : 0;
  return ink;
}

export function analyze(page: PageBitmap): RasterAnalysis {
  const { width, height } = page;
  const ink = binarize(page);
  const mask = new Uint8Array(ink.length);
  const hSegments: HSegment[] = [];

  for (let y = 0; y < height; y++) {
    const row = y * width;
    let start = -1;
    for (let x = 0; x <= width; x++) {
      const on = x < width && ink[row + x] === 1;
      if (on && start < 0) start = x;
      if (!on && start >= 0) {
        if (x - start >= MIN_H_RULE) {
          hSegments.push({ y, x1: start, x2: x });
          mask.fill(1, row + start, row + x);
        }
        start = -1;
      }
    }
  }

  for (let x = 0; x < width; x++) {
    let start = -1;
    for (let y = 0; y <= height; y++) {
      const on = y < height && ink[y * width + x] === 1;
      if (on && start < 0) start = y;
      if (!on && start >= 0) {
        if (y - start >= MIN_V_RULE) {
          for (let yy = start; yy < y; yy++) mask[yy * width + x] = 1;
        }
        start = -1;
      }
    }
  }

  const textInk = new Uint8Array(ink.length);
  for (let i = 0; i < ink.length; i++) textInk[i] = ink[i] === 1 && mask[i] === 0 ? 1 : 0;
  return { ink, textInk, hSegments };
}
