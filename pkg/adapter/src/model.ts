// Built-in table detection and structure recognition for single-column
// statement layouts: ruling-line analysis locates bordered tables, the
// caption text above each one decides its raw category, and in-table
// rules yield bands (header, rows, spanning sections) and columns.

import { analyze, binarize } from "./raster.js";
import {
  AdapterError,
  Box,
  DetectionModel,
  PageBitmap,
  RawDetection,
  RawWord,
  StructureModel,
} from "./types.js";

/** Stacked rules further apart than this start a new table. */
const MAX_RULE_GAP = 70;
const MIN_X_OVERLAP = 0.8;
/** How far above a table top caption words are searched for, px. */
const CAPTION_RANGE = 70;
/** Fraction of the table width a pixel row must ink to count as a rule. */
const RULE_ROW_FRACTION = 0.9;

const CATEGORY_RULES: [RegExp, string][] = [
  [/DEPOSIT/, "deposits table"],
  [/WITHDRAWAL/, "withdrawals table"],
  [/CHECK/, "check register"],
  [/ACTIVITY|TRANSACTION/, "combined activity table"],
  [/BALANCE/, "running balance table"],
  [/CREDIT/, "deposits table"],
  [/DEBIT/, "withdrawals table"],
];

interface Rule {
  y0: number;
  /** Inclusive. */
  y1: number;
  x1: number;
  /** Exclusive. */
  x2: number;
}

function overlapRatio(a1: number, a2: number, b1: number, b2: number): number {
  const inter = Math.min(a2, b2) - Math.max(a1, b1);
  if (inter <= 0) return 0;
  return inter / Math.min(a2 - a1, b2 - b1);
}

function mergeRuleRows(segs: { y: number; x1: number; x2: number }[]): Rule[] {
  const rules: Rule[] = [];
  for (const seg of segs) {
    const open = rules.find(
      (r) => seg.y === r.y1 + 1 && overlapRatio(r.x1, r.x2, seg.x1, seg.x2) >= 0.5,
    );
    if (open) {
      open.y1 = seg.y;
      open.x1 = Math.min(open.x1, seg.x1);
      open.x2 = Math.max(open.x2, seg.x2);
    } else {
      rules.push({ y0: seg.y, y1: seg.y, x1: seg.x1, x2: seg.x2 });
    }
  }
  return rules;
}

function borderInkFraction(page: PageBitmap, ink: Uint8Array, box: Box): number {
  const [x1, y1, x2, y2] = box;
  let total = 0;
  let hit = 0;
  for (let x = x1; x < x2; x++) {
    for (const y of [y1, y2 - 1]) {
      total++;
      if (ink[y * page.width + x] === 1) hit++;
    }
  }
  for (let y = y1; y < y2; y++) {
    for (const x of [x1, x2 - 1]) {
      total++;
      if (ink[y * page.width + x] === 1) hit++;
    }
  }
  return total === 0 ? 0 : hit / total;
}

function unionBox(boxes: Box[]): Box {
  return [
    Math.min(...boxes.map((b) => b[0])),
    Math.min(...boxes.map((b) => b[1])),
    Math.max(...boxes.map((b) => b[2])),
    Math.max(...boxes.map((b) => b[3])),
  ];
}

function center(box: Box): [number, number] {
  return [(box[0] + box[2]) / 2, (box[1] + box[3]) / 2];
}

function classifyCaption(text: string): string {
  for (const [pattern, label] of CATEGORY_RULES) {
    if (pattern.test(text)) return label;
  }
  return "uncategorized table";
}

function detectLayout(page: PageBitmap, words: RawWord[]): RawDetection[] {
  const { ink, hSegments } = analyze(page);
  const rules = mergeRuleRows(hSegments).sort((a, b) => a.y0 - b.y0);

  const groups: Rule[][] = [];
  for (const rule of rules) {
    const current = groups[groups.length - 1];
    const last = current?.[current.length - 1];
    const gx1 = current ? Math.min(...current.map((r) => r.x1)) : 0;
    const gx2 = current ? Math.max(...current.map((r) => r.x2)) : 0;
    if (
      last &&
      rule.y0 - last.y1 <= MAX_RULE_GAP &&
      overlapRatio(gx1, gx2, rule.x1, rule.x2) >= MIN_X_OVERLAP
    ) {
      current.push(rule);
    } else {
      groups.push([rule]);
    }
  }

  const tables: Box[] = groups
    .filter((g) => g.length >= 2)
    .map((g) => [
      Math.min(...g.map((r) => r.x1)),
      g[0].y0,
      Math.max(...g.map((r) => r.x2)),
      g[g.length - 1].y1 + 1,
    ]);

  const detections: RawDetection[] = [];
  const captionWords = new Set<RawWord>();
  for (const box of tables) {
    const caption = words.filter((w) => {
      const [cx, cy] = center(w.box);
      return cx >= box[0] && cx <= box[2] && cy >= box[1] - CAPTION_RANGE && cy < box[1];
    });
    caption.forEach((w) => captionWords.add(w));
    const text = caption
      .slice()
      .sort((a, b) => a.box[0] - b.box[0])
      .map((w) => w.text)
      .join(" ");
    detections.push({
      label: caption.length ? classifyCaption(text) : "uncategorized table",
      box,
      score: borderInkFraction(page, ink, box),
      table: true,
    });
    if (caption.length) {
      detections.push({
        label: "caption",
        box: unionBox(caption.map((w) => w.box)),
        score: caption.reduce((a, w) => a + w.confidence, 0) / caption.length,
      });
    }
  }

  const pageTop = tables.length ? Math.min(...tables.map((b) => b[1])) : page.height;
  const headerWords = words.filter((w) => !captionWords.has(w) && w.box[3] <= pageTop);
  if (headerWords.length) {
    detections.push({
      label: "page header",
      box: unionBox(headerWords.map((w) => w.box)),
      score: headerWords.reduce((a, w) => a + w.confidence, 0) / headerWords.length,
    });
  }

  return detections.sort((a, b) => a.box[1] - b.box[1] || a.box[0] - b.box[0]);
}

function rowInkFraction(page: PageBitmap, ink: Uint8Array, y: number, x1: number, x2: number): number {
  let hit = 0;
  const row = y * page.width;
  for (let x = x1; x < x2; x++) {
    if (ink[row + x] === 1) hit++;
  }
  return hit / Math.max(1, x2 - x1);
}

function recognizeStructure(page: PageBitmap, table: Box): RawDetection[] {
  const ink = binarize(page);
  const [tx1, ty1, tx2, ty2] = table;

  const ruleRows: number[] = [];
  for (let y = ty1; y < ty2; y++) {
    if (rowInkFraction(page, ink, y, tx1, tx2) >= RULE_ROW_FRACTION) ruleRows.push(y);
  }
  const rules: { y0: number; y1: number }[] = [];
  for (const y of ruleRows) {
    const open = rules[rules.length - 1];
    if (open && y === open.y1 + 1) open.y1 = y;
    else rules.push({ y0: y, y1: y });
  }

  const tableScore = borderInkFraction(page, ink, table);
  const out: RawDetection[] = [{ label: "table", box: table, score: tableScore, table: false }];
  if (rules.length < 2) return out;

  interface Band {
    y0: number;
    y1: number;
    header: boolean;
    spanning: boolean;
    score: number;
  }
  const bands: Band[] = [];
  for (let i = 0; i + 1 < rules.length; i++) {
    const y0 = rules[i].y1 + 1;
    const y1 = rules[i + 1].y0;
    if (y1 <= y0) continue;
    let shaded = 0;
    for (let y = y0; y < y1; y++) {
      const row = y * page.width;
      for (let x = tx1; x < tx2; x++) {
        const g = page.gray[row + x];
        if (g >= 150 && g <= 245) shaded++;
      }
    }
    const area = (y1 - y0) * (tx2 - tx1);
    const score =
      (rowInkFraction(page, ink, rules[i].y1, tx1, tx2) +
        rowInkFraction(page, ink, rules[i + 1].y0, tx1, tx2)) /
      2;
    bands.push({ y0, y1, header: shaded / area >= 0.3, spanning: false, score });
  }

  // A column separator inks every interior row of the bands it crosses;
  // glyph strokes never do, they stay clear of the bounding rules.
  const coveredBy: Map<number, Set<number>> = new Map();
  for (let x = tx1 + 4; x < tx2 - 4; x++) {
    for (let b = 0; b < bands.length; b++) {
      let full = true;
      for (let y = bands[b].y0; y < bands[b].y1 && full; y++) {
        if (ink[y * page.width + x] !== 1) full = false;
      }
      if (full) {
        if (!coveredBy.has(x)) coveredBy.set(x, new Set());
        coveredBy.get(x)!.add(b);
      }
    }
  }
  const xs = [...coveredBy.keys()].sort((a, b) => a - b);
  const separators: { x0: number; x1: number; bands: Set<number> }[] = [];
  for (const x of xs) {
    const open = separators[separators.length - 1];
    if (open && x === open.x1 + 1) {
      open.x1 = x;
      coveredBy.get(x)!.forEach((b) => open.bands.add(b));
    } else {
      separators.push({ x0: x, x1: x, bands: new Set(coveredBy.get(x)) });
    }
  }

  if (separators.length) {
    for (let b = 0; b < bands.length; b++) {
      if (!bands[b].header && !separators.some((s) => s.bands.has(b))) {
        bands[b].spanning = true;
      }
    }
  }

  for (const band of bands) {
    out.push({
      label: band.header ? "table column header" : band.spanning ? "table spanning cell" : "table row",
      box: [tx1, band.y0, tx2, band.y1],
      score: band.score,
    });
  }

  const plain = bands.filter((b) => !b.spanning).length;
  const good = separators.filter((s) => s.bands.size >= plain / 2);
  const bounds = [tx1, ...good.map((s) => (s.x0 + s.x1 + 1) / 2), tx2];
  for (let c = 0; c + 1 < bounds.length; c++) {
    const left = c === 0 ? 1 : good[c - 1].bands.size / Math.max(1, plain);
    const right = c + 1 === bounds.length - 1 ? 1 : good[c].bands.size / Math.max(1, plain);
    out.push({
      label: "table column",
      box: [bounds[c], ty1, bounds[c + 1], ty2],
      score: Math.min(1, (left + right) / 2),
    });
  }

  return out;
}

const DETECTION_MODELS = new Map<string, () => DetectionModel>();
const STRUCTURE_MODELS = new Map<string, () => StructureModel>();

export function registerDetectionModel(id: string, factory: () => DetectionModel): void {
  DETECTION_MODELS.set(id, factory);
}

export function registerStructureModel(id: string, factory: () => StructureModel): void {
  STRUCTURE_MODELS.set(id, factory);
}

export function loadDetectionModel(id: string): DetectionModel {
  const factory = DETECTION_MODELS.get(id);
  if (!factory) {
    const known = [...DETECTION_MODELS.keys()].sort().join(", ");
    throw new AdapterError(`cannot load detection model "${id}" (available: ${known})`);
  }
  return factory();
}

export function loadStructureModel(id: string): StructureModel {
  const factory = STRUCTURE_MODELS.get(id);
  if (!factory) {
    const known = [...STRUCTURE_MODELS.keys()].sort().join(", ");
    throw new AdapterError(`cannot load structure model "${id}" (available: ${known})`);
  }
  return factory();
}

registerDetectionModel("rules-table-det-v1", () => ({
  id: "rules-table-det-v1",
  detect: detectLayout,
}));

registerStructureModel("rules-table-struct-v1", () => ({
  id: "rules-table-struct-v1",
  recognize: recognizeStructure,
}));
