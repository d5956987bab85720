// Ingestion-file label taxonomies and the editable upstream mapping.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { AdapterError, LabelMap } from "./types.js";

/** Page-region category labels accepted by the ingestion parser. */
export const TDC_LABELS = [
  "Credit",
  "Debit",
  "CreditDebit",
  "Check",
  "Txn_bal",
  "Txn_amt_bal",
  "Txn_check_bal",
  "Other",
  "Check_image",
  "Table_caption",
  "Table_header",
] as const;

/** Table-structure labels accepted by the ingestion parser. */
export const TSR_LABELS = [
  "Table",
  "TableRow",
  "TableColumn",
  "TableColumnHeader",
  "TableSpanningRow",
] as const;

/** Category labels that mark an actual table region (not caption/header art). */
export const TABLE_REGION_LABELS = new Set([
  "Credit",
  "Debit",
  "CreditDebit",
  "Check",
  "Txn_bal",
  "Txn_amt_bal",
  "Txn_check_bal",
  "Other",
]);

const DEFAULT_MAP_URL = new URL("../config/labelmap.json", import.meta.url);

export function defaultLabelMapPath(): string {
  return fileURLToPath(DEFAULT_MAP_URL);
}

function checkSection(
  section: Record<string, string>,
  name: "detection" | "structure",
  allowed: readonly string[],
): void {
  for (const [raw, target] of Object.entries(section)) {
    if (!allowed.includes(target)) {
      throw new AdapterError(
        `label map: ${name} entry "${raw}" targets "${target}", ` +
          `which is not an ingestion ${name === "detection" ? "category" : "structure"} label`,
      );
    }
  }
}

/** Validate a parsed label map; throws when a target is outside the taxonomies. */
export function validateLabelMap(map: LabelMap): LabelMap {
  if (typeof map !== "object" || map === null || !map.detection || !map.structure) {
    throw new AdapterError('label map must have "detection" and "structure" sections');
  }
  checkSection(map.detection, "detection", TDC_LABELS);
  checkSection(map.structure, "structure", TSR_LABELS);
  return map;
}

export function loadLabelMap(path?: string): LabelMap {
  const file = path ?? defaultLabelMapPath();
  let raw: string;
  try {
    raw = readFileSync(file, "utf-8");
  } catch (err) {
    throw new AdapterError(`cannot read label map ${file}: ${(err as Error).message}`);
  }
  let parsed: LabelMap;
  try {
    parsed = JSON.parse(raw);
  } catch (err) {
    throw new AdapterError(`label map ${file} is not valid JSON: ${(err as Error).message}`);
  }
  return validateLabelMap(parsed);
}

/** Map one upstream label; unmappable labels must fail loudly, never pass through. */
export function mapLabel(
  raw: string,
  section: "detection" | "structure",
  map: LabelMap,
): string {
  const target = map[section][raw];
  if (target === undefined) {
    throw new AdapterError(
      `unmappable ${section} label "${raw}"; add it to the label map`,
    );
  }
  return target;
}
