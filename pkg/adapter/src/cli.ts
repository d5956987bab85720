// Command-line front end: page images in, ingestion JSON out.

import { parseArgs } from "node:util";
import { exportDocument } from "./export.js";
import { loadLabelMap } from "./labels.js";
import { AdapterConfig, AdapterError } from "./types.js";

const USAGE = `usage: bankspread-adapter --out FILE [options] PAGE.png [PAGE2.png ...]

Runs table detection, structure recognition, and OCR over statement page
images (PNG/JPEG, one ingestion page per image, in argument order) and
writes the ingestion JSON the spreading engine consumes.

options:
  -o, --out FILE           output ingestion JSON path (required)
      --detection-model ID detection model (default rules-table-det-v1)
      --structure-model ID structure model (default rules-table-struct-v1)
      --ocr ID             OCR engine (default glyph-matcher-v1)
      --min-score X        confidence floor in [0, 1] (default 0.5)
      --label-map FILE     upstream label mapping (default bundled config)
      --dpi N              dpi to record on every page entry
      --opening CENTS      opening balance; requires --closing
      --closing CENTS      closing balance; requires --opening
      --currency CODE      summary currency (default USD)
  -h, --help               show this message
`;

export function runCli(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string", short: "o" },
        "detection-model": { type: "string", default: "rules-table-det-v1" },
        "structure-model": { type: "string", default: "rules-table-struct-v1" },
        ocr: { type: "string", default: "glyph-matcher-v1" },
        "min-score": { type: "string", default: "0.5" },
        "label-map": { type: "string" },
        dpi: { type: "string" },
        opening: { type: "string" },
        closing: { type: "string" },
        currency: { type: "string", default: "USD" },
        help: { type: "boolean", short: "h", default: false },
      },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }

  if (args.values.help) {
    console.log(USAGE);
    return 0;
  }
  const images = args.positionals;
  if (!args.values.out || images.length === 0) {
    console.error(USAGE);
    return 1;
  }

  try {
    const minScore = Number(args.values["min-score"]);
    if (Number.isNaN(minScore)) {
      throw new AdapterError(`--min-score ${args.values["min-score"]} is not a number`);
    }
    const cfg: AdapterConfig = {
      detectionModel: args.values["detection-model"]!,
      structureModel: args.values["structure-model"]!,
      ocrEngine: args.values.ocr!,
      minScore,
      outputPath: args.values.out,
    };
    if (args.values["label-map"]) cfg.labelMap = loadLabelMap(args.values["label-map"]);
    if (args.values.dpi !== undefined) {
      cfg.pageDpi = Number(args.values.dpi);
    }
    const opening = args.values.opening;
    const closing = args.values.closing;
    if ((opening === undefined) !== (closing === undefined)) {
      throw new AdapterError("--opening and --closing must be given together");
    }
    if (opening !== undefined && closing !== undefined) {
      const parse = (flag: string, v: string) => {
        const n = Number(v);
        if (!Number.isInteger(n)) throw new AdapterError(`--${flag} ${v} is not integer cents`);
        return n;
      };
      cfg.summary = {
        openingCents: parse("opening", opening),
        closingCents: parse("closing", closing),
        currency: args.values.currency,
      };
    }

    const file = exportDocument(images, cfg);
    console.log(
      `wrote ${file.pages.length} page(s), ${file.tdc.length} category, ` +
        `${file.tsr.length} structure, ${file.ocr.length} words -> ${cfg.outputPath}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof AdapterError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}
