// Regenerates the shipped sample page images in fixtures/.

import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { writePng } from "../image.js";
import { SAMPLE_BUILDERS } from "../render.js";

const dir = fileURLToPath(new URL("../../fixtures/", import.meta.url));
SAMPLE_BUILDERS.forEach((build, i) => {
  const out = join(dir, `sample-${i + 1}.png`);
  writePng(build().page, out);
  console.log(`wrote ${out}`);
});
