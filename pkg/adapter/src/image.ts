// PNG/JPEG loading and PNG saving for page bitmaps.

import { readFileSync, writeFileSync } from "node:fs";
import { extname } from "node:path";
import { PNG } from "pngjs";
import jpeg from "jpeg-js";
import { AdapterError, PageBitmap } from "./types.js";

function rgbaToGray(data: Uint8Array, width: number, height: number): PageBitmap {
  const gray = new Uint8Array(width * height);
  for (let i = 0; i < gray.length; i++) {
    const o = i * 4;
    gray[i] = Math.round(0.299 * data[o] + 0.587 * data[o + 1] + 0.114 * data[o + 2]);
  }
  return { width, height, gray };
}

/** Decode a PNG or JPEG page image to 8-bit grayscale. */
export function loadPageImage(path: string): PageBitmap {
  const ext = extname(path).toLowerCase();
  if (ext !== ".png" && ext !== ".jpg" && ext !== ".jpeg") {
    throw new AdapterError(`unsupported image format "${ext || path}" (PNG/JPEG only)`);
  }
  let buf: Buffer;
  try {
    buf = readFileSync(path);
  } catch (err) {
    throw new AdapterError(`cannot read image ${path}: ${(err as Error).message}`);
  }
  try {
    if (ext === ".png") {
      const png = PNG.sync.read(buf);
      return rgbaToGray(png.data, png.width, png.height);
    }
    const img = jpeg.decode(buf, { useTArray: true });
    return rgbaToGray(img.data, img.width, img.height);
  } catch (err) {
    if (err instanceof AdapterError) throw err;
    throw new AdapterError(`cannot decode image ${path}: ${(err as Error).message}`);
  }
}

/** Write a grayscale bitmap as an RGBA PNG. */
export function writePng(bitmap: PageBitmap, path: string): void {
  const png = new PNG({ width: bitmap.width, height: bitmap.height });
  for (let i = 0; i < bitmap.gray.length; i++) {
    const o = i * 4;
    png.data[o] = bitmap.gray[i];
    png.data[o + 1] = bitmap.gray[i];
    png.data[o + 2] = bitmap.gray[i];
    png.data[o + 3] = 255;
  }
  writeFileSync(path, PNG.sync.write(png));
}

/** Encode a grayscale bitmap as JPEG bytes (fixture/tooling helper). */
export function encodeJpeg(bitmap: PageBitmap, quality = 95): Buffer {
  const rgba = Buffer.alloc(bitmap.width * bitmap.height * 4);
  for (let i = 0; i < bitmap.gray.length; i++) {
    const o = i * 4;
    rgba[o] = bitmap.gray[i];
    rgba[o + 1] = bitmap.gray[i];
    rgba[o + 2] = bitmap.gray[i];
    rgba[o + 3] = 255;
  }
  return jpeg.encode({ data: rgba, width: bitmap.width, height: bitmap.height }, quality).data;
}
