import { inflateSync } from "node:zlib";
import { describe, expect, it } from "vitest";

import { adler32, crc32, encodeGrayPng, toBase64 } from "../src/png.js";

function readChunks(png: Uint8Array): { type: string; body: Uint8Array }[] {
  const chunks: { type: string; body: Uint8Array }[] = [];
  let at = 8;
  const view = new DataView(png.buffer, png.byteOffset, png.byteLength);
  while (at < png.length) {
    const len = view.getUint32(at);
    const type = new TextDecoder().decode(png.subarray(at + 4, at + 8));
    const body = png.subarray(at + 8, at + 8 + len);
    const stated = view.getUint32(at + 8 + len);
    const actual = crc32(png.subarray(at + 4, at + 8 + len));
    expect(stated).toBe(actual);
    chunks.push({ type, body });
    at += 12 + len;
  }
  return chunks;
}

describe("encodeGrayPng", () => {
  it("emits a structurally valid grayscale PNG", () => {
    const pixels = new Uint8Array(100 * 100).fill(255);
    pixels[0] = 0;
    const png = encodeGrayPng(pixels, 100, 100);
    expect(Array.from(png.subarray(0, 8))).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    const chunks = readChunks(png);
    expect(chunks.map((c) => c.type)).toEqual(["IHDR", "IDAT", "IEND"]);
    const ihdr = chunks[0].body;
    const view = new DataView(ihdr.buffer, ihdr.byteOffset);
    expect(view.getUint32(0)).toBe(100);
    expect(view.getUint32(4)).toBe(100);
    expect(ihdr[8]).toBe(8); // bit depth
    expect(ihdr[9]).toBe(0); // grayscale
  });

  it("zlib payload decodes back to the scanlines", () => {
    const pixels = new Uint8Array(16).map((_, i) => i * 16);
    const png = encodeGrayPng(pixels, 4, 4);
    const idat = readChunks(png).find((c) => c.type === "IDAT")!.body;
    const raw = inflateSync(Buffer.from(idat));
    expect(raw.length).toBe(4 * 5); // filter byte + 4 pixels per row
    for (let y = 0; y < 4; y++) {
      expect(raw[y * 5]).toBe(0);
      for (let x = 0; x < 4; x++) {
        expect(raw[y * 5 + 1 + x]).toBe(pixels[y * 4 + x]);
      }
    }
  });

  it("same pixels give identical bytes", () => {
    const pixels = new Uint8Array(100 * 100).map((_, i) => (i * 7) % 256);
    const a = encodeGrayPng(pixels, 100, 100);
    const b = encodeGrayPng(pixels, 100, 100);
    expect(Buffer.from(a).equals(Buffer.from(b))).toBe(true);
  });

  it("rejects mismatched dimensions", () => {
    expect(() => encodeGrayPng(new Uint8Array(10), 4, 4)).toThrow();
  });
});

describe("checksums", () => {
  it("crc32 matches the known check value", () => {
    expect(crc32(new TextEncoder().encode("123456789"))).toBe(0xcbf43926);
  });

  it("adler32 matches the known check value", () => {
    expect(adler32(new TextEncoder().encode("Wikipedia"))).toBe(0x11e60398);
  });
});

describe("toBase64", () => {
  it("round-trips through node Buffer", () => {
    const bytes = new Uint8Array([0, 1, 2, 250, 251, 252]);
    expect(Buffer.from(toBase64(bytes), "base64").equals(Buffer.from(bytes))).toBe(true);
  });
});
