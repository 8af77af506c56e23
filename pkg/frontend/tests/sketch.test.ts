import { describe, expect, it } from "vitest";

import { SketchBuffer } from "../src/sketch.js";

describe("SketchBuffer", () => {
  it("empty canvas exports all background", () => {
    const sk = new SketchBuffer(32);
    expect(sk.isEmpty()).toBe(true);
    expect([...sk.export()].every((p) => p === 0)).toBe(true);
  });

  it("export size equals model resolution", () => {
    const sk = new SketchBuffer(32);
    expect(sk.export()).toHaveLength(32 * 32);
  });

  it("draw, erase, and clear edit the buffer", () => {
    const sk = new SketchBuffer(16);
    sk.stamp(8, 8, 1, 1);
    expect(sk.isEmpty()).toBe(false);
    sk.stamp(8, 8, 1, 0);
    expect(sk.isEmpty()).toBe(true);
    sk.stamp(0, 0, 2, 1); // brush clipped at the border, no crash
    sk.clear();
    expect(sk.isEmpty()).toBe(true);
  });

  it("draw, export, reimport is pixel-stable", () => {
    const sk = new SketchBuffer(24);
    sk.stamp(5, 5, 1, 1);
    sk.stamp(18, 12, 2, 1);
    const exported = sk.export();

    const gray = Array.from(exported, (p) => (p ? 255 : 0));
    const other = new SketchBuffer(24);
    const result = other.import(24, 24, gray);
    expect(result.downscaled).toBe(false);
    expect(result.notice).toBeNull();
    expect([...other.export()]).toEqual([...exported]);
  });

  it("oversized import downsamples with a notice", () => {
    const sk = new SketchBuffer(8);
    const gray = new Array(64 * 64).fill(0);
    for (let x = 0; x < 64; x++) gray[32 * 64 + x] = 255; // one bright row
    const result = sk.import(64, 64, gray);
    expect(result.downscaled).toBe(true);
    expect(result.notice).toContain("64x64");
    expect(sk.isEmpty()).toBe(false);
    expect(sk.export()).toHaveLength(64);
  });

  it("rejects mismatched payload sizes and bad dimensions", () => {
    const sk = new SketchBuffer(8);
    expect(() => sk.import(8, 8, new Array(10).fill(0))).toThrow();
    expect(() => new SketchBuffer(0)).toThrow();
    expect(() => new SketchBuffer(2.5)).toThrow();
  });
});
