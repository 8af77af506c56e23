import { describe, expect, it } from "vitest";

import type { SchemaDoc } from "../src/api.js";
import { GRID_MAX, GRID_MIN, buildPanel, clampSlider, traversalGrid } from "../src/panel.js";

const SCHEMA: SchemaDoc = {
  attributes: ["a", "b", "c", "d"],
  attribute_count: 4,
  style_dim: 16,
  image_size: 32,
  with_sketch: true,
  model_id: "m",
};

describe("attribute panel model", () => {
  it("builds one toggle and one slider per attribute", () => {
    const panel = buildPanel(SCHEMA);
    expect(panel.toggles).toHaveLength(4);
    expect(panel.sliders).toHaveLength(4);
    expect(panel.toggles.map((t) => t.attribute)).toEqual(SCHEMA.attributes);
    expect(panel.sliders.every((s) => s.min === GRID_MIN && s.max === GRID_MAX)).toBe(true);
  });

  it("clamps slider values to the grid range", () => {
    const slider = buildPanel(SCHEMA).sliders[0];
    expect(clampSlider(slider, 5)).toBe(GRID_MAX);
    expect(clampSlider(slider, -10)).toBe(GRID_MIN);
    expect(clampSlider(slider, 0.7)).toBe(0.7);
    expect(clampSlider(slider, NaN)).toBe(slider.value);
  });

  it("default traversal grid spans [-2, 2] with 7 points", () => {
    const grid = traversalGrid();
    expect(grid).toHaveLength(7);
    expect(grid[0]).toBe(-2);
    expect(grid[6]).toBe(2);
    for (let i = 1; i < grid.length; i++) {
      expect(grid[i]).toBeGreaterThan(grid[i - 1]);
    }
  });
});
