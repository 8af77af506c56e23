/** Pure view-model for the attribute panel: one toggle (-1/+1) and one
 * traversal slider over the fixed grid range per schema attribute. */

import type { SchemaDoc } from "./api.js";

export const GRID_MIN = -2;
export const GRID_MAX = 2;
export const GRID_POINTS = 7;

export interface ToggleModel {
  kind: "toggle";
  attribute: string;
  value: -1 | 1;
}

export interface SliderModel {
  kind: "slider";
  attribute: string;
  min: number;
  max: number;
  value: number;
}

export interface PanelModel {
  toggles: ToggleModel[];
  sliders: SliderModel[];
}

export function buildPanel(schema: SchemaDoc): PanelModel {
  return {
    toggles: schema.attributes.map((attribute) => ({
      kind: "toggle",
      attribute,
      value: -1 as const,
    })),
    sliders: schema.attributes.map((attribute) => ({
      kind: "slider",
      attribute,
      min: GRID_MIN,
      max: GRID_MAX,
      value: 0,
    })),
  };
}

/** Slider positions are clamped to the grid range before any request is
 * built, so out-of-range values can never reach the service. */
export function clampSlider(slider: SliderModel, value: number): number {
  if (Number.isNaN(value)) {
    return slider.value;
  }
  return Math.min(slider.max, Math.max(slider.min, value));
}

export function traversalGrid(points: number = GRID_POINTS): number[] {
  const grid: number[] = [];
  for (let i = 0; i < points; i++) {
    grid.push(GRID_MIN + ((GRID_MAX - GRID_MIN) * i) / (points - 1));
  }
  return grid;
}
