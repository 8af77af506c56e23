import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import type { SchemaDoc } from "../src/api.js";
import { galleryCells, pinStyleFromItem, regenerateFromProvenance, reopenAsBase } from "../src/gallery.js";
import { SessionState } from "../src/state.js";

const SCHEMA: SchemaDoc = {
  attributes: ["hair_dark", "glasses"],
  attribute_count: 2,
  style_dim: 2,
  image_size: 16,
  with_sketch: true,
  model_id: "m",
};

function stateWithItem() {
  const state = new SessionState(SCHEMA);
  state.setAttribute("glasses", 1);
  const item = state.addToGallery("stored-image", {
    attributes: { ...state.attributes },
    z_o: [0.25, -0.75],
    sketch: "stored-sketch",
    modelId: SCHEMA.model_id,
  });
  return { state, item };
}

describe("gallery", () => {
  it("one item renders one labelled cell", () => {
    const { state } = stateWithItem();
    const cells = galleryCells(state.gallery);
    expect(cells).toHaveLength(1);
    expect(cells[0].label).toBe("hair_dark- glasses+");
  });

  it("pinning from an item adopts its style code", () => {
    const { state, item } = stateWithItem();
    const zO = pinStyleFromItem(state, item.id);
    expect(state.pinnedZo).toEqual(item.provenance.z_o);
    expect(zO).toEqual([0.25, -0.75]);
    expect(() => pinStyleFromItem(state, 999)).toThrow();
  });

  it("reopening an item restores sketch, attributes, and style", () => {
    const { state, item } = stateWithItem();
    state.setAttribute("glasses", -1);
    state.sketch = "other";
    reopenAsBase(state, item.id);
    expect(state.sketch).toBe("stored-sketch");
    expect(state.attributes.glasses).toBe(1);
    expect(state.pinnedZo).toEqual([0.25, -0.75]);
  });

  it("regeneration sends exactly the stored provenance", async () => {
    const { item } = stateWithItem();
    const fetchImpl = vi.fn(async (_url: string, init?: RequestInit) => {
      const body = JSON.parse(String(init?.body));
      expect(body.sketch).toBe("stored-sketch");
      expect(body.attributes).toEqual({ hair_dark: -1, glasses: 1 });
      expect(body.z_o).toEqual([0.25, -0.75]);
      expect(body.style_seed).toBeUndefined();
      return new Response(JSON.stringify({ image: "stored-image", z_o: body.z_o }), { status: 200 });
    });
    const api = new ApiClient("http://svc", fetchImpl);
    const res = await regenerateFromProvenance(api, item);
    expect(res.image).toBe(item.image); // byte-identical round trip
    expect(fetchImpl).toHaveBeenCalledOnce();
  });
});
