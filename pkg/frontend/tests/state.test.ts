import { describe, expect, it } from "vitest";

import type { SchemaDoc } from "../src/api.js";
import { SessionState } from "../src/state.js";

const SCHEMA: SchemaDoc = {
  attributes: ["hair_dark", "pale_skin", "glasses", "mouth_open"],
  attribute_count: 4,
  style_dim: 3,
  image_size: 32,
  with_sketch: true,
  model_id: "m-test",
};

describe("SessionState", () => {
  it("initializes every schema attribute", () => {
    const state = new SessionState(SCHEMA);
    expect(Object.keys(state.attributes)).toEqual(SCHEMA.attributes);
    expect(Object.values(state.attributes).every((v) => v === -1)).toBe(true);
  });

  it("rejects out-of-domain attribute values", () => {
    const state = new SessionState(SCHEMA);
    expect(() => state.setAttribute("glasses", 0)).toThrow();
    expect(() => state.setAttribute("glasses", 0.5)).toThrow();
    expect(() => state.setAttribute("wings", 1)).toThrow();
    state.setAttribute("glasses", 1);
    expect(state.attributes.glasses).toBe(1);
  });

  it("validates pinned style length", () => {
    const state = new SessionState(SCHEMA);
    expect(() => state.pinStyle([1, 2])).toThrow();
    state.pinStyle([0.5, -0.5, 1]);
    expect(state.pinnedZo).toEqual([0.5, -0.5, 1]);
    state.unpinStyle();
    expect(state.pinnedZo).toBeNull();
  });

  it("copies provenance into gallery items", () => {
    const state = new SessionState(SCHEMA);
    const zO = [1, 2, 3];
    const item = state.addToGallery("imgdata", {
      attributes: { ...state.attributes },
      z_o: zO,
      sketch: "sketchdata",
      modelId: SCHEMA.model_id,
    });
    zO[0] = 99;
    expect(item.provenance.z_o).toEqual([1, 2, 3]);
  });

  it("serialize + restore reproduces the session exactly", () => {
    const state = new SessionState(SCHEMA);
    state.sketch = "sketch-b64";
    state.setAttribute("mouth_open", 1);
    state.pinStyle([0.1, 0.2, 0.3]);
    state.addToGallery("img-1", {
      attributes: { ...state.attributes },
      z_o: [0.1, 0.2, 0.3],
      sketch: "sketch-b64",
      modelId: SCHEMA.model_id,
    });

    const restored = SessionState.restore(SCHEMA, state.serialize());
    expect(restored.serialize()).toBe(state.serialize());
    expect(restored.gallery).toHaveLength(1);
    expect(restored.gallery[0].provenance.z_o).toEqual([0.1, 0.2, 0.3]);
  });

  it("restored sessions keep allocating fresh ids", () => {
    const state = new SessionState(SCHEMA);
    const prov = {
      attributes: { ...state.attributes },
      z_o: [0, 0, 0],
      sketch: "s",
      modelId: SCHEMA.model_id,
    };
    state.addToGallery("a", prov);
    const restored = SessionState.restore(SCHEMA, state.serialize());
    const item = restored.addToGallery("b", prov);
    expect(item.id).not.toBe(restored.gallery[0].id);
  });

  it("rejects unknown serialization versions", () => {
    expect(() => SessionState.restore(SCHEMA, '{"version": 7}')).toThrow();
  });
});
