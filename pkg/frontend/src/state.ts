/** Serializable session state: sketch, attribute settings, pinned style
 * code, and a gallery whose items carry full regeneration provenance. */

import type { AttributeSettings, AttributeValue, SchemaDoc } from "./api.js";

export interface Provenance {
  attributes: AttributeSettings;
  z_o: number[];
  sketch: string; // base64 PNG used for the generation
  modelId: string;
}

export interface GalleryItem {
  id: number;
  image: string; // base64 PNG as returned by the service
  provenance: Provenance;
}

export interface SerializedSession {
  version: 1;
  sketch: string | null;
  attributes: AttributeSettings;
  pinnedZo: number[] | null;
  gallery: GalleryItem[];
  nextId: number;
}

export class SessionState {
  sketch: string | null = null;
  attributes: AttributeSettings = {};
  pinnedZo: number[] | null = null;
  gallery: GalleryItem[] = [];
  private nextId = 1;

  constructor(public schema: SchemaDoc) {
    for (const name of schema.attributes) {
      this.attributes[name] = -1;
    }
  }

  /** Toggles may only ever hold -1 or +1; anything else is rejected. */
  setAttribute(name: string, value: number): void {
    if (!(name in this.attributes)) {
      throw new Error(`unknown attribute ${name}`);
    }
    if (value !== -1 && value !== 1) {
      throw new Error(`attribute value must be -1 or +1, got ${value}`);
    }
    this.attributes[name] = value as AttributeValue;
  }

  pinStyle(zO: number[]): void {
    if (zO.length !== this.schema.style_dim) {
      throw new Error(`style code must have length ${this.schema.style_dim}`);
    }
    this.pinnedZo = [...zO];
  }

  unpinStyle(): void {
    this.pinnedZo = null;
  }

  addToGallery(image: string, provenance: Provenance): GalleryItem {
    const item: GalleryItem = {
      id: this.nextId++,
      image,
      provenance: {
        attributes: { ...provenance.attributes },
        z_o: [...provenance.z_o],
        sketch: provenance.sketch,
        modelId: provenance.modelId,
      },
    };
    this.gallery.push(item);
    return item;
  }

  serialize(): string {
    const doc: SerializedSession = {
      version: 1,
      sketch: this.sketch,
      attributes: this.attributes,
      pinnedZo: this.pinnedZo,
      gallery: this.gallery,
      nextId: this.nextId,
    };
    return JSON.stringify(doc);
  }

  static restore(schema: SchemaDoc, serialized: string): SessionState {
    const doc = JSON.parse(serialized) as SerializedSession;
    if (doc.version !== 1) {
      throw new Error(`unsupported session version ${doc.version}`);
    }
    const state = new SessionState(schema);
    state.sketch = doc.sketch;
    for (const name of schema.attributes) {
      const v = doc.attributes[name];
      state.setAttribute(name, v ?? -1);
    }
    state.pinnedZo = doc.pinnedZo ? [...doc.pinnedZo] : null;
    state.gallery = doc.gallery.map((item) => ({
      id: item.id,
      image: item.image,
      provenance: {
        attributes: { ...item.provenance.attributes },
        z_o: [...item.provenance.z_o],
        sketch: item.provenance.sketch,
        modelId: item.provenance.modelId,
      },
    }));
    state["nextId"] = doc.nextId;
    return state;
  }
}
