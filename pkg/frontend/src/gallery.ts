/** Gallery operations: side-by-side candidates with full provenance,
 * style adoption, and bit-exact regeneration through the service. */

import type { ApiClient, SynthesizeResponse } from "./api.js";
import type { GalleryItem, SessionState } from "./state.js";

export interface GalleryCell {
  id: number;
  image: string;
  label: string;
}

export function galleryCells(items: GalleryItem[]): GalleryCell[] {
  return items.map((item) => ({
    id: item.id,
    image: item.image,
    label: Object.entries(item.provenance.attributes)
      .map(([name, v]) => `${name}${v > 0 ? "+" : "-"}`)
      .join(" "),
  }));
}

/** Adopt an item's style code as the session's pinned style. */
export function pinStyleFromItem(state: SessionState, itemId: number): number[] {
  const item = state.gallery.find((g) => g.id === itemId);
  if (!item) {
    throw new Error(`no gallery item with id ${itemId}`);
  }
  state.pinStyle(item.provenance.z_o);
  return [...item.provenance.z_o];
}

/** Re-open an item as the editing base: its sketch and attributes become
 * the current session inputs and its style is pinned. */
export function reopenAsBase(state: SessionState, itemId: number): void {
  const item = state.gallery.find((g) => g.id === itemId);
  if (!item) {
    throw new Error(`no gallery item with id ${itemId}`);
  }
  state.sketch = item.provenance.sketch;
  for (const [name, v] of Object.entries(item.provenance.attributes)) {
    state.setAttribute(name, v);
  }
  state.pinStyle(item.provenance.z_o);
}

/** Regenerate an item purely from its stored provenance; the result must be
 * byte-identical to the stored image when the served model matches. */
export async function regenerateFromProvenance(
  api: ApiClient,
  item: GalleryItem,
): Promise<SynthesizeResponse> {
  return api.synthesize({
    sketch: item.provenance.sketch,
    attributes: item.provenance.attributes,
    z_o: item.provenance.z_o,
  });
}
