/** Thin DOM layer wiring the pure modules to the page. All logic worth
 * testing lives in the imported modules; this file only moves data between
 * the DOM and those modules. */

import { ApiClient } from "./api.js";
import { DebouncedRequester } from "./debounce.js";
import { galleryCells, pinStyleFromItem, regenerateFromProvenance, reopenAsBase } from "./gallery.js";
import { buildPanel, clampSlider, traversalGrid } from "./panel.js";
import { SketchBuffer } from "./sketch.js";
import { SessionState } from "./state.js";

const SESSION_KEY = "advae-session";

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function showBanner(message: string | null): void {
  const banner = $("banner");
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function bufferToPngBase64(sketch: SketchBuffer): string {
  const canvas = document.createElement("canvas");
  canvas.width = sketch.size;
  canvas.height = sketch.size;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(sketch.size, sketch.size);
  for (let i = 0; i < sketch.pixels.length; i++) {
    const v = sketch.pixels[i] ? 255 : 0;
    img.data[4 * i] = v;
    img.data[4 * i + 1] = v;
    img.data[4 * i + 2] = v;
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  return canvas.toDataURL("image/png").split(",")[1];
}

async function main(): Promise<void> {
  const baseUrl = (document.body.dataset.serviceUrl ?? "").replace(/\/$/, "");
  const api = new ApiClient(baseUrl);

  let schema;
  try {
    schema = await api.schema();
  } catch (err) {
    showBanner(`service unreachable: ${err}`);
    return;
  }

  const saved = localStorage.getItem(SESSION_KEY);
  const state = saved ? SessionState.restore(schema, saved) : new SessionState(schema);
  const sketch = new SketchBuffer(schema.image_size);
  const panel = buildPanel(schema);
  const resultImg = $("result") as HTMLImageElement;

  const persist = () => localStorage.setItem(SESSION_KEY, state.serialize());

  const synthesizer = new DebouncedRequester(
    (args: { attributes: typeof state.attributes; z_o: number[] | null }) =>
      api.synthesize({
        sketch: bufferToPngBase64(sketch),
        attributes: args.attributes,
        ...(args.z_o ? { z_o: args.z_o } : { style_seed: Date.now() % 100000 }),
      }),
    (res, args) => {
      showBanner(null);
      resultImg.src = `data:image/png;base64,${res.image}`;
      state.addToGallery(res.image, {
        attributes: args.attributes,
        z_o: res.z_o,
        sketch: bufferToPngBase64(sketch),
        modelId: schema.model_id,
      });
      renderGallery();
      persist();
    },
    (err) => showBanner(`generation failed: ${err}`),
  );

  const traverser = new DebouncedRequester(
    (args: { attribute: string; value: number }) =>
      api.traverse({
        sketch: bufferToPngBase64(sketch),
        attributes: state.attributes,
        attribute: args.attribute,
        grid: [args.value],
      }),
    (res) => {
      showBanner(null);
      resultImg.src = `data:image/png;base64,${res.images[0]}`;
    },
    (err) => showBanner(`traversal failed: ${err}`),
  );

  const requestSynthesis = () =>
    synthesizer.request({ attributes: { ...state.attributes }, z_o: state.pinnedZo });

  // attribute panel
  const panelEl = $("panel");
  for (const toggle of panel.toggles) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state.attributes[toggle.attribute] === 1;
    box.addEventListener("change", () => {
      state.setAttribute(toggle.attribute, box.checked ? 1 : -1);
      requestSynthesis();
      persist();
    });
    label.append(box, ` ${toggle.attribute}`);
    panelEl.append(label);
  }
  for (const slider of panel.sliders) {
    const label = document.createElement("label");
    const range = document.createElement("input");
    range.type = "range";
    range.min = String(slider.min);
    range.max = String(slider.max);
    range.step = String((slider.max - slider.min) / (traversalGrid().length - 1));
    range.value = String(slider.value);
    range.addEventListener("input", () => {
      const v = clampSlider(slider, Number(range.value));
      traverser.request({ attribute: slider.attribute, value: v });
    });
    label.append(`${slider.attribute} sweep `, range);
    panelEl.append(label);
  }

  // sketch canvas
  const canvas = $("sketch") as HTMLCanvasElement;
  canvas.width = schema.image_size;
  canvas.height = schema.image_size;
  const ctx = canvas.getContext("2d")!;
  let drawing = false;
  let erasing = false;

  const redraw = () => {
    const img = ctx.createImageData(sketch.size, sketch.size);
    for (let i = 0; i < sketch.pixels.length; i++) {
      const v = sketch.pixels[i] ? 0 : 255; // strokes rendered dark
      img.data[4 * i] = v;
      img.data[4 * i + 1] = v;
      img.data[4 * i + 2] = v;
      img.data[4 * i + 3] = 255;
    }
    ctx.putImageData(img, 0, 0);
  };

  const paint = (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    const x = Math.floor(((ev.clientX - rect.left) / rect.width) * sketch.size);
    const y = Math.floor(((ev.clientY - rect.top) / rect.height) * sketch.size);
    sketch.stamp(x, y, 0, erasing ? 0 : 1);
    redraw();
  };
  canvas.addEventListener("pointerdown", (ev) => {
    drawing = true;
    paint(ev);
  });
  canvas.addEventListener("pointermove", (ev) => drawing && paint(ev));
  window.addEventListener("pointerup", () => {
    if (drawing) {
      drawing = false;
      requestSynthesis();
    }
  });
  ($("eraser") as HTMLInputElement).addEventListener("change", (ev) => {
    erasing = (ev.target as HTMLInputElement).checked;
  });
  $("clear").addEventListener("click", () => {
    sketch.clear();
    redraw();
    requestSynthesis();
  });
  ($("upload") as HTMLInputElement).addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const bitmap = await createImageBitmap(file);
    const work = document.createElement("canvas");
    work.width = bitmap.width;
    work.height = bitmap.height;
    const wctx = work.getContext("2d")!;
    wctx.drawImage(bitmap, 0, 0);
    const data = wctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
    const gray = new Uint8Array(bitmap.width * bitmap.height);
    for (let i = 0; i < gray.length; i++) {
      gray[i] = Math.round((data[4 * i] + data[4 * i + 1] + data[4 * i + 2]) / 3);
    }
    const result = sketch.import(bitmap.width, bitmap.height, gray);
    if (result.notice) showBanner(result.notice);
    redraw();
    requestSynthesis();
  });

  // style pinning
  $("reroll").addEventListener("click", () => {
    state.unpinStyle();
    requestSynthesis();
    persist();
  });

  // gallery
  const galleryEl = $("gallery");
  function renderGallery(): void {
    galleryEl.innerHTML = "";
    for (const cell of galleryCells(state.gallery)) {
      const fig = document.createElement("figure");
      const img = document.createElement("img");
      img.src = `data:image/png;base64,${cell.image}`;
      const cap = document.createElement("figcaption");
      cap.textContent = cell.label;
      const pin = document.createElement("button");
      pin.textContent = "pin style";
      pin.addEventListener("click", () => {
        pinStyleFromItem(state, cell.id);
        persist();
      });
      const open = document.createElement("button");
      open.textContent = "open";
      open.addEventListener("click", () => {
        reopenAsBase(state, cell.id);
        persist();
      });
      const regen = document.createElement("button");
      regen.textContent = "regenerate";
      regen.addEventListener("click", async () => {
        const item = state.gallery.find((g) => g.id === cell.id)!;
        const res = await regenerateFromProvenance(api, item);
        resultImg.src = `data:image/png;base64,${res.image}`;
      });
      fig.append(img, cap, pin, open, regen);
      galleryEl.append(fig);
    }
  }
  renderGallery();
}

main();
