/** DOM-free sketch model: a binary pixel buffer with draw, erase, clear,
 * export at model resolution, and import with client-side downscale.
 * The thin canvas layer renders this buffer and feeds pointer events in. */

export interface ImportResult {
  downscaled: boolean;
  notice: string | null;
}

export class SketchBuffer {
  /** 1 = stroke, 0 = background, row-major. */
  readonly pixels: Uint8Array;

  constructor(readonly size: number) {
    if (!Number.isInteger(size) || size <= 0) {
      throw new Error(`sketch size must be a positive integer, got ${size}`);
    }
    this.pixels = new Uint8Array(size * size);
  }

  clear(): void {
    this.pixels.fill(0);
  }

  /** Paint a filled square brush; value 1 draws, 0 erases. */
  stamp(x: number, y: number, radius: number, value: 0 | 1): void {
    const lo = -Math.floor(radius);
    const hi = Math.floor(radius);
    for (let dy = lo; dy <= hi; dy++) {
      for (let dx = lo; dx <= hi; dx++) {
        const px = x + dx;
        const py = y + dy;
        if (px >= 0 && px < this.size && py >= 0 && py < this.size) {
          this.pixels[py * this.size + px] = value;
        }
      }
    }
  }

  isEmpty(): boolean {
    return this.pixels.every((p) => p === 0);
  }

  /** Binary pixels at model resolution; the canvas layer turns this into a
   * lossless PNG payload. */
  export(): Uint8Array {
    return this.pixels.slice();
  }

  /** Load grayscale pixels (0..255, row-major) of any square size.
   * Oversized inputs are downscaled by nearest-neighbour with a notice;
   * values above half intensity become strokes. Importing an exported
   * buffer (scaled to 0/255) reproduces it exactly. */
  import(width: number, height: number, gray: ArrayLike<number>): ImportResult {
    if (width * height !== gray.length) {
      throw new Error("pixel payload does not match its declared size");
    }
    const downscaled = width !== this.size || height !== this.size;
    for (let y = 0; y < this.size; y++) {
      for (let x = 0; x < this.size; x++) {
        const sx = Math.min(width - 1, Math.floor((x * width) / this.size));
        const sy = Math.min(height - 1, Math.floor((y * height) / this.size));
        this.pixels[y * this.size + x] = gray[sy * width + sx] > 127 ? 1 : 0;
      }
    }
    return {
      downscaled,
      notice: downscaled
        ? `input was ${width}x${height}; resampled to ${this.size}x${this.size}`
        : null,
    };
  }
}
