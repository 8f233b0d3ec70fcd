/** Stroke capture and rasterization, kept free of DOM so it is testable.
 *
 * The pad is a 400x400 logical surface; strokes are polylines drawn with a
 * 3 px round brush. Export rasterizes the strokes, box-averages 4x4 blocks
 * down to 100x100, and emits dark-ink-on-light grayscale pixels — the
 * polarity the retrieval service normalizes on ingest.
 */

export const PAD_SIZE = 400;
export const EXPORT_SIZE = 100;
export const BRUSH_WIDTH = 3;

export interface Point {
  x: number;
  y: number;
}

export type Stroke = Point[];

export class StrokeModel {
  private strokes: Stroke[] = [];
  private active: Stroke | null = null;

  begin(x: number, y: number): void {
    this.active = [{ x, y }];
  }

  extend(x: number, y: number): void {
    if (this.active) this.active.push({ x, y });
  }

  end(): void {
    if (this.active && this.active.length > 0) {
      this.strokes.push(this.active);
    }
    this.active = null;
  }

  undo(): void {
    this.strokes.pop();
  }

  clear(): void {
    this.strokes = [];
    this.active = null;
  }

  get isEmpty(): boolean {
    return this.strokes.length === 0 && this.active === null;
  }

  /** Committed strokes plus the one being drawn, for live repaints. */
  all(): Stroke[] {
    return this.active ? [...this.strokes, this.active] : [...this.strokes];
  }
}

/** Rasterize strokes into a PAD_SIZE^2 ink mask (1 = ink). */
export function rasterize(strokes: Stroke[], size: number = PAD_SIZE): Uint8Array {
  const ink = new Uint8Array(size * size);
  const radius = BRUSH_WIDTH / 2;
  for (const stroke of strokes) {
    if (stroke.length === 1) {
      stampSegment(ink, size, stroke[0], stroke[0], radius);
    }
    for (let i = 0; i + 1 < stroke.length; i++) {
      stampSegment(ink, size, stroke[i], stroke[i + 1], radius);
    }
  }
  return ink;
}

function stampSegment(ink: Uint8Array, size: number, a: Point, b: Point, radius: number): void {
  const lox = Math.max(0, Math.floor(Math.min(a.x, b.x) - radius));
  const hix = Math.min(size - 1, Math.ceil(Math.max(a.x, b.x) + radius));
  const loy = Math.max(0, Math.floor(Math.min(a.y, b.y) - radius));
  const hiy = Math.min(size - 1, Math.ceil(Math.max(a.y, b.y) + radius));
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const lenSq = dx * dx + dy * dy;
  const r2 = radius * radius;
  for (let y = loy; y <= hiy; y++) {
    for (let x = lox; x <= hix; x++) {
      // squared distance from pixel center to the segment
      let t = 0;
      if (lenSq > 0) {
        t = ((x - a.x) * dx + (y - a.y) * dy) / lenSq;
        t = Math.max(0, Math.min(1, t));
      }
      const px = a.x + t * dx - x;
      const py = a.y + t * dy - y;
      if (px * px + py * py <= r2) {
        ink[y * size + x] = 1;
      }
    }
  }
}

/** Box-average the ink mask down to out x out gray pixels (dark on light). */
export function downsampleToGray(
  ink: Uint8Array,
  size: number = PAD_SIZE,
  out: number = EXPORT_SIZE,
): Uint8Array {
  const block = size / out;
  if (!Number.isInteger(block)) {
    throw new Error(`pad size ${size} not divisible by export size ${out}`);
  }
  const gray = new Uint8Array(out * out);
  for (let oy = 0; oy < out; oy++) {
    for (let ox = 0; ox < out; ox++) {
      let acc = 0;
      for (let y = oy * block; y < (oy + 1) * block; y++) {
        for (let x = ox * block; x < (ox + 1) * block; x++) {
          acc += ink[y * size + x];
        }
      }
      const coverage = acc / (block * block);
      gray[oy * out + ox] = Math.round(255 * (1 - coverage));
    }
  }
  return gray;
}
