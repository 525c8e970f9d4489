/**
 * Minimal RGBA raster canvas: filled rects, Bresenham lines, filled
 * circles, and 5x7 bitmap text. Everything integer, everything
 * deterministic.
 */

import { GLYPH_H, GLYPH_W, glyphRows } from "./font5x7.js";

export type RGB = readonly [number, number, number];

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4).fill(255);
  }

  set(x: number, y: number, c: RGB): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    this.data[i] = c[0];
    this.data[i + 1] = c[1];
    this.data[i + 2] = c[2];
    this.data[i + 3] = 255;
  }

  fillRect(x: number, y: number, w: number, h: number, c: RGB): void {
    const x1 = Math.min(this.width, x + w);
    const y1 = Math.min(this.height, y + h);
    for (let yy = Math.max(0, y); yy < y1; yy++) {
      for (let xx = Math.max(0, x); xx < x1; xx++) {
        this.set(xx, yy, c);
      }
    }
  }

  /**
   * Bresenham line. `thick` widens the stroke by stamping a small square
   * at each step; `dash` skips alternating runs of 4 steps.
   */
  line(x0: number, y0: number, x1: number, y1: number, c: RGB, thick = 1, dash = false): void {
    let x = Math.round(x0);
    let y = Math.round(y0);
    const xe = Math.round(x1);
    const ye = Math.round(y1);
    const dx = Math.abs(xe - x);
    const dy = -Math.abs(ye - y);
    const sx = x < xe ? 1 : -1;
    const sy = y < ye ? 1 : -1;
    let err = dx + dy;
    let step = 0;
    const r = thick >> 1;
    for (;;) {
      if (!dash || step % 8 < 4) {
        if (thick <= 1) this.set(x, y, c);
        else this.fillRect(x - r, y - r, thick, thick, c);
      }
      if (x === xe && y === ye) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
      step++;
    }
  }

  fillCircle(cx: number, cy: number, r: number, c: RGB): void {
    for (let dy = -r; dy <= r; dy++) {
      const span = Math.floor(Math.sqrt(r * r - dy * dy));
      for (let dx = -span; dx <= span; dx++) {
        this.set(cx + dx, cy + dy, c);
      }
    }
  }

  /** Top-left anchored text; advance is 6 columns per glyph at scale 1. */
  text(x: number, y: number, s: string, c: RGB, scale = 1): void {
    let cx = x;
    for (const ch of s) {
      const rows = glyphRows(ch);
      for (let ry = 0; ry < GLYPH_H; ry++) {
        const mask = rows[ry] ?? 0;
        for (let rx = 0; rx < GLYPH_W; rx++) {
          if (mask & (1 << (GLYPH_W - 1 - rx))) {
            this.fillRect(cx + rx * scale, y + ry * scale, scale, scale, c);
          }
        }
      }
      cx += (GLYPH_W + 1) * scale;
    }
  }

  static textWidth(s: string, scale = 1): number {
    if (s.length === 0) return 0;
    return (s.length * (GLYPH_W + 1) - 1) * scale;
  }
}
