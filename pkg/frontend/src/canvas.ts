/** Tiny deterministic raster canvas plus parallel SVG element log. */

import { GLYPH_H, GLYPH_W, glyphRows } from "./font";

export type Color = [number, number, number, number];

export function hex(col: string): Color {
  const v = col.replace("#", "");
  return [
    parseInt(v.slice(0, 2), 16),
    parseInt(v.slice(2, 4), 16),
    parseInt(v.slice(4, 6), 16),
    v.length >= 8 ? parseInt(v.slice(6, 8), 16) : 255,
  ];
}

function fmt(x: number): string {
  return Number(x.toFixed(2)).toString();
}

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly pixels: Uint8Array;
  private svgParts: string[] = [];

  constructor(width: number, height: number, background: Color) {
    this.width = width;
    this.height = height;
    this.pixels = new Uint8Array(width * height * 4);
    for (let i = 0; i < width * height; i++) {
      this.pixels.set(background, i * 4);
    }
    this.svgParts.push(
      `<rect x="0" y="0" width="${width}" height="${height}" fill="${rgbOf(background)}"/>`,
    );
  }

  blend(x: number, y: number, col: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    const a = col[3] / 255;
    for (let c = 0; c < 3; c++) {
      this.pixels[i + c] = Math.round(col[c] * a + this.pixels[i + c] * (1 - a));
    }
    this.pixels[i + 3] = 255;
  }

  fillRect(x0: number, y0: number, w: number, h: number, col: Color): void {
    for (let y = Math.floor(y0); y < y0 + h; y++) {
      for (let x = Math.floor(x0); x < x0 + w; x++) {
        this.blend(x, y, col);
      }
    }
    this.svgParts.push(
      `<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${fmt(w)}" height="${fmt(h)}" fill="${rgbOf(col)}" fill-opacity="${(col[3] / 255).toFixed(3)}"/>`,
    );
  }

  line(x0: number, y0: number, x1: number, y1: number, col: Color, thick = 1): void {
    // Bresenham with square brush
    let ix0 = Math.round(x0);
    let iy0 = Math.round(y0);
    const ix1 = Math.round(x1);
    const iy1 = Math.round(y1);
    const dx = Math.abs(ix1 - ix0);
    const dy = -Math.abs(iy1 - iy0);
    const sx = ix0 < ix1 ? 1 : -1;
    const sy = iy0 < iy1 ? 1 : -1;
    let err = dx + dy;
    const r = Math.floor(thick / 2);
    for (;;) {
      for (let oy = -r; oy <= r; oy++) {
        for (let ox = -r; ox <= r; ox++) {
          this.blend(ix0 + ox, iy0 + oy, col);
        }
      }
      if (ix0 === ix1 && iy0 === iy1) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ix0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        iy0 += sy;
      }
    }
    this.svgParts.push(
      `<line x1="${fmt(x0)}" y1="${fmt(y0)}" x2="${fmt(x1)}" y2="${fmt(y1)}" stroke="${rgbOf(col)}" stroke-width="${thick}" stroke-opacity="${(col[3] / 255).toFixed(3)}"/>`,
    );
  }

  polyline(xs: number[], ys: number[], col: Color, thick = 1): void {
    for (let i = 1; i < xs.length; i++) {
      if (!isFinite(xs[i - 1]) || !isFinite(ys[i - 1]) || !isFinite(xs[i]) || !isFinite(ys[i])) {
        continue;
      }
      this.line(xs[i - 1], ys[i - 1], xs[i], ys[i], col, thick);
    }
  }

  marker(x: number, y: number, col: Color, kind: "circle" | "triangle" = "circle", size = 3): void {
    if (!isFinite(x) || !isFinite(y)) return;
    if (kind === "circle") {
      for (let oy = -size; oy <= size; oy++) {
        for (let ox = -size; ox <= size; ox++) {
          if (ox * ox + oy * oy <= size * size) this.blend(Math.round(x) + ox, Math.round(y) + oy, col);
        }
      }
      this.svgParts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${size}" fill="${rgbOf(col)}"/>`);
    } else {
      for (let oy = -size; oy <= size; oy++) {
        const half = Math.round(((oy + size) / (2 * size)) * size);
        for (let ox = -half; ox <= half; ox++) {
          this.blend(Math.round(x) + ox, Math.round(y) + oy, col);
        }
      }
      this.svgParts.push(
        `<path d="M ${fmt(x)} ${fmt(y - size)} L ${fmt(x + size)} ${fmt(y + size)} L ${fmt(x - size)} ${fmt(y + size)} Z" fill="${rgbOf(col)}"/>`,
      );
    }
  }

  text(x: number, y: number, s: string, col: Color, scale = 1): void {
    let cx = Math.round(x);
    for (const ch of s) {
      const rows = glyphRows(ch);
      for (let r = 0; r < GLYPH_H; r++) {
        for (let c = 0; c < GLYPH_W; c++) {
          if ((rows[r] >> (GLYPH_W - 1 - c)) & 1) {
            for (let sy = 0; sy < scale; sy++) {
              for (let sx = 0; sx < scale; sx++) {
                this.blend(cx + c * scale + sx, Math.round(y) + r * scale + sy, col);
              }
            }
          }
        }
      }
      cx += (GLYPH_W + 1) * scale;
    }
    this.svgParts.push(
      `<text x="${fmt(x)}" y="${fmt(y + GLYPH_H * scale)}" font-family="monospace" font-size="${GLYPH_H * scale + 2}" fill="${rgbOf(col)}">${escapeXml(s)}</text>`,
    );
  }

  toSvg(): string {
    return (
      `<?xml version="1.0" encoding="UTF-8"?>\n` +
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      this.svgParts.join("\n") +
      `\n</svg>\n`
    );
  }
}

function rgbOf(col: Color): string {
  return `rgb(${col[0]},${col[1]},${col[2]})`;
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
