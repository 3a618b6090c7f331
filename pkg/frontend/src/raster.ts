/**
 * Tiny CPU rasterizer mirroring the pipeline renderer's conventions:
 * samples at integer pixel coordinates, affine barycentric interpolation,
 * strict less-than z test, boundary-inclusive edge test with a small
 * area-relative epsilon. Used by the test suite to emulate a screenshot and
 * as the canvas fallback when WebGL is unavailable.
 */

import type { ParsedMesh } from "./glb.js";
import type { Intrinsics, Mat3, Vec3 } from "./camera.js";
import { matVec, transpose } from "./camera.js";

export interface RasterResult {
  /** row-major RGB, 3 bytes per pixel */
  image: Uint8ClampedArray;
  depth: Float64Array;
  covered: Uint8Array;
}

export function renderMesh(
  mesh: ParsedMesh,
  intrinsics: Intrinsics,
  rotation: Mat3,
  translation: Vec3,
  width: number,
  height: number,
): RasterResult {
  const image = new Uint8ClampedArray(width * height * 3);
  const depth = new Float64Array(width * height).fill(Infinity);
  const covered = new Uint8Array(width * height);

  const n = mesh.vertexCount;
  const u = new Float64Array(n);
  const v = new Float64Array(n);
  const z = new Float64Array(n);
  const rt = transpose(rotation);
  for (let i = 0; i < n; i++) {
    const d: Vec3 = [
      mesh.positions[i * 3] - translation[0],
      mesh.positions[i * 3 + 1] - translation[1],
      mesh.positions[i * 3 + 2] - translation[2],
    ];
    const cam = matVec(rt, d);
    z[i] = cam[2];
    u[i] = (intrinsics.fx * cam[0]) / cam[2] + intrinsics.cx;
    v[i] = (intrinsics.fy * cam[1]) / cam[2] + intrinsics.cy;
  }

  const idx = mesh.indices;
  for (let t = 0; t < idx.length; t += 3) {
    const a = idx[t];
    const b = idx[t + 1];
    const c = idx[t + 2];
    if (z[a] <= 1e-6 || z[b] <= 1e-6 || z[c] <= 1e-6) continue;
    const x0 = u[a], y0 = v[a], z0 = z[a];
    const x1 = u[b], y1 = v[b], z1 = z[b];
    const x2 = u[c], y2 = v[c], z2 = z[c];
    const area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
    if (area === 0) continue;
    const s = area > 0 ? 1 : -1;
    const aa = area * s;
    const eps = -1e-6 * aa;
    const xmin = Math.max(0, Math.ceil(Math.min(x0, x1, x2) - 1e-6));
    const xmax = Math.min(width - 1, Math.floor(Math.max(x0, x1, x2) + 1e-6));
    const ymin = Math.max(0, Math.ceil(Math.min(y0, y1, y2) - 1e-6));
    const ymax = Math.min(height - 1, Math.floor(Math.max(y0, y1, y2) + 1e-6));
    for (let py = ymin; py <= ymax; py++) {
      for (let px = xmin; px <= xmax; px++) {
        const w0 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) * s;
        if (w0 < eps) continue;
        const w1 = ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)) * s;
        if (w1 < eps) continue;
        const w2 = ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) * s;
        if (w2 < eps) continue;
        const pz = (w0 * z0 + w1 * z1 + w2 * z2) / aa;
        const o = py * width + px;
        if (pz < depth[o]) {
          depth[o] = pz;
          covered[o] = 1;
          for (let ch = 0; ch < 3; ch++) {
            const col =
              (w0 * mesh.colors[a * 3 + ch] +
                w1 * mesh.colors[b * 3 + ch] +
                w2 * mesh.colors[c * 3 + ch]) /
              aa;
            image[o * 3 + ch] = Math.round(col * 255);
          }
        }
      }
    }
  }
  return { image, depth, covered };
}

/** normalized cross-correlation of two grayscale images */
export function ncc(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length || a.length === 0) return 0;
  let ma = 0;
  let mb = 0;
  for (let i = 0; i < a.length; i++) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.length;
  mb /= b.length;
  let num = 0;
  let da = 0;
  let db = 0;
  for (let i = 0; i < a.length; i++) {
    const xa = a[i] - ma;
    const xb = b[i] - mb;
    num += xa * xb;
    da += xa * xa;
    db += xb * xb;
  }
  const den = Math.sqrt(da * db);
  return den > 0 ? num / den : 0;
}

export function toGray(rgb: Uint8ClampedArray | Uint8Array, pixels: number): Float64Array {
  const out = new Float64Array(pixels);
  for (let i = 0; i < pixels; i++) {
    out[i] = (rgb[i * 3] + rgb[i * 3 + 1] + rgb[i * 3 + 2]) / 3;
  }
  return out;
}
