/**
 * WebGL presentation of a parsed mesh with per-vertex colors. Falls back to
 * the CPU rasterizer on contexts without WebGL (and in tests).
 */

import { filterByLayers, type ParsedMesh } from "./glb.js";
import type { ViewerCamera, Vec3 } from "./camera.js";
import { transpose, matVec } from "./camera.js";
import { renderMesh } from "./raster.js";

const VERTEX_SRC = `
attribute vec3 aPosition;
attribute vec3 aColor;
uniform mat4 uClipFromWorld;
varying vec3 vColor;
void main() {
  vColor = aColor;
  gl_Position = uClipFromWorld * vec4(aPosition, 1.0);
}
`;

const FRAGMENT_SRC = `
precision mediump float;
varying vec3 vColor;
void main() {
  gl_FragColor = vec4(vColor, 1.0);
}
`;

/** column-major 4x4 clip-from-world matrix for the pinhole camera */
export function clipFromWorld(
  camera: ViewerCamera,
  near = 0.01,
  far = 100.0,
): Float32Array {
  const { fx, fy, cx, cy } = camera.intrinsics;
  const w = camera.width;
  const h = camera.height;
  const { rotation, translation } = camera.pose();
  const rt = transpose(rotation);
  const t: Vec3 = matVec(rt, translation);
  // view: cam = rt * world - rt * translation
  const view = [
    rt[0], rt[3], rt[6], 0,
    rt[1], rt[4], rt[7], 0,
    rt[2], rt[5], rt[8], 0,
    -t[0], -t[1], -t[2], 1,
  ];
  // projection per the pipeline's pixel convention, y flipped for GL
  const proj = [
    (2 * fx) / w, 0, 0, 0,
    0, -(2 * fy) / h, 0, 0,
    (2 * cx) / w - 1, 1 - (2 * cy) / h, (far + near) / (far - near), 1,
    0, 0, (-2 * far * near) / (far - near), 0,
  ];
  const out = new Float32Array(16);
  for (let r = 0; r < 4; r++)
    for (let c = 0; c < 4; c++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += proj[k * 4 + r] * view[c * 4 + k];
      out[c * 4 + r] = s;
    }
  return out;
}

export class MeshView {
  private gl: WebGLRenderingContext | null;
  private canvas: HTMLCanvasElement;
  private program: WebGLProgram | null = null;
  private indexCount = 0;
  private uClipFromWorld: WebGLUniformLocation | null = null;
  private mesh: ParsedMesh | null = null;
  private indexBuffer: WebGLBuffer | null = null;
  private activeIndices: Uint32Array | null = null;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    this.gl = canvas.getContext("webgl");
    if (this.gl) this.initProgram(this.gl);
  }

  private initProgram(gl: WebGLRenderingContext): void {
    const compile = (kind: number, src: string) => {
      const shader = gl.createShader(kind)!;
      gl.shaderSource(shader, src);
      gl.compileShader(shader);
      if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
        throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
      }
      return shader;
    };
    const program = gl.createProgram()!;
    gl.attachShader(program, compile(gl.VERTEX_SHADER, VERTEX_SRC));
    gl.attachShader(program, compile(gl.FRAGMENT_SHADER, FRAGMENT_SRC));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
    }
    this.program = program;
    this.uClipFromWorld = gl.getUniformLocation(program, "uClipFromWorld");
  }

  setMesh(mesh: ParsedMesh): void {
    this.mesh = mesh;
    const gl = this.gl;
    if (!gl || !this.program) return;
    gl.useProgram(this.program);
    const bind = (name: string, data: Float32Array) => {
      const buf = gl.createBuffer();
      gl.bindBuffer(gl.ARRAY_BUFFER, buf);
      gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
      const loc = gl.getAttribLocation(this.program!, name);
      gl.enableVertexAttribArray(loc);
      gl.vertexAttribPointer(loc, 3, gl.FLOAT, false, 0, 0);
    };
    bind("aPosition", mesh.positions);
    bind("aColor", mesh.colors);
    this.indexBuffer = gl.createBuffer();
    this.uploadIndices(mesh.indices);
  }

  /** restrict drawing to triangles whose layers are all visible */
  setVisibleLayers(visible: boolean[]): void {
    if (!this.mesh) return;
    this.uploadIndices(filterByLayers(this.mesh, visible));
  }

  private uploadIndices(indices: Uint32Array): void {
    this.activeIndices = indices;
    this.indexCount = indices.length;
    const gl = this.gl;
    if (!gl || !this.indexBuffer) return;
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, indices, gl.STATIC_DRAW);
  }

  render(camera: ViewerCamera): void {
    const gl = this.gl;
    if (gl && this.program) {
      gl.viewport(0, 0, this.canvas.width, this.canvas.height);
      gl.clearColor(0.07, 0.07, 0.09, 1);
      gl.enable(gl.DEPTH_TEST);
      gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
      if (!this.indexCount) return;
      gl.useProgram(this.program);
      gl.uniformMatrix4fv(this.uClipFromWorld, false, clipFromWorld(camera));
      const ext = gl.getExtension("OES_element_index_uint");
      if (!ext) throw new Error("OES_element_index_uint unavailable");
      gl.drawElements(gl.TRIANGLES, this.indexCount, gl.UNSIGNED_INT, 0);
      return;
    }
    this.renderCpu(camera);
  }

  private renderCpu(camera: ViewerCamera): void {
    if (!this.mesh) return;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const w = this.canvas.width;
    const h = this.canvas.height;
    const { rotation, translation } = camera.pose();
    const active = this.activeIndices ?? this.mesh.indices;
    const result = renderMesh(
      { ...this.mesh, indices: active },
      camera.intrinsics,
      rotation,
      translation,
      w,
      h,
    );
    const rgba = ctx.createImageData(w, h);
    for (let i = 0; i < w * h; i++) {
      rgba.data[i * 4] = result.image[i * 3];
      rgba.data[i * 4 + 1] = result.image[i * 3 + 1];
      rgba.data[i * 4 + 2] = result.image[i * 3 + 2];
      rgba.data[i * 4 + 3] = 255;
    }
    ctx.putImageData(rgba, 0, 0);
  }
}
