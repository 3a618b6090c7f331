/** App wiring: file/URL loading, input controls, stats panel, pose export. */

import { parseGlb, GlbError, type ParsedMesh } from "./glb.js";
import { ViewerCamera, defaultIntrinsics } from "./camera.js";
import { MeshView } from "./viewer.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const statsEl = document.getElementById("stats") as HTMLElement;
const poseEl = document.getElementById("pose") as HTMLElement;
const errorEl = document.getElementById("error") as HTMLElement;
const fileInput = document.getElementById("file") as HTMLInputElement;
const layersEl = document.getElementById("layers") as HTMLElement;
const amplitudeInput = document.getElementById("amplitude") as HTMLInputElement;
const downloadBtn = document.getElementById("download-pose") as HTMLButtonElement;
const resetBtn = document.getElementById("reset") as HTMLButtonElement;

const view = new MeshView(canvas);
let camera: ViewerCamera | null = null;

function fail(message: string): void {
  errorEl.textContent = message;
  errorEl.style.display = "block";
}

function clearError(): void {
  errorEl.style.display = "none";
}

function meshExtent(m: ParsedMesh): { focus: number } {
  let minZ = Infinity;
  let maxZ = -Infinity;
  for (let i = 0; i < m.vertexCount; i++) {
    const z = m.positions[i * 3 + 2];
    if (z < minZ) minZ = z;
    if (z > maxZ) maxZ = z;
  }
  return { focus: Math.max(0.5, (minZ + maxZ) / 2) };
}

function loadMesh(buffer: ArrayBuffer, name: string): void {
  clearError();
  let parsed: ParsedMesh;
  try {
    parsed = parseGlb(buffer);
  } catch (err) {
    fail(err instanceof GlbError ? `cannot load ${name}: ${err.message}` : String(err));
    return;
  }
  const w = canvas.width;
  const h = canvas.height;
  camera = new ViewerCamera({
    intrinsics: defaultIntrinsics(w, h),
    width: w,
    height: h,
    focusDepth: meshExtent(parsed).focus,
    parallaxAmplitude: parseFloat(amplitudeInput.value) || 0,
  });
  view.setMesh(parsed);
  statsEl.textContent =
    `${parsed.triangleCount.toLocaleString()} triangles / ` +
    `${parsed.vertexCount.toLocaleString()} vertices / ` +
    `${parsed.layerCount} layer${parsed.layerCount === 1 ? "" : "s"}`;
  buildLayerToggles(parsed.layerCount);
  redraw();
}

function buildLayerToggles(count: number): void {
  layersEl.textContent = count > 1 ? "layers: " : "";
  if (count <= 1) return;
  const visible = new Array(count).fill(true);
  for (let i = 0; i < count; i++) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => {
      visible[i] = box.checked;
      view.setVisibleLayers(visible);
      redraw();
    });
    label.append(box, document.createTextNode(i === 0 ? "captured" : `sheet ${i}`));
    layersEl.append(label);
  }
}

function redraw(): void {
  if (!camera) return;
  view.render(camera);
  const pose = camera.exportTrajectory().poses[0];
  const fmt = (v: number) => v.toFixed(4);
  poseEl.textContent =
    `t = [${pose.translation.map(fmt).join(", ")}]\n` +
    pose.rotation.map((row) => `[${row.map(fmt).join(", ")}]`).join("\n");
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (file) loadMesh(await file.arrayBuffer(), file.name);
});

const params = new URLSearchParams(window.location.search);
const url = params.get("glb");
if (url) {
  fetch(url)
    .then((r) => {
      if (!r.ok) throw new GlbError(`HTTP ${r.status}`);
      return r.arrayBuffer();
    })
    .then((buf) => loadMesh(buf, url))
    .catch((err) => fail(`cannot fetch ${url}: ${err.message ?? err}`));
}

let dragging = false;
let lastX = 0;
let lastY = 0;
canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  lastX = e.clientX;
  lastY = e.clientY;
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointermove", (e) => {
  if (!dragging || !camera) return;
  camera.orbitBy((e.clientX - lastX) * 0.005, (e.clientY - lastY) * 0.005);
  lastX = e.clientX;
  lastY = e.clientY;
  redraw();
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
});
canvas.addEventListener(
  "wheel",
  (e) => {
    if (!camera) return;
    e.preventDefault();
    camera.dollyBy(e.deltaY * 0.001);
    redraw();
  },
  { passive: false },
);

window.addEventListener("deviceorientation", (e) => {
  if (!camera || camera.parallaxAmplitude <= 0) return;
  const nx = Math.max(-1, Math.min(1, (e.gamma ?? 0) / 45));
  const ny = Math.max(-1, Math.min(1, (e.beta ?? 0) / 45));
  camera.setSway(nx, ny);
  redraw();
});

amplitudeInput.addEventListener("input", () => {
  if (!camera) return;
  camera.parallaxAmplitude = Math.max(0, parseFloat(amplitudeInput.value) || 0);
  if (camera.parallaxAmplitude === 0) camera.setSway(0, 0);
  redraw();
});

resetBtn.addEventListener("click", () => {
  camera?.reset();
  redraw();
});

downloadBtn.addEventListener("click", () => {
  if (!camera) return;
  const blob = new Blob([JSON.stringify(camera.exportTrajectory(), null, 2)], {
    type: "application/json",
  });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "pose.json";
  a.click();
  URL.revokeObjectURL(a.href);
});
