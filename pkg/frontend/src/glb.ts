/**
 * Minimal binary glTF reader for ldiphoto meshes.
 *
 * Expects one mesh / one primitive with float32 POSITION and COLOR_0
 * attributes and u32 (or u16) indices. Positions are converted from glTF
 * axes (x right, y up, -z forward) into the source-camera frame the pipeline
 * works in (x right, y down, +z forward) by negating y and z.
 */

export interface ParsedMesh {
  /** source-camera-frame positions, 3 floats per vertex */
  positions: Float32Array;
  /** linear vertex colors in [0, 1], 3 floats per vertex */
  colors: Float32Array;
  indices: Uint32Array;
  vertexCount: number;
  triangleCount: number;
  /** optional per-vertex layer index (_LAYER attribute): 0 = captured
   *  surface, 1+ = synthesized sheets behind it */
  layers: Float32Array | null;
  layerCount: number;
}

const GLB_MAGIC = 0x46546c67;
const CHUNK_JSON = 0x4e4f534a;
const CHUNK_BIN = 0x004e4942;

interface GltfDoc {
  meshes?: { primitives?: GltfPrimitive[] }[];
  accessors?: GltfAccessor[];
  bufferViews?: GltfBufferView[];
}

interface GltfPrimitive {
  attributes?: Record<string, number>;
  indices?: number;
  mode?: number;
}

interface GltfAccessor {
  bufferView?: number;
  byteOffset?: number;
  componentType: number;
  count: number;
  type: string;
}

interface GltfBufferView {
  byteOffset?: number;
  byteLength: number;
}

export class GlbError extends Error {}

function accessorData(
  doc: GltfDoc,
  bin: DataView,
  index: number,
): { accessor: GltfAccessor; byteOffset: number } {
  const accessor = doc.accessors?.[index];
  if (!accessor) throw new GlbError(`accessor ${index} missing`);
  const view = doc.bufferViews?.[accessor.bufferView ?? -1];
  if (!view) throw new GlbError(`bufferView for accessor ${index} missing`);
  const byteOffset = (view.byteOffset ?? 0) + (accessor.byteOffset ?? 0);
  return { accessor, byteOffset };
}

function readVec3f(bin: DataView, byteOffset: number, count: number): Float32Array {
  const out = new Float32Array(count * 3);
  for (let i = 0; i < count * 3; i++) {
    out[i] = bin.getFloat32(byteOffset + i * 4, true);
  }
  return out;
}

export function parseGlb(data: ArrayBuffer): ParsedMesh {
  if (data.byteLength < 20) throw new GlbError("file too short to be a glb");
  const header = new DataView(data);
  if (header.getUint32(0, true) !== GLB_MAGIC) throw new GlbError("not a glb (bad magic)");
  const declared = header.getUint32(8, true);
  if (declared > data.byteLength) throw new GlbError("truncated glb (length field exceeds file)");

  let offset = 12;
  let jsonChunk: Uint8Array | null = null;
  let binChunk: DataView | null = null;
  while (offset + 8 <= data.byteLength) {
    const length = header.getUint32(offset, true);
    const kind = header.getUint32(offset + 4, true);
    offset += 8;
    if (offset + length > data.byteLength) throw new GlbError("truncated glb chunk");
    if (kind === CHUNK_JSON) jsonChunk = new Uint8Array(data, offset, length);
    else if (kind === CHUNK_BIN) binChunk = new DataView(data, offset, length);
    offset += length;
  }
  if (!jsonChunk || !binChunk) throw new GlbError("glb missing JSON or BIN chunk");

  let doc: GltfDoc;
  try {
    doc = JSON.parse(new TextDecoder().decode(jsonChunk)) as GltfDoc;
  } catch {
    throw new GlbError("glb JSON chunk is not valid JSON");
  }
  const prim = doc.meshes?.[0]?.primitives?.[0];
  if (!prim) throw new GlbError("glb holds no mesh primitive");
  if ((prim.mode ?? 4) !== 4) throw new GlbError("only triangle primitives are supported");
  const posIndex = prim.attributes?.POSITION;
  const colIndex = prim.attributes?.COLOR_0;
  if (posIndex === undefined) throw new GlbError("primitive has no POSITION attribute");
  if (colIndex === undefined) throw new GlbError("mesh has no vertex colors (COLOR_0)");

  const pos = accessorData(doc, binChunk, posIndex);
  const col = accessorData(doc, binChunk, colIndex);
  if (pos.accessor.componentType !== 5126 || pos.accessor.type !== "VEC3")
    throw new GlbError("POSITION must be float32 VEC3");
  if (col.accessor.componentType !== 5126 || col.accessor.type !== "VEC3")
    throw new GlbError("COLOR_0 must be float32 VEC3");
  if (col.accessor.count !== pos.accessor.count)
    throw new GlbError("POSITION and COLOR_0 counts differ");

  const positions = readVec3f(binChunk, pos.byteOffset, pos.accessor.count);
  // glTF axes -> source-camera axes
  for (let i = 0; i < pos.accessor.count; i++) {
    positions[i * 3 + 1] = -positions[i * 3 + 1];
    positions[i * 3 + 2] = -positions[i * 3 + 2];
  }
  const colors = readVec3f(binChunk, col.byteOffset, col.accessor.count);

  let indices: Uint32Array;
  if (prim.indices !== undefined) {
    const idx = accessorData(doc, binChunk, prim.indices);
    indices = new Uint32Array(idx.accessor.count);
    if (idx.accessor.componentType === 5125) {
      for (let i = 0; i < idx.accessor.count; i++)
        indices[i] = binChunk.getUint32(idx.byteOffset + i * 4, true);
    } else if (idx.accessor.componentType === 5123) {
      for (let i = 0; i < idx.accessor.count; i++)
        indices[i] = binChunk.getUint16(idx.byteOffset + i * 2, true);
    } else {
      throw new GlbError("unsupported index component type");
    }
  } else {
    indices = new Uint32Array(pos.accessor.count);
    for (let i = 0; i < indices.length; i++) indices[i] = i;
  }
  if (indices.length % 3 !== 0) throw new GlbError("index count is not a multiple of 3");

  let layers: Float32Array | null = null;
  let layerCount = 1;
  const layerIndex = prim.attributes?.["_LAYER"];
  if (layerIndex !== undefined) {
    const lay = accessorData(doc, binChunk, layerIndex);
    if (lay.accessor.componentType !== 5126 || lay.accessor.type !== "SCALAR")
      throw new GlbError("_LAYER must be float32 SCALAR");
    layers = new Float32Array(lay.accessor.count);
    for (let i = 0; i < lay.accessor.count; i++) {
      layers[i] = binChunk.getFloat32(lay.byteOffset + i * 4, true);
      if (layers[i] + 1 > layerCount) layerCount = layers[i] + 1;
    }
  }

  return {
    positions,
    colors,
    indices,
    vertexCount: pos.accessor.count,
    triangleCount: indices.length / 3,
    layers,
    layerCount,
  };
}

/**
 * Triangles whose vertices all belong to visible layers. Meshes without
 * layer data pass through untouched.
 */
export function filterByLayers(mesh: ParsedMesh, visible: boolean[]): Uint32Array {
  if (!mesh.layers) return mesh.indices;
  const keep: number[] = [];
  for (let t = 0; t < mesh.indices.length; t += 3) {
    let ok = true;
    for (let k = 0; k < 3; k++) {
      const layer = mesh.layers[mesh.indices[t + k]];
      if (!visible[layer]) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push(mesh.indices[t], mesh.indices[t + 1], mesh.indices[t + 2]);
  }
  return new Uint32Array(keep);
}
