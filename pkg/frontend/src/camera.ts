/**
 * Viewer camera state in the source-camera frame (x right, y down,
 * z forward). The world frame is the frame of the camera that captured the
 * photo, so the identity pose reproduces the input view. Exported poses use
 * the same camera-to-world convention the render CLI consumes.
 */

export type Mat3 = [number, number, number, number, number, number, number, number, number];
export type Vec3 = [number, number, number];

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
}

export interface PoseTrajectory {
  type: "poses";
  frames: number;
  width: number;
  height: number;
  intrinsics: Intrinsics;
  poses: { rotation: number[][]; translation: number[] }[];
}

export const IDENTITY: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];

export function matMul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array(9).fill(0) as number[];
  for (let r = 0; r < 3; r++)
    for (let c = 0; c < 3; c++) {
      let s = 0;
      for (let k = 0; k < 3; k++) s += a[r * 3 + k] * b[k * 3 + c];
      out[r * 3 + c] = s;
    }
  return out as Mat3;
}

export function matVec(a: Mat3, v: Vec3): Vec3 {
  return [
    a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
    a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
    a[6] * v[0] + a[7] * v[1] + a[8] * v[2],
  ];
}

export function transpose(a: Mat3): Mat3 {
  return [a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]];
}

/** rotation about the world y axis (yaw, radians) */
export function yaw(angle: number): Mat3 {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  return [c, 0, s, 0, 1, 0, -s, 0, c];
}

/** rotation about the world x axis (pitch, radians) */
export function pitch(angle: number): Mat3 {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  return [1, 0, 0, 0, c, -s, 0, s, c];
}

export interface ViewerCameraOptions {
  intrinsics: Intrinsics;
  width: number;
  height: number;
  /** distance of the orbit pivot along the optical axis */
  focusDepth: number;
  /** device-motion sway amplitude, scene units; 0 disables */
  parallaxAmplitude?: number;
}

export class ViewerCamera {
  readonly intrinsics: Intrinsics;
  readonly width: number;
  readonly height: number;
  focusDepth: number;
  parallaxAmplitude: number;
  private yawAngle = 0;
  private pitchAngle = 0;
  private dollyOffset = 0;
  private sway: Vec3 = [0, 0, 0];

  constructor(options: ViewerCameraOptions) {
    this.intrinsics = options.intrinsics;
    this.width = options.width;
    this.height = options.height;
    this.focusDepth = options.focusDepth;
    this.parallaxAmplitude = Math.max(0, options.parallaxAmplitude ?? 0);
  }

  orbitBy(dyaw: number, dpitch: number): void {
    this.yawAngle += dyaw;
    this.pitchAngle = Math.max(-1.2, Math.min(1.2, this.pitchAngle + dpitch));
  }

  dollyBy(dz: number): void {
    // never dolly through the pivot
    this.dollyOffset = Math.min(this.focusDepth * 0.9, this.dollyOffset + dz);
  }

  /** normalized device tilt in [-1, 1] per axis scales the sway */
  setSway(nx: number, ny: number): void {
    const a = this.parallaxAmplitude;
    this.sway = a > 0 ? [nx * a, ny * a, 0] : [0, 0, 0];
  }

  reset(): void {
    this.yawAngle = 0;
    this.pitchAngle = 0;
    this.dollyOffset = 0;
    this.sway = [0, 0, 0];
  }

  /** camera-to-world rotation and translation */
  pose(): { rotation: Mat3; translation: Vec3 } {
    const rotation = matMul(yaw(this.yawAngle), pitch(this.pitchAngle));
    const pivot: Vec3 = [0, 0, this.focusDepth];
    const back = matVec(rotation, [
      this.sway[0],
      this.sway[1],
      this.dollyOffset - this.focusDepth,
    ]);
    const translation: Vec3 = [pivot[0] + back[0], pivot[1] + back[1], pivot[2] + back[2]];
    return { rotation, translation };
  }

  /** world point -> pixel coordinates + camera depth */
  project(p: Vec3): { u: number; v: number; z: number } {
    const { rotation, translation } = this.pose();
    const rt = transpose(rotation);
    const d: Vec3 = [p[0] - translation[0], p[1] - translation[1], p[2] - translation[2]];
    const cam = matVec(rt, d);
    const { fx, fy, cx, cy } = this.intrinsics;
    return { u: (fx * cam[0]) / cam[2] + cx, v: (fy * cam[1]) / cam[2] + cy, z: cam[2] };
  }

  exportTrajectory(): PoseTrajectory {
    const { rotation, translation } = this.pose();
    return {
      type: "poses",
      frames: 1,
      width: this.width,
      height: this.height,
      intrinsics: { ...this.intrinsics },
      poses: [
        {
          rotation: [
            [rotation[0], rotation[1], rotation[2]],
            [rotation[3], rotation[4], rotation[5]],
            [rotation[6], rotation[7], rotation[8]],
          ],
          translation: [...translation],
        },
      ],
    };
  }
}

export function defaultIntrinsics(width: number, height: number): Intrinsics {
  const f = 0.8 * Math.max(width, height);
  return { fx: f, fy: f, cx: width / 2, cy: height / 2 };
}

/** orthonormality check used by tests and by pose-file validation */
export function rotationValid(r: Mat3, tol = 1e-6): boolean {
  const rt = transpose(r);
  const id = matMul(r, rt);
  for (let i = 0; i < 9; i++) {
    if (Math.abs(id[i] - IDENTITY[i]) > tol) return false;
  }
  const det =
    r[0] * (r[4] * r[8] - r[5] * r[7]) -
    r[1] * (r[3] * r[8] - r[5] * r[6]) +
    r[2] * (r[3] * r[7] - r[4] * r[6]);
  return Math.abs(det - 1) < tol;
}
