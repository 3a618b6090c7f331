import { describe, expect, it } from "vitest";

import {
  ViewerCamera,
  defaultIntrinsics,
  rotationValid,
  type Mat3,
} from "../src/camera.js";

function makeCamera(amplitude = 0): ViewerCamera {
  return new ViewerCamera({
    intrinsics: defaultIntrinsics(128, 128),
    width: 128,
    height: 128,
    focusDepth: 2.0,
    parallaxAmplitude: amplitude,
  });
}

describe("ViewerCamera", () => {
  it("starts at the identity pose (zero input, static view)", () => {
    const { rotation, translation } = makeCamera().pose();
    expect(rotation).toEqual([1, 0, 0, 0, 1, 0, 0, 0, 1]);
    expect(translation.map((v) => Math.abs(v) < 1e-12)).toEqual([true, true, true]);
  });

  it("keeps the rotation orthonormal while orbiting", () => {
    const cam = makeCamera();
    cam.orbitBy(0.5, -0.2);
    cam.orbitBy(-1.1, 0.6);
    cam.dollyBy(0.3);
    expect(rotationValid(cam.pose().rotation as Mat3)).toBe(true);
  });

  it("orbits around the focus point", () => {
    const cam = makeCamera();
    cam.orbitBy(0.4, 0.1);
    const { u, v } = cam.project([0, 0, 2.0]);
    expect(u).toBeCloseTo(64, 6); // pivot stays at the principal point
    expect(v).toBeCloseTo(64, 6);
  });

  it("clamps the dolly short of the pivot", () => {
    const cam = makeCamera();
    cam.dollyBy(100);
    const { translation } = cam.pose();
    expect(translation[2]).toBeLessThan(2.0);
  });

  it("amplitude 0 disables sway", () => {
    const cam = makeCamera(0);
    cam.setSway(1, 1);
    const { translation } = cam.pose();
    expect(translation).toEqual([0, 0, 0]);
  });

  it("positive amplitude sways by at most the amplitude", () => {
    const cam = makeCamera(0.05);
    cam.setSway(1, -0.5);
    const { translation } = cam.pose();
    expect(translation[0]).toBeCloseTo(0.05, 9);
    expect(translation[1]).toBeCloseTo(-0.025, 9);
  });

  it("exports the documented pose-trajectory schema", () => {
    const cam = makeCamera();
    cam.orbitBy(0.2, 0.05);
    const doc = cam.exportTrajectory();
    expect(doc.type).toBe("poses");
    expect(doc.frames).toBe(1);
    expect(doc.width).toBe(128);
    expect(doc.height).toBe(128);
    expect(Object.keys(doc.intrinsics).sort()).toEqual(["cx", "cy", "fx", "fy"]);
    expect(doc.poses).toHaveLength(1);
    expect(doc.poses[0].rotation).toHaveLength(3);
    expect(doc.poses[0].rotation[0]).toHaveLength(3);
    expect(doc.poses[0].translation).toHaveLength(3);
    const flat = doc.poses[0].rotation.flat() as unknown as Mat3;
    expect(rotationValid(flat)).toBe(true);
    expect(JSON.parse(JSON.stringify(doc))).toEqual(doc); // JSON-safe
  });

  it("reset returns to the identity pose", () => {
    const cam = makeCamera(0.1);
    cam.orbitBy(1, 0.4);
    cam.dollyBy(0.5);
    cam.setSway(0.7, 0.7);
    cam.reset();
    const { rotation, translation } = cam.pose();
    expect(rotation).toEqual([1, 0, 0, 0, 1, 0, 0, 0, 1]);
    expect(translation.every((v) => Math.abs(v) < 1e-12)).toBe(true);
  });
});
