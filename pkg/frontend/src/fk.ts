/** Client-side forward kinematics over the server-provided skeleton.
 *
 * Frames are 219-vectors: root translation (3) followed by 24 row-major
 * 3x3 rotation matrices. Joint 0 is the root; every child position is
 * parent position + parent world rotation applied to the child's bind
 * offset. This must agree with the server's FK — verified on load against
 * the fk_sample handshake (see `handshakeError`).
 */

import type { FkSample, SkeletonDoc, Vec3 } from "./types";

export const NUM_JOINTS = 24;
export const FRAME_DIM = 3 + NUM_JOINTS * 9;

export class FrameFormatError extends Error {}
export class SkeletonFormatError extends Error {}

export interface Skeleton {
  names: string[];
  parents: number[]; // -1 for the root
  offsets: Vec3[];
  landmarks: Record<string, number>; // role -> joint index
}

export function parseSkeleton(doc: SkeletonDoc): Skeleton {
  if (doc.joints.length !== NUM_JOINTS) {
    throw new SkeletonFormatError(`expected ${NUM_JOINTS} joints, got ${doc.joints.length}`);
  }
  const names = doc.joints.map((j) => j.name);
  const index = new Map(names.map((n, i) => [n, i]));
  const parents = doc.joints.map((j, i) => {
    if (j.parent === null) return -1;
    const p = index.get(j.parent);
    if (p === undefined || p >= i) {
      throw new SkeletonFormatError(`joint ${j.name} has invalid parent ${j.parent}`);
    }
    return p;
  });
  if (parents[0] !== -1) throw new SkeletonFormatError("joint 0 must be the root");
  const landmarks: Record<string, number> = {};
  for (const [role, name] of Object.entries(doc.landmarks)) {
    const i = index.get(name);
    if (i === undefined) throw new SkeletonFormatError(`landmark ${role} -> unknown joint ${name}`);
    landmarks[role] = i;
  }
  return { names, parents, offsets: doc.joints.map((j) => j.offset), landmarks };
}

export interface Pose {
  translation: Vec3;
  rotations: Float64Array; // 24 * 9, row-major per joint
}

export function devectorizeFrame(frame: ArrayLike<number>): Pose {
  if (frame.length !== FRAME_DIM) {
    throw new FrameFormatError(`expected ${FRAME_DIM} numbers, got ${frame.length}`);
  }
  const rotations = new Float64Array(NUM_JOINTS * 9);
  for (let i = 0; i < NUM_JOINTS * 9; i++) rotations[i] = Number(frame[3 + i]);
  return {
    translation: [Number(frame[0]), Number(frame[1]), Number(frame[2])],
    rotations,
  };
}

/** World positions of all 24 joints; mirrors the server implementation. */
export function forwardKinematics(skeleton: Skeleton, pose: Pose): Vec3[] {
  const positions: Vec3[] = new Array(NUM_JOINTS);
  const world = new Float64Array(NUM_JOINTS * 9);
  positions[0] = [...pose.translation];
  world.set(pose.rotations.subarray(0, 9), 0);
  for (let c = 1; c < NUM_JOINTS; c++) {
    const p = skeleton.parents[c];
    const pw = p * 9;
    const [ox, oy, oz] = skeleton.offsets[c];
    const base = positions[p];
    positions[c] = [
      base[0] + world[pw] * ox + world[pw + 1] * oy + world[pw + 2] * oz,
      base[1] + world[pw + 3] * ox + world[pw + 4] * oy + world[pw + 5] * oz,
      base[2] + world[pw + 6] * ox + world[pw + 7] * oy + world[pw + 8] * oz,
    ];
    // world[c] = world[p] @ local[c]
    const cl = c * 9;
    for (let r = 0; r < 3; r++) {
      for (let k = 0; k < 3; k++) {
        world[cl + r * 3 + k] =
          world[pw + r * 3] * pose.rotations[cl + k] +
          world[pw + r * 3 + 1] * pose.rotations[cl + 3 + k] +
          world[pw + r * 3 + 2] * pose.rotations[cl + 6 + k];
      }
    }
  }
  return positions;
}

/** Max per-joint distance (m) between client FK and the server sample. */
export function handshakeError(skeleton: Skeleton, sample: FkSample): number {
  const positions = forwardKinematics(skeleton, devectorizeFrame(sample.frame));
  let worst = 0;
  for (let i = 0; i < NUM_JOINTS; i++) {
    const [x, y, z] = positions[i];
    const [sx, sy, sz] = sample.positions[i];
    worst = Math.max(worst, Math.hypot(x - sx, y - sy, z - sz));
  }
  return worst;
}

export const HANDSHAKE_TOLERANCE_M = 1e-4;

/** Bone (parent, child) index pairs for stick-figure rendering. */
export function bonePairs(skeleton: Skeleton): [number, number][] {
  const pairs: [number, number][] = [];
  for (let c = 1; c < NUM_JOINTS; c++) pairs.push([skeleton.parents[c], c]);
  return pairs;
}
