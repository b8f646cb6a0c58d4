/** three.js scene construction: room geometry, blocked-cell overlay, stick
 * figures, and click raycasting onto placeable surfaces. */

import * as THREE from "three";
import { bonePairs, forwardKinematics, devectorizeFrame, type Skeleton } from "./fk";
import type { GridDoc, SceneDoc, Vec3 } from "./types";

export const SURFACE_LAYER = "placeable";

/** Floor plane + labelled obstacle boxes; every mesh is click-placeable. */
export function buildRoom(scene: SceneDoc): THREE.Group {
  const group = new THREE.Group();
  group.name = "room";
  const [minX, minZ] = scene.bounds.min;
  const [maxX, maxZ] = scene.bounds.max;
  const floor = new THREE.Mesh(
    new THREE.PlaneGeometry(maxX - minX, maxZ - minZ),
    new THREE.MeshLambertMaterial({ color: 0xdcd6c8 }),
  );
  floor.rotation.x = -Math.PI / 2;
  floor.position.set((minX + maxX) / 2, scene.floor_height, (minZ + maxZ) / 2);
  floor.name = "floor";
  floor.userData[SURFACE_LAYER] = true;
  group.add(floor);

  for (const box of scene.obstacles) {
    const size = [box.max[0] - box.min[0], box.max[1] - box.min[1], box.max[2] - box.min[2]];
    const mesh = new THREE.Mesh(
      new THREE.BoxGeometry(size[0], size[1], size[2]),
      new THREE.MeshLambertMaterial({ color: 0x8aa2c8 }),
    );
    mesh.position.set(
      (box.min[0] + box.max[0]) / 2,
      (box.min[1] + box.max[1]) / 2,
      (box.min[2] + box.max[2]) / 2,
    );
    mesh.name = `obstacle:${box.label}`;
    mesh.userData[SURFACE_LAYER] = true;
    group.add(mesh);
  }
  return group;
}

/** Semi-transparent quads over blocked occupancy cells. */
export function buildBlockedOverlay(grid: GridDoc, floorHeight: number): THREE.Group {
  const group = new THREE.Group();
  group.name = "blocked-cells";
  const geometry = new THREE.PlaneGeometry(grid.cell_size, grid.cell_size);
  const material = new THREE.MeshBasicMaterial({
    color: 0xc05b4d,
    transparent: true,
    opacity: 0.35,
    depthWrite: false,
  });
  for (const [i, j] of grid.blocked_cells) {
    const quad = new THREE.Mesh(geometry, material);
    quad.rotation.x = -Math.PI / 2;
    quad.position.set(
      grid.origin[0] + (i + 0.5) * grid.cell_size,
      floorHeight + 0.005,
      grid.origin[1] + (j + 0.5) * grid.cell_size,
    );
    group.add(quad);
  }
  return group;
}

export interface StickFigure {
  lines: THREE.LineSegments;
  joints: THREE.Points;
  group: THREE.Group;
  pairs: [number, number][];
}

/** Stick figure drawn as bone segments plus joint points. */
export function makeStickFigure(skeleton: Skeleton, color = 0x202020, opacity = 1.0): StickFigure {
  const pairs = bonePairs(skeleton);
  const linePositions = new Float32Array(pairs.length * 2 * 3);
  const lineGeometry = new THREE.BufferGeometry();
  lineGeometry.setAttribute("position", new THREE.BufferAttribute(linePositions, 3));
  const lines = new THREE.LineSegments(
    lineGeometry,
    new THREE.LineBasicMaterial({ color, transparent: opacity < 1, opacity }),
  );
  const jointPositions = new Float32Array(skeleton.names.length * 3);
  const jointGeometry = new THREE.BufferGeometry();
  jointGeometry.setAttribute("position", new THREE.BufferAttribute(jointPositions, 3));
  const joints = new THREE.Points(
    jointGeometry,
    new THREE.PointsMaterial({ color, size: 0.03, transparent: opacity < 1, opacity }),
  );
  const group = new THREE.Group();
  group.add(lines);
  group.add(joints);
  return { lines, joints, group, pairs };
}

/** Pose the stick figure from a 219-vector frame. */
export function updateStickFigure(figure: StickFigure, skeleton: Skeleton, frame: ArrayLike<number>): void {
  const positions = forwardKinematics(skeleton, devectorizeFrame(frame));
  const lp = figure.lines.geometry.getAttribute("position") as THREE.BufferAttribute;
  figure.pairs.forEach(([a, b], k) => {
    lp.setXYZ(2 * k, positions[a][0], positions[a][1], positions[a][2]);
    lp.setXYZ(2 * k + 1, positions[b][0], positions[b][1], positions[b][2]);
  });
  lp.needsUpdate = true;
  const jp = figure.joints.geometry.getAttribute("position") as THREE.BufferAttribute;
  positions.forEach((p, k) => jp.setXYZ(k, p[0], p[1], p[2]));
  jp.needsUpdate = true;
  figure.lines.geometry.computeBoundingSphere();
}

/** Raycast a normalized pointer position against placeable surfaces.
 * Returns the world-space hit point, or null when nothing is hit. */
export function pickSurfacePoint(
  pointer: { x: number; y: number },
  camera: THREE.Camera,
  room: THREE.Group,
  raycaster = new THREE.Raycaster(),
): Vec3 | null {
  raycaster.setFromCamera(new THREE.Vector2(pointer.x, pointer.y), camera);
  const hits = raycaster.intersectObjects(room.children, false);
  for (const hit of hits) {
    if (hit.object.userData[SURFACE_LAYER]) {
      return [hit.point.x, hit.point.y, hit.point.z];
    }
  }
  return null;
}

/** Small marker sphere for a placed keypoint. */
export function makeKeypointMarker(position: Vec3, color: number): THREE.Mesh {
  const marker = new THREE.Mesh(
    new THREE.SphereGeometry(0.04, 12, 12),
    new THREE.MeshBasicMaterial({ color }),
  );
  marker.position.set(position[0], position[1], position[2]);
  return marker;
}
