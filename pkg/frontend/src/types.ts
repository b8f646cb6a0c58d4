/** Payload shapes of the motionloom HTTP API (see the service JSON schemas). */

export type Vec3 = [number, number, number];

export interface JointDoc {
  name: string;
  parent: string | null;
  offset: Vec3;
}

export interface SkeletonDoc {
  joints: JointDoc[];
  landmarks: Record<string, string>;
}

export interface FkSample {
  frame: number[]; // 219 numbers
  positions: Vec3[]; // 24 world positions
}

export interface SkeletonResponse {
  skeleton: SkeletonDoc;
  fk_sample: FkSample;
}

export interface ObstacleDoc {
  label: string;
  min: Vec3;
  max: Vec3;
}

export interface SceneDoc {
  floor_height: number;
  bounds: { min: [number, number]; max: [number, number] };
  obstacles: ObstacleDoc[];
}

export interface GridDoc {
  origin: [number, number];
  cell_size: number;
  shape: [number, number];
  blocked_cells: [number, number][];
}

export interface SceneResponse {
  scene: SceneDoc;
  grid: GridDoc;
}

export type Role = "root" | "left_toe" | "right_toe" | "left_hand" | "right_hand" | "head";

export const ROLES: Role[] = ["root", "left_toe", "right_toe", "left_hand", "right_hand", "head"];

export interface Keypoint {
  role: Role;
  position: Vec3;
}

export interface ActionDoc {
  tag: string;
  targets: Keypoint[];
}

export interface AnchorDoc {
  frame: number[];
  residuals_cm: number[];
  prior_energy: number;
}

export type SolveAnchorResponse =
  | { reachable: true; anchor: AnchorDoc }
  | { reachable: false; error: string; best_residuals_cm: number[] };

export type Phase = "Walk" | "TransitionIn" | "TransitionOut";

export interface PhaseEntry {
  phase: Phase;
  start: number; // inclusive
  end: number; // exclusive
  ref: number | null;
}

export interface PhaseLogDoc {
  entries: PhaseEntry[];
}

export interface ReportDoc {
  foot_skate_cm_per_frame: number;
  keypoint_error_cm: number[];
  path_deviation_m: { max: number; mean: number };
  penetration_frames: number;
  frames_total: number;
}

export interface MotionDoc {
  frame_rate: number;
  frames: number[][];
}

export interface JobDoc {
  id: string;
  kind: "synthesize";
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  result: string | null;
  error: string | null;
}

export interface MotionResult {
  motion: MotionDoc;
  phase_log: PhaseLogDoc;
  report: ReportDoc;
  plan: unknown;
}
