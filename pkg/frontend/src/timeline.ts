/** Phase-log timeline: validation and colored segment layout. */

import type { Phase, PhaseEntry } from "./types";

export class PhaseLogError extends Error {}

export const PHASE_COLORS: Record<Phase, string> = {
  Walk: "#4c9f70",
  TransitionIn: "#d98f3e",
  TransitionOut: "#7d6bb5",
};

/** Half-open entries must tile [0, totalFrames) exactly, in order. */
export function validatePhaseLog(entries: PhaseEntry[], totalFrames: number): void {
  let cursor = 0;
  for (const e of entries) {
    if (e.start !== cursor) {
      throw new PhaseLogError(`phase ${e.phase} starts at ${e.start}, expected ${cursor}`);
    }
    if (e.end <= e.start) {
      throw new PhaseLogError(`phase ${e.phase} has empty range [${e.start}, ${e.end})`);
    }
    cursor = e.end;
  }
  if (cursor !== totalFrames) {
    throw new PhaseLogError(`phases cover ${cursor} frames, clip has ${totalFrames}`);
  }
}

export interface TimelineSegment {
  phase: Phase;
  ref: number | null;
  /** fraction of the timeline width, in [0, 1] */
  left: number;
  width: number;
  color: string;
}

/** Segment layout covering the full [0, 1] width with no gaps or overlap. */
export function timelineSegments(entries: PhaseEntry[], totalFrames: number): TimelineSegment[] {
  validatePhaseLog(entries, totalFrames);
  return entries.map((e) => ({
    phase: e.phase,
    ref: e.ref,
    left: e.start / totalFrames,
    width: (e.end - e.start) / totalFrames,
    color: PHASE_COLORS[e.phase],
  }));
}

/** Entry containing a frame index, or null when out of range. */
export function phaseAt(entries: PhaseEntry[], frame: number): PhaseEntry | null {
  for (const e of entries) {
    if (frame >= e.start && frame < e.end) return e;
  }
  return null;
}
