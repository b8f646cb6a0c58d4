import { describe, expect, it } from "vitest";
import {
  PHASE_COLORS,
  PhaseLogError,
  phaseAt,
  timelineSegments,
  validatePhaseLog,
} from "../src/timeline";
import type { PhaseEntry } from "../src/types";

const ENTRIES: PhaseEntry[] = [
  { phase: "Walk", start: 0, end: 40, ref: 0 },
  { phase: "TransitionIn", start: 40, end: 100, ref: 0 },
  { phase: "TransitionOut", start: 100, end: 160, ref: 0 },
  { phase: "Walk", start: 160, end: 200, ref: 1 },
];

describe("validatePhaseLog", () => {
  it("accepts an exact half-open tiling", () => {
    expect(() => validatePhaseLog(ENTRIES, 200)).not.toThrow();
  });

  it("rejects a gap", () => {
    const gapped = [ENTRIES[0], { ...ENTRIES[1], start: 45 }];
    expect(() => validatePhaseLog(gapped, 100)).toThrow(PhaseLogError);
  });

  it("rejects an overlap", () => {
    const overlapped = [ENTRIES[0], { ...ENTRIES[1], start: 35 }];
    expect(() => validatePhaseLog(overlapped, 100)).toThrow(PhaseLogError);
  });

  it("rejects an empty entry", () => {
    expect(() => validatePhaseLog([{ phase: "Walk", start: 0, end: 0, ref: null }], 0)).toThrow(
      PhaseLogError,
    );
  });

  it("rejects a total-frame mismatch", () => {
    expect(() => validatePhaseLog(ENTRIES, 250)).toThrow(PhaseLogError);
  });
});

describe("timelineSegments", () => {
  it("partitions [0, 1] in order with phase colors", () => {
    const segments = timelineSegments(ENTRIES, 200);
    expect(segments).toHaveLength(ENTRIES.length);
    let cursor = 0;
    let total = 0;
    for (const [i, seg] of segments.entries()) {
      expect(seg.left).toBeCloseTo(cursor, 12);
      expect(seg.width).toBeGreaterThan(0);
      expect(seg.color).toBe(PHASE_COLORS[ENTRIES[i].phase]);
      cursor += seg.width;
      total += seg.width;
    }
    expect(total).toBeCloseTo(1.0, 12);
  });
});

describe("phaseAt", () => {
  it("maps frames to entries with half-open bounds", () => {
    expect(phaseAt(ENTRIES, 0)?.phase).toBe("Walk");
    expect(phaseAt(ENTRIES, 39)?.phase).toBe("Walk");
    expect(phaseAt(ENTRIES, 40)?.phase).toBe("TransitionIn");
    expect(phaseAt(ENTRIES, 199)?.ref).toBe(1);
    expect(phaseAt(ENTRIES, 200)).toBeNull();
    expect(phaseAt(ENTRIES, -1)).toBeNull();
  });
});
