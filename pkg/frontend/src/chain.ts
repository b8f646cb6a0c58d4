/** Action-chain editor state: one draft action being assembled from placed
 * keypoints, plus an ordered chain of completed actions. */

import type { ActionDoc, Keypoint, Role, Vec3 } from "./types";

export const MIN_TARGETS = 3;
export const MAX_TARGETS = 4;

export class KeypointError extends Error {}

export interface DraftAction {
  tag: string;
  targets: Keypoint[];
}

export function emptyDraft(tag = "custom"): DraftAction {
  return { tag, targets: [] };
}

/** Returns a new draft with the keypoint added; duplicate roles and more
 * than MAX_TARGETS keypoints are rejected. */
export function addKeypoint(draft: DraftAction, role: Role, position: Vec3): DraftAction {
  if (draft.targets.some((t) => t.role === role)) {
    throw new KeypointError(`role ${role} already placed`);
  }
  if (draft.targets.length >= MAX_TARGETS) {
    throw new KeypointError(`an action takes at most ${MAX_TARGETS} keypoints`);
  }
  return { ...draft, targets: [...draft.targets, { role, position }] };
}

export function removeKeypoint(draft: DraftAction, role: Role): DraftAction {
  return { ...draft, targets: draft.targets.filter((t) => t.role !== role) };
}

/** A draft can be solved/committed once it has 3 or 4 keypoints. */
export function isComplete(draft: DraftAction): boolean {
  return draft.targets.length >= MIN_TARGETS && draft.targets.length <= MAX_TARGETS;
}

export function toActionDoc(draft: DraftAction): ActionDoc {
  if (!isComplete(draft)) {
    throw new KeypointError(`need ${MIN_TARGETS}-${MAX_TARGETS} keypoints, have ${draft.targets.length}`);
  }
  return { tag: draft.tag, targets: draft.targets.map((t) => ({ ...t })) };
}

// -- chain operations (all return a new array) ------------------------------

export function appendAction(chain: ActionDoc[], action: ActionDoc): ActionDoc[] {
  return [...chain, action];
}

export function deleteAction(chain: ActionDoc[], index: number): ActionDoc[] {
  return chain.filter((_, i) => i !== index);
}

/** Move the action at `index` by `delta` positions, clamped to the ends. */
export function moveAction(chain: ActionDoc[], index: number, delta: number): ActionDoc[] {
  if (index < 0 || index >= chain.length) return chain;
  const target = Math.min(chain.length - 1, Math.max(0, index + delta));
  if (target === index) return chain;
  const out = [...chain];
  const [item] = out.splice(index, 1);
  out.splice(target, 0, item);
  return out;
}

/** The synthesize button is enabled only for a non-empty chain. */
export function canSynthesize(chain: ActionDoc[]): boolean {
  return chain.length > 0;
}
