/** Application wiring: scene view, keypoint palette, action chain panel,
 * synthesis job handling, and playback with a phase-colored timeline. */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { ApiClient, ApiError } from "./api";
import {
  appendAction,
  addKeypoint,
  canSynthesize,
  deleteAction,
  emptyDraft,
  isComplete,
  moveAction,
  removeKeypoint,
  toActionDoc,
  type DraftAction,
} from "./chain";
import {
  HANDSHAKE_TOLERANCE_M,
  handshakeError,
  parseSkeleton,
  type Skeleton,
} from "./fk";
import { PlaybackClock } from "./playback";
import {
  buildBlockedOverlay,
  buildRoom,
  makeKeypointMarker,
  makeStickFigure,
  pickSurfacePoint,
  updateStickFigure,
  type StickFigure,
} from "./scene3d";
import { phaseAt, timelineSegments } from "./timeline";
import type { ActionDoc, MotionResult, Role, SceneDoc, Vec3 } from "./types";
import { ROLES } from "./types";

const DEMO_SCENE: SceneDoc = {
  floor_height: 0.0,
  bounds: { min: [-2.0, -3.0], max: [9.0, 5.0] },
  obstacles: [
    { label: "chair", min: [2.8, 0.0, 1.7], max: [3.3, 0.45, 2.2] },
    { label: "shelf", min: [5.0, 0.0, -1.2], max: [5.6, 1.5, -0.4] },
    { label: "wall", min: [4.2, 0.0, -0.2], max: [4.4, 2.0, 3.0] },
  ],
};

const ROLE_COLORS: Record<Role, number> = {
  root: 0xe0b000,
  left_toe: 0x2070d0,
  right_toe: 0x70b0f0,
  left_hand: 0xc04040,
  right_hand: 0xf08080,
  head: 0x40a060,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

class App {
  private readonly api = new ApiClient("");
  private skeleton!: Skeleton;
  private sceneId!: string;

  private renderer!: THREE.WebGLRenderer;
  private camera!: THREE.PerspectiveCamera;
  private world = new THREE.Scene();
  private room!: THREE.Group;
  private markers = new THREE.Group();
  private ghost: StickFigure | null = null;
  private figure: StickFigure | null = null;

  private selectedRole: Role | null = null;
  private draft: DraftAction = emptyDraft();
  private chain: ActionDoc[] = [];
  private jobInFlight = false;

  private result: MotionResult | null = null;
  private clock: PlaybackClock | null = null;
  private lastTime = performance.now();

  async boot(): Promise<void> {
    const handshake = await this.api.getSkeleton();
    this.skeleton = parseSkeleton(handshake.skeleton);
    const err = handshakeError(this.skeleton, handshake.fk_sample);
    if (err > HANDSHAKE_TOLERANCE_M) {
      this.setStatus(`FK handshake failed: ${err.toExponential(2)} m > ${HANDSHAKE_TOLERANCE_M}`, true);
      throw new Error("FK handshake failed");
    }
    this.setStatus(`connected; FK handshake ${err.toExponential(1)} m`);

    const { scene_id } = await this.api.createScene(DEMO_SCENE);
    this.sceneId = scene_id;
    const sceneDoc = await this.api.getScene(scene_id);

    this.setupThree();
    this.room = buildRoom(sceneDoc.scene);
    this.world.add(this.room);
    this.world.add(buildBlockedOverlay(sceneDoc.grid, sceneDoc.scene.floor_height));
    this.world.add(this.markers);

    this.setupPalette();
    this.renderChain();
    el<HTMLButtonElement>("synthesize").addEventListener("click", () => void this.synthesize());
    el<HTMLButtonElement>("commit-action").addEventListener("click", () => this.commitDraft());
    el<HTMLButtonElement>("clear-draft").addEventListener("click", () => this.clearDraft());
    el<HTMLButtonElement>("play-pause").addEventListener("click", () => this.clock?.toggle());
    el<HTMLInputElement>("speed").addEventListener("input", (ev) => {
      if (this.clock) this.clock.speed = Number((ev.target as HTMLInputElement).value);
    });
    el<HTMLDivElement>("timeline").addEventListener("click", (ev) => this.onTimelineClick(ev));

    this.animate();
  }

  private setupThree(): void {
    const canvas = el<HTMLCanvasElement>("view");
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.1, 100);
    this.camera.position.set(4, 7, 9);
    const controls = new OrbitControls(this.camera, canvas);
    controls.target.set(3.5, 0, 1);
    controls.update();
    this.world.background = new THREE.Color(0xf4f2ee);
    this.world.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(5, 10, 3);
    this.world.add(sun);

    const resize = () => {
      const w = canvas.clientWidth || canvas.parentElement!.clientWidth;
      const h = canvas.clientHeight || 480;
      this.renderer.setSize(w, h, false);
      this.camera.aspect = w / h;
      this.camera.updateProjectionMatrix();
    };
    window.addEventListener("resize", resize);
    resize();

    canvas.addEventListener("click", (ev) => this.onCanvasClick(ev, canvas));
  }

  private onCanvasClick(ev: MouseEvent, canvas: HTMLCanvasElement): void {
    if (!this.selectedRole) return;
    const rect = canvas.getBoundingClientRect();
    const pointer = {
      x: ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      y: -((ev.clientY - rect.top) / rect.height) * 2 + 1,
    };
    const hit = pickSurfacePoint(pointer, this.camera, this.room);
    if (!hit) return;
    this.placeKeypoint(this.selectedRole, hit);
  }

  private placeKeypoint(role: Role, position: Vec3): void {
    try {
      this.draft = addKeypoint(this.draft, role, position);
    } catch (err) {
      this.setStatus(String(err), true);
      return;
    }
    this.markers.add(makeKeypointMarker(position, ROLE_COLORS[role]));
    this.renderDraft();
    if (isComplete(this.draft)) void this.previewAnchor();
  }

  private async previewAnchor(): Promise<void> {
    const tag = el<HTMLInputElement>("tag").value || "custom";
    this.draft.tag = tag;
    try {
      const res = await this.api.solveAnchor(this.sceneId, this.draft.targets, tag);
      this.clearGhost();
      if (res.reachable) {
        this.ghost = makeStickFigure(this.skeleton, 0x3a7a3a, 0.5);
        updateStickFigure(this.ghost, this.skeleton, res.anchor.frame);
        this.world.add(this.ghost.group);
        this.setStatus(
          `anchor reachable; residuals ${res.anchor.residuals_cm.map((r) => r.toFixed(2)).join(", ")} cm`,
        );
      } else {
        this.setStatus(`unreachable: ${res.error}`, true);
      }
    } catch (err) {
      this.setStatus(err instanceof ApiError ? err.message : String(err), true);
    }
  }

  private clearGhost(): void {
    if (this.ghost) {
      this.world.remove(this.ghost.group);
      this.ghost = null;
    }
  }

  private setupPalette(): void {
    const palette = el<HTMLDivElement>("palette");
    for (const role of ROLES) {
      const btn = document.createElement("button");
      btn.textContent = role.replace("_", " ");
      btn.dataset.role = role;
      btn.addEventListener("click", () => {
        this.selectedRole = role;
        palette.querySelectorAll("button").forEach((b) => b.classList.remove("active"));
        btn.classList.add("active");
      });
      palette.appendChild(btn);
    }
  }

  private renderDraft(): void {
    const list = el<HTMLUListElement>("draft-list");
    list.innerHTML = "";
    for (const t of this.draft.targets) {
      const li = document.createElement("li");
      li.textContent = `${t.role} @ (${t.position.map((v) => v.toFixed(2)).join(", ")})`;
      const rm = document.createElement("button");
      rm.textContent = "x";
      rm.addEventListener("click", () => {
        this.draft = removeKeypoint(this.draft, t.role);
        this.renderDraft();
      });
      li.appendChild(rm);
      list.appendChild(li);
    }
    el<HTMLButtonElement>("commit-action").disabled = !isComplete(this.draft);
  }

  private commitDraft(): void {
    try {
      this.chain = appendAction(this.chain, toActionDoc(this.draft));
    } catch (err) {
      this.setStatus(String(err), true);
      return;
    }
    this.clearDraft();
    this.renderChain();
  }

  private clearDraft(): void {
    this.draft = emptyDraft(el<HTMLInputElement>("tag").value || "custom");
    this.markers.clear();
    this.clearGhost();
    this.renderDraft();
  }

  private renderChain(): void {
    const list = el<HTMLOListElement>("chain-list");
    list.innerHTML = "";
    this.chain.forEach((action, i) => {
      const li = document.createElement("li");
      li.textContent = `${action.tag} (${action.targets.length} keypoints)`;
      for (const [label, delta] of [["up", -1], ["down", 1]] as const) {
        const btn = document.createElement("button");
        btn.textContent = label;
        btn.addEventListener("click", () => {
          this.chain = moveAction(this.chain, i, delta);
          this.renderChain();
        });
        li.appendChild(btn);
      }
      const del = document.createElement("button");
      del.textContent = "delete";
      del.addEventListener("click", () => {
        this.chain = deleteAction(this.chain, i);
        this.renderChain();
      });
      li.appendChild(del);
      list.appendChild(li);
    });
    el<HTMLButtonElement>("synthesize").disabled = !canSynthesize(this.chain) || this.jobInFlight;
  }

  private async synthesize(): Promise<void> {
    this.jobInFlight = true;
    this.renderChain();
    this.setStatus("synthesizing…");
    try {
      const { job_id } = await this.api.synthesize(this.sceneId, this.chain);
      const job = await this.api.waitForJob(job_id);
      if (job.status === "failed" || job.result === null) {
        this.setStatus(`synthesis failed: ${job.error ?? "unknown"}`, true);
        return;
      }
      this.loadResult(await this.api.getMotion(job.result));
    } catch (err) {
      this.setStatus(err instanceof ApiError ? err.message : String(err), true);
    } finally {
      this.jobInFlight = false;
      this.renderChain();
    }
  }

  private loadResult(result: MotionResult): void {
    this.result = result;
    const frames = result.motion.frames.length;
    this.clock = new PlaybackClock(frames, result.motion.frame_rate);
    this.clock.play();
    if (!this.figure) {
      this.figure = makeStickFigure(this.skeleton);
      this.world.add(this.figure.group);
    }
    const timeline = el<HTMLDivElement>("timeline");
    timeline.innerHTML = "";
    for (const seg of timelineSegments(result.phase_log.entries, frames)) {
      const div = document.createElement("div");
      div.className = "segment";
      div.style.left = `${seg.left * 100}%`;
      div.style.width = `${seg.width * 100}%`;
      div.style.background = seg.color;
      div.title = `${seg.phase} (${seg.ref ?? "-"})`;
      timeline.appendChild(div);
    }
    const r = result.report;
    el<HTMLDivElement>("readouts").textContent =
      `foot skate ${r.foot_skate_cm_per_frame.toFixed(2)} cm/f · ` +
      `keypoint err [${r.keypoint_error_cm.map((e) => e.toFixed(2)).join(", ")}] cm · ` +
      `penetration ${r.penetration_frames} frames`;
    this.setStatus(`loaded ${frames} frames, ${result.phase_log.entries.length} phases`);
  }

  private onTimelineClick(ev: MouseEvent): void {
    if (!this.clock) return;
    const rect = el<HTMLDivElement>("timeline").getBoundingClientRect();
    this.clock.scrubFraction((ev.clientX - rect.left) / rect.width);
  }

  private animate = (): void => {
    requestAnimationFrame(this.animate);
    const now = performance.now();
    const dt = (now - this.lastTime) / 1000;
    this.lastTime = now;
    if (this.clock && this.result && this.figure) {
      const frame = this.clock.tick(dt);
      updateStickFigure(this.figure, this.skeleton, this.result.motion.frames[frame]);
      const entry = phaseAt(this.result.phase_log.entries, frame);
      el<HTMLDivElement>("cursor-info").textContent =
        `frame ${frame}/${this.result.motion.frames.length - 1}` +
        (entry ? ` · ${entry.phase}` : "");
      const cursor = el<HTMLDivElement>("timeline-cursor");
      cursor.style.left = `${(frame / this.result.motion.frames.length) * 100}%`;
    }
    this.renderer.render(this.world, this.camera);
  };

  private setStatus(text: string, isError = false): void {
    const bar = el<HTMLDivElement>("status");
    bar.textContent = text;
    bar.classList.toggle("error", isError);
  }
}

new App().boot().catch((err) => {
  console.error(err);
  const bar = document.getElementById("status");
  if (bar) {
    bar.textContent = String(err);
    bar.classList.add("error");
  }
});
