/** Thin typed client for the motionloom HTTP API. */

import type {
  ActionDoc,
  JobDoc,
  Keypoint,
  MotionResult,
  SceneDoc,
  SceneResponse,
  SkeletonResponse,
  SolveAnchorResponse,
} from "./types";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function detailOf(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (typeof body?.detail === "string") return body.detail;
    if (Array.isArray(body?.detail)) {
      return body.detail.map((d: { msg?: string }) => d.msg ?? JSON.stringify(d)).join("; ");
    }
  } catch {
    /* non-JSON body */
  }
  return res.statusText || `HTTP ${res.status}`;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (...a) => fetch(...a)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return (await res.json()) as T;
  }

  createScene(scene: SceneDoc): Promise<{ scene_id: string }> {
    return this.request("POST", "/api/scenes", scene);
  }

  getScene(sceneId: string): Promise<SceneResponse> {
    return this.request("GET", `/api/scenes/${sceneId}`);
  }

  getSkeleton(): Promise<SkeletonResponse> {
    return this.request("GET", "/api/skeleton");
  }

  solveAnchor(sceneId: string, keypoints: Keypoint[], tag: string): Promise<SolveAnchorResponse> {
    return this.request("POST", "/api/solve-anchor", {
      scene_id: sceneId,
      keypoints,
      tag,
    });
  }

  previewInstruction(
    sceneId: string,
    command: { verb: string; label: string; height?: number },
  ): Promise<{ keypoints: ActionDoc }> {
    return this.request("POST", "/api/instructions/preview", { scene_id: sceneId, command });
  }

  synthesize(sceneId: string, actions: ActionDoc[]): Promise<{ job_id: string }> {
    return this.request("POST", "/api/synthesize", { scene_id: sceneId, actions });
  }

  getJob(jobId: string): Promise<JobDoc> {
    return this.request("GET", `/api/jobs/${jobId}`);
  }

  getMotion(motionId: string): Promise<MotionResult> {
    return this.request("GET", `/api/motions/${motionId}`);
  }

  /** Poll a job until done/failed. Resolves with the final job document. */
  async waitForJob(jobId: string, intervalMs = 500, timeoutMs = 15 * 60 * 1000): Promise<JobDoc> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(jobId);
      if (job.status === "done" || job.status === "failed") return job;
      if (Date.now() > deadline) throw new ApiError(0, `job ${jobId} timed out`);
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }
}
