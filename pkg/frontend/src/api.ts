/**
 * Client for the preference-study API.
 *
 * The task payload is blinded by the server; TaskView mirrors it exactly and
 * has no slot for producer identities, so none can reach the rendering layer.
 */

export type Choice = "left" | "right" | "both";

export interface Progress {
  done: number;
  total: number;
}

export interface TaskView {
  taskId: string;
  comment: string;
  reference: string[];
  optionA: string[];
  optionB: string[];
  progress: Progress;
}

export interface NextTask {
  task: TaskView | null;
  progress: Progress;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** What the session controller needs from the transport layer. */
export interface VoteApi {
  nextTask(): Promise<NextTask>;
  submitVote(taskId: string, choice: Choice): Promise<Progress>;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function asStringList(value: unknown): string[] {
  if (!Array.isArray(value)) return [];
  return value.map((item) => String(item));
}

function asProgress(value: unknown): Progress {
  const raw = (value ?? {}) as Record<string, unknown>;
  return {
    done: typeof raw.done === "number" ? raw.done : 0,
    total: typeof raw.total === "number" ? raw.total : 0,
  };
}

/** Build the view model from a wire payload, dropping every unknown field. */
export function toTaskView(payload: Record<string, unknown>): TaskView {
  return {
    taskId: String(payload.task_id),
    comment: String(payload.comment ?? ""),
    reference: asStringList(payload.reference),
    optionA: asStringList(payload.option_a),
    optionB: asStringList(payload.option_b),
    progress: asProgress(payload.progress),
  };
}

export class ApiClient implements VoteApi {
  constructor(
    private readonly baseUrl: string,
    private readonly session: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    const base = this.baseUrl.replace(/\/$/, "");
    return `${base}${path}?session=${encodeURIComponent(this.session)}`;
  }

  async nextTask(): Promise<NextTask> {
    const response = await this.fetchFn(this.url("/api/task/next"));
    if (!response.ok) {
      throw new ApiError(response.status, `task fetch failed (${response.status})`);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    if (payload.task_id === null || payload.done === true) {
      return { task: null, progress: asProgress(payload.progress) };
    }
    const task = toTaskView(payload);
    return { task, progress: task.progress };
  }

  async submitVote(taskId: string, choice: Choice): Promise<Progress> {
    const response = await this.fetchFn(this.url("/api/vote"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task_id: taskId, choice }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, `vote failed (${response.status})`);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    return asProgress(payload.progress);
  }
}
