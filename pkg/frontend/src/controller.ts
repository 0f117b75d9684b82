/**
 * Session flow: fetch task, collect exactly one choice, advance.
 *
 * The server drives all state (refresh resumes at the first unanswered
 * task); the controller only guards against double submits and keeps the
 * pending vote around so a failed request can be retried without losing it.
 */

import { ApiError, Choice, Progress, TaskView, VoteApi } from "./api.js";

export type Phase = "loading" | "task" | "submitting" | "done" | "error";

export interface State {
  phase: Phase;
  task: TaskView | null;
  progress: Progress;
  notice: string | null;
  error: string | null;
}

interface PendingVote {
  taskId: string;
  choice: Choice;
}

export class SessionController {
  private state: State = {
    phase: "loading",
    task: null,
    progress: { done: 0, total: 0 },
    notice: null,
    error: null,
  };
  private pending: PendingVote | null = null;

  constructor(
    private readonly api: VoteApi,
    private readonly onChange: (state: State) => void,
  ) {}

  snapshot(): State {
    return { ...this.state };
  }

  private update(patch: Partial<State>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.snapshot());
  }

  async start(): Promise<void> {
    await this.advance(null);
  }

  /** Submit the selected choice for the current task; ignores re-entry. */
  async choose(choice: Choice): Promise<void> {
    if (this.state.phase !== "task" || this.state.task === null) {
      return; // double-click or stale handler: exactly one vote per task
    }
    this.pending = { taskId: this.state.task.taskId, choice };
    await this.submitPending();
  }

  /** Retry after a failure; re-sends an unsent vote rather than dropping it. */
  async retry(): Promise<void> {
    if (this.state.phase !== "error") return;
    if (this.pending !== null) {
      await this.submitPending();
    } else {
      this.update({ phase: "loading", error: null });
      await this.advance(this.state.notice);
    }
  }

  private async submitPending(): Promise<void> {
    if (this.pending === null) return;
    this.update({ phase: "submitting", notice: null, error: null });
    try {
      await this.api.submitVote(this.pending.taskId, this.pending.choice);
      this.pending = null;
      await this.advance(null);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else voted this task first: skip forward with a notice
        this.pending = null;
        await this.advance("duplicate");
        return;
      }
      this.update({ phase: "error", error: describe(err) });
    }
  }

  private async advance(notice: string | null): Promise<void> {
    try {
      const next = await this.api.nextTask();
      if (next.task === null) {
        this.update({
          phase: "done",
          task: null,
          progress: next.progress,
          notice: null,
          error: null,
        });
      } else {
        this.update({
          phase: "task",
          task: next.task,
          progress: next.progress,
          notice,
          error: null,
        });
      }
    } catch (err) {
      this.update({ phase: "error", error: describe(err) });
    }
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
