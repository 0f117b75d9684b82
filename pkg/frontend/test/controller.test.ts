import { describe, expect, it } from "vitest";

import { ApiError, Choice, NextTask, Progress, TaskView, VoteApi } from "../src/api.js";
import { SessionController, State } from "../src/controller.js";

function task(id: string, done: number, total: number): TaskView {
  return {
    taskId: id,
    comment: "komentář",
    reference: ["ref"],
    optionA: ["a"],
    optionB: ["b"],
    progress: { done, total },
  };
}

/** Scripted fake API: queues of outcomes consumed in order. */
class FakeApi implements VoteApi {
  nextResults: (NextTask | Error)[] = [];
  voteResults: (Progress | Error)[] = [];
  votes: { taskId: string; choice: Choice }[] = [];
  pendingVote: (() => void) | null = null;
  holdVotes = false;

  async nextTask(): Promise<NextTask> {
    const result = this.nextResults.shift();
    if (!result) throw new Error("fake: no next-task result queued");
    if (result instanceof Error) throw result;
    return result;
  }

  async submitVote(taskId: string, choice: Choice): Promise<Progress> {
    this.votes.push({ taskId, choice });
    if (this.holdVotes) {
      await new Promise<void>((resolve) => {
        this.pendingVote = resolve;
      });
    }
    const result = this.voteResults.shift();
    if (!result) throw new Error("fake: no vote result queued");
    if (result instanceof Error) throw result;
    return result;
  }
}

function controller(api: FakeApi): { ctrl: SessionController; states: State[] } {
  const states: State[] = [];
  const ctrl = new SessionController(api, (s) => states.push(s));
  return { ctrl, states };
}

describe("SessionController", () => {
  it("loads the first task and advances after a vote", async () => {
    const api = new FakeApi();
    api.nextResults = [
      { task: task("t1", 0, 2), progress: { done: 0, total: 2 } },
      { task: task("t2", 1, 2), progress: { done: 1, total: 2 } },
    ];
    api.voteResults = [{ done: 1, total: 2 }];
    const { ctrl } = controller(api);
    await ctrl.start();
    expect(ctrl.snapshot().phase).toBe("task");
    await ctrl.choose("left");
    expect(api.votes).toEqual([{ taskId: "t1", choice: "left" }]);
    expect(ctrl.snapshot().task?.taskId).toBe("t2");
  });

  it("reaches the done phase when tasks run out", async () => {
    const api = new FakeApi();
    api.nextResults = [{ task: null, progress: { done: 2, total: 2 } }];
    const { ctrl } = controller(api);
    await ctrl.start();
    expect(ctrl.snapshot().phase).toBe("done");
    expect(ctrl.snapshot().progress).toEqual({ done: 2, total: 2 });
  });

  it("ignores a second choose while one vote is in flight", async () => {
    const api = new FakeApi();
    api.nextResults = [
      { task: task("t1", 0, 1), progress: { done: 0, total: 1 } },
      { task: null, progress: { done: 1, total: 1 } },
    ];
    api.voteResults = [{ done: 1, total: 1 }];
    api.holdVotes = true;
    const { ctrl } = controller(api);
    await ctrl.start();
    const first = ctrl.choose("left");   // stays pending inside the fake
    const second = ctrl.choose("right"); // must be a no-op
    await second;
    api.pendingVote!();
    await first;
    expect(api.votes).toEqual([{ taskId: "t1", choice: "left" }]);
  });

  it("keeps the vote and resubmits it on retry after a network failure", async () => {
    const api = new FakeApi();
    api.nextResults = [
      { task: task("t1", 0, 1), progress: { done: 0, total: 1 } },
      { task: null, progress: { done: 1, total: 1 } },
    ];
    api.voteResults = [new ApiError(503, "server melting"), { done: 1, total: 1 }];
    const { ctrl } = controller(api);
    await ctrl.start();
    await ctrl.choose("both");
    expect(ctrl.snapshot().phase).toBe("error");
    await ctrl.retry();
    expect(api.votes).toEqual([
      { taskId: "t1", choice: "both" },
      { taskId: "t1", choice: "both" },
    ]);
    expect(ctrl.snapshot().phase).toBe("done");
  });

  it("skips forward with a notice when the server rejects a duplicate vote", async () => {
    const api = new FakeApi();
    api.nextResults = [
      { task: task("t1", 0, 2), progress: { done: 0, total: 2 } },
      { task: task("t2", 1, 2), progress: { done: 1, total: 2 } },
    ];
    api.voteResults = [new ApiError(409, "already voted")];
    const { ctrl } = controller(api);
    await ctrl.start();
    await ctrl.choose("left");
    const state = ctrl.snapshot();
    expect(state.phase).toBe("task");
    expect(state.task?.taskId).toBe("t2");
    expect(state.notice).toBe("duplicate");
  });

  it("surfaces fetch failures with a retry that refetches", async () => {
    const api = new FakeApi();
    api.nextResults = [
      new ApiError(503, "unavailable"),
      { task: task("t1", 0, 1), progress: { done: 0, total: 1 } },
    ];
    const { ctrl } = controller(api);
    await ctrl.start();
    expect(ctrl.snapshot().phase).toBe("error");
    expect(ctrl.snapshot().error).toContain("unavailable");
    await ctrl.retry();
    expect(ctrl.snapshot().phase).toBe("task");
  });
});
