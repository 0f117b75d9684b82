"""HTTP service backing the preference study.

Endpoints: GET /api/task/next?session=..., POST /api/vote?session=...
with body {task_id, choice in {left,right,both}}, GET /api/tally?group=...,
GET /api/health. Sessions are opaque bearer tokens; task assignment is
idempotent per session and every task is voted at most once, first vote
wins. Votes persist through the append-only vote log.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import DuplicateVoteError, UnknownTaskError
from .prefs import PreferenceTask, Tally, match_votes_to_tasks, tally_votes
from .storage import VOTE_CHOICES, VoteLog, VoteRecord, utc_now_iso


class PreferenceServer:
    """In-memory task assignment over a persisted vote log."""

    def __init__(self, tasks: Sequence[PreferenceTask], vote_log: VoteLog):
        self._tasks = list(tasks)
        self._by_id = {t.task_id: t for t in tasks}
        if len(self._by_id) != len(self._tasks):
            raise ValueError("duplicate task ids")
        self._lock = threading.Lock()
        self._vote_log = vote_log
        # Resume: reassociate previously logged votes with their tasks.
        self._votes: dict[str, VoteRecord] = match_votes_to_tasks(
            self._tasks, vote_log.load()
        )
        self._assigned: dict[str, str] = {}  # session -> outstanding task id

    def _progress(self) -> dict:
        return {"done": len(self._votes), "total": len(self._tasks)}

    def next_task(self, session: str) -> tuple[PreferenceTask | None, dict]:
        """Earliest unserved task for this session; idempotent until voted."""
        with self._lock:
            outstanding = self._assigned.get(session)
            if outstanding is not None and outstanding not in self._votes:
                return self._by_id[outstanding], self._progress()
            taken = {t for t in self._assigned.values() if t not in self._votes}
            for task in self._tasks:
                if task.task_id in self._votes or task.task_id in taken:
                    continue
                self._assigned[session] = task.task_id
                return task, self._progress()
            return None, self._progress()

    def submit_vote(self, session: str, task_id: str, choice: str) -> dict:
        with self._lock:
            task = self._by_id.get(task_id)
            if task is None:
                raise UnknownTaskError(f"unknown task id {task_id!r}")
            if task_id in self._votes:
                raise DuplicateVoteError(
                    f"task {task_id!r} already voted; first vote wins"
                )
            vote = VoteRecord(
                session_id=session,
                doc_id=task.doc_id,
                left_producer=task.producer_a,
                right_producer=task.producer_b,
                choice=choice,
                annotator_id=session,
                ts=utc_now_iso(),
            )
            self._vote_log.append(vote)
            self._votes[task_id] = vote
            return self._progress()

    def tally(self, group: str) -> Tally:
        return tally_votes(self._tasks, list(self._votes.values()), group)


class VoteBody(BaseModel):
    task_id: str
    choice: str


def create_app(server: PreferenceServer, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="claimeval preference study")

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/task/next")
    def task_next(session: str = Query(min_length=1)) -> dict:
        task, progress = server.next_task(session)
        if task is None:
            return {"task_id": None, "done": True, "progress": progress}
        payload = task.blinded_view()
        payload["done"] = False
        payload["progress"] = progress
        return payload

    @app.post("/api/vote")
    def vote(body: VoteBody, session: str = Query(min_length=1)) -> dict:
        if body.choice not in VOTE_CHOICES:
            raise HTTPException(
                status_code=422,
                detail=f"choice must be one of {list(VOTE_CHOICES)}",
            )
        try:
            progress = server.submit_vote(session, body.task_id, body.choice)
        except UnknownTaskError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except DuplicateVoteError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"ok": True, "progress": progress}

    @app.get("/api/tally")
    def tally(group: str = Query(min_length=1)) -> dict:
        return server.tally(group).to_record()

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
