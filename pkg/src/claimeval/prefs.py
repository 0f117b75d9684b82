"""Human preference study: blinded task sampling and vote tallying.

For each document a fixed number of tasks is sampled (default 2, so a
60-document group yields 120 preference judgments); each task pairs two
distinct producers with randomized left/right sides. Producer identities
never leave the server until export.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DatasetFormatError
from .model import AnnotatedDocument
from .storage import VoteRecord, _dump, _iter_records

GROUPS = ("informed", "not_informed", "pairwise")

DEFAULT_JUDGMENTS_PER_SAMPLE = 2


@dataclass(frozen=True, slots=True)
class PreferenceTask:
    """One blinded A/B comparison; producer fields stay server-side."""

    task_id: str
    group: str
    doc_id: str
    comment_text: str
    reference_claims: tuple[str, ...]
    option_a: tuple[str, ...]
    option_b: tuple[str, ...]
    producer_a: str
    producer_b: str

    def __post_init__(self) -> None:
        if self.producer_a == self.producer_b:
            raise ValueError(f"task {self.task_id!r} pairs a producer with itself")

    def blinded_view(self) -> dict:
        """Client payload; contains no producer identifiers."""
        return {
            "task_id": self.task_id,
            "group": self.group,
            "comment": self.comment_text,
            "reference": list(self.reference_claims),
            "option_a": list(self.option_a),
            "option_b": list(self.option_b),
        }

    @property
    def signature(self) -> tuple[str, str, str]:
        # Votes carry no task id; (doc, left, right) reassociates them.
        return (self.doc_id, self.producer_a, self.producer_b)


@dataclass(frozen=True, slots=True)
class SamplePlan:
    tasks: tuple[PreferenceTask, ...]
    skipped: tuple[tuple[str, str], ...]


def sample_pairs(
    dataset: Sequence[AnnotatedDocument],
    producers: Sequence[str],
    group: str,
    judgments_per_sample: int = DEFAULT_JUDGMENTS_PER_SAMPLE,
    *,
    reference_id: str,
    seed: int,
) -> SamplePlan:
    """Sample blinded preference tasks for every document.

    Per document: ``judgments_per_sample`` tasks, each with a uniformly
    sampled distinct producer pair and randomized sides. Documents with
    fewer than two eligible producers (or without the reference claim set)
    are skipped and reported. A fixed seed reproduces the task list exactly.
    """
    if judgments_per_sample < 1:
        raise ValueError("judgments_per_sample must be >= 1")
    rng = random.Random(seed)
    tasks: list[PreferenceTask] = []
    skipped: list[tuple[str, str]] = []
    counter = 0
    for doc in dataset:
        reference = doc.claim_sets.get(reference_id)
        if reference is None:
            skipped.append((doc.document.id, f"no reference claim set {reference_id!r}"))
            continue
        eligible = [
            p for p in producers if p != reference_id and p in doc.claim_sets
        ]
        if len(eligible) < 2:
            skipped.append(
                (doc.document.id, f"fewer than 2 producers present ({eligible!r})")
            )
            continue
        for _ in range(judgments_per_sample):
            left, right = rng.sample(eligible, 2)
            tasks.append(
                PreferenceTask(
                    task_id=f"{group}-{counter:04d}",
                    group=group,
                    doc_id=doc.document.id,
                    comment_text=doc.document.text,
                    reference_claims=reference.claims,
                    option_a=doc.claim_sets[left].claims,
                    option_b=doc.claim_sets[right].claims,
                    producer_a=left,
                    producer_b=right,
                )
            )
            counter += 1
    return SamplePlan(tasks=tuple(tasks), skipped=tuple(skipped))


def write_tasks(path: str | Path, tasks: Sequence[PreferenceTask]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tasks:
            fh.write(_dump({
                "task_id": t.task_id,
                "group": t.group,
                "doc_id": t.doc_id,
                "comment": t.comment_text,
                "reference": list(t.reference_claims),
                "option_a": list(t.option_a),
                "option_b": list(t.option_b),
                "producer_a": t.producer_a,
                "producer_b": t.producer_b,
            }) + "\n")


def load_tasks(path: str | Path) -> list[PreferenceTask]:
    tasks = []
    for lineno, record in _iter_records(path):
        try:
            tasks.append(PreferenceTask(
                task_id=str(record["task_id"]),
                group=str(record["group"]),
                doc_id=str(record["doc_id"]),
                comment_text=str(record["comment"]),
                reference_claims=tuple(record["reference"]),
                option_a=tuple(record["option_a"]),
                option_b=tuple(record["option_b"]),
                producer_a=str(record["producer_a"]),
                producer_b=str(record["producer_b"]),
            ))
        except KeyError as exc:
            raise DatasetFormatError(
                f"missing field {exc.args[0]!r}", path=str(path), line=lineno
            ) from exc
    return tasks


@dataclass(frozen=True, slots=True)
class ProducerTally:
    wins: int
    both_count: int
    total_judgments: int

    @property
    def share(self) -> float:
        """Win share in percent; 'both' counts as a win for both producers."""
        if self.total_judgments == 0:
            return 0.0
        return 100.0 * self.wins / self.total_judgments


@dataclass(frozen=True, slots=True)
class Tally:
    """Per-producer preference counts for one group."""

    group: str
    producers: Mapping[str, ProducerTally]
    total_votes: int
    both_votes: int

    def __post_init__(self) -> None:
        wins = sum(p.wins for p in self.producers.values())
        singles = self.total_votes - self.both_votes
        if wins != singles + 2 * self.both_votes:
            raise ValueError(
                f"tally not conserved: {wins} wins vs {singles} single "
                f"+ 2*{self.both_votes} both"
            )

    def to_record(self) -> dict:
        return {
            "group": self.group,
            "total_votes": self.total_votes,
            "both_votes": self.both_votes,
            "producers": {
                name: {
                    "wins": p.wins,
                    "both": p.both_count,
                    "total_judgments": p.total_judgments,
                    "share_pct": round(p.share, 2),
                }
                for name, p in sorted(self.producers.items())
            },
        }


def match_votes_to_tasks(
    tasks: Sequence[PreferenceTask], votes: Sequence[VoteRecord]
) -> dict[str, VoteRecord]:
    """Greedily associate logged votes with tasks by (doc, left, right).

    The vote schema carries no task id, so each vote consumes the earliest
    unvoted task with a matching signature; surplus votes are ignored.
    """
    open_slots: dict[tuple[str, str, str], list[str]] = {}
    for task in tasks:
        open_slots.setdefault(task.signature, []).append(task.task_id)
    matched: dict[str, VoteRecord] = {}
    for vote in votes:
        key = (vote.doc_id, vote.left_producer, vote.right_producer)
        slots = open_slots.get(key)
        if slots:
            matched[slots.pop(0)] = vote
    return matched


def tally_votes(
    tasks: Sequence[PreferenceTask],
    votes: Sequence[VoteRecord],
    group: str,
) -> Tally:
    """Count wins per producer; a 'both' choice credits both producers."""
    group_tasks = [t for t in tasks if t.group == group]
    matched = match_votes_to_tasks(group_tasks, votes)
    by_task = {t.task_id: t for t in group_tasks}
    wins: dict[str, int] = {}
    both: dict[str, int] = {}
    judged: dict[str, int] = {}
    both_votes = 0
    for task_id, vote in matched.items():
        task = by_task[task_id]
        for producer in (task.producer_a, task.producer_b):
            judged[producer] = judged.get(producer, 0) + 1
        if vote.choice == "left":
            wins[task.producer_a] = wins.get(task.producer_a, 0) + 1
        elif vote.choice == "right":
            wins[task.producer_b] = wins.get(task.producer_b, 0) + 1
        else:
            both_votes += 1
            for producer in (task.producer_a, task.producer_b):
                wins[producer] = wins.get(producer, 0) + 1
                both[producer] = both.get(producer, 0) + 1
    producers = {
        name: ProducerTally(
            wins=wins.get(name, 0),
            both_count=both.get(name, 0),
            total_judgments=judged.get(name, 0),
        )
        for name in sorted({p for t in group_tasks for p in (t.producer_a, t.producer_b)})
    }
    return Tally(
        group=group,
        producers=producers,
        total_votes=len(matched),
        both_votes=both_votes,
    )
