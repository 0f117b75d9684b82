"""Command-line entry point.

Subcommands: evaluate, extract, validate, stats, align, pref serve,
pref export. Exit codes: 0 success, 1 validation or evaluation failure,
2 usage error. All randomness flows from --seed; identical inputs, flags,
seed, and cassette produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import aggregation, prefs
from .aggregation import Pooling, build_count_report, count_csv_rows, evaluate_dataset
from .alignment import (
    BRUTE_FORCE_LIMIT,
    brute_force_assignment,
    build_similarity_matrix,
    solve_assignment,
)
from .clients import (
    ChatClient,
    HttpEmbeddingClient,
    HttpTransport,
    RecordingTransport,
    ReplayTransport,
    StubEmbeddingClient,
)
from .errors import ClaimEvalError, VerificationError
from .extraction import ExtractionConfig, run_extraction
from .metrics import EditMetric, EmbeddingMetric, JudgeMetric, load_judge_template
from .model import ClaimSet, metric_ids, normalize_score, validate_dataset
from .storage import (
    CLAIMS_FILENAME,
    DOCUMENTS_FILENAME,
    DatasetBundle,
    VoteLog,
    dataset_stats,
    load_claim_sets,
    load_documents,
    load_field_map,
    write_claim_sets,
)

log = logging.getLogger(__name__)


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--docs", required=True, help="documents JSONL file")
    parser.add_argument("--claims", required=True, help="claim sets JSONL file")
    parser.add_argument("--field-map", help="JSON file mapping our field names to external ones")


def _add_transport_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--record", metavar="CASSETTE",
                       help="record network responses into this cassette file")
    group.add_argument("--replay", metavar="CASSETTE",
                       help="serve all requests from this cassette; no network")


def _transport(args: argparse.Namespace):
    if args.replay:
        return ReplayTransport(args.replay)
    if args.record:
        return RecordingTransport(HttpTransport.from_env(), args.record)
    return HttpTransport.from_env()


def _metric_backend(args: argparse.Namespace):
    if args.metric == "edit":
        return EditMetric()
    if args.metric == "embed":
        if getattr(args, "embed_stub", False):
            return EmbeddingMetric(StubEmbeddingClient())
        if args.replay:
            return EmbeddingMetric(
                HttpEmbeddingClient(ReplayTransport(args.replay), args.embed_model)
            )
        client = HttpEmbeddingClient.from_env(args.embed_model)
        if args.record:
            client.transport = RecordingTransport(client.transport, args.record)
        return EmbeddingMetric(client)
    if args.metric == "judge":
        template = None
        if args.judge_prompt:
            path = Path(args.judge_prompt)
            template = (
                path.read_text("utf-8") if path.exists()
                else load_judge_template(args.judge_prompt)
            )
        client = ChatClient(_transport(args), args.judge_model)
        return JudgeMetric(client, template=template,
                           sampling_fallback=args.sampling_fallback)
    raise ClaimEvalError(f"unknown metric {args.metric!r}")


def _load_bundle(args: argparse.Namespace) -> DatasetBundle:
    field_map = load_field_map(args.field_map) if args.field_map else None
    return DatasetBundle.load(args.docs, args.claims, field_map=field_map)


def _cmd_evaluate(args: argparse.Namespace) -> int:
    bundle = _load_bundle(args)
    dataset = bundle.annotated_documents()
    metric = _metric_backend(args)
    references = [r for r in args.references.split(",") if r]
    pooling = Pooling(args.pooling) if args.pooling else (
        Pooling.MAX if len(references) > 1 else Pooling.NONE
    )
    report = evaluate_dataset(
        dataset, args.candidate, references, metric, pooling, jobs=args.jobs
    )
    if args.verify:
        _verify_dataset(dataset, args.candidate, references, metric)

    counts = []
    if len(references) <= 2:
        counts.append(build_count_report(dataset, args.candidate, references))
    rendered = aggregation.render_report([report], counts)
    out = Path(args.out)
    out.with_suffix(".txt").write_text(rendered.text, encoding="utf-8")
    out.with_suffix(".csv").write_text(rendered.csv_text(), encoding="utf-8")
    if counts:
        count_lines = "\n".join(",".join(r) for r in count_csv_rows(counts)) + "\n"
        Path(str(out) + "_counts.csv").write_text(count_lines, encoding="utf-8")
    print(rendered.text, end="")
    if report.excluded:
        print(f"excluded {report.n_excluded} document(s):", file=sys.stderr)
        for exclusion in report.excluded:
            print(f"  {exclusion.doc_id}: {exclusion.reason}", file=sys.stderr)
    return 0


def _verify_dataset(dataset, candidate_id, references, metric) -> None:
    """Cross-check the solver against brute force on every small matrix."""
    for doc in dataset:
        cand = doc.claim_sets.get(candidate_id)
        if cand is None:
            continue
        for ref_id in references:
            ref = doc.claim_sets.get(ref_id)
            if ref is None or (not cand.claims and not ref.claims):
                continue
            matrix = build_similarity_matrix(cand, ref, metric)
            if matrix.n > BRUTE_FORCE_LIMIT:
                continue
            fast = solve_assignment(matrix)
            slow = brute_force_assignment(matrix)
            if fast.total != slow.total:
                raise VerificationError(
                    f"document {doc.document.id!r}: solver total {fast.total!r} "
                    f"!= brute-force total {slow.total!r}"
                )


def _cmd_align(args: argparse.Namespace) -> int:
    bundle = _load_bundle(args)
    sets = {
        (cs.doc_id, cs.producer_id): cs for cs in bundle.claim_sets
    }
    try:
        cand = sets[(args.doc_id, args.candidate)]
        ref = sets[(args.doc_id, args.reference)]
    except KeyError as exc:
        raise ClaimEvalError(f"no claim set {exc.args[0]!r} in dataset") from None
    metric = _metric_backend(args)
    matrix = build_similarity_matrix(cand, ref, metric)
    alignment = solve_assignment(matrix)
    if args.verify and matrix.n <= BRUTE_FORCE_LIMIT:
        oracle = brute_force_assignment(matrix)
        if oracle.total != alignment.total:
            raise VerificationError(
                f"solver total {alignment.total!r} != brute-force total {oracle.total!r}"
            )
    raw_mean = alignment.total / matrix.n
    if args.json:
        print(json.dumps({
            "doc_id": args.doc_id,
            "metric": metric.metric_id,
            "n": matrix.n,
            "real_rows": matrix.real_rows,
            "real_cols": matrix.real_cols,
            "matrix": [list(row) for row in matrix.cells],
            "pairs": [list(p) for p in alignment.pairs],
            "total": alignment.total,
            "raw_mean": raw_mean,
            "normalized": normalize_score(raw_mean, metric.metric_id).value,
        }, ensure_ascii=False, sort_keys=True))
        return 0
    print(f"document {args.doc_id}: {args.candidate} vs {args.reference} "
          f"({metric.metric_id}), n={matrix.n}")
    for i, row in enumerate(matrix.cells):
        cells = "  ".join(f"{v:7.4f}" for v in row)
        label = cand.claims[i][:40] if i < matrix.real_rows else "(dummy)"
        print(f"  [{cells}]  {label}")
    print("assignment:")
    for i, j in alignment.pairs:
        left = cand.claims[i][:40] if i < matrix.real_rows else "(dummy)"
        right = ref.claims[j][:40] if j < matrix.real_cols else "(dummy)"
        print(f"  {matrix.cells[i][j]:7.4f}  {left!r} -> {right!r}")
    print(f"total={alignment.total:.6f} raw_mean={raw_mean:.6f} "
          f"normalized={normalize_score(raw_mean, metric.metric_id).value:.2f}")
    return 0


def _dataset_paths(args: argparse.Namespace) -> tuple[Path, Path]:
    root = Path(args.dir)
    return root / DOCUMENTS_FILENAME, root / CLAIMS_FILENAME


def _cmd_validate(args: argparse.Namespace) -> int:
    docs_path, claims_path = _dataset_paths(args)
    field_map = load_field_map(args.field_map) if args.field_map else None
    docs = load_documents(docs_path, field_map)
    sets = load_claim_sets(claims_path, field_map)
    report = validate_dataset(docs, sets)
    print(report.describe())
    return 0 if report.valid else 1


def _cmd_stats(args: argparse.Namespace) -> int:
    docs_path, claims_path = _dataset_paths(args)
    field_map = load_field_map(args.field_map) if args.field_map else None
    bundle = DatasetBundle.load(docs_path, claims_path, field_map=field_map)
    stats = dataset_stats(bundle)
    print(f"samples: {stats.samples}")
    for lang, count in stats.language_mix.items():
        print(f"language {lang}: {count}")
    for producer, mean in stats.mean_claims.items():
        print(f"mean claims per document ({producer}): {mean:.2f}")
    return 0


def _cmd_extract(args: argparse.Namespace) -> int:
    field_map = load_field_map(args.field_map) if args.field_map else None
    docs = load_documents(args.docs, field_map)
    cfg = ExtractionConfig.default(args.model, args.language)
    client = ChatClient(_transport(args), args.model)
    expected: dict[str, int] = {}
    if args.informed_from:
        for cs in load_claim_sets(args.informed_from):
            expected[cs.doc_id] = len(cs.claims)

    def work(doc):
        count = expected.get(doc.id) if args.informed_from else None
        if args.informed_from and not count:
            log.warning("document %s has no gold claims; extracting uninformed", doc.id)
            count = None
        return run_extraction(doc, cfg, client, expected_count=count)

    jobs = max(1, args.jobs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(work, docs))
    else:
        traces = [work(doc) for doc in docs]
    out_sets = []
    for doc, trace in zip(docs, traces):
        out_sets.append(ClaimSet(
            doc_id=doc.id,
            producer_id=args.producer or args.model,
            claims=trace.checkworthy_claims,
        ))
        print(f"{doc.id}: {len(trace.raw_claims)} raw -> "
              f"{len(trace.checkworthy_claims)} check-worthy")
    write_claim_sets(args.out, out_sets)
    print(f"wrote {len(out_sets)} claim sets to {args.out}")
    return 0


def _cmd_pref_serve(args: argparse.Namespace) -> int:
    from .service import PreferenceServer, create_app

    tasks_path = Path(args.tasks)
    if tasks_path.exists():
        tasks = prefs.load_tasks(tasks_path)
        print(f"loaded {len(tasks)} tasks from {tasks_path}")
    else:
        bundle = _load_bundle(args)
        plan = prefs.sample_pairs(
            bundle.annotated_documents(),
            [p for p in args.producers.split(",") if p],
            args.group,
            args.judgments,
            reference_id=args.reference,
            seed=args.seed,
        )
        for doc_id, reason in plan.skipped:
            print(f"skipped {doc_id}: {reason}", file=sys.stderr)
        tasks = list(plan.tasks)
        prefs.write_tasks(tasks_path, tasks)
        print(f"sampled {len(tasks)} tasks -> {tasks_path}")
    server = PreferenceServer(tasks, VoteLog(args.votes))
    app = create_app(server, static_dir=args.static)

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_pref_export(args: argparse.Namespace) -> int:
    tasks = prefs.load_tasks(args.tasks)
    votes = VoteLog(args.votes).load()
    tally = prefs.tally_votes(tasks, votes, args.group)
    record = tally.to_record()
    text = json.dumps(record, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote tally to {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimeval",
        description="Document-level claim extraction evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score a candidate producer against references")
    _add_dataset_args(p_eval)
    _add_transport_args(p_eval)
    p_eval.add_argument("--candidate", required=True)
    p_eval.add_argument("--references", required=True,
                        help="comma-separated reference producer ids")
    p_eval.add_argument("--metric", choices=metric_ids(), default="edit")
    p_eval.add_argument("--pooling", choices=[p.value for p in Pooling], default=None,
                        help="default: max with 2+ references, none otherwise")
    p_eval.add_argument("--out", default="report", help="output path prefix")
    p_eval.add_argument("--verify", action="store_true",
                        help=f"brute-force cross-check (n <= {BRUTE_FORCE_LIMIT})")
    p_eval.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker pool size (default: available parallelism)")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--judge-model", default="judge")
    p_eval.add_argument("--judge-prompt", help="language code (cs/en) or template file")
    p_eval.add_argument("--sampling-fallback", action="store_true",
                        help="approximate the judge from samples when logprobs are unavailable")
    p_eval.add_argument("--embed-model", default="embedding")
    p_eval.add_argument("--embed-stub", action="store_true",
                        help="deterministic offline embedding backend")

    p_align = sub.add_parser("align", help="inspect one document's matrix and assignment")
    _add_dataset_args(p_align)
    _add_transport_args(p_align)
    p_align.add_argument("--doc-id", required=True)
    p_align.add_argument("--candidate", required=True)
    p_align.add_argument("--reference", required=True)
    p_align.add_argument("--metric", choices=metric_ids(), default="edit")
    p_align.add_argument("--verify", action="store_true")
    p_align.add_argument("--json", action="store_true")
    p_align.add_argument("--judge-model", default="judge")
    p_align.add_argument("--judge-prompt")
    p_align.add_argument("--sampling-fallback", action="store_true")
    p_align.add_argument("--embed-model", default="embedding")
    p_align.add_argument("--embed-stub", action="store_true")

    p_validate = sub.add_parser("validate", help="validate a dataset directory")
    p_validate.add_argument("dir", help=f"directory with {DOCUMENTS_FILENAME} and {CLAIMS_FILENAME}")
    p_validate.add_argument("--field-map")

    p_stats = sub.add_parser("stats", help="dataset shape statistics")
    p_stats.add_argument("dir", help=f"directory with {DOCUMENTS_FILENAME} and {CLAIMS_FILENAME}")
    p_stats.add_argument("--field-map")

    p_extract = sub.add_parser("extract", help="run the two-step extraction pipeline")
    p_extract.add_argument("--docs", required=True, help="documents JSONL file")
    p_extract.add_argument("--field-map")
    _add_transport_args(p_extract)
    p_extract.add_argument("--model", required=True)
    p_extract.add_argument("--producer", help="producer id for the output (default: model id)")
    p_extract.add_argument("--language", choices=["cs", "sk", "en"], default="cs")
    p_extract.add_argument("--informed-from",
                           help="gold claims file; discloses expected counts to the model")
    p_extract.add_argument("--out", required=True, help="output claims JSONL file")
    p_extract.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                           help="worker pool size (default: available parallelism)")

    p_pref = sub.add_parser("pref", help="preference study service")
    pref_sub = p_pref.add_subparsers(dest="pref_command", required=True)

    p_serve = pref_sub.add_parser("serve", help="host the voting API")
    _add_dataset_args(p_serve)
    p_serve.add_argument("--reference", required=True, help="gold producer id")
    p_serve.add_argument("--producers", required=True,
                         help="comma-separated producer ids to compare")
    p_serve.add_argument("--group", default="not_informed", choices=prefs.GROUPS)
    p_serve.add_argument("--judgments", type=int,
                         default=prefs.DEFAULT_JUDGMENTS_PER_SAMPLE)
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.add_argument("--tasks", required=True,
                         help="task file; loaded if present, sampled and written otherwise")
    p_serve.add_argument("--votes", required=True, help="append-only vote log")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--static", help="directory with the built voting UI")

    p_export = pref_sub.add_parser("export", help="export the tally for a group")
    p_export.add_argument("--tasks", required=True)
    p_export.add_argument("--votes", required=True)
    p_export.add_argument("--group", required=True)
    p_export.add_argument("--out", help="tally JSON output path (default: stdout)")

    return parser


_HANDLERS = {
    "evaluate": _cmd_evaluate,
    "align": _cmd_align,
    "validate": _cmd_validate,
    "stats": _cmd_stats,
    "extract": _cmd_extract,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        if args.command == "pref":
            handler = {
                "serve": _cmd_pref_serve,
                "export": _cmd_pref_export,
            }[args.pref_command]
            return handler(args)
        return _HANDLERS[args.command](args)
    except ClaimEvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
