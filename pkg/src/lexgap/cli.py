"""Batch command-line driver: ingest, filter, alpha, simulate, report,
export, serve. Every verb is a thin wrapper over the library; domain errors
exit 1 with a message, usage errors exit 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .agreement import Answer, encode_responses, krippendorff_alpha
from .campaign import Campaign
from .errors import LexgapError
from .ingestion import (
    SemanticFieldSpec,
    field_centroid,
    load_embeddings,
    parse_dataset,
    semantic_filter,
)
from .lexicon import LexiconStore
from .simulate import run_simulation


def _read(path: str) -> str:
    return Path(path).read_text("utf-8")


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args) -> int:
    entries = parse_dataset(_read(args.source))
    print(f"{len(entries)} entries")
    if args.out:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["word", "gloss"])
        for entry in entries:
            writer.writerow([entry.word, entry.gloss or ""])
        _write(args.out, buffer.getvalue())
    return 0


def cmd_filter(args) -> int:
    entries = parse_dataset(_read(args.source))
    table = load_embeddings(_read(args.embeddings))
    spec = SemanticFieldSpec.from_json(_read(args.field_spec))
    centroid = field_centroid(spec, table)
    retained, excluded = semantic_filter(entries, centroid, table, args.threshold)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["word", "gloss", "similarity"])
    for entry in retained:
        writer.writerow([entry.word, entry.gloss or "", f"{entry.similarity:.4f}"])
    _write(args.out, buffer.getvalue())
    print(f"retained {len(retained)} of {len(entries)}; excluded {len(excluded)}",
          file=sys.stderr)
    return 0


def cmd_alpha(args) -> int:
    """Matrix CSV: one row per item, one column per annotator, empty = missing."""
    rows = list(csv.reader(io.StringIO(_read(args.matrix))))
    responses = []
    for item_index, row in enumerate(rows, start=1):
        for annotator_index, cell in enumerate(row, start=1):
            label = cell.strip()
            if not label:
                continue
            responses.append(
                (f"i{item_index}", f"a{annotator_index}", Answer.equivalent([label]))
            )
    alpha = krippendorff_alpha(encode_responses(responses))
    if alpha is None:
        print("indeterminate (single category; treated as perfect agreement)")
    else:
        print(f"{float(alpha):.4f}")
    return 0


def cmd_simulate(args) -> int:
    result = run_simulation(
        n_items=args.items,
        n_workers=args.workers,
        accuracy=args.accuracy,
        seed=args.seed,
        alpha_threshold=args.threshold,
        questions_per_task=args.questions_per_task,
        acqs_per_task=args.acqs_per_task,
    )
    summary = {
        "items": args.items,
        "workers": args.workers,
        "accuracy": args.accuracy,
        "seed": args.seed,
        "expert_queue": sorted(result.expert_queue, key=lambda s: int(s[1:])),
        "gaps": result.report.total_gaps,
        "words": result.report.total_words,
        "new_concepts": result.report.total_new_concepts,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(result.report.to_csv(), "utf-8")
        (out / "lexicon.json").write_text(
            json.dumps(result.store.export_document(), ensure_ascii=False,
                       sort_keys=True, indent=2) + "\n",
            "utf-8",
        )
        (out / "campaign.json").write_text(
            json.dumps(result.campaign.to_dict(), ensure_ascii=False, sort_keys=True)
            + "\n",
            "utf-8",
        )
        (out / "summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n", "utf-8"
        )
    print(json.dumps(summary, sort_keys=True))
    return 0


def _load_campaign(args) -> Campaign:
    if args.campaign:
        return Campaign.from_dict(json.loads(_read(args.campaign)))
    if args.log and args.experiment:
        from .service.engine import Engine
        from .service.eventlog import EventLog

        engine = Engine(EventLog(args.log))
        return engine.campaign(args.experiment)
    raise LexgapError("provide --campaign FILE, or --log FILE with --experiment ID")


def cmd_report(args) -> int:
    campaign = _load_campaign(args)
    _write(args.out, campaign.report().to_csv())
    return 0


def cmd_export(args) -> int:
    campaign = _load_campaign(args)
    store = LexiconStore()
    campaign.apply_to_lexicon(store)
    document = (
        store.export_lexicon(args.language) if args.language else store.export_document()
    )
    _write(args.out, json.dumps(document, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(data_dir=args.data_dir, admin_key=args.admin_key)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexgap",
        description="Crowdsourced discovery of cross-lingual lexical gaps",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    ingest = verbs.add_parser("ingest", help="parse and normalize a word,gloss dataset")
    ingest.add_argument("--source", required=True)
    ingest.add_argument("--out")
    ingest.set_defaults(run=cmd_ingest)

    filter_ = verbs.add_parser("filter", help="keep entries near a semantic field centroid")
    filter_.add_argument("--source", required=True)
    filter_.add_argument("--embeddings", required=True)
    filter_.add_argument("--field-spec", required=True, dest="field_spec")
    filter_.add_argument("--threshold", type=float, default=0.8)
    filter_.add_argument("--out")
    filter_.set_defaults(run=cmd_filter)

    alpha = verbs.add_parser("alpha", help="agreement coefficient from a matrix CSV")
    alpha.add_argument("--matrix", required=True)
    alpha.set_defaults(run=cmd_alpha)

    simulate = verbs.add_parser("simulate", help="seeded synthetic end-to-end campaign")
    simulate.add_argument("--workers", type=int, default=3)
    simulate.add_argument("--accuracy", type=float, default=1.0)
    simulate.add_argument("--seed", type=int, default=7)
    simulate.add_argument("--items", type=int, default=100)
    simulate.add_argument("--threshold", type=float, default=0.70)
    simulate.add_argument("--questions-per-task", type=int, default=35, dest="questions_per_task")
    simulate.add_argument("--acqs-per-task", type=int, default=3, dest="acqs_per_task")
    simulate.add_argument("--out")
    simulate.set_defaults(run=cmd_simulate)

    report = verbs.add_parser("report", help="per-task gaps/words/new-concepts/alpha CSV")
    report.add_argument("--campaign", help="campaign.json from simulate --out")
    report.add_argument("--log", help="service event log")
    report.add_argument("--experiment", help="experiment id inside --log")
    report.add_argument("--out")
    report.set_defaults(run=cmd_report)

    export = verbs.add_parser("export", help="write the lexicon document")
    export.add_argument("--campaign")
    export.add_argument("--log")
    export.add_argument("--experiment")
    export.add_argument("--language")
    export.add_argument("--out")
    export.set_defaults(run=cmd_export)

    serve = verbs.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=8400)
    serve.add_argument("--data-dir", default="./lexgap-data", dest="data_dir")
    serve.add_argument("--admin-key", default=None, dest="admin_key")
    serve.set_defaults(run=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except LexgapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
