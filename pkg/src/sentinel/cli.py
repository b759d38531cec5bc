"""Command-line pipeline: each phase is a subcommand composed via files."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import SentinelError
from .explore import ALL_LEVELS, aggregate_volume, write_volume_csv
from .features import (
    assemble_dataset,
    build_vocabulary,
    read_dataset_ndjson,
    vocabulary_from_obj,
    vocabulary_to_obj,
    write_dataset_ndjson,
)
from .ingest import load_corpus, write_ndjson
from .models import (
    Hyper,
    cross_validate,
    cv_report_to_obj,
    load_model,
    save_model,
    train,
)
from .rules import compile_ruleset, load_rule_config, run_detection, write_detection_ndjson
from .sessionize import build_sessions, read_sessions_ndjson, summarize_sessions, write_sessions_ndjson
from .synth import profile_for, write_corpus


def _read_records(path: str, format: str = "ndjson"):
    with open(path, encoding="utf-8") as f:
        return load_corpus(f, format, source_name=os.path.basename(path))


def _cmd_ingest(args) -> int:
    with open(args.infile, encoding="utf-8") as f:
        records, report = load_corpus(f, args.format, source_name=os.path.basename(args.infile))
    with open(args.out, "w", encoding="utf-8") as f:
        write_ndjson(records, f)
    print(
        f"ingest: {report.parsed} parsed, {report.rejected} rejected "
        f"of {report.total_lines} lines -> {args.out}"
    )
    if report.reject_reasons:
        for reason, count in sorted(report.reject_reasons.items()):
            print(f"  rejected[{reason}] = {count}")
    return 0


def _cmd_sessionize(args) -> int:
    records, _ = _read_records(args.infile)
    sessions, drops = build_sessions(records, min_length=args.min_length)
    with open(args.out, "w", encoding="utf-8") as f:
        write_sessions_ndjson(sessions, f)
    summary = summarize_sessions(sessions)
    print(
        f"sessionize: {summary.session_count} sessions "
        f"(min {summary.min_length}, mean {summary.mean_length}), "
        f"dropped {drops.unkeyed} unkeyed + {drops.undersized} undersized -> {args.out}"
    )
    return 0


def _cmd_explore(args) -> int:
    records, _ = _read_records(args.infile)
    keyword_categories = None
    if args.rules:
        keyword_categories = load_rule_config(args.rules).keyword_categories
    levels = args.level
    multi = len(levels) > 1 or os.path.isdir(args.out)
    if multi:
        os.makedirs(args.out, exist_ok=True)
    for level in levels:
        table = aggregate_volume(records, level, keyword_categories=keyword_categories)
        out_path = os.path.join(args.out, f"{level}.csv") if multi else args.out
        with open(out_path, "w", encoding="utf-8") as f:
            write_volume_csv(table, f)
        print(f"explore: {len(table.rows)} {level} buckets -> {out_path}")
    return 0


def _cmd_detect(args) -> int:
    with open(args.infile, encoding="utf-8") as f:
        sessions = read_sessions_ndjson(f)
    rule_set = compile_ruleset(load_rule_config(args.rules))
    report = run_detection(rule_set, sessions)
    with open(args.out, "w", encoding="utf-8") as f:
        write_detection_ndjson(report, f)
    print(
        f"detect: {report.flagged_sessions}/{report.total_sessions} sessions flagged "
        f"({report.fraction:.4f}) -> {args.out}"
    )
    return 0


def _cmd_featurize(args) -> int:
    with open(args.sessions, encoding="utf-8") as f:
        sessions = read_sessions_ndjson(f)
    with open(args.labels, encoding="utf-8") as f:
        obj = json.load(f)
    if "plans" in obj:  # synth truth.json doubles as a label source
        labels = {p["session_id"]: p["label"] for p in obj["plans"].values()}
    else:
        labels = {sid: int(v) for sid, v in obj.items()}
    labeled_sessions = [s for s in sessions if s.session_id in labels]
    vocab = build_vocabulary(labeled_sessions, min_df=args.min_df)
    dataset = assemble_dataset(labeled_sessions, labels, vocab)
    with open(args.vocab_out, "w", encoding="utf-8") as f:
        json.dump(vocabulary_to_obj(vocab), f, sort_keys=True)
        f.write("\n")
    with open(args.data_out, "w", encoding="utf-8") as f:
        write_dataset_ndjson(dataset, f)
    print(
        f"featurize: {len(dataset)} rows, {vocab.dimension} features "
        f"-> {args.data_out}, {args.vocab_out}"
    )
    return 0


def _hyper_from_args(args) -> Hyper:
    return Hyper(
        learning_rate=args.lr,
        l2=args.l2,
        epochs=args.epochs,
        seed=args.seed,
        class_weight=args.class_weight,
    )


def _cmd_train(args) -> int:
    with open(args.data, encoding="utf-8") as f:
        dataset = read_dataset_ndjson(f)
    digest = ""
    if args.vocab:
        with open(args.vocab, encoding="utf-8") as f:
            digest = vocabulary_from_obj(json.load(f)).digest()
    model = train(dataset, _hyper_from_args(args), args.kind)
    save_model(model, digest, args.out)
    print(f"train: {args.kind} model over {len(dataset)} rows -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    with open(args.data, encoding="utf-8") as f:
        dataset = read_dataset_ndjson(f)
    if args.model:
        model, _ = load_model(args.model)
        kind, hyper = model.kind, model.hyper
    else:
        kind, hyper = args.kind, _hyper_from_args(args)
    report = cross_validate(dataset, k=args.folds, kind=kind, hyper=hyper)
    obj = cv_report_to_obj(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(obj, f, sort_keys=True, indent=2)
            f.write("\n")
    print(f"evaluate: {kind} {args.folds}-fold mean accuracy {report.mean_accuracy:.4f}")
    for i, m in enumerate(report.fold_metrics, start=1):
        print(
            f"  fold {i}: acc {m.accuracy:.4f} prec {m.precision:.4f} "
            f"rec {m.recall:.4f} f1 {m.f1:.4f}"
        )
    return 0


def _cmd_synth(args) -> int:
    profile = profile_for(
        n_sessions=args.n,
        suspicious_fraction=args.suspicious_fraction,
        seed=args.seed,
        overlap=args.overlap,
    )
    summary = write_corpus(profile, args.out)
    print(
        f"synth: {summary['records']} records in {summary['sessions']} sessions "
        f"({summary['suspicious']} suspicious) -> {args.out}"
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    ui_dir = args.ui
    if ui_dir is None:
        default_ui = os.path.join(os.getcwd(), "frontend", "dist")
        ui_dir = default_ui if os.path.isdir(default_ui) else None
    app = create_app(args.state, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentinel",
        description="Web-traffic forensics: ingest, sessionize, explore, detect, model, triage.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw export into validated NDJSON records")
    p.add_argument("--format", choices=("csv", "ndjson"), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("sessionize", help="group records into user sessions")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-length", type=int, default=3)
    p.set_defaults(func=_cmd_sessionize)

    p = sub.add_parser("explore", help="write volume tables as CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--level", action="append", choices=ALL_LEVELS, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rules", help="rule config supplying keyword categories")
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("detect", help="evaluate rules over sessions")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("featurize", help="build vocabulary and labeled dataset")
    p.add_argument("--sessions", required=True)
    p.add_argument("--labels", required=True, help="session_id->label JSON, or synth truth.json")
    p.add_argument("--vocab-out", required=True)
    p.add_argument("--data-out", required=True)
    p.add_argument("--min-df", type=int, default=1)
    p.set_defaults(func=_cmd_featurize)

    for name in ("train", "evaluate"):
        p = sub.add_parser(
            name,
            help="train a linear model" if name == "train" else "k-fold cross-validation",
        )
        p.add_argument("--data", required=True)
        p.add_argument("--kind", choices=("logistic", "svm"), default="logistic")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--lr", type=float, default=0.1)
        p.add_argument("--l2", type=float, default=1e-4)
        p.add_argument("--epochs", type=int, default=500)
        p.add_argument("--class-weight", type=float, default=1.0)
        if name == "train":
            p.add_argument("--vocab", help="vocabulary JSON; binds the model via digest")
            p.add_argument("--out", required=True)
            p.set_defaults(func=_cmd_train)
        else:
            p.add_argument("--model", help="take kind and hyperparameters from a model file")
            p.add_argument("--folds", type=int, default=5)
            p.add_argument("--out")
            p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus with ground truth")
    p.add_argument("--n", type=int, required=True, help="number of sessions to plan")
    p.add_argument("--suspicious-fraction", type=float, default=0.06)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("serve", help="run the triage HTTP service")
    p.add_argument("--state", default=os.environ.get("SENTINEL_STATE"))
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve" and not args.state:
        parser.error("serve requires --state or SENTINEL_STATE")
    try:
        return args.func(args)
    except (SentinelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
