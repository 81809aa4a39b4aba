"""`srl` command line: preprocess / split / decode / eval / baseline / run / report / select."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from . import FORMAT_VERSIONS, SrlError, __version__
from . import corpus as corpus_mod
from . import evaluate, experiment, stratify, tagging

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_ID_RE = re.compile(r"^(?P<sid>.+)-p(?P<pred>\d+)$")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srl", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"srl-toolkit {__version__} "
        + " ".join(f"{k}-format={v}" for k, v in FORMAT_VERSIONS.items()),
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="apply cleaning rules to a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("conll", "xml"), default="conll")
    p.add_argument("--rules", default=",".join(corpus_mod.DEFAULT_RULES))
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("split", help="stratified k-fold split")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("conll", "xml"), default="conll")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("decode", help="Viterbi-decode an emission file to CoNLL predictions")
    p.add_argument("--emissions", required=True)
    p.add_argument("--corpus", help="corpus supplying token surfaces, matched by instance id")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="span precision/recall/F1")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--unlabeled", action="store_true")
    p.add_argument("--decompose", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("baseline", help="frequency-model emissions (test vehicle)")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run a decode+eval experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("report", help="aggregate run records into a table")
    p.add_argument("--runs", required=True)
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.add_argument("--baseline")
    p.add_argument("--pooled", action="store_true")

    p = sub.add_parser("select", help="pick the best model per the selection heuristic")
    p.add_argument("--runs", required=True)
    p.add_argument("--data", choices=("clean", "unclean"), required=True)
    p.add_argument("--roles", help="comma-separated role subset")

    return parser


def _require_file(path: str) -> str:
    if path != "-" and not os.path.exists(path):
        raise SrlError(f"file not found: {path}")
    return path


def _load_corpus(path: str, fmt: str) -> corpus_mod.Corpus:
    _require_file(path)
    if path == "-":
        if fmt == "conll":
            return corpus_mod.parse_conll(sys.stdin)
        return corpus_mod.parse_xml(sys.stdin.buffer)
    return corpus_mod.load_corpus(path, fmt)


def cmd_preprocess(args) -> int:
    corpus = _load_corpus(args.infile, args.format)
    rules = [r for r in args.rules.split(",") if r]
    out, report = corpus_mod.preprocess(corpus, rules)
    corpus_mod.save_corpus(out, args.out)
    if args.report:
        lines = [f"{rule}={report.counts[rule]}" for rule in corpus_mod.RULE_ORDER]
        lines.append(f"repaired_tags={report.repaired_tags}")
        for iid, reason in report.rejected:
            lines.append(f"rejected={iid}\t{reason}")
        with open(args.report, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_split(args) -> int:
    corpus = _load_corpus(args.infile, args.format)
    assignment = stratify.stratified_folds(corpus, args.k, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    for fold in range(args.k):
        ids = set(assignment.fold_ids(fold))
        fold_corpus = corpus_mod.Corpus(
            [inst for inst in corpus if inst.instance_id in ids]
        )
        corpus_mod.save_corpus(fold_corpus, os.path.join(args.out_dir, f"fold_{fold}.conll"))
    manifest = {
        "k": assignment.k,
        "seed": assignment.seed,
        "assignment": assignment.assignment,
    }
    with open(os.path.join(args.out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return EXIT_OK


def cmd_decode(args) -> int:
    _require_file(args.emissions)
    label_set, matrices = tagging.read_emissions(args.emissions)
    by_id = None
    if args.corpus:
        _require_file(args.corpus)
        source = corpus_mod.load_corpus(args.corpus)
        by_id = {inst.instance_id: inst for inst in source}

    out = corpus_mod.Corpus()
    for m in matrices:
        tags = tagging.viterbi_decode(m.scores, label_set)
        if by_id is not None:
            if m.instance_id not in by_id:
                raise SrlError(f"instance {m.instance_id} not found in {args.corpus}")
            src = by_id[m.instance_id]
            inst = corpus_mod.Instance(
                sentence_id=src.sentence_id,
                tokens=src.tokens,
                predicate_index=src.predicate_index,
                gold_tags=tags,
                predicate_lemma=src.predicate_lemma,
            )
        else:
            inst = _synthetic_instance(m.instance_id, tags)
        out.instances.append(inst)
    corpus_mod.save_corpus(out, args.out)
    return EXIT_OK


def _synthetic_instance(instance_id: str, tags: list[str]) -> corpus_mod.Instance:
    """Prediction carrier when no corpus supplies surfaces."""
    match = _ID_RE.match(instance_id)
    v_spans = [sp for sp in tagging.tags_to_spans(tags) if sp.label == "V"]
    if match:
        sid, pred = match.group("sid"), int(match.group("pred"))
        if pred >= len(tags):
            pred = 0
    else:
        sid = instance_id
        pred = v_spans[0].start if v_spans else 0
    tokens = [corpus_mod.Token(f"w{i}", i) for i in range(len(tags))]
    return corpus_mod.Instance(
        sentence_id=sid,
        tokens=tokens,
        predicate_index=pred,
        gold_tags=tags,
        predicate_lemma="v",
    )


def cmd_eval(args) -> int:
    _require_file(args.gold)
    _require_file(args.pred)
    gold = experiment.gold_spans_by_instance(corpus_mod.load_corpus(args.gold))
    pred = experiment.gold_spans_by_instance(corpus_mod.load_corpus(args.pred))
    if args.unlabeled:
        report = evaluate.score_unlabeled(gold, pred)
    else:
        report = evaluate.score(gold, pred)
    decomposition = evaluate.decompose(gold, pred) if args.decompose else None
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(evaluate.format_report_kv(report, decomposition))
    sys.stdout.write(evaluate.format_report(report, decomposition))
    return EXIT_OK


def cmd_baseline(args) -> int:
    train = _load_corpus(args.train, "conll")
    test = _load_corpus(args.test, "conll")
    label_set, matrices = experiment.baseline_emissions(train, test)
    tagging.write_emissions(args.out, label_set, matrices)
    return EXIT_OK


def cmd_run(args) -> int:
    _require_file(args.config)
    config = experiment.ExperimentConfig.load(args.config)
    result = experiment.run_experiment(config)
    os.makedirs(args.out_dir, exist_ok=True)
    for rec in result.records:
        experiment.write_record(
            rec, os.path.join(args.out_dir, experiment.record_filename(rec))
        )
    if result.gaps:
        with open(os.path.join(args.out_dir, "gaps.txt"), "w", encoding="utf-8") as f:
            f.write("\n".join(result.gaps) + "\n")
        for gap in result.gaps:
            print(f"skipped: {gap}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    _require_file(args.runs)
    records = experiment.read_records_dir(args.runs)
    table = experiment.aggregate(records, baseline=args.baseline, pooled=args.pooled)
    if args.format == "tsv":
        sys.stdout.write(experiment.format_tsv(table))
    else:
        sys.stdout.write(experiment.format_table(table))
    return EXIT_OK


def cmd_select(args) -> int:
    _require_file(args.runs)
    records = experiment.read_records_dir(args.runs)
    roles = args.roles.split(",") if args.roles else "all"
    print(experiment.select_model(records, args.data, roles))
    return EXIT_OK


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "split": cmd_split,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "run": cmd_run,
    "report": cmd_report,
    "select": cmd_select,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (SrlError, OSError, json.JSONDecodeError) as exc:
        print(f"srl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
