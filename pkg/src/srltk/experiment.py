"""Fold-run orchestration, cross-fold aggregation, and model selection.

The runner never trains anything: models plug in through emission files, one
per (model, fold) plus one for the out-of-domain test set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import SrlError
from .corpus import Corpus, load_corpus
from .evaluate import ErrorDecomposition, EvalReport, LabelCounts, decompose, score
from .tagging import (
    ArgumentSpan,
    EmissionMatrix,
    LabelSet,
    read_emissions,
    tags_to_spans,
    viterbi_decode,
)

OUT_OF_DOMAIN = "ood"
SCENARIOS = ("pt-only", "+En transfer", "zero-shot")


@dataclass
class RunRecord:
    model_name: str
    scenario: str
    fold: str  # fold index as string, or "ood"
    report: EvalReport
    decomposition: ErrorDecomposition

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.model_name, self.scenario, self.fold)


@dataclass
class ExperimentResult:
    records: list[RunRecord] = field(default_factory=list)
    gaps: list[str] = field(default_factory=list)  # skipped runs, human-readable


@dataclass
class ModelConfig:
    scenario: str
    emissions: dict[str, str]  # fold name -> emission file path
    out_of_domain: str | None = None


@dataclass
class ExperimentConfig:
    models: dict[str, ModelConfig]
    gold_folds: dict[str, str]  # fold name -> CoNLL file path
    gold_out_of_domain: str | None = None
    baseline: str | None = None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        models = {}
        for name, m in raw.get("models", {}).items():
            scenario = m.get("scenario", "pt-only")
            if scenario not in SCENARIOS:
                raise SrlError(f"model {name}: unknown scenario {scenario!r}")
            models[name] = ModelConfig(
                scenario=scenario,
                emissions={str(k): v for k, v in m.get("emissions", {}).items()},
                out_of_domain=m.get("out_of_domain"),
            )
        gold = raw.get("gold", {})
        return cls(
            models=models,
            gold_folds={str(k): v for k, v in gold.get("folds", {}).items()},
            gold_out_of_domain=gold.get("out_of_domain"),
            baseline=raw.get("baseline"),
        )


def gold_spans_by_instance(corpus: Corpus) -> dict[str, list[ArgumentSpan]]:
    return {inst.instance_id: inst.gold_spans() for inst in corpus}


def decode_emission_file(path) -> dict[str, list[ArgumentSpan]]:
    label_set, matrices = read_emissions(path)
    return {
        m.instance_id: tags_to_spans(viterbi_decode(m.scores, label_set)) for m in matrices
    }


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Decode, score and decompose every (model, fold) plus the out-of-domain set."""
    result = ExperimentResult()
    gold_cache: dict[str, dict[str, list[ArgumentSpan]]] = {}

    def gold_for(path):
        if path not in gold_cache:
            gold_cache[path] = gold_spans_by_instance(load_corpus(path))
        return gold_cache[path]

    for model_name in sorted(config.models):
        mc = config.models[model_name]
        jobs = [(fold, mc.emissions.get(fold), config.gold_folds[fold])
                for fold in sorted(config.gold_folds)]
        if config.gold_out_of_domain:
            jobs.append((OUT_OF_DOMAIN, mc.out_of_domain, config.gold_out_of_domain))
        for fold, emission_path, gold_path in jobs:
            if not emission_path or not os.path.exists(emission_path):
                result.gaps.append(f"{model_name}/{mc.scenario}/{fold}: missing emissions")
                continue
            gold = gold_for(gold_path)
            pred = decode_emission_file(emission_path)
            result.records.append(
                RunRecord(
                    model_name=model_name,
                    scenario=mc.scenario,
                    fold=fold,
                    report=score(gold, pred),
                    decomposition=decompose(gold, pred),
                )
            )
    return result


# ---------------------------------------------------------------------------
# Aggregation (Table II / Table III shapes)
# ---------------------------------------------------------------------------

@dataclass
class ModelAggregate:
    model_name: str
    scenario: str
    mean_precision: float
    mean_recall: float
    mean_f1: float
    delta_f1: float | None = None
    ood_precision: float | None = None
    ood_recall: float | None = None
    ood_f1: float | None = None
    ood_delta_f1: float | None = None
    best_fold: str | None = None
    best_precision: float | None = None
    best_recall: float | None = None
    best_f1: float | None = None


@dataclass
class AggregateTable:
    rows: list[ModelAggregate]


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def _pooled(reports: Iterable[EvalReport]) -> EvalReport:
    out = EvalReport()
    for r in reports:
        out.correct += r.correct
        out.excess += r.excess
        out.missed += r.missed
    return out


def aggregate(
    records: Iterable[RunRecord], baseline: str | None = None, pooled: bool = False
) -> AggregateTable:
    """Per-model means across folds plus the out-of-domain block.

    Means are means of per-fold metrics; `pooled` switches to metrics over
    summed counts instead.
    """
    by_model: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        by_model.setdefault((rec.model_name, rec.scenario), []).append(rec)

    rows = []
    for (model_name, scenario) in sorted(by_model):
        recs = sorted(by_model[(model_name, scenario)], key=lambda r: r.fold)
        folds = [r for r in recs if r.fold != OUT_OF_DOMAIN]
        ood = [r for r in recs if r.fold == OUT_OF_DOMAIN]
        row = ModelAggregate(
            model_name=model_name,
            scenario=scenario,
            mean_precision=0.0,
            mean_recall=0.0,
            mean_f1=0.0,
        )
        if folds:
            if pooled:
                pr = _pooled(r.report for r in folds)
                row.mean_precision, row.mean_recall, row.mean_f1 = (
                    pr.precision,
                    pr.recall,
                    pr.f1,
                )
            else:
                row.mean_precision = _mean([r.report.precision for r in folds])
                row.mean_recall = _mean([r.report.recall for r in folds])
                row.mean_f1 = _mean([r.report.f1 for r in folds])
            best = max(folds, key=lambda r: (r.report.f1, r.fold))
            row.best_fold = best.fold
            row.best_precision = best.report.precision
            row.best_recall = best.report.recall
            row.best_f1 = best.report.f1
        if ood:
            if pooled:
                pr = _pooled(r.report for r in ood)
                row.ood_precision, row.ood_recall, row.ood_f1 = pr.precision, pr.recall, pr.f1
            else:
                row.ood_precision = _mean([r.report.precision for r in ood])
                row.ood_recall = _mean([r.report.recall for r in ood])
                row.ood_f1 = _mean([r.report.f1 for r in ood])
        rows.append(row)

    if baseline is not None:
        base_row = next((r for r in rows if r.model_name == baseline), None)
        if base_row is not None:
            for row in rows:
                if row.model_name == baseline:
                    continue
                row.delta_f1 = row.mean_f1 - base_row.mean_f1
                if row.ood_f1 is not None and base_row.ood_f1 is not None:
                    row.ood_delta_f1 = row.ood_f1 - base_row.ood_f1
    return AggregateTable(rows)


# ---------------------------------------------------------------------------
# Model-selection heuristic
# ---------------------------------------------------------------------------

def _restricted_f1(report: EvalReport, roles: set[str]) -> float:
    counts = LabelCounts()
    for label in roles:
        lc = report.per_label.get(label)
        if lc is None:
            continue
        counts.correct += lc.correct
        counts.excess += lc.excess
        counts.missed += lc.missed
    return counts.f1


def select_model(
    records: Iterable[RunRecord],
    data_kind: str,
    roles_of_interest: Sequence[str] | str = "all",
) -> str:
    """Pick a model: clean data ranks by test-fold F1, unclean by the
    out-of-domain F1; a role subset ranks by F1 restricted to those labels.
    """
    if data_kind not in ("clean", "unclean"):
        raise SrlError(f"data_kind must be clean or unclean, got {data_kind!r}")
    records = list(records)
    if not records:
        raise SrlError("no run records to select from")

    if data_kind == "clean":
        pool = [r for r in records if r.fold != OUT_OF_DOMAIN]
    else:
        pool = [r for r in records if r.fold == OUT_OF_DOMAIN]
    if not pool:
        raise SrlError(f"no records for data_kind={data_kind}")

    roles: set[str] | None = None
    if roles_of_interest != "all":
        roles = set(roles_of_interest)
        known = set()
        for r in records:
            known.update(r.report.per_label)
        absent = roles - known
        if absent:
            raise SrlError(f"roles absent from every report: {sorted(absent)}")

    by_model: dict[str, list[RunRecord]] = {}
    for r in pool:
        by_model.setdefault(r.model_name, []).append(r)

    def rank(model: str) -> float:
        recs = by_model[model]
        if roles is None:
            return _mean([r.report.f1 for r in recs])
        return _mean([_restricted_f1(r.report, roles) for r in recs])

    return min(sorted(by_model), key=lambda m: (-rank(m), m))


# ---------------------------------------------------------------------------
# Desk-scale emission models (test vehicles, not research models)
# ---------------------------------------------------------------------------

DISTANCE_BUCKETS = (-2, -1, 0, 1, 2, "far")


def _bucket(distance: int):
    return distance if -2 <= distance <= 2 else "far"


def baseline_emissions(train_corpus: Corpus, test_corpus: Corpus) -> tuple[LabelSet, list[EmissionMatrix]]:
    """Deterministic per-token frequency model over
    (surface, is-predicate, distance-bucket) keys with add-one smoothing and
    global-distribution backoff."""
    label_set = LabelSet(sorted(train_corpus.label_inventory | {"V"}))
    n_tags = len(label_set)

    key_counts: dict[tuple, np.ndarray] = {}
    global_counts = np.zeros(n_tags)
    for inst in train_corpus:
        if inst.gold_tags is None:
            continue
        for i, tag in enumerate(inst.gold_tags):
            try:
                t = label_set.index(tag)
            except SrlError:
                continue
            key = (inst.tokens[i].surface, i == inst.predicate_index,
                   _bucket(i - inst.predicate_index))
            if key not in key_counts:
                key_counts[key] = np.zeros(n_tags)
            key_counts[key][t] += 1
            global_counts[t] += 1

    global_logp = np.log((global_counts + 1.0) / (global_counts.sum() + n_tags))

    matrices = []
    for inst in test_corpus:
        rows = np.empty((len(inst.tokens), n_tags))
        for i, tok in enumerate(inst.tokens):
            key = (tok.surface, i == inst.predicate_index, _bucket(i - inst.predicate_index))
            counts = key_counts.get(key)
            if counts is None:
                rows[i] = global_logp
            else:
                rows[i] = np.log((counts + 1.0) / (counts.sum() + n_tags))
        matrices.append(EmissionMatrix(inst.instance_id, rows))
    return label_set, matrices


def oracle_emissions(
    corpus: Corpus, label_set: LabelSet | None = None, confidence: float = 0.999
) -> tuple[LabelSet, list[EmissionMatrix]]:
    """Near-one-hot emissions on the gold tags; decoding recovers them exactly."""
    if label_set is None:
        label_set = LabelSet(sorted(corpus.label_inventory | {"V"}))
    n_tags = len(label_set)
    rest = (1.0 - confidence) / (n_tags - 1)
    matrices = []
    for inst in corpus:
        rows = np.full((len(inst.tokens), n_tags), np.log(rest))
        for i, tag in enumerate(inst.gold_tags or []):
            rows[i, label_set.index(tag)] = np.log(confidence)
        matrices.append(EmissionMatrix(inst.instance_id, rows))
    return label_set, matrices


def uniform_emissions(corpus: Corpus, label_set: LabelSet) -> list[EmissionMatrix]:
    n_tags = len(label_set)
    return [
        EmissionMatrix(
            inst.instance_id, np.full((len(inst.tokens), n_tags), -np.log(n_tags))
        )
        for inst in corpus
    ]


# ---------------------------------------------------------------------------
# Run-record persistence: one key=value text file per record
# ---------------------------------------------------------------------------

def record_filename(rec: RunRecord) -> str:
    safe_scenario = rec.scenario.replace(" ", "_").replace("+", "plus")
    return f"{rec.model_name}__{safe_scenario}__{rec.fold}.run"


def write_record(rec: RunRecord, path) -> None:
    lines = [
        f"model={rec.model_name}",
        f"scenario={rec.scenario}",
        f"fold={rec.fold}",
        f"correct={rec.report.correct}",
        f"excess={rec.report.excess}",
        f"missed={rec.report.missed}",
    ]
    for label in sorted(rec.report.per_label):
        lc = rec.report.per_label[label]
        lines.append(f"label.{label}={lc.correct},{lc.excess},{lc.missed}")
    d = rec.decomposition
    lines.append(f"decomp.total={d.total_error!r}")
    lines.append(f"decomp.arg_id={d.arg_id_error!r}")
    lines.append(f"decomp.arg_class={d.arg_class_error!r}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def read_record(path) -> RunRecord:
    fields: dict[str, str] = {}
    per_label: dict[str, LabelCounts] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, value = line.split("=", 1)
            if key.startswith("label."):
                c, e, m = (int(x) for x in value.split(","))
                per_label[key[6:]] = LabelCounts(c, e, m)
            else:
                fields[key] = value
    try:
        report = EvalReport(
            correct=int(fields["correct"]),
            excess=int(fields["excess"]),
            missed=int(fields["missed"]),
            per_label=per_label,
        )
        decomposition = ErrorDecomposition(
            total_error=float(fields["decomp.total"]),
            arg_id_error=float(fields["decomp.arg_id"]),
            arg_class_error=float(fields["decomp.arg_class"]),
        )
        return RunRecord(
            model_name=fields["model"],
            scenario=fields["scenario"],
            fold=fields["fold"],
            report=report,
            decomposition=decomposition,
        )
    except KeyError as exc:
        raise SrlError(f"{path}: missing record field {exc}") from None


def read_records_dir(directory) -> list[RunRecord]:
    records = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".run"):
            records.append(read_record(os.path.join(directory, name)))
    return records


def format_table(table: AggregateTable) -> str:
    header = (
        f"{'model':<20} {'scenario':<14} {'P':>7} {'R':>7} {'F1':>7} {'dF1':>7} "
        f"{'oodP':>7} {'oodR':>7} {'oodF1':>7} {'bestF1':>7}"
    )
    from .evaluate import pct

    def cell(x):
        return pct(x) if x is not None else "-"

    lines = [header]
    for row in table.rows:
        lines.append(
            f"{row.model_name:<20} {row.scenario:<14} {cell(row.mean_precision):>7} "
            f"{cell(row.mean_recall):>7} {cell(row.mean_f1):>7} {cell(row.delta_f1):>7} "
            f"{cell(row.ood_precision):>7} {cell(row.ood_recall):>7} {cell(row.ood_f1):>7} "
            f"{cell(row.best_f1):>7}"
        )
    return "\n".join(lines) + "\n"


def format_tsv(table: AggregateTable) -> str:
    cols = [
        "model", "scenario", "precision", "recall", "f1", "delta_f1",
        "ood_precision", "ood_recall", "ood_f1", "best_fold", "best_f1",
    ]
    lines = ["\t".join(cols)]
    for row in table.rows:
        values = [
            row.model_name, row.scenario, row.mean_precision, row.mean_recall,
            row.mean_f1, row.delta_f1, row.ood_precision, row.ood_recall,
            row.ood_f1, row.best_fold, row.best_f1,
        ]
        lines.append("\t".join("" if v is None else str(v) for v in values))
    return "\n".join(lines) + "\n"
