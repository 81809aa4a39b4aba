"""Span-based precision/recall/F1 scoring and error decomposition.

Matching semantics follow the CoNLL-2005 shared-task scorer for flat,
non-nested spans: a predicted span is correct iff an unmatched gold span with
the same (start, end, label) exists in the same instance; duplicates match as
multisets; V spans are excluded from the overall counts but still reported
per label.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping

from . import SrlError
from .tagging import ArgumentSpan

VERB_LABEL = "V"

SpansByInstance = Mapping[str, Iterable[ArgumentSpan]]


def _prf(correct: int, excess: int, missed: int) -> tuple[float, float, float]:
    p = correct / (correct + excess) if correct + excess else 0.0
    r = correct / (correct + missed) if correct + missed else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class LabelCounts:
    correct: int = 0
    excess: int = 0
    missed: int = 0

    @property
    def precision(self) -> float:
        return _prf(self.correct, self.excess, self.missed)[0]

    @property
    def recall(self) -> float:
        return _prf(self.correct, self.excess, self.missed)[1]

    @property
    def f1(self) -> float:
        return _prf(self.correct, self.excess, self.missed)[2]


@dataclass
class EvalReport:
    correct: int = 0
    excess: int = 0
    missed: int = 0
    per_label: dict[str, LabelCounts] = field(default_factory=dict)
    delta_f1: float | None = None

    @property
    def precision(self) -> float:
        return _prf(self.correct, self.excess, self.missed)[0]

    @property
    def recall(self) -> float:
        return _prf(self.correct, self.excess, self.missed)[1]

    @property
    def f1(self) -> float:
        return _prf(self.correct, self.excess, self.missed)[2]


@dataclass
class ErrorDecomposition:
    total_error: float
    arg_id_error: float
    arg_class_error: float


@dataclass
class DeltaRecord:
    delta_f1: float
    per_label: dict[str, float] = field(default_factory=dict)


def _check_alignment(gold: SpansByInstance, pred: SpansByInstance) -> None:
    missing = sorted(set(gold) ^ set(pred))
    if missing:
        raise SrlError(f"gold/prediction instance ids do not align: {missing}")


def score(gold: SpansByInstance, pred: SpansByInstance) -> EvalReport:
    """Labeled span scoring. C-x and R-x count as distinct labels."""
    _check_alignment(gold, pred)
    report = EvalReport()
    for inst_id in gold:
        g = Counter(sp.key() for sp in gold[inst_id])
        p = Counter(sp.key() for sp in pred[inst_id])
        matched = g & p
        for (_, _, label), n in matched.items():
            _bump(report, label, n, 0, 0)
        for (_, _, label), n in (p - matched).items():
            _bump(report, label, 0, n, 0)
        for (_, _, label), n in (g - matched).items():
            _bump(report, label, 0, 0, n)
    return report


def _bump(report: EvalReport, label: str, correct: int, excess: int, missed: int) -> None:
    lc = report.per_label.setdefault(label, LabelCounts())
    lc.correct += correct
    lc.excess += excess
    lc.missed += missed
    if label != VERB_LABEL:
        report.correct += correct
        report.excess += excess
        report.missed += missed


def score_unlabeled(gold: SpansByInstance, pred: SpansByInstance) -> EvalReport:
    """Boundary-only scoring; V spans are excluded from both sides."""
    _check_alignment(gold, pred)
    report = EvalReport()
    for inst_id in gold:
        g = Counter((sp.start, sp.end) for sp in gold[inst_id] if sp.label != VERB_LABEL)
        p = Counter((sp.start, sp.end) for sp in pred[inst_id] if sp.label != VERB_LABEL)
        matched = g & p
        report.correct += sum(matched.values())
        report.excess += sum((p - matched).values())
        report.missed += sum((g - matched).values())
    return report


def decompose(gold: SpansByInstance, pred: SpansByInstance) -> ErrorDecomposition:
    """Split total error (1 - labeled F1) at the unlabeled-F1 waypoint.

    arg_id_error = 1 - unlabeled F1 (boundary errors); arg_class_error is the
    remainder, which is non-negative because every labeled match is also an
    unlabeled match.
    """
    labeled = score(gold, pred).f1
    unlabeled = score_unlabeled(gold, pred).f1
    return ErrorDecomposition(
        total_error=1.0 - labeled,
        arg_id_error=1.0 - unlabeled,
        arg_class_error=unlabeled - labeled,
    )


def compare(report_a: EvalReport, report_b: EvalReport) -> DeltaRecord:
    """F1 deltas of report_a over report_b, overall and per label."""
    labels = sorted(set(report_a.per_label) | set(report_b.per_label))
    empty = LabelCounts()
    return DeltaRecord(
        delta_f1=report_a.f1 - report_b.f1,
        per_label={
            lab: report_a.per_label.get(lab, empty).f1 - report_b.per_label.get(lab, empty).f1
            for lab in labels
        },
    )


def pct(fraction: float) -> str:
    """Percentage with 2 decimals, rounding half away from zero."""
    return str(Decimal(repr(fraction * 100)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_report(report: EvalReport, decomposition: ErrorDecomposition | None = None) -> str:
    """Human-readable table."""
    lines = [
        f"{'label':<12} {'corr.':>6} {'excess':>6} {'missed':>6} {'prec.':>7} {'rec.':>7} {'F1':>7}",
        f"{'overall':<12} {report.correct:>6} {report.excess:>6} {report.missed:>6} "
        f"{pct(report.precision):>7} {pct(report.recall):>7} {pct(report.f1):>7}",
    ]
    for label in sorted(report.per_label):
        lc = report.per_label[label]
        lines.append(
            f"{label:<12} {lc.correct:>6} {lc.excess:>6} {lc.missed:>6} "
            f"{pct(lc.precision):>7} {pct(lc.recall):>7} {pct(lc.f1):>7}"
        )
    if report.delta_f1 is not None:
        lines.append(f"delta F1 vs baseline: {pct(report.delta_f1)}")
    if decomposition is not None:
        lines.append(
            f"error: total {pct(decomposition.total_error)}  "
            f"arg-id {pct(decomposition.arg_id_error)}  "
            f"arg-class {pct(decomposition.arg_class_error)}"
        )
    return "\n".join(lines) + "\n"


def format_report_kv(report: EvalReport, decomposition: ErrorDecomposition | None = None) -> str:
    """Machine-readable key=value lines."""
    lines = [
        f"correct={report.correct}",
        f"excess={report.excess}",
        f"missed={report.missed}",
        f"precision={report.precision!r}",
        f"recall={report.recall!r}",
        f"f1={report.f1!r}",
    ]
    for label in sorted(report.per_label):
        lc = report.per_label[label]
        lines.append(
            f"label.{label}={lc.correct},{lc.excess},{lc.missed}"
        )
    if decomposition is not None:
        lines.append(f"decomp.total={decomposition.total_error!r}")
        lines.append(f"decomp.arg_id={decomposition.arg_id_error!r}")
        lines.append(f"decomp.arg_class={decomposition.arg_class_error!r}")
    return "\n".join(lines) + "\n"
