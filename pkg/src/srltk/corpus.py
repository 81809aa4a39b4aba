"""CoNLL-style and XML corpus parsing, cleaning rules, and serialization.

Canonical storage is IOB tags on each instance; bracket notation exists only
at the file boundary.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator
from xml.etree import ElementTree

from . import ParseError, SrlError
from .tagging import OUTSIDE, ArgumentSpan, spans_to_tags, tags_to_spans, validate

logger = logging.getLogger(__name__)

EXCLUSION_FLAGS = ("WRONGSUBCORPUS", "LATER", "REEXAMINE")
DROPPED_LABELS = ("AM-MED", "AM-PIN")
RULE_ORDER = (
    "drop_multilabel",
    "split_underscore",
    "join_contractions",
    "drop_labels",
    "drop_flagged",
    "rechain_continuations",
)
DEFAULT_RULES = RULE_ORDER

_CELL_RE = re.compile(r"^(?:\((?P<label>[^\s()*]+)\*(?P<close1>\))?|\*(?P<close2>\))?)$")


@dataclass(frozen=True)
class Token:
    surface: str
    index: int

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise SrlError(f"bad token surface {self.surface!r} at index {self.index}")


@dataclass
class Instance:
    """One sentence paired with one predicate position."""

    sentence_id: str
    tokens: list[Token]
    predicate_index: int
    gold_tags: list[str] | None = None
    predicate_lemma: str | None = None
    flags: frozenset[str] = frozenset()
    multilabel: bool = False

    def __post_init__(self):
        if not 0 <= self.predicate_index < len(self.tokens):
            raise SrlError(
                f"{self.sentence_id}: predicate index {self.predicate_index} "
                f"out of range for {len(self.tokens)} tokens"
            )
        if self.gold_tags is not None and len(self.gold_tags) != len(self.tokens):
            raise SrlError(f"{self.sentence_id}: tag/token length mismatch")

    @property
    def instance_id(self) -> str:
        return f"{self.sentence_id}-p{self.predicate_index}"

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def gold_spans(self) -> list[ArgumentSpan]:
        if self.gold_tags is None:
            return []
        return tags_to_spans(self.gold_tags)


@dataclass
class Corpus:
    instances: list[Instance] = field(default_factory=list)

    def __len__(self):
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    @property
    def label_inventory(self) -> set[str]:
        labels: set[str] = set()
        for inst in self.instances:
            labels.update(sp.label for sp in inst.gold_spans())
        return labels


@dataclass
class CorpusSummary:
    instance_count: int
    annotated_arg_count: int
    role_count: int


@dataclass
class PreprocessReport:
    counts: dict[str, int] = field(default_factory=dict)
    rejected: list[tuple[str, str]] = field(default_factory=list)  # (instance_id, reason)
    repaired_tags: int = 0


def repair_tags(tags: list[str]) -> tuple[list[str], int]:
    """Promote orphan I-x tags to B-x so noisy gold sequences stay usable."""
    out = list(tags)
    repairs = 0
    prev = OUTSIDE
    for i, t in enumerate(out):
        if t.startswith("I-") and prev != "B-" + t[2:] and prev != t:
            out[i] = "B-" + t[2:]
            repairs += 1
        prev = out[i]
    return out, repairs


# ---------------------------------------------------------------------------
# CoNLL column format
# ---------------------------------------------------------------------------

def parse_conll(stream) -> Corpus:
    """Parse the column format: surface, predicate marker, one props column per predicate."""
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in stream]

    corpus = Corpus()
    sent_no = 0
    block: list[tuple[int, list[str]]] = []

    def flush():
        nonlocal sent_no
        if not block:
            return
        sent_no += 1
        corpus.instances.extend(_parse_sentence_block(block, f"s{sent_no}"))
        block.clear()

    for lineno, raw in enumerate(lines, start=1):
        if raw.strip():
            block.append((lineno, raw.split()))
        else:
            flush()
    flush()
    return corpus


def _parse_sentence_block(block: list[tuple[int, list[str]]], sentence_id: str) -> list[Instance]:
    first_line, first_cols = block[0]
    width = len(first_cols)
    if width < 2:
        raise ParseError("expected at least 2 columns", line=first_line)
    n_props = width - 2

    tokens: list[Token] = []
    markers: list[str] = []
    for i, (lineno, cols) in enumerate(block):
        if len(cols) != width:
            raise ParseError(
                f"column count mismatch: {len(cols)} vs {width} in this sentence", line=lineno
            )
        tokens.append(Token(cols[0], i))
        markers.append(cols[1])

    pred_rows = [i for i, m in enumerate(markers) if m != "-"]
    if len(pred_rows) != n_props:
        raise ParseError(
            f"{len(pred_rows)} predicate markers but {n_props} props columns",
            line=first_line,
        )

    instances = []
    for j, pred_index in enumerate(pred_rows):
        tags = _parse_props_column([(ln, cols[2 + j]) for ln, cols in block])
        instances.append(
            Instance(
                sentence_id=sentence_id,
                tokens=tokens,
                predicate_index=pred_index,
                gold_tags=tags,
                predicate_lemma=markers[pred_index],
            )
        )
    return instances


def _parse_props_column(cells: list[tuple[int, str]]) -> list[str]:
    tags: list[str] = []
    open_label: str | None = None
    for lineno, cell in cells:
        m = _CELL_RE.match(cell)
        if not m:
            raise ParseError(f"malformed props cell {cell!r}", line=lineno)
        label = m.group("label")
        closes = bool(m.group("close1") or m.group("close2"))
        if label is not None:
            if open_label is not None:
                raise ParseError(f"nested span opened by {cell!r}", line=lineno)
            tags.append(f"B-{label}")
            open_label = None if closes else label
        else:
            if open_label is None:
                if closes:
                    raise ParseError("span closed but none is open", line=lineno)
                tags.append(OUTSIDE)
            else:
                tags.append(f"I-{open_label}")
                if closes:
                    open_label = None
    if open_label is not None:
        raise ParseError(f"span {open_label!r} still open at end of sentence", line=cells[-1][0])
    return tags


def write_conll(corpus: Corpus) -> str:
    """Canonical serialization; inverse of parse_conll on canonical input."""
    out: list[str] = []
    i = 0
    insts = corpus.instances
    while i < len(insts):
        group = [insts[i]]
        while (
            i + len(group) < len(insts)
            and insts[i + len(group)].sentence_id == group[0].sentence_id
            and insts[i + len(group)].surfaces == group[0].surfaces
        ):
            group.append(insts[i + len(group)])
        out.append(_write_sentence(group))
        i += len(group)
    return "".join(out)


def _write_sentence(group: list[Instance]) -> str:
    # canonical column order is ascending predicate position, like the parser
    group = sorted(group, key=lambda inst: inst.predicate_index)
    tokens = group[0].surfaces
    markers = ["-"] * len(tokens)
    for inst in group:
        markers[inst.predicate_index] = (
            inst.predicate_lemma or tokens[inst.predicate_index].lower()
        )
    columns = [_props_column(inst) for inst in group]
    lines = []
    for i, surface in enumerate(tokens):
        lines.append("\t".join([surface, markers[i]] + [col[i] for col in columns]))
    return "\n".join(lines) + "\n\n"


def _props_column(inst: Instance) -> list[str]:
    if inst.gold_tags is None:
        raise SrlError(f"{inst.instance_id}: cannot serialize without gold tags")
    cells = ["*"] * len(inst.tokens)
    for sp in inst.gold_spans():
        if sp.start == sp.end:
            cells[sp.start] = f"({sp.label}*)"
        else:
            cells[sp.start] = f"({sp.label}*"
            cells[sp.end] = "*)"
    return cells


# ---------------------------------------------------------------------------
# XML format (minimal schema documented in docs/xml_schema.md)
# ---------------------------------------------------------------------------

def parse_xml(stream, rejected: list[tuple[str, str]] | None = None) -> Corpus:
    """Parse the minimal XML schema; same Instance semantics as parse_conll.

    Annotation flags are kept as instance metadata so preprocessing can filter
    on them. Out-of-bounds argument offsets reject the instance; pass a list
    as `rejected` to collect (sentence id, reason) records.
    """
    tree = ElementTree.parse(stream)
    root = tree.getroot()
    if root.tag != "corpus":
        raise ParseError(f"root element is <{root.tag}>, expected <corpus>")

    corpus = Corpus()
    auto_id = 0
    for sent in root:
        if sent.tag != "sentence":
            logger.warning("skipping unknown element <%s>", sent.tag)
            continue
        auto_id += 1
        sid = sent.get("id", f"s{auto_id}")
        tokens: list[Token] = []
        inst_elems = []
        for child in sent:
            if child.tag == "tokens":
                tokens = [
                    Token((tok.text or "").strip(), i)
                    for i, tok in enumerate(child)
                    if tok.tag == "token"
                ]
            elif child.tag == "instance":
                inst_elems.append(child)
            else:
                logger.warning("skipping unknown element <%s> in %s", child.tag, sid)
        for elem in inst_elems:
            inst = _parse_xml_instance(elem, sid, tokens, rejected)
            if inst is not None:
                corpus.instances.append(inst)
    return corpus


def _parse_xml_instance(elem, sid, tokens, rejected) -> Instance | None:
    try:
        pred = int(elem.get("predicate", "-1"))
    except ValueError:
        pred = -1
    if not 0 <= pred < len(tokens):
        _reject(rejected, sid, f"predicate index {elem.get('predicate')!r} out of bounds")
        return None
    flags = frozenset(elem.get("flags", "").split())
    spans: list[ArgumentSpan] = []
    for arg in elem:
        if arg.tag != "arg":
            logger.warning("skipping unknown element <%s> in %s", arg.tag, sid)
            continue
        try:
            start, end = int(arg.get("start")), int(arg.get("end"))
            label = arg.get("label") or ""
            span = ArgumentSpan(start, end, label)
        except (TypeError, ValueError, SrlError) as exc:
            _reject(rejected, sid, f"bad argument: {exc}")
            return None
        if end >= len(tokens):
            _reject(rejected, sid, f"argument ({start},{end},{label}) outside sentence")
            return None
        spans.append(span)

    multilabel = _has_overlap(spans)
    tags = spans_to_tags(spans, len(tokens), strict=False)
    return Instance(
        sentence_id=sid,
        tokens=tokens,
        predicate_index=pred,
        gold_tags=tags,
        predicate_lemma=elem.get("lemma") or tokens[pred].surface.lower(),
        flags=flags,
        multilabel=multilabel,
    )


def _has_overlap(spans: list[ArgumentSpan]) -> bool:
    covered: set[int] = set()
    for sp in spans:
        rng = set(range(sp.start, sp.end + 1))
        if covered & rng:
            return True
        covered |= rng
    return False


def _reject(rejected, sid, reason):
    logger.warning("rejecting instance in %s: %s", sid, reason)
    if rejected is not None:
        rejected.append((sid, reason))


# ---------------------------------------------------------------------------
# Preprocessing rules
# ---------------------------------------------------------------------------

def load_contractions() -> dict[tuple[str, str], str]:
    lexicon: dict[tuple[str, str], str] = {}
    text = resources.files("srltk.data").joinpath("contractions.txt").read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        first, second, merged = line.split("\t")
        lexicon[(first, second)] = merged
    return lexicon


def preprocess(
    corpus: Corpus,
    rules: Iterable[str] = DEFAULT_RULES,
    contractions: dict[tuple[str, str], str] | None = None,
) -> tuple[Corpus, PreprocessReport]:
    """Apply cleaning rules in the fixed canonical order and report counts."""
    active = set(rules)
    unknown = active - set(RULE_ORDER)
    if unknown:
        raise SrlError(f"unknown preprocessing rules: {sorted(unknown)}")
    if contractions is None:
        contractions = load_contractions()

    report = PreprocessReport(counts={r: 0 for r in RULE_ORDER})
    out = Corpus()
    for inst in corpus:
        if inst.gold_tags is not None and not validate(inst.gold_tags):
            tags, n = repair_tags(inst.gold_tags)
            inst = _replace(inst, gold_tags=tags)
            report.repaired_tags += n

        if "drop_multilabel" in active and inst.multilabel:
            report.counts["drop_multilabel"] += 1
            continue
        if "split_underscore" in active:
            inst, n = _split_underscore(inst)
            report.counts["split_underscore"] += n
        if "join_contractions" in active:
            result = _join_contractions(inst, contractions)
            if result is None:
                report.rejected.append(
                    (inst.instance_id, "contraction merge crosses a span boundary")
                )
                continue
            inst, n = result
            report.counts["join_contractions"] += n
        if "drop_labels" in active:
            inst, n = _drop_labels(inst, DROPPED_LABELS)
            report.counts["drop_labels"] += n
        if "drop_flagged" in active and inst.flags & set(EXCLUSION_FLAGS):
            report.counts["drop_flagged"] += 1
            continue
        if "rechain_continuations" in active:
            inst, n = _rechain(inst)
            report.counts["rechain_continuations"] += n
        out.instances.append(inst)
    return out, report


def _replace(inst: Instance, **kw) -> Instance:
    base = dict(
        sentence_id=inst.sentence_id,
        tokens=inst.tokens,
        predicate_index=inst.predicate_index,
        gold_tags=inst.gold_tags,
        predicate_lemma=inst.predicate_lemma,
        flags=inst.flags,
        multilabel=inst.multilabel,
    )
    base.update(kw)
    return Instance(**base)


def _split_underscore(inst: Instance) -> tuple[Instance, int]:
    if not any("_" in t.surface for t in inst.tokens):
        return inst, 0
    tokens: list[Token] = []
    tags: list[str] = []
    pred = inst.predicate_index
    splits = 0
    for i, tok in enumerate(inst.tokens):
        parts = [p for p in tok.surface.split("_") if p] or [tok.surface]
        if i == inst.predicate_index:
            pred = len(tokens)
        if len(parts) > 1:
            splits += 1
        tag = inst.gold_tags[i] if inst.gold_tags else OUTSIDE
        for j, part in enumerate(parts):
            tokens.append(Token(part, len(tokens)))
            if tag == OUTSIDE:
                tags.append(OUTSIDE)
            elif j == 0:
                tags.append(tag)
            else:
                tags.append("I-" + tag[2:])
    return (
        _replace(
            inst,
            tokens=tokens,
            predicate_index=pred,
            gold_tags=tags if inst.gold_tags is not None else None,
        ),
        splits,
    )


def _merged_tag(first: str, second: str) -> str | None:
    """Tag for a merged contraction pair, or None when the merge crosses a span edge."""
    if first == OUTSIDE and second == OUTSIDE:
        return OUTSIDE
    if first != OUTSIDE and second == "I-" + first[2:]:
        return first
    return None


def _join_contractions(
    inst: Instance, lexicon: dict[tuple[str, str], str]
) -> tuple[Instance, int] | None:
    surfaces = inst.surfaces
    tokens: list[Token] = []
    tags: list[str] = []
    pred = inst.predicate_index
    new_pred = None
    merges = 0
    i = 0
    while i < len(surfaces):
        pair = (surfaces[i].lower(), surfaces[i + 1].lower()) if i + 1 < len(surfaces) else None
        if pair in lexicon:
            old_first = inst.gold_tags[i] if inst.gold_tags else OUTSIDE
            old_second = inst.gold_tags[i + 1] if inst.gold_tags else OUTSIDE
            tag = _merged_tag(old_first, old_second)
            if tag is None:
                return None
            merged = lexicon[pair]
            if surfaces[i][0].isupper():
                merged = merged[0].upper() + merged[1:]
            if pred in (i, i + 1):
                new_pred = len(tokens)
            tokens.append(Token(merged, len(tokens)))
            tags.append(tag)
            merges += 1
            i += 2
        else:
            if pred == i:
                new_pred = len(tokens)
            tokens.append(Token(surfaces[i], len(tokens)))
            tags.append(inst.gold_tags[i] if inst.gold_tags else OUTSIDE)
            i += 1
    if merges == 0:
        return inst, 0
    return (
        _replace(
            inst,
            tokens=tokens,
            predicate_index=new_pred if new_pred is not None else pred,
            gold_tags=tags if inst.gold_tags is not None else None,
        ),
        merges,
    )


def _drop_labels(inst: Instance, labels: Iterable[str]) -> tuple[Instance, int]:
    drop = set(labels)
    if inst.gold_tags is None:
        return inst, 0
    spans = inst.gold_spans()
    kept = [sp for sp in spans if sp.label not in drop]
    n = len(spans) - len(kept)
    if n == 0:
        return inst, 0
    return _replace(inst, gold_tags=spans_to_tags(kept, len(inst.tokens))), n


def _rechain(inst: Instance) -> tuple[Instance, int]:
    """Merge C-x spans back into x when contiguous with the preceding x span."""
    if inst.gold_tags is None:
        return inst, 0
    spans = sorted(inst.gold_spans(), key=lambda s: s.start)
    last_by_label: dict[str, ArgumentSpan] = {}
    out: list[ArgumentSpan] = []
    merges = 0
    for sp in spans:
        if sp.label.startswith("C-"):
            base = sp.label[2:]
            prev = last_by_label.get(base)
            if prev is not None and prev.end + 1 == sp.start:
                prev.end = sp.end
                merges += 1
                continue
        out.append(sp)
        last_by_label[sp.label] = sp
    if merges == 0:
        return inst, 0
    return _replace(inst, gold_tags=spans_to_tags(out, len(inst.tokens))), merges


# ---------------------------------------------------------------------------

def summarize(corpus: Corpus) -> CorpusSummary:
    """Instance/argument/role counts; roles exclude V and continuation labels."""
    args = 0
    roles: set[str] = set()
    for inst in corpus:
        for sp in inst.gold_spans():
            if sp.label != "V":
                args += 1
            if sp.label != "V" and not sp.label.startswith("C-"):
                roles.add(sp.label)
    return CorpusSummary(len(corpus.instances), args, len(roles))


def load_corpus(path, fmt: str = "conll") -> Corpus:
    if fmt == "conll":
        with open(path, encoding="utf-8") as f:
            return parse_conll(f)
    if fmt == "xml":
        with open(path, "rb") as f:
            return parse_xml(f)
    raise SrlError(f"unknown corpus format {fmt!r}")


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_conll(corpus))
