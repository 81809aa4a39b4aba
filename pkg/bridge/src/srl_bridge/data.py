"""Reading and writing the toolkit's CoNLL column format.

The bridge talks to the toolkit only through files, so it carries its own
small parser for the documented column format: one token per line, blank
line between sentences, column 1 surface, column 2 predicate lemma or
``-``, then one props column per predicate in ascending predicate
position.  Props cells use the ``(LABEL*`` / ``*`` / ``*)`` grammar with
no nesting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import BridgeError

_CELL_RE = re.compile(r"^(?:\((?P<label>[^\s()*]+)\*(?P<close1>\))?|\*(?P<close2>\))?)$")


@dataclass
class Instance:
    sentence_id: str
    tokens: list[str]
    predicate_index: int
    tags: list[str]
    lemma: str = "-"

    @property
    def instance_id(self) -> str:
        return f"{self.sentence_id}-p{self.predicate_index}"

    def role_labels(self) -> set[str]:
        return {t[2:] for t in self.tags if t != "O"}


def _cells_to_tags(cells: list[str], path: str) -> list[str]:
    tags: list[str] = []
    open_label: str | None = None
    for cell in cells:
        m = _CELL_RE.match(cell)
        if m is None:
            raise BridgeError(f"{path}: bad props cell {cell!r}")
        label = m.group("label")
        if label is not None:
            if open_label is not None:
                raise BridgeError(f"{path}: nested span at cell {cell!r}")
            tags.append(f"B-{label}")
            if not m.group("close1"):
                open_label = label
        elif open_label is not None:
            tags.append(f"I-{open_label}")
            if m.group("close2"):
                open_label = None
        else:
            tags.append("O")
    if open_label is not None:
        raise BridgeError(f"{path}: unclosed span for {open_label}")
    return tags


def _parse_sentence(rows: list[list[str]], sentence_id: str, path: str) -> list[Instance]:
    width = len(rows[0])
    for row in rows:
        if len(row) != width:
            raise BridgeError(f"{path}: ragged columns in sentence {sentence_id}")
    tokens = [row[0] for row in rows]
    predicates = [(i, row[1]) for i, row in enumerate(rows) if row[1] != "-"]
    n_props = width - 2
    if len(predicates) != n_props:
        raise BridgeError(
            f"{path}: sentence {sentence_id} has {len(predicates)} predicate "
            f"rows but {n_props} props columns"
        )
    instances = []
    for col, (pred_idx, lemma) in enumerate(predicates):
        cells = [row[2 + col] for row in rows]
        tags = _cells_to_tags(cells, path)
        instances.append(Instance(sentence_id, tokens, pred_idx, tags, lemma))
    return instances


def read_conll(path: str) -> list[Instance]:
    instances: list[Instance] = []
    rows: list[list[str]] = []
    n_sent = 0
    with open(path, encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts:
                if rows:
                    n_sent += 1
                    instances.extend(_parse_sentence(rows, f"s{n_sent}", path))
                    rows = []
                continue
            rows.append(parts)
    if rows:
        n_sent += 1
        instances.extend(_parse_sentence(rows, f"s{n_sent}", path))
    return instances


def _tags_to_cells(tags: list[str]) -> list[str]:
    cells = []
    for i, tag in enumerate(tags):
        cont = i + 1 < len(tags) and tags[i + 1].startswith("I-")
        if tag.startswith("B-"):
            cells.append(f"({tag[2:]}*" + ("" if cont else ")"))
        elif tag.startswith("I-"):
            cells.append("*" if cont else "*)")
        else:
            cells.append("*")
    return cells


def write_conll(instances: list[Instance], path: str) -> None:
    """Canonical writer: tab-separated, props columns by predicate position."""
    groups: dict[str, list[Instance]] = {}
    order: list[str] = []
    for inst in instances:
        if inst.sentence_id not in groups:
            groups[inst.sentence_id] = []
            order.append(inst.sentence_id)
        groups[inst.sentence_id].append(inst)
    with open(path, "w", encoding="utf-8") as f:
        for sid in order:
            group = sorted(groups[sid], key=lambda x: x.predicate_index)
            tokens = group[0].tokens
            lemmas = ["-"] * len(tokens)
            for inst in group:
                lemmas[inst.predicate_index] = inst.lemma
            columns = [_tags_to_cells(inst.tags) for inst in group]
            for i, surface in enumerate(tokens):
                cells = [col[i] for col in columns]
                f.write("\t".join([surface, lemmas[i], *cells]) + "\n")
            f.write("\n")


# CoNLL-2012 English role labels mapped onto the Portuguese inventory.
# Labels without a counterpart map to None and their spans are dropped.
CONLL2012_MAP: dict[str, str | None] = {
    "V": "V",
    "ARG0": "A0",
    "ARG1": "A1",
    "ARG2": "A2",
    "ARG3": "A3",
    "ARG4": "A4",
    "ARG5": "A5",
    "ARGM-ADV": "AM-ADV",
    "ARGM-CAU": "AM-CAU",
    "ARGM-DIR": "AM-DIR",
    "ARGM-DIS": "AM-DIS",
    "ARGM-EXT": "AM-EXT",
    "ARGM-GOL": None,
    "ARGM-LOC": "AM-LOC",
    "ARGM-LVB": None,
    "ARGM-MNR": "AM-MNR",
    "ARGM-MOD": None,
    "ARGM-NEG": "AM-NEG",
    "ARGM-PNC": "AM-PNC",
    "ARGM-PRD": "AM-PRD",
    "ARGM-PRP": None,
    "ARGM-REC": "AM-REC",
    "ARGM-TMP": "AM-TMP",
}


def map_labels(
    instances: list[Instance],
    mapping: dict[str, str | None] = CONLL2012_MAP,
    keep_roles: set[str] | None = None,
) -> list[Instance]:
    """Relabel instances through ``mapping``, handling C-/R- prefixes.

    Spans whose mapped label is None or absent from ``keep_roles`` become O.
    """
    out = []
    for inst in instances:
        tags = []
        for tag in inst.tags:
            if tag == "O":
                tags.append("O")
                continue
            label = tag[2:]
            prefix = ""
            if label.startswith(("C-", "R-")):
                prefix, label = label[:2], label[2:]
            mapped = mapping.get(label, label if label in mapping.values() else None)
            if mapped is None or (keep_roles is not None and prefix + mapped not in keep_roles):
                tags.append("O")
            else:
                tags.append(tag[:2] + prefix + mapped)
        # a dropped B- can orphan a following I-; repair to B-
        for i, tag in enumerate(tags):
            if tag.startswith("I-") and (i == 0 or tags[i - 1] not in (tag, "B-" + tag[2:])):
                tags[i] = "B-" + tag[2:]
        out.append(Instance(inst.sentence_id, inst.tokens, inst.predicate_index, tags, inst.lemma))
    return out


def label_inventory(instances: list[Instance]) -> list[str]:
    """Canonical tag list: O, then B-x/I-x per role label, sorted."""
    roles = sorted({r for inst in instances for r in inst.role_labels()})
    tags = ["O"]
    for role in roles:
        tags += [f"B-{role}", f"I-{role}"]
    return tags
