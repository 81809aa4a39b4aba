"""IOB label space, validity, span/tag conversions and constrained Viterbi decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import ParseError, SrlError

OUTSIDE = "O"


class LabelSet:
    """Ordered role inventory and the derived IOB tag inventory.

    Tag order is O first, then B-x, I-x per role in role order, so indices
    are reproducible given the role order. O always has index 0.
    """

    def __init__(self, roles: Iterable[str]):
        self.roles: list[str] = []
        seen = set()
        for r in roles:
            if r not in seen:
                seen.add(r)
                self.roles.append(r)
        self.tags: list[str] = [OUTSIDE]
        for r in self.roles:
            self.tags.append(f"B-{r}")
            self.tags.append(f"I-{r}")
        self._index = {t: i for i, t in enumerate(self.tags)}

    def __len__(self) -> int:
        return len(self.tags)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelSet) and self.tags == other.tags

    def index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise SrlError(f"unknown tag {tag!r}") from None

    def tag(self, index: int) -> str:
        return self.tags[index]

    def role_of(self, index: int) -> str | None:
        """Role of a tag index, or None for O."""
        if index == 0:
            return None
        return self.tags[index][2:]

    def is_begin(self, index: int) -> bool:
        return index != 0 and self.tags[index].startswith("B-")

    def is_inside(self, index: int) -> bool:
        return index != 0 and self.tags[index].startswith("I-")

    @classmethod
    def from_tags(cls, tags: Sequence[str]) -> "LabelSet":
        """Reconstruct a LabelSet from a stored tag list (e.g. an emission header)."""
        roles = []
        for t in tags:
            if t.startswith("B-"):
                roles.append(t[2:])
        ls = cls(roles)
        if list(tags) != ls.tags:
            raise SrlError("tag list is not in canonical order (O, then B-x/I-x per role)")
        return ls


@dataclass
class ArgumentSpan:
    """Contiguous token range [start, end] carrying a role label (no IOB prefix)."""

    start: int
    end: int
    label: str

    def __post_init__(self):
        if self.start > self.end:
            raise SrlError(f"span start {self.start} > end {self.end}")
        if not self.label or self.label.startswith(("B-", "I-")):
            raise SrlError(f"bad span label {self.label!r}")

    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.label)

    def __hash__(self):
        return hash(self.key())

    def __lt__(self, other):
        return self.key() < other.key()


@dataclass
class EmissionMatrix:
    """Per-instance tokens x tags log-probability matrix; the model plug boundary."""

    instance_id: str
    scores: np.ndarray  # shape (T, L), natural-log probabilities

    def check(self, n_tags: int | None = None, tol: float = 1e-4) -> None:
        if self.scores.ndim != 2:
            raise SrlError(f"{self.instance_id}: emission matrix must be 2-D")
        if n_tags is not None and self.scores.shape[1] != n_tags:
            raise SrlError(
                f"{self.instance_id}: {self.scores.shape[1]} columns, expected {n_tags}"
            )
        if not np.isfinite(self.scores).all():
            raise SrlError(f"{self.instance_id}: non-finite emission score")
        sums = np.exp(self.scores).sum(axis=1)
        bad = np.abs(sums - 1.0) > tol
        if bad.any():
            row = int(np.argmax(bad))
            raise SrlError(
                f"{self.instance_id}: row {row} exponentiates to {sums[row]:.6f}, not 1"
            )


def validate(tags: Sequence[str]) -> bool:
    """True iff every I-x is preceded by B-x or I-x of the same role."""
    prev = OUTSIDE
    for t in tags:
        if t.startswith("I-"):
            if prev != "B-" + t[2:] and prev != t:
                return False
        prev = t
    return True


def spans_to_tags(spans: Iterable[ArgumentSpan], length: int, strict: bool = True) -> list[str]:
    """Encode disjoint spans as an IOB tag string per token.

    With strict=True overlapping spans raise; otherwise later spans lose the
    contested tokens (used to tolerate raw multi-label XML annotations).
    """
    tags = [OUTSIDE] * length
    for sp in sorted(spans):
        if sp.end >= length:
            raise SrlError(f"span {sp.key()} exceeds sentence length {length}")
        if any(tags[i] != OUTSIDE for i in range(sp.start, sp.end + 1)):
            if strict:
                other = next(t for t in tags[sp.start : sp.end + 1] if t != OUTSIDE)
                raise SrlError(f"span {sp.key()} overlaps a span tagged {other}")
            continue
        tags[sp.start] = f"B-{sp.label}"
        for i in range(sp.start + 1, sp.end + 1):
            tags[i] = f"I-{sp.label}"
    return tags


def tags_to_spans(tags: Sequence[str]) -> list[ArgumentSpan]:
    """Decode maximal B-x (I-x)* runs into spans.

    An orphan I-x (not preceded by B-x/I-x of the same role) opens a new span,
    mirroring the parse-time repair of noisy gold sequences.
    """
    spans: list[ArgumentSpan] = []
    start = None
    role = None
    for i, t in enumerate(tags):
        if t == OUTSIDE:
            if role is not None:
                spans.append(ArgumentSpan(start, i - 1, role))
                role = None
        elif t.startswith("B-"):
            if role is not None:
                spans.append(ArgumentSpan(start, i - 1, role))
            start, role = i, t[2:]
        else:  # I-x
            if role != t[2:]:
                if role is not None:
                    spans.append(ArgumentSpan(start, i - 1, role))
                start, role = i, t[2:]
    if role is not None:
        spans.append(ArgumentSpan(start, len(tags) - 1, role))
    return spans


def transition_mask(label_set: LabelSet) -> np.ndarray:
    """(L, L) additive mask: 0 where prev->next is a valid IOB transition, -inf otherwise."""
    n = len(label_set)
    mask = np.zeros((n, n))
    for nxt in range(n):
        if not label_set.is_inside(nxt):
            continue
        role = label_set.role_of(nxt)
        for prev in range(n):
            if label_set.role_of(prev) != role:
                mask[prev, nxt] = -np.inf
    return mask


def start_mask(label_set: LabelSet) -> np.ndarray:
    """(L,) additive mask forbidding I-x at position 0."""
    return np.array([-np.inf if label_set.is_inside(i) else 0.0 for i in range(len(label_set))])


def viterbi_decode(emissions: np.ndarray, label_set: LabelSet) -> list[str]:
    """Highest-scoring valid IOB sequence for a (T, L) log-probability matrix.

    Transitions carry 0/-inf masks only (no learned weights). Score ties are
    broken toward the lower tag index at the later position, so uniform
    emissions decode to all-O.
    """
    emissions = np.asarray(emissions, dtype=float)
    if emissions.size == 0:
        return []
    if emissions.ndim != 2 or emissions.shape[1] != len(label_set):
        raise SrlError(
            f"emission matrix has {emissions.shape[-1]} columns, label set has {len(label_set)}"
        )
    if not np.isfinite(emissions).all():
        raise SrlError("non-finite emission score")

    n_tokens = emissions.shape[0]
    trans = transition_mask(label_set)
    delta = emissions[0] + start_mask(label_set)
    back = np.zeros((n_tokens, len(label_set)), dtype=int)
    for t in range(1, n_tokens):
        cand = delta[:, None] + trans
        # np.argmax takes the first maximum, i.e. the lowest predecessor index
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(len(label_set))] + emissions[t]

    best = int(np.argmax(delta))
    path = [best]
    for t in range(n_tokens - 1, 0, -1):
        best = int(back[t, best])
        path.append(best)
    path.reverse()
    return [label_set.tag(i) for i in path]


# ---------------------------------------------------------------------------
# Emission file format: the plug boundary between any model and the decoder.
#
#   #labels<TAB>O<TAB>B-A0<TAB>I-A0...
#   #instance<TAB>ID<TAB>T
#   <T lines of L tab-separated log-probabilities>
#   <blank line>
# ---------------------------------------------------------------------------

def write_emissions(path, label_set: LabelSet, matrices: Iterable[EmissionMatrix]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("#labels\t" + "\t".join(label_set.tags) + "\n")
        for m in matrices:
            f.write(f"#instance\t{m.instance_id}\t{m.scores.shape[0]}\n")
            for row in m.scores:
                f.write("\t".join(format(x, ".10g") for x in row) + "\n")
            f.write("\n")


def read_emissions(path, check: bool = True) -> tuple[LabelSet, list[EmissionMatrix]]:
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#labels\t"):
        raise ParseError("emission file must start with a #labels header", line=1)
    label_set = LabelSet.from_tags(lines[0].split("\t")[1:])

    matrices: list[EmissionMatrix] = []
    i = 1
    while i < len(lines):
        if not lines[i]:
            i += 1
            continue
        parts = lines[i].split("\t")
        if parts[0] != "#instance" or len(parts) != 3:
            raise ParseError(f"expected #instance header, got {lines[i]!r}", line=i + 1)
        inst_id, n_tokens = parts[1], int(parts[2])
        rows = []
        for t in range(n_tokens):
            i += 1
            if i >= len(lines) or not lines[i]:
                raise ParseError(f"instance {inst_id}: expected {n_tokens} rows", line=i + 1)
            rows.append([float(x) for x in lines[i].split("\t")])
        i += 1
        m = EmissionMatrix(inst_id, np.array(rows))
        if check:
            m.check(n_tags=len(label_set))
        matrices.append(m)
    return label_set, matrices


def brute_force_decode(emissions: np.ndarray, label_set: LabelSet) -> tuple[list[str], float]:
    """Exhaustive search over all valid sequences; exponential, test oracle only.

    Applies the same tie-break as viterbi_decode: among maximal sequences,
    prefer the lower tag index at the later position.
    """
    emissions = np.asarray(emissions, dtype=float)
    n_tokens, n_tags = emissions.shape
    best_seq = None
    best_score = -math.inf

    def rec(t, prev, score, seq):
        nonlocal best_seq, best_score
        if t == n_tokens:
            if score > best_score or (
                score == best_score and tuple(reversed(seq)) < tuple(reversed(best_seq))
            ):
                best_score = score
                best_seq = list(seq)
            return
        for tag in range(n_tags):
            if label_set.is_inside(tag):
                role = label_set.role_of(tag)
                if prev is None or label_set.role_of(prev) != role:
                    continue
            seq.append(tag)
            rec(t + 1, tag, score + emissions[t, tag], seq)
            seq.pop()

    rec(0, None, 0.0, [])
    return [label_set.tag(i) for i in best_seq], best_score


def sequence_score(emissions: np.ndarray, tags: Sequence[str], label_set: LabelSet) -> float:
    return float(sum(emissions[t, label_set.index(tag)] for t, tag in enumerate(tags)))
