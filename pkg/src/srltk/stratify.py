"""Iterative stratified k-fold splitting for multi-label instances.

Greedy Sechidis-style assignment: repeatedly take the label with fewest
remaining instances and place each of its instances in the fold with the
largest remaining demand for that label; ties fall back to the largest
remaining capacity, then to a seeded draw. Deterministic given
(corpus, k, seed) on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import SrlError
from .corpus import Corpus, Instance

_MASK = (1 << 64) - 1


class SplitMix64:
    """Tiny 64-bit splitmix generator; integer-only, hence platform-stable."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        return self.next() % n


@dataclass
class FoldAssignment:
    k: int
    assignment: dict[str, int]  # instance id -> fold index
    seed: int

    def fold_ids(self, fold: int) -> list[str]:
        return [iid for iid, f in self.assignment.items() if f == fold]


def instance_labels(inst: Instance, exclude: Sequence[str] = ("V",)) -> frozenset[str]:
    """Stratification label set of an instance: role labels of its gold spans.

    V is excluded by default; pass a different `exclude` to also drop C-/R-
    variants if desired.
    """
    return frozenset(
        sp.label for sp in inst.gold_spans() if sp.label not in exclude
    )


def _capacities(n: int, weights: Sequence[float]) -> list[int]:
    """Integer group sizes summing to n, proportional to weights (largest remainder)."""
    raw = [n * w for w in weights]
    sizes = [int(x) for x in raw]
    remainder = n - sum(sizes)
    order = sorted(range(len(weights)), key=lambda j: (-(raw[j] - sizes[j]), j))
    for j in order[:remainder]:
        sizes[j] += 1
    return sizes


def _stratify(
    items: list[tuple[str, frozenset[str]]],
    weights: Sequence[float],
    seed: int,
) -> dict[str, int]:
    """Assign (id, labels) items to len(weights) groups; the shared core."""
    rng = SplitMix64(seed)
    n_groups = len(weights)
    capacity = _capacities(len(items), weights)

    remaining = {iid: labels for iid, labels in items}
    order = [iid for iid, _ in items]  # stable iteration order
    label_count: dict[str, int] = {}
    for _, labels in items:
        for lab in labels:
            label_count[lab] = label_count.get(lab, 0) + 1
    # per-group demand for each label, proportional to weights
    demand = {lab: [c * w for w in weights] for lab, c in label_count.items()}

    assignment: dict[str, int] = {}

    def place(iid: str, group: int) -> None:
        assignment[iid] = group
        capacity[group] -= 1
        for lab in remaining[iid]:
            demand[lab][group] -= 1
        del remaining[iid]

    def pick_group(scores: list[float]) -> int:
        eligible = [g for g in range(n_groups) if capacity[g] > 0]
        if not eligible:
            eligible = list(range(n_groups))
        best = max(scores[g] for g in eligible)
        tied = [g for g in eligible if scores[g] == best]
        if len(tied) > 1:
            cap = max(capacity[g] for g in tied)
            tied = [g for g in tied if capacity[g] == cap]
        return tied[rng.randbelow(len(tied))] if len(tied) > 1 else tied[0]

    while True:
        live = {
            lab: sum(1 for iid in remaining if lab in remaining[iid])
            for lab in label_count
        }
        live = {lab: c for lab, c in live.items() if c > 0}
        if not live:
            break
        target = min(live, key=lambda lab: (live[lab], lab))
        for iid in [i for i in order if i in remaining and target in remaining[i]]:
            place(iid, pick_group(demand[target]))

    # label-free instances carry no stratification signal: deal them to the
    # emptiest groups round-robin
    for iid in [i for i in order if i in remaining]:
        eligible = [g for g in range(n_groups) if capacity[g] > 0] or list(range(n_groups))
        group = max(eligible, key=lambda g: (capacity[g], -g))
        place(iid, group)

    return assignment


def stratified_folds(
    corpus: Corpus, k: int, seed: int, exclude: Sequence[str] = ("V",)
) -> FoldAssignment:
    if k < 2:
        raise SrlError("k must be at least 2")
    if k > len(corpus.instances):
        raise SrlError(f"k={k} exceeds corpus size {len(corpus.instances)}")
    items = [(inst.instance_id, instance_labels(inst, exclude)) for inst in corpus]
    if len({iid for iid, _ in items}) != len(items):
        raise SrlError("duplicate instance ids; cannot assign folds")
    assignment = _stratify(items, [1.0 / k] * k, seed)
    return FoldAssignment(k=k, assignment=assignment, seed=seed)


def carve_validation(
    train_instances: list[Instance], target_size: int, seed: int
) -> tuple[list[Instance], list[Instance]]:
    """Split off a stratified validation set of about target_size instances."""
    n = len(train_instances)
    if target_size >= n:
        raise SrlError(f"validation size {target_size} must be below {n}")
    if target_size <= 0:
        return list(train_instances), []
    items = [(inst.instance_id, instance_labels(inst)) for inst in train_instances]
    frac = target_size / n
    assignment = _stratify(items, [1.0 - frac, frac], seed)
    train = [inst for inst in train_instances if assignment[inst.instance_id] == 0]
    val = [inst for inst in train_instances if assignment[inst.instance_id] == 1]
    return train, val
