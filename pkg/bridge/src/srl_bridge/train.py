"""Fine-tuning loop with early stopping on toolkit-scored validation F1."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from . import BridgeError, toolkit
from .data import Instance, label_inventory, map_labels
from .encoding import Encoded, encode, train_tokenizer
from .export import write_emissions
from .model import BridgeModel, build_model

# Hyperparameter presets for the two supported fine-tuning regimes.
PRESETS = {
    "large": {"batch_size": 4, "learning_rate": 1e-5},
    "base": {"batch_size": 16, "learning_rate": 4e-5},
}

SCENARIOS = ("pt-only", "+En transfer", "zero-shot")


@dataclass
class TrainConfig:
    train: str
    val: str
    out_dir: str
    base_model: str = "tiny"
    scenario: str = "pt-only"
    english_train: str = ""  # required for +En transfer and zero-shot
    batch_size: int = 16
    learning_rate: float = 4e-5
    max_epochs: int = 100
    patience: int = 10
    english_epochs: int = 5
    vocab_size: int = 1000
    seed: int = 13
    # extension point for auxiliary tasks (e.g. "+UD" joint syntax); not
    # implemented, a non-empty list is rejected up front.
    extra_tasks: list[str] = field(default_factory=list)

    @classmethod
    def load(cls, path: str) -> "TrainConfig":
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        preset = PRESETS.get(raw.pop("preset", ""), {})
        try:
            cfg = cls(**{**preset, **raw})
        except TypeError as exc:
            raise BridgeError(f"{path}: {exc}") from exc
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.scenario not in SCENARIOS:
            raise BridgeError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.scenario != "pt-only" and not self.english_train:
            raise BridgeError(f"scenario {self.scenario!r} requires english_train")
        if self.extra_tasks:
            raise BridgeError(f"auxiliary tasks not implemented: {self.extra_tasks}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise BridgeError("batch_size and max_epochs must be positive")


def _batches(encoded: list[Encoded], batch_size: int):
    for i in range(0, len(encoded), batch_size):
        chunk = encoded[i : i + batch_size]
        width = max(len(e.input_ids) for e in chunk)
        ids = torch.zeros(len(chunk), width, dtype=torch.long)
        types = torch.zeros_like(ids)
        mask = torch.zeros_like(ids)
        labels = torch.full((len(chunk), width), -100, dtype=torch.long)
        for r, e in enumerate(chunk):
            n = len(e.input_ids)
            ids[r, :n] = torch.tensor(e.input_ids)
            types[r, :n] = torch.tensor(e.token_type_ids)
            mask[r, :n] = 1
            for pos, lab in zip(e.word_starts, e.label_ids):
                labels[r, pos] = lab
        yield ids, mask, types, labels


def _run_epoch(model, optimizer, encoded, batch_size) -> list[float]:
    losses = []
    for ids, mask, types, labels in _batches(encoded, batch_size):
        optimizer.zero_grad()
        logits = model(ids, mask, types)
        loss = F.cross_entropy(logits.flatten(0, 1), labels.flatten(), ignore_index=-100)
        loss.backward()
        optimizer.step()
        losses.append(loss.item())
    return losses


def _epoch_with_oom_retry(model, optimizer, encoded, batch_size) -> tuple[list[float], int]:
    """Run one epoch; on an out-of-memory error halve the batch size once."""
    try:
        return _run_epoch(model, optimizer, encoded, batch_size), batch_size
    except (torch.cuda.OutOfMemoryError, RuntimeError) as exc:
        if "out of memory" not in str(exc).lower() or batch_size == 1:
            raise
        half = max(1, batch_size // 2)
        return _run_epoch(model, optimizer, encoded, half), half


@dataclass
class TrainResult:
    best_f1: float
    best_epoch: int
    epochs_run: int
    losses: list[float]  # per-step losses, all phases concatenated


def _encode_all(tokenizer, instances, tag_to_id):
    return [encode(tokenizer, inst, tag_to_id) for inst in instances]


def train(cfg: TrainConfig) -> TrainResult:
    torch.manual_seed(cfg.seed)
    pt_train = read_train = _read(cfg.train)
    val = _read(cfg.val)
    labels = label_inventory(pt_train + val)
    tag_to_id = {t: i for i, t in enumerate(labels)}

    english: list[Instance] = []
    if cfg.english_train:
        roles = {t[2:] for t in labels if t != "O"}
        english = map_labels(_read(cfg.english_train), keep_roles=roles)

    tokenizer = train_tokenizer(pt_train + val + english, cfg.vocab_size)
    model = build_model(cfg.base_model, tokenizer.get_vocab_size(), len(labels))
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)

    losses: list[float] = []
    batch_size = cfg.batch_size
    if cfg.scenario == "+En transfer":
        encoded_en = _encode_all(tokenizer, english, tag_to_id)
        for _ in range(cfg.english_epochs):
            step_losses, batch_size = _epoch_with_oom_retry(
                model, optimizer, encoded_en, batch_size
            )
            losses.extend(step_losses)
    if cfg.scenario == "zero-shot":
        read_train = english

    encoded = _encode_all(tokenizer, read_train, tag_to_id)
    os.makedirs(cfg.out_dir, exist_ok=True)
    best_f1, best_epoch, epochs_run = -1.0, -1, 0
    from .model import save_checkpoint

    with tempfile.TemporaryDirectory() as tmp:
        em_path = os.path.join(tmp, "val.em")
        for epoch in range(cfg.max_epochs):
            model.train()
            step_losses, batch_size = _epoch_with_oom_retry(model, optimizer, encoded, batch_size)
            losses.extend(step_losses)
            epochs_run = epoch + 1
            write_emissions(model, tokenizer, val, labels, em_path)
            f1 = toolkit.f1_against(em_path, cfg.val, tmp)
            if f1 > best_f1:
                best_f1, best_epoch = f1, epoch
                save_checkpoint(model, tokenizer, labels, cfg.out_dir)
            elif epoch - best_epoch >= cfg.patience:
                break

    with open(os.path.join(cfg.out_dir, "train_result.json"), "w", encoding="utf-8") as f:
        json.dump(
            {"best_f1": best_f1, "best_epoch": best_epoch, "epochs_run": epochs_run},
            f,
            indent=2,
        )
    return TrainResult(best_f1, best_epoch, epochs_run, losses)


def _read(path: str) -> list[Instance]:
    from .data import read_conll

    if not os.path.exists(path):
        raise BridgeError(f"file not found: {path}")
    return read_conll(path)
