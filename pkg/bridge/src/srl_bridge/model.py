"""BERT encoder + linear token-classification head."""

from __future__ import annotations

import json
import os

import torch
from torch import nn
from transformers import AutoModel, BertConfig, BertModel

from . import BridgeError


def _tiny_config(vocab_size: int) -> BertConfig:
    return BertConfig(
        vocab_size=vocab_size,
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=512,
        type_vocab_size=2,
    )


class BridgeModel(nn.Module):
    def __init__(self, encoder: nn.Module, n_tags: int):
        super().__init__()
        self.encoder = encoder
        self.head = nn.Linear(encoder.config.hidden_size, n_tags)

    def forward(self, input_ids, attention_mask, token_type_ids):
        hidden = self.encoder(
            input_ids=input_ids,
            attention_mask=attention_mask,
            token_type_ids=token_type_ids,
        ).last_hidden_state
        return self.head(hidden)


def build_model(base_model: str, vocab_size: int, n_tags: int) -> BridgeModel:
    """``base_model`` is either ``tiny`` (random init) or a pretrained name/path."""
    if base_model == "tiny":
        encoder = BertModel(_tiny_config(vocab_size))
    else:
        encoder = AutoModel.from_pretrained(base_model)
    return BridgeModel(encoder, n_tags)


def save_checkpoint(model: BridgeModel, tokenizer, labels: list[str], out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    torch.save(model.state_dict(), os.path.join(out_dir, "model.pt"))
    tokenizer.save(os.path.join(out_dir, "tokenizer.json"))
    meta = {
        "labels": labels,
        "encoder_config": model.encoder.config.to_dict(),
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)


def load_checkpoint(ckpt_dir: str):
    """Return (model, tokenizer, labels) from a checkpoint directory."""
    from tokenizers import Tokenizer

    meta_path = os.path.join(ckpt_dir, "meta.json")
    if not os.path.exists(meta_path):
        raise BridgeError(f"not a checkpoint directory: {ckpt_dir}")
    with open(meta_path, encoding="utf-8") as f:
        meta = json.load(f)
    labels = meta["labels"]
    encoder = BertModel(BertConfig.from_dict(meta["encoder_config"]))
    model = BridgeModel(encoder, len(labels))
    state = torch.load(os.path.join(ckpt_dir, "model.pt"), map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    tokenizer = Tokenizer.from_file(os.path.join(ckpt_dir, "tokenizer.json"))
    return model, tokenizer, labels
