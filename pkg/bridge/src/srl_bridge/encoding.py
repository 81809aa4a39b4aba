"""Subword encoding with word-level alignment and predicate marking.

Each word is tokenized on its own so the first-subword position of every
word is known exactly.  The predicate word's subwords get segment id 1
(everything else 0), which is how the encoder is told which predicate an
instance is about.
"""

from __future__ import annotations

from dataclasses import dataclass

from tokenizers import Tokenizer
from tokenizers.implementations import BertWordPieceTokenizer

from . import BridgeError
from .data import Instance


def train_tokenizer(instances: list[Instance], vocab_size: int = 1000) -> Tokenizer:
    """Train a WordPiece vocabulary on the corpus surfaces."""
    wp = BertWordPieceTokenizer(lowercase=False, strip_accents=False)
    texts = (" ".join(inst.tokens) for inst in instances)
    wp.train_from_iterator(texts, vocab_size=vocab_size, min_frequency=1)
    return wp._tokenizer


@dataclass
class Encoded:
    instance_id: str
    input_ids: list[int]
    token_type_ids: list[int]
    word_starts: list[int]  # first-subword position of each word
    label_ids: list[int] | None = None  # per word


def encode(
    tokenizer: Tokenizer,
    inst: Instance,
    tag_to_id: dict[str, int] | None = None,
    max_len: int = 512,
) -> Encoded:
    cls_id = tokenizer.token_to_id("[CLS]")
    sep_id = tokenizer.token_to_id("[SEP]")
    unk_id = tokenizer.token_to_id("[UNK]")
    input_ids = [cls_id]
    type_ids = [0]
    word_starts = []
    for i, word in enumerate(inst.tokens):
        ids = tokenizer.encode(word, add_special_tokens=False).ids or [unk_id]
        word_starts.append(len(input_ids))
        input_ids.extend(ids)
        type_ids.extend([1 if i == inst.predicate_index else 0] * len(ids))
    input_ids.append(sep_id)
    type_ids.append(0)
    if len(input_ids) > max_len:
        raise BridgeError(
            f"instance {inst.instance_id}: {len(input_ids)} subwords exceeds max_len={max_len}"
        )
    label_ids = None
    if tag_to_id is not None:
        try:
            label_ids = [tag_to_id[t] for t in inst.tags]
        except KeyError as exc:
            raise BridgeError(f"instance {inst.instance_id}: unknown tag {exc.args[0]}") from exc
    return Encoded(inst.instance_id, input_ids, type_ids, word_starts, label_ids)
