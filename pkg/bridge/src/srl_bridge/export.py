"""Word-level emission export in the toolkit's emission file format."""

from __future__ import annotations

import torch
import torch.nn.functional as F

from .data import Instance
from .encoding import encode
from .model import BridgeModel


@torch.no_grad()
def instance_log_probs(
    model: BridgeModel, tokenizer, inst: Instance, n_tags: int
) -> torch.Tensor:
    """One row of natural-log tag probabilities per corpus word.

    Word-level scores come from each word's first subword.
    """
    enc = encode(tokenizer, inst)
    input_ids = torch.tensor([enc.input_ids])
    type_ids = torch.tensor([enc.token_type_ids])
    mask = torch.ones_like(input_ids)
    logits = model(input_ids, mask, type_ids)[0]
    rows = logits[torch.tensor(enc.word_starts)]
    return F.log_softmax(rows.double(), dim=-1)


def write_emissions(
    model: BridgeModel,
    tokenizer,
    instances: list[Instance],
    labels: list[str],
    path: str,
) -> None:
    model.eval()
    with open(path, "w", encoding="utf-8") as f:
        f.write("#labels\t" + "\t".join(labels) + "\n")
        for inst in instances:
            scores = instance_log_probs(model, tokenizer, inst, len(labels))
            f.write(f"#instance\t{inst.instance_id}\t{len(inst.tokens)}\n")
            for row in scores.tolist():
                f.write("\t".join(format(v, ".10g") for v in row) + "\n")
            f.write("\n")
