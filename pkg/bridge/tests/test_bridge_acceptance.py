"""Acceptance checks for the bridge, scored through the toolkit CLI.

Each test prints one PASS line; run with ``pytest -s`` to see them.
"""

import math

import torch

from srl_bridge import toolkit
from srl_bridge.data import label_inventory, write_conll
from srl_bridge.encoding import train_tokenizer
from srl_bridge.export import write_emissions
from srl_bridge.model import build_model
from srl_bridge.train import TrainConfig, train

from corpus_fixtures import make_instances
from test_train import _uniform_f1


def test_overfit_ten_instances(tmp_path):
    instances = make_instances(10)
    path = tmp_path / "ten.conll"
    write_conll(instances, str(path))
    cfg = TrainConfig(
        train=str(path),
        val=str(path),
        out_dir=str(tmp_path / "ckpt"),
        batch_size=2,
        learning_rate=3e-3,
        max_epochs=40,
        patience=40,
    )
    result = train(cfg)
    assert result.best_f1 >= 0.99
    print(f"PASS  overfit: F1={result.best_f1 * 100:.2f} on 10 instances "
          f"(epoch {result.best_epoch})")


def test_emission_format_and_alignment(tmp_path):
    torch.manual_seed(0)
    instances = make_instances(20, seed=5)
    corpus_path = tmp_path / "c.conll"
    write_conll(instances, str(corpus_path))
    labels = label_inventory(instances)
    tokenizer = train_tokenizer(instances, 200)
    model = build_model("tiny", tokenizer.get_vocab_size(), len(labels))
    em = tmp_path / "c.em"
    write_emissions(model, tokenizer, instances, labels, str(em))

    lines = em.read_text().splitlines()
    rows_by_id = {}
    i = 1
    while i < len(lines):
        _, iid, t = lines[i].split("\t")
        rows_by_id[iid] = lines[i + 1 : i + 1 + int(t)]
        i += int(t) + 2
    for inst in instances:
        rows = rows_by_id[inst.instance_id]
        assert len(rows) == len(inst.tokens)
        for row in rows:
            assert abs(sum(math.exp(float(v)) for v in row.split("\t")) - 1.0) <= 1e-4

    # the toolkit's decoder validates the file and the id alignment itself
    toolkit.decode(str(em), str(corpus_path), str(tmp_path / "pred.conll"))
    print(f"PASS  emission export: {len(instances)} instances, "
          "row sums within 1e-4, accepted by srl decode")


def test_predicate_sensitivity(tmp_path):
    torch.manual_seed(0)
    instances = make_instances(5)
    labels = label_inventory(instances)
    tokenizer = train_tokenizer(instances, 200)
    model = build_model("tiny", tokenizer.get_vocab_size(), len(labels))
    first, moved = tmp_path / "a.em", tmp_path / "b.em"
    write_emissions(model, tokenizer, instances[:1], labels, str(first))
    instances[0].predicate_index = 3
    write_emissions(model, tokenizer, instances[:1], labels, str(moved))
    assert first.read_text().splitlines()[2:] != moved.read_text().splitlines()[2:]
    print("PASS  predicate sensitivity: moving the predicate changes emissions")


def test_end_to_end_above_uniform(tmp_path):
    instances = make_instances(100, seed=11)
    path = tmp_path / "hundred.conll"
    write_conll(instances, str(path))
    cfg = TrainConfig(
        train=str(path),
        val=str(path),
        out_dir=str(tmp_path / "ckpt"),
        batch_size=4,
        learning_rate=3e-3,
        max_epochs=1,
    )
    result = train(cfg)
    floor = _uniform_f1(instances, label_inventory(instances), str(path), tmp_path)
    assert math.isfinite(result.best_f1) and result.best_f1 > floor
    print(f"PASS  end to end: one epoch F1={result.best_f1 * 100:.2f} "
          f"> uniform floor {floor * 100:.2f}")
