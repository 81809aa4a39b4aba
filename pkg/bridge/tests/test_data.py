import pytest

from srl_bridge import BridgeError
from srl_bridge.data import (
    CONLL2012_MAP,
    Instance,
    label_inventory,
    map_labels,
    read_conll,
    write_conll,
)


def test_roundtrip(small_corpus, tmp_path):
    path, instances = small_corpus
    loaded = read_conll(path)
    assert len(loaded) == len(instances)
    for got, want in zip(loaded, instances):
        assert got.tokens == want.tokens
        assert got.tags == want.tags
        assert got.predicate_index == want.predicate_index
        assert got.lemma == want.lemma
    again = tmp_path / "again.conll"
    write_conll(loaded, str(again))
    assert again.read_text() == open(path).read()


def test_multi_predicate_sentence(tmp_path):
    text = (
        "Ana\t-\t(A0*)\t(A0*\n"
        "viu\tver\t(V*)\t*)\n"
        "e\t-\t*\t*\n"
        "saiu\tsair\t*\t(V*)\n\n"
    )
    path = tmp_path / "c.conll"
    path.write_text(text)
    insts = read_conll(str(path))
    assert [i.predicate_index for i in insts] == [1, 3]
    assert insts[0].tags == ["B-A0", "B-V", "O", "O"]
    assert insts[1].tags == ["B-A0", "I-A0", "O", "B-V"]
    assert insts[0].instance_id == "s1-p1"


@pytest.mark.parametrize(
    "bad",
    [
        "a\tv\t(A0*\n\n",  # unclosed span
        "a\tv\t(A0*(A1*\n\n",  # nested / malformed cell
        "a\tv\t*\t*\n\n",  # marker count != props columns
        "a\tv\t*\nb\t-\n\n",  # ragged columns
    ],
)
def test_parse_errors(tmp_path, bad):
    path = tmp_path / "bad.conll"
    path.write_text(bad)
    with pytest.raises(BridgeError):
        read_conll(str(path))


def test_map_labels_basic():
    inst = Instance(
        "s1",
        ["he", "bought", "it", "quickly", "yesterday"],
        1,
        ["B-ARG0", "B-V", "B-ARG1", "B-ARGM-MOD", "B-ARGM-TMP"],
    )
    (mapped,) = map_labels([inst])
    assert mapped.tags == ["B-A0", "B-V", "B-A1", "O", "B-AM-TMP"]


def test_map_labels_prefixes_and_keep_roles():
    inst = Instance("s1", ["a", "b", "c"], 1, ["B-R-ARG0", "B-V", "B-C-ARG1"])
    (mapped,) = map_labels([inst])
    assert mapped.tags == ["B-R-A0", "B-V", "B-C-A1"]
    (restricted,) = map_labels([inst], keep_roles={"V", "R-A0"})
    assert restricted.tags == ["B-R-A0", "B-V", "O"]


def test_map_labels_repairs_orphaned_continuation():
    inst = Instance("s1", ["a", "b", "c"], 2, ["B-ARGM-MOD", "I-ARGM-MOD", "B-V"])
    # the whole ARGM-MOD span is dropped, nothing is left dangling
    (mapped,) = map_labels([inst])
    assert mapped.tags == ["O", "O", "B-V"]
    # but a span surviving a dropped predecessor gets a fresh B-
    inst2 = Instance("s1", ["a", "b"], 0, ["B-V", "I-ARG1"])
    (mapped2,) = map_labels([inst2])
    assert mapped2.tags == ["B-V", "B-A1"]


def test_label_inventory_canonical_order():
    insts = [
        Instance("s1", ["a", "b"], 0, ["B-V", "B-A1"]),
        Instance("s2", ["a", "b"], 1, ["B-AM-TMP", "B-V"]),
    ]
    assert label_inventory(insts) == [
        "O",
        "B-A1",
        "I-A1",
        "B-AM-TMP",
        "I-AM-TMP",
        "B-V",
        "I-V",
    ]


def test_conll2012_map_targets_are_portuguese():
    targets = {v for v in CONLL2012_MAP.values() if v is not None}
    assert "ARG0" not in targets and "A0" in targets
