import json
import random

import pytest

from corpus_builders import make_corpus, make_learnable_corpus
from srltk.cli import dispatch
from srltk.corpus import load_corpus, save_corpus


def run(argv):
    return dispatch([str(a) for a in argv])


@pytest.fixture
def gold_file(tmp_path, rng):
    path = tmp_path / "gold.conll"
    save_corpus(make_corpus(rng, 8), path)
    return path


class TestDispatch:
    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_required_flag(self):
        assert run(["eval", "--gold", "x"]) == 1

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        out = tmp_path / "r.txt"
        code = run(["eval", "--gold", tmp_path / "nope.conll", "--pred",
                    tmp_path / "nope.conll", "--out", out])
        assert code == 2
        assert "nope.conll" in capsys.readouterr().err

    def test_version(self, capsys):
        assert run(["--version"]) == 0
        assert "srl-toolkit" in capsys.readouterr().out


class TestEvalCommand:
    def test_gold_vs_itself(self, gold_file, tmp_path, capsys):
        out = tmp_path / "report.txt"
        assert run(["eval", "--gold", gold_file, "--pred", gold_file, "--out", out]) == 0
        kv = out.read_text()
        assert "f1=1.0" in kv
        assert "overall" in capsys.readouterr().out

    def test_decompose_flag(self, gold_file, tmp_path):
        out = tmp_path / "report.txt"
        assert run(["eval", "--gold", gold_file, "--pred", gold_file,
                    "--decompose", "--out", out]) == 0
        assert "decomp.total=0.0" in out.read_text()

    def test_unlabeled_flag(self, gold_file, tmp_path):
        out = tmp_path / "report.txt"
        assert run(["eval", "--gold", gold_file, "--pred", gold_file,
                    "--unlabeled", "--out", out]) == 0
        assert "f1=1.0" in out.read_text()


class TestPreprocessCommand:
    def test_roundtrip_with_report(self, tmp_path, rng):
        src = tmp_path / "in.conll"
        corpus = make_corpus(rng, 5)
        save_corpus(corpus, src)
        out = tmp_path / "out.conll"
        report = tmp_path / "report.txt"
        code = run(["preprocess", "--in", src, "--out", out, "--report", report])
        assert code == 0
        assert len(load_corpus(out)) == len(corpus)
        assert "drop_labels=0" in report.read_text()

    def test_bad_rule(self, tmp_path, rng, capsys):
        src = tmp_path / "in.conll"
        save_corpus(make_corpus(rng, 2), src)
        code = run(["preprocess", "--in", src, "--rules", "bogus", "--out", tmp_path / "o"])
        assert code == 2


class TestSplitCommand:
    def test_folds_partition_and_manifest(self, tmp_path, rng):
        src = tmp_path / "in.conll"
        corpus = make_corpus(rng, 40)
        save_corpus(corpus, src)
        out_dir = tmp_path / "folds"
        assert run(["split", "--in", src, "--k", 4, "--seed", 7, "--out-dir", out_dir]) == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["k"] == 4 and manifest["seed"] == 7
        total = sum(len(load_corpus(out_dir / f"fold_{i}.conll")) for i in range(4))
        assert total == len(corpus)

    def test_deterministic_outputs(self, tmp_path, rng):
        src = tmp_path / "in.conll"
        save_corpus(make_corpus(rng, 20), src)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        run(["split", "--in", src, "--k", 3, "--seed", 5, "--out-dir", d1])
        run(["split", "--in", src, "--k", 3, "--seed", 5, "--out-dir", d2])
        for name in ["manifest.json", "fold_0.conll", "fold_1.conll", "fold_2.conll"]:
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


class TestPipeline:
    def test_full_smoke(self, tmp_path):
        """preprocess -> split -> baseline emissions -> decode -> eval -> run/report/select"""
        rng = random.Random(99)
        raw = tmp_path / "raw.conll"
        save_corpus(make_learnable_corpus(rng, 50), raw)

        clean = tmp_path / "clean.conll"
        assert run(["preprocess", "--in", raw, "--out", clean]) == 0

        folds = tmp_path / "folds"
        assert run(["split", "--in", clean, "--k", 5, "--seed", 1, "--out-dir", folds]) == 0

        train = tmp_path / "train.conll"
        parts = [load_corpus(folds / f"fold_{i}.conll") for i in range(5)]
        merged = parts[0]
        merged.instances = [i for p in parts[1:] for i in p.instances]
        # renumber to keep ids unique across merged folds
        for n, inst in enumerate(merged.instances, start=1):
            inst.sentence_id = f"t{n}"
        save_corpus(merged, train)
        test = folds / "fold_0.conll"

        emissions = tmp_path / "base.em"
        assert run(["baseline", "--train", train, "--test", test, "--out", emissions]) == 0

        pred = tmp_path / "pred.conll"
        assert run(["decode", "--emissions", emissions, "--corpus", test, "--out", pred]) == 0

        report = tmp_path / "report.txt"
        assert run(["eval", "--gold", test, "--pred", pred, "--decompose", "--out", report]) == 0
        kv = dict(
            line.split("=", 1) for line in report.read_text().splitlines() if "=" in line
        )
        assert float(kv["f1"]) > 0.0

        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "models": {"freq": {"scenario": "pt-only",
                                "emissions": {"0": str(emissions)},
                                "out_of_domain": str(emissions)}},
            "gold": {"folds": {"0": str(test)}, "out_of_domain": str(test)},
        }))
        runs = tmp_path / "runs"
        assert run(["run", "--config", config, "--out-dir", runs]) == 0
        assert run(["report", "--runs", runs, "--format", "tsv"]) == 0
        assert run(["select", "--runs", runs, "--data", "clean"]) == 0

    def test_decode_without_corpus(self, tmp_path):
        rng = random.Random(3)
        corpus_path = tmp_path / "c.conll"
        save_corpus(make_learnable_corpus(rng, 4), corpus_path)
        emissions = tmp_path / "e.em"
        run(["baseline", "--train", corpus_path, "--test", corpus_path, "--out", emissions])
        pred = tmp_path / "p.conll"
        assert run(["decode", "--emissions", emissions, "--out", pred]) == 0
        decoded = load_corpus(pred)
        assert len(decoded) == 4
