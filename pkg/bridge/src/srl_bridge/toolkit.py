"""Shelling out to the ``srl`` command line.

Decoding and scoring stay in the toolkit; the bridge only produces
emission files and reads back the key=value evaluation report.  Set
``SRL_BIN`` to point at a non-default ``srl`` executable.
"""

from __future__ import annotations

import os
import subprocess

from . import BridgeError


def _srl(*args: str) -> None:
    cmd = [os.environ.get("SRL_BIN", "srl"), *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise BridgeError(
            f"{' '.join(cmd)} failed (exit {proc.returncode}): {proc.stderr.strip()}"
        )


def decode(emissions: str, corpus: str, out: str) -> None:
    _srl("decode", "--emissions", emissions, "--corpus", corpus, "--out", out)


def evaluate(gold: str, pred: str, out: str) -> dict[str, str]:
    _srl("eval", "--gold", gold, "--pred", pred, "--out", out)
    report = {}
    with open(out, encoding="utf-8") as f:
        for line in f:
            key, _, value = line.strip().partition("=")
            report[key] = value
    return report


def f1_against(emissions: str, gold_corpus: str, workdir: str) -> float:
    """Decode an emission file and score it against its gold corpus."""
    pred = os.path.join(workdir, "pred.conll")
    rep = os.path.join(workdir, "report.txt")
    decode(emissions, gold_corpus, pred)
    return float(evaluate(gold_corpus, pred, rep)["f1"])
