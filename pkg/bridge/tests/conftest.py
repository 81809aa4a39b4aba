import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from corpus_fixtures import make_instances  # noqa: E402

from srl_bridge.data import write_conll  # noqa: E402


@pytest.fixture
def small_corpus(tmp_path):
    path = tmp_path / "train.conll"
    instances = make_instances(10)
    write_conll(instances, str(path))
    return str(path), instances
