import numpy as np
import pytest

from signassess.skeleton import default_partition
from signassess.synth import gen_corpus


@pytest.fixture(scope="session")
def partition():
    return default_partition()


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """A small but complete corpus: 2 sentences, 4 natives, 4 learners."""
    root = tmp_path_factory.mktemp("corpus")
    manifest = gen_corpus(
        seed=7, out_dir=root, sentences=2, natives=4, learners=4,
        deltas=(0.0, 0.5, 1.0, 2.0),
        modes=("AmplitudeError", "WrongChannel", "AmplitudeError", "Freeze"),
        t_proto=60,
    )
    return root, manifest


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
