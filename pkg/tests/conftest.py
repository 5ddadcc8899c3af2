import numpy as np
import pytest
import torch

from vit1d.encoder import EncoderConfig
from vit1d.synth import SyntheticCorpusSpec, generate_corpus

torch.set_num_threads(1)

TINY = EncoderConfig(n_mels=5, embed_dim=8, depth=2, heads=2, mlp_ratio=4, seq_len=6)


@pytest.fixture
def tiny_cfg():
    return TINY


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def click_corpus():
    return generate_corpus(SyntheticCorpusSpec(16, 12.0, "click-train", seed=0))


@pytest.fixture(scope="session")
def click_corpus_dir(tmp_path_factory):
    from vit1d.synth import write_corpus

    out = tmp_path_factory.mktemp("clicks")
    write_corpus(SyntheticCorpusSpec(4, 9.0, "click-train", seed=3), out)
    return out


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES

    if LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
