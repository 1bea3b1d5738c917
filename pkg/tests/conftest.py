import pytest

from morphner.corpus import format_corpus
from morphner.synthetic import make_corpus
from morphner.tagger import TaggerConfig

ACCEPTANCE_LINES = []

TINY = """Ali Ali+Noun+Prop+A3sg+Pnon+Nom B-PERSON
geldi gel+Verb+Pos+Past+A3sg O

İstanbul'daydı İstanbul+Noun+Prop+A3sg+Pnon+Loc^DB+Verb+Zero+Past+A3sg B-LOCATION
evlerinde ev+Noun+A3pl+P3sg+Loc O
"""


@pytest.fixture
def tiny_path(tmp_path):
    path = tmp_path / "tiny.conll"
    path.write_text(TINY, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def synthetic_train():
    return make_corpus(50, seed=0)


@pytest.fixture(scope="session")
def synthetic_path(tmp_path_factory, synthetic_train):
    path = tmp_path_factory.mktemp("data") / "synthetic.conll"
    path.write_text(format_corpus(synthetic_train), encoding="utf-8")
    return path


@pytest.fixture
def small_config():
    return TaggerConfig(d_w=8, d_c=4, d_m=4, p=6, char_input_dim=4, morph_input_dim=4,
                        use_char=True, morph_scheme="wor", seed=0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
