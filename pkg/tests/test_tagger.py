import struct

import numpy as np
import pytest

from morphner.corpus import EMPTY, EmbeddingTable, Sentence, Token, load_corpus
from morphner.morpho import parse_analysis
from morphner.numcore import make_rng
from morphner.tagger import (
    FORMAT_VERSION,
    MAGIC,
    ModelFormatError,
    TaggerConfig,
    TaggerModel,
    load_model,
    model_bytes,
    read_model,
    save_model,
)


def tok(surface, raw, label=None):
    return Token(surface, parse_analysis(raw), label)


@pytest.fixture
def model(tiny_path, small_config):
    return TaggerModel.build(small_config, load_corpus(tiny_path))


class TestDimensions:
    @pytest.mark.parametrize("use_char,scheme,expected", [
        (False, None, 100), (True, None, 300), (False, "wor", 300), (True, "wor", 500)])
    def test_paper_sizes(self, tiny_path, use_char, scheme, expected):
        cfg = TaggerConfig(d_w=100, d_c=100, d_m=100, p=4, use_char=use_char, morph_scheme=scheme)
        m = TaggerModel.build(cfg, load_corpus(tiny_path))
        assert m.input_dim == expected
        for s in load_corpus(tiny_path):
            for t in s.tokens:
                assert m.embed_token(t).shape == (expected,)

    def test_config_rejects_bad_values(self):
        with pytest.raises(ValueError):
            TaggerConfig(d_w=0)
        with pytest.raises(ValueError):
            TaggerConfig(dropout_rate=1.0)
        with pytest.raises(ValueError):
            TaggerConfig(morph_scheme="bogus")


class TestEmbedding:
    def test_eval_mode_deterministic(self, model, tiny_path):
        t = load_corpus(tiny_path)[0].tokens[0]
        np.testing.assert_array_equal(model.embed_token(t), model.embed_token(t))

    def test_train_mode_dropout(self, model, tiny_path):
        t = load_corpus(tiny_path)[0].tokens[0]
        clean = model.embed_token(t)
        noisy = model.embed_token(t, train_mode=True, rng=make_rng(0), dropout=0.5)
        assert np.all((noisy == 0) | np.isclose(noisy, 2 * clean))

    def test_ablation_is_word_vector(self, tiny_path):
        cfg = TaggerConfig(d_w=5, p=3, use_char=False, morph_scheme=None)
        m = TaggerModel.build(cfg, load_corpus(tiny_path))
        t = load_corpus(tiny_path)[0].tokens[0]
        np.testing.assert_array_equal(m.embed_token(t), m.params["word_emb"].value[m.word_vocab.index["Ali"]])

    def test_word_lookup_order(self, tmp_path):
        path = tmp_path / "c.conll"
        path.write_text("ankara ankara+Noun O\nAli Ali+Noun B-PER\n", encoding="utf-8")
        m = TaggerModel.build(TaggerConfig(d_w=2, p=2, use_char=False, morph_scheme=None), load_corpus(path))
        assert m.word_id("Ali") == m.word_vocab.index["Ali"]
        assert m.word_id("ANKARA") == m.word_vocab.index["ankara"]
        assert m.word_id("ali") == m.word_vocab.unk_id
        assert m.word_id("yok") == m.word_vocab.unk_id

    def test_pretrained_vectors(self, tmp_path):
        path = tmp_path / "c.conll"
        path.write_text("Ev ev+Noun O\nsu su+Noun O\nyeni yeni+Adj O\n", encoding="utf-8")
        table = EmbeddingTable(2, {"ev": np.array([1.0, 2.0]), "su": np.array([3.0, 4.0])})
        m = TaggerModel.build(TaggerConfig(d_w=2, p=2, use_char=False, morph_scheme=None),
                              load_corpus(path), table)
        W = m.params["word_emb"].value
        np.testing.assert_array_equal(W[m.word_vocab.index["Ev"]], [1.0, 2.0])
        np.testing.assert_array_equal(W[m.word_vocab.index["su"]], [3.0, 4.0])
        assert np.all(np.abs(W[m.word_vocab.unk_id]) <= 0.5 / 2)

    def test_pretrained_dim_mismatch(self, tiny_path):
        with pytest.raises(ValueError):
            TaggerModel.build(TaggerConfig(d_w=3, p=2), load_corpus(tiny_path), EmbeddingTable(2, {}))

    def test_empty_projection_uses_reserved_symbol(self, tiny_path, small_config):
        m = TaggerModel.build(small_config, load_corpus(tiny_path))
        assert m.morph_ids(tok("x", "x")) == [m.morph_vocab.index[EMPTY]]
        assert m.embed_token(tok("x", "x")).shape == (m.input_dim,)


class TestForwardAndTag:
    def test_emission_shape(self, model):
        sent = Sentence([tok("a", "a+Noun"), tok("b", "b+Verb"), tok("c", "c")])
        assert model.forward(sent).shape == (3, model.num_tags)

    def test_zero_params_bias_rows(self, model, tiny_path):
        for name, t in model.params.items():
            if name != "out.b":
                t.value[np.isfinite(t.value)] = 0.0
        model.params["out.b"].value[:] = np.arange(model.num_tags)
        em = model.forward(load_corpus(tiny_path)[0]).value
        np.testing.assert_array_equal(em, np.tile(np.arange(model.num_tags), (2, 1)))

    def test_untrained_zero_model_constant_label(self, model, tiny_path):
        for t in model.params.values():
            t.value[np.isfinite(t.value)] = 0.0
        for s in load_corpus(tiny_path):
            assert model.tag(s) == [model.label_vocab.symbols[0]] * len(s)

    def test_tag_length(self, model, synthetic_train):
        for s in synthetic_train[:10]:
            assert len(model.tag(s)) == len(s)

    def test_permutation_invariance(self, model, synthetic_train):
        sents = synthetic_train[:8]
        before = [model.tag(s) for s in sents]
        after = [model.tag(s) for s in sents[::-1]][::-1]
        assert before == after

    def test_constrained_decoding_is_valid_iob(self, synthetic_train):
        cfg = TaggerConfig(d_w=4, d_c=2, d_m=2, p=3, char_input_dim=2, morph_input_dim=2,
                           constrained_decoding=True, seed=3)
        m = TaggerModel.build(cfg, synthetic_train)
        rng = make_rng(0)
        for t in m.params.values():
            t.value[np.isfinite(t.value)] += rng.normal(size=int(np.isfinite(t.value).sum()))
        for s in synthetic_train[:20]:
            labels = m.tag(s)
            for prev, cur in zip(["O"] + labels, labels):
                if cur.startswith("I-"):
                    assert prev[2:] == cur[2:] and prev != "O"


class TestModelFile:
    def test_round_trip(self, model, synthetic_train, tmp_path):
        path = tmp_path / "m.mner"
        save_model(model, path)
        loaded = load_model(path)
        for s in synthetic_train[:10]:
            assert loaded.tag(s) == model.tag(s)
            np.testing.assert_array_equal(loaded.forward(s).value, model.forward(s).value)
        assert loaded.config == model.config
        assert model_bytes(loaded) == path.read_bytes()

    def test_header(self, model, tmp_path):
        data = model_bytes(model)
        assert data[:4] == MAGIC
        assert struct.unpack("<I", data[4:8])[0] == FORMAT_VERSION

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.mner"
        path.write_bytes(b"")
        with pytest.raises(ModelFormatError, match="empty"):
            load_model(path)

    def test_future_version(self, model, tmp_path):
        data = bytearray(model_bytes(model))
        data[4:8] = struct.pack("<I", 2)
        path = tmp_path / "m.mner"
        path.write_bytes(bytes(data))
        with pytest.raises(ModelFormatError, match="version 2"):
            load_model(path)

    def test_bad_magic(self, model, tmp_path):
        path = tmp_path / "m.mner"
        path.write_bytes(b"XXXX" + model_bytes(model)[4:])
        with pytest.raises(ModelFormatError, match="magic"):
            load_model(path)

    @pytest.mark.parametrize("cut", [6, 100, -1, -8, -100])
    def test_truncated(self, model, tmp_path, cut):
        path = tmp_path / "m.mner"
        path.write_bytes(model_bytes(model)[:cut])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_extras(self, model, tmp_path):
        path = tmp_path / "m.ckpt"
        save_model(model, path, extras={"epoch": 3})
        _, extras = read_model(path)
        assert extras == {"epoch": 3}
        assert read_model_plain(model, tmp_path) is None


def read_model_plain(model, tmp_path):
    path = tmp_path / "plain.mner"
    save_model(model, path)
    return read_model(path)[1]
