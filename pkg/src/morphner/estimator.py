"""scikit-learn style wrapper around the tagger and its training loop."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import EmbeddingTable, load_embeddings
from .evaluation import f1_score
from .tagger import TaggerConfig, TaggerModel, load_model, save_model
from .training import TrainConfig, train
from .validation import check_sentences


class BiLstmCrfTagger(BaseEstimator):
    """Bi-LSTM-CRF sequence tagger with optional character and
    morphological embedding channels.

    ``X`` is a list of sentences; see :mod:`morphner.validation` for the
    accepted token forms.  ``y`` is a list of IOB label lists.

    Parameters
    ----------
    word_dim, char_dim, morph_dim, hidden_dim : int
        Word vector size and per-direction sizes of the character,
        morphological and sentence Bi-LSTMs.
    use_char : bool
        Enable the character channel.
    morph_scheme : {"wr", "wor", "wr_adb", "char"} or None
        Projection of the morphological analysis; ``None`` disables the channel.
    embeddings : EmbeddingTable, path or None
        Pretrained word vectors of length ``word_dim``.
    target_f1 : float or None
        Stop once dev F1 reaches this value (requires dev data in ``fit``).
    """

    def __init__(self, word_dim=100, char_dim=100, morph_dim=100, hidden_dim=100, use_char=True,
                 morph_scheme="wor", char_input_dim=25, morph_input_dim=25, dropout=0.5, lr=0.01,
                 clip_norm=5.0, epochs=100, patience=None, target_f1=None, seed=0, embeddings=None,
                 fine_tune_words=True, constrained_decoding=False, checkpoint_dir=None):
        self.word_dim = word_dim
        self.char_dim = char_dim
        self.morph_dim = morph_dim
        self.hidden_dim = hidden_dim
        self.use_char = use_char
        self.morph_scheme = morph_scheme
        self.char_input_dim = char_input_dim
        self.morph_input_dim = morph_input_dim
        self.dropout = dropout
        self.lr = lr
        self.clip_norm = clip_norm
        self.epochs = epochs
        self.patience = patience
        self.target_f1 = target_f1
        self.seed = seed
        self.embeddings = embeddings
        self.fine_tune_words = fine_tune_words
        self.constrained_decoding = constrained_decoding
        self.checkpoint_dir = checkpoint_dir

    def _tagger_config(self):
        return TaggerConfig(
            d_w=self.word_dim, d_c=self.char_dim, d_m=self.morph_dim, p=self.hidden_dim,
            use_char=self.use_char, morph_scheme=self.morph_scheme, dropout_rate=self.dropout,
            seed=self.seed, char_input_dim=self.char_input_dim, morph_input_dim=self.morph_input_dim,
            fine_tune_words=self.fine_tune_words, constrained_decoding=self.constrained_decoding,
        )

    def _embedding_table(self):
        if self.embeddings is None or isinstance(self.embeddings, EmbeddingTable):
            return self.embeddings
        return load_embeddings(self.embeddings, self.word_dim)

    def fit(self, X, y=None, X_dev=None, y_dev=None):
        sentences = check_sentences(X, y, require_labels=True)
        if not sentences:
            raise ValueError("cannot fit on an empty training set")
        dev = None
        if X_dev is not None:
            dev = check_sentences(X_dev, y_dev, require_labels=True)
        model = TaggerModel.build(self._tagger_config(), sentences, self._embedding_table())
        cfg = TrainConfig(lr=self.lr, clip_norm=self.clip_norm, dropout=self.dropout,
                          epochs=self.epochs, seed=self.seed, patience=self.patience,
                          checkpoint_dir=self.checkpoint_dir, target_f1=self.target_f1)
        self.model_, self.report_ = train(model, sentences, dev, cfg)
        self.classes_ = np.array(self.model_.label_vocab.symbols)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return [self.model_.tag(s) for s in check_sentences(X)]

    def decision_function(self, X):
        """Emission score matrices ``(n_tokens, n_classes)``, one per sentence."""
        check_is_fitted(self, "model_")
        return [self.model_.forward(s).value for s in check_sentences(X)]

    def transform(self, X):
        """Token representation matrices ``(n_tokens, d)``, one per sentence."""
        check_is_fitted(self, "model_")
        return [self.model_.embed_tokens(s.tokens).value for s in check_sentences(X)]

    def score(self, X, y):
        """Entity-level exact-match F1."""
        gold = [list(labels) for labels in y]
        return f1_score(gold, self.predict(X)).f1

    def save(self, path):
        check_is_fitted(self, "model_")
        save_model(self.model_, path)

    @classmethod
    def load(cls, path):
        model = load_model(path)
        cfg = model.config
        est = cls(word_dim=cfg.d_w, char_dim=cfg.d_c, morph_dim=cfg.d_m, hidden_dim=cfg.p,
                  use_char=cfg.use_char,
                  morph_scheme=cfg.morph_scheme.value if cfg.morph_scheme else None,
                  char_input_dim=cfg.char_input_dim, morph_input_dim=cfg.morph_input_dim,
                  dropout=cfg.dropout_rate, seed=cfg.seed, fine_tune_words=cfg.fine_tune_words,
                  constrained_decoding=cfg.constrained_decoding)
        est.model_ = model
        est.classes_ = np.array(model.label_vocab.symbols)
        return est
