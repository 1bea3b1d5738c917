"""The Bi-LSTM-CRF tagger: token representations, emissions, decoding, and
the binary model file."""
from __future__ import annotations

import dataclasses
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from . import crf
from .corpus import EMPTY, EmbeddingTable, Sentence, Token, Vocab, build_vocabs
from .morpho import Scheme, project
from .numcore import (
    RNG_ALGORITHM,
    LstmParams,
    Tensor,
    bilstm_encode,
    concat,
    dropout_mask,
    glorot_uniform,
    linear,
    make_rng,
    parameter,
    rows,
    scale,
    sequence_embed,
    stack,
)

MAGIC = b"MNER"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class TaggerConfig:
    """Dimensions and switches of the model.

    ``d_c`` and ``d_m`` are per-direction sizes, so the token representation
    has length ``d_w + 2 * d_c + 2 * d_m`` when both channels are enabled.
    ``char_input_dim``/``morph_input_dim`` size the symbol lookup tables that
    feed the two sequence encoders.
    """

    d_w: int = 100
    d_c: int = 100
    d_m: int = 100
    p: int = 100
    use_char: bool = True
    morph_scheme: Scheme | None = Scheme.WOR
    dropout_rate: float = 0.5
    seed: int = 0
    char_input_dim: int = 25
    morph_input_dim: int = 25
    fine_tune_words: bool = True
    constrained_decoding: bool = False

    def __post_init__(self):
        if self.morph_scheme is not None:
            self.morph_scheme = Scheme.parse(self.morph_scheme)
        for name in ("d_w", "d_c", "d_m", "p", "char_input_dim", "morph_input_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def input_dim(self) -> int:
        d = self.d_w
        if self.use_char:
            d += 2 * self.d_c
        if self.morph_scheme is not None:
            d += 2 * self.d_m
        return d

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["morph_scheme"] = self.morph_scheme.value if self.morph_scheme else None
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


class TaggerModel:
    def __init__(self, config, word_vocab, char_vocab, morph_vocab, label_vocab, params):
        self.config = config
        self.word_vocab = word_vocab
        self.char_vocab = char_vocab
        self.morph_vocab = morph_vocab
        self.label_vocab = label_vocab
        self.params: dict[str, Tensor] = params
        self._constraints = None

    # ------------------------------------------------------------ construction

    @classmethod
    def build(cls, config: TaggerConfig, sentences, embeddings: EmbeddingTable | None = None):
        """Create vocabularies from ``sentences`` and initialize parameters."""
        words, chars, morphs, labels = build_vocabs(sentences, config.morph_scheme)
        if len(labels) == 0:
            raise ValueError("training sentences carry no labels")
        return cls.initialize(config, words, chars, morphs, labels, embeddings)

    @classmethod
    def initialize(cls, config, words, chars, morphs, labels, embeddings=None):
        rng = make_rng(config.seed)
        k = len(labels)
        params = {}

        word_emb = rng.uniform(-np.sqrt(3.0 / config.d_w), np.sqrt(3.0 / config.d_w), (len(words), config.d_w))
        bound = 0.5 / config.d_w
        word_emb[words.unk_id] = rng.uniform(-bound, bound, config.d_w)
        if embeddings is not None:
            if embeddings.dim != config.d_w:
                raise ValueError(f"embedding dim {embeddings.dim} != d_w {config.d_w}")
            for i, w in enumerate(words.symbols[2:], start=2):
                vec = embeddings.get(w)
                if vec is None:
                    vec = embeddings.get(w.lower())
                if vec is not None:
                    word_emb[i] = vec
        params["word_emb"] = parameter(word_emb, "word_emb")

        def add_lstm(prefix, input_dim, hidden):
            for direction in ("fwd", "bwd"):
                lstm = LstmParams.init(input_dim, hidden, rng, f"{prefix}.{direction}")
                params[lstm.W.name] = lstm.W
                params[lstm.b.name] = lstm.b

        if config.use_char:
            ci = config.char_input_dim
            params["char_emb"] = parameter(rng.uniform(-np.sqrt(3.0 / ci), np.sqrt(3.0 / ci), (len(chars), ci)), "char_emb")
            add_lstm("char", ci, config.d_c)
        if config.morph_scheme is not None:
            mi = config.morph_input_dim
            params["morph_emb"] = parameter(rng.uniform(-np.sqrt(3.0 / mi), np.sqrt(3.0 / mi), (len(morphs), mi)), "morph_emb")
            add_lstm("morph", mi, config.d_m)
        add_lstm("sent", config.input_dim, config.p)
        params["out.W"] = parameter(glorot_uniform(rng, (k, 2 * config.p), 2 * config.p, k), "out.W")
        params["out.b"] = parameter(np.zeros(k), "out.b")
        params["crf.transitions"] = parameter(crf.init_transitions(k), "crf.transitions")
        return cls(config, words, chars, morphs, labels, params)

    # ------------------------------------------------------------ accessors

    @property
    def num_tags(self) -> int:
        return len(self.label_vocab)

    @property
    def input_dim(self) -> int:
        return self.config.input_dim

    def lstm(self, prefix, direction) -> LstmParams:
        W = self.params[f"{prefix}.{direction}.W"]
        b = self.params[f"{prefix}.{direction}.b"]
        hidden = W.shape[0] // 4
        return LstmParams(W.shape[1] - hidden, hidden, W, b)

    def trainable(self) -> list[Tensor]:
        return [
            t for name, t in self.params.items()
            if name != "word_emb" or self.config.fine_tune_words
        ]

    def word_id(self, surface: str) -> int:
        v = self.word_vocab
        if surface in v:
            return v.index[surface]
        lower = surface.lower()
        if lower in v:
            return v.index[lower]
        return v.unk_id

    def morph_ids(self, token: Token) -> list[int]:
        symbols = project(token.analysis, self.config.morph_scheme)
        if not symbols:
            return [self.morph_vocab.index[EMPTY]]
        return [self.morph_vocab.id(s) for s in symbols]

    # ------------------------------------------------------------ forward

    def embed_tokens(self, tokens, train_mode=False, rng=None, dropout=None) -> Tensor:
        """``(n, d)`` matrix of token representations
        ``[word ; char summary ; morph summary]``."""
        cfg = self.config
        parts = [rows(self.params["word_emb"], [self.word_id(t.surface) for t in tokens])]
        if cfg.use_char:
            fwd, bwd = self.lstm("char", "fwd"), self.lstm("char", "bwd")
            table = self.params["char_emb"]
            parts.append(stack([
                sequence_embed(fwd, bwd, table, [self.char_vocab.id(c) for c in t.surface])
                for t in tokens
            ]))
        if cfg.morph_scheme is not None:
            fwd, bwd = self.lstm("morph", "fwd"), self.lstm("morph", "bwd")
            table = self.params["morph_emb"]
            parts.append(stack([sequence_embed(fwd, bwd, table, self.morph_ids(t)) for t in tokens]))
        x = parts[0] if len(parts) == 1 else concat(parts, axis=1)
        rate = cfg.dropout_rate if dropout is None else dropout
        if train_mode and rate > 0.0:
            if rng is None:
                raise ValueError("train_mode dropout needs an rng")
            x = scale(x, dropout_mask(x.shape, rate, rng))
        return x

    def embed_token(self, token: Token, train_mode=False, rng=None, dropout=None) -> Tensor:
        return self.embed_tokens([token], train_mode, rng, dropout).value[0]

    def forward(self, sentence, train_mode=False, rng=None, dropout=None) -> Tensor:
        """Emission scores ``(n, K)`` for one sentence."""
        tokens = _tokens(sentence)
        if not tokens:
            raise ValueError("cannot score an empty sentence")
        x = self.embed_tokens(tokens, train_mode, rng, dropout)
        h = bilstm_encode(self.lstm("sent", "fwd"), self.lstm("sent", "bwd"), x)
        return linear(self.params["out.W"], self.params["out.b"], h)

    def loss(self, sentence, train_mode=False, rng=None, dropout=None) -> Tensor:
        gold = [self.label_vocab.index[t.label] for t in _tokens(sentence)]
        emissions = self.forward(sentence, train_mode, rng, dropout)
        return crf.nll_loss(emissions, self.params["crf.transitions"], gold)

    def decode(self, sentence):
        emissions = self.forward(sentence).value
        constraints = None
        if self.config.constrained_decoding:
            if self._constraints is None:
                self._constraints = crf.iob_constraints(self.label_vocab.symbols)
            constraints = self._constraints
        return crf.viterbi(emissions, self.params["crf.transitions"].value, constraints)

    def tag(self, sentence) -> list[str]:
        path, _ = self.decode(sentence)
        return [self.label_vocab.symbols[i] for i in path]

    # ------------------------------------------------------------ state

    def state(self) -> dict[str, np.ndarray]:
        return {k: t.value.copy() for k, t in self.params.items()}

    def load_state(self, state):
        for k, v in state.items():
            self.params[k].value[...] = v

    def save(self, path, extras=None):
        save_model(self, path, extras)


def _tokens(sentence) -> list[Token]:
    return sentence.tokens if isinstance(sentence, Sentence) else list(sentence)


# ---------------------------------------------------------------- file format
#
#   magic  b"MNER"
#   u32    format version
#   u32    header length, then that many bytes of UTF-8 JSON:
#            {"config", "vocabs": {"word","char","morph","label"}, "rng", "tensors": count}
#   per tensor, in header order:
#          u16 name length, name bytes (UTF-8), u8 ndim, ndim x u32 dims,
#          prod(dims) float64 values, row-major
#   optional: b"XTRA", u32 length, UTF-8 JSON (checkpoint state)
#
# All integers and floats are little-endian.


def _dumps(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def model_bytes(model: TaggerModel, extras=None) -> bytes:
    buf = io.BytesIO()
    header = {
        "config": model.config.to_dict(),
        "vocabs": {
            "word": model.word_vocab.symbols,
            "char": model.char_vocab.symbols,
            "morph": model.morph_vocab.symbols,
            "label": model.label_vocab.symbols,
        },
        "rng": RNG_ALGORITHM,
        "tensors": len(model.params),
    }
    blob = _dumps(header)
    buf.write(MAGIC)
    buf.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
    buf.write(blob)
    for name, t in model.params.items():
        raw_name = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw_name)))
        buf.write(raw_name)
        buf.write(struct.pack("<B", t.value.ndim))
        buf.write(struct.pack(f"<{t.value.ndim}I", *t.value.shape))
        buf.write(np.ascontiguousarray(t.value, dtype="<f8").tobytes())
    if extras is not None:
        blob = _dumps(extras)
        buf.write(b"XTRA" + struct.pack("<I", len(blob)) + blob)
    return buf.getvalue()


def atomic_write(path, data: bytes):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model: TaggerModel, path, extras=None):
    atomic_write(path, model_bytes(model, extras))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("truncated model file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def done(self):
        return self.pos == len(self.data)


def read_model(path):
    """Return ``(model, extras)``; ``extras`` is ``None`` for plain model files."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        raise ModelFormatError(f"{path}: empty model file")
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version} (this reader handles {FORMAT_VERSION})")
    (hlen,) = r.unpack("<I")
    try:
        header = json.loads(r.take(hlen).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header ({exc})") from None
    if header.get("rng") != RNG_ALGORITHM:
        raise ModelFormatError(f"{path}: unknown rng algorithm {header.get('rng')!r}")
    params = {}
    for _ in range(header["tensors"]):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        count = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
        params[name] = parameter(values, name)
    extras = None
    if not r.done:
        if r.take(4) != b"XTRA":
            raise ModelFormatError(f"{path}: trailing garbage after tensors")
        (xlen,) = r.unpack("<I")
        extras = json.loads(r.take(xlen).decode("utf-8"))
        if not r.done:
            raise ModelFormatError(f"{path}: trailing garbage after extras")
    vocabs = header["vocabs"]
    config = TaggerConfig.from_dict(header["config"])
    model = TaggerModel(
        config,
        Vocab.from_symbols(vocabs["word"], ("<unk>", "<pad>")),
        Vocab.from_symbols(vocabs["char"], ("<unk>", "<pad>")),
        Vocab.from_symbols(vocabs["morph"], ("<unk>", "<pad>", EMPTY)),
        Vocab.from_symbols(vocabs["label"], ()),
        params,
    )
    return model, extras


def load_model(path) -> TaggerModel:
    return read_model(path)[0]
