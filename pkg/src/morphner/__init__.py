"""Bi-LSTM-CRF named entity tagging with character and morphological embeddings."""
from .corpus import EmbeddingTable, Sentence, Token, Vocab, build_vocabs, load_corpus, load_embeddings
from .estimator import BiLstmCrfTagger
from .evaluation import EvalResult, McNemarResult, extract_spans, f1_score, mcnemar
from .morpho import MorphAnalysis, Scheme, parse_analysis, project
from .tagger import TaggerConfig, TaggerModel, load_model, save_model
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "BiLstmCrfTagger",
    "EmbeddingTable",
    "EvalResult",
    "McNemarResult",
    "MorphAnalysis",
    "Scheme",
    "Sentence",
    "TaggerConfig",
    "TaggerModel",
    "Token",
    "TrainConfig",
    "TrainReport",
    "Vocab",
    "build_vocabs",
    "extract_spans",
    "f1_score",
    "load_corpus",
    "load_embeddings",
    "load_model",
    "mcnemar",
    "parse_analysis",
    "project",
    "save_model",
    "train",
]
