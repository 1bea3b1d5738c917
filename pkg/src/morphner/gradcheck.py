"""Central finite-difference check of the tagger's analytic gradients."""
from __future__ import annotations

import numpy as np

from .numcore import make_rng
from .synthetic import make_corpus
from .tagger import TaggerConfig, TaggerModel


def relative_error(analytic, numeric, floor=1e-8):
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)


def tiny_model(seed: int = 0, scheme="wr", max_len: int = 4, n_sentences: int = 2):
    """A small randomly initialized model plus the sentences it is checked on.

    Biases and transitions are randomized too, so no gradient is trivially
    zero by symmetry.
    """
    sentences = _pick_sentences(seed, max_len, n_sentences)
    cfg = TaggerConfig(d_w=2, d_c=2, d_m=2, p=3, use_char=True, morph_scheme=scheme,
                       char_input_dim=2, morph_input_dim=2, dropout_rate=0.0, seed=seed)
    model = TaggerModel.build(cfg, sentences)
    rng = make_rng(seed + 1)
    for t in model.params.values():
        finite = np.isfinite(t.value)
        t.value[finite] += rng.uniform(-0.5, 0.5, size=int(finite.sum()))
    return model, sentences


TAGS = {"O", "B-PERSON", "B-LOCATION"}


def _pick_sentences(seed, max_len, n_sentences):
    # short sentences covering exactly three tags, so K = 3
    pool = [s for s in make_corpus(400, seed=seed)
            if len(s) <= max_len and set(s.labels) <= TAGS]
    for i, first in enumerate(pool):
        chosen = [first]
        for other in pool[i + 1:]:
            if len(chosen) == n_sentences:
                break
            chosen.append(other)
        if len(chosen) == n_sentences and set().union(*(s.labels for s in chosen)) == TAGS:
            return chosen
    raise RuntimeError(f"no sentence set covering {sorted(TAGS)} for seed {seed}")


def total_loss(model, sentences) -> float:
    return sum(float(model.loss(s).value) for s in sentences)


def check_gradients(model, sentences, eps: float = 1e-5):
    """Return ``{parameter name: max relative error}`` over every element.

    Entries fixed at ``-inf`` (CRF boundary transitions) are skipped.
    """
    for t in model.params.values():
        t.zero_grad()
    for s in sentences:
        model.loss(s).backward()
    errors = {}
    for name, t in model.params.items():
        analytic = t.grad.copy()
        flat = t.value.reshape(-1)
        numeric = np.zeros(flat.size)
        for i in range(flat.size):
            if not np.isfinite(flat[i]):
                continue
            orig = flat[i]
            flat[i] = orig + eps
            plus = total_loss(model, sentences)
            flat[i] = orig - eps
            minus = total_loss(model, sentences)
            flat[i] = orig
            numeric[i] = (plus - minus) / (2 * eps)
        finite = np.isfinite(t.value.reshape(-1))
        err = relative_error(analytic.reshape(-1)[finite], numeric[finite])
        errors[name] = float(err.max()) if err.size else 0.0
        t.zero_grad()
    return errors
