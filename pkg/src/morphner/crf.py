"""Linear-chain CRF with virtual START/STOP tags.

Transition matrices have shape ``(K + 2, K + 2)``; row/column ``K`` is START
and ``K + 1`` is STOP.  Transitions into START, out of STOP, and the unused
START->STOP entry are fixed at ``-inf``.
"""
from __future__ import annotations

import numpy as np

from .numcore import Tensor, _result

NEG_INF = -np.inf


def start_id(num_tags: int) -> int:
    return num_tags


def stop_id(num_tags: int) -> int:
    return num_tags + 1


def fixed_mask(num_tags: int) -> np.ndarray:
    """Boolean mask of the transition entries that are never learned."""
    mask = np.zeros((num_tags + 2, num_tags + 2), dtype=bool)
    mask[:, start_id(num_tags)] = True
    mask[stop_id(num_tags), :] = True
    mask[start_id(num_tags), stop_id(num_tags)] = True
    return mask


def init_transitions(num_tags: int, rng: np.random.Generator | None = None, scale: float = 0.0) -> np.ndarray:
    if rng is None or scale == 0.0:
        A = np.zeros((num_tags + 2, num_tags + 2))
    else:
        A = rng.uniform(-scale, scale, size=(num_tags + 2, num_tags + 2))
    A[fixed_mask(num_tags)] = NEG_INF
    return A


def _check(emissions, transitions):
    emissions = np.asarray(emissions, dtype=np.float64)
    transitions = np.asarray(transitions, dtype=np.float64)
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise ValueError(f"emissions must be (n >= 1, K), got {emissions.shape}")
    k = emissions.shape[1]
    if transitions.shape != (k + 2, k + 2):
        raise ValueError(f"transitions must be ({k + 2}, {k + 2}), got {transitions.shape}")
    return emissions, transitions


def _logsumexp(x, axis=None):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


def sentence_score(emissions, transitions, tags) -> float:
    emissions, transitions = _check(emissions, transitions)
    n, k = emissions.shape
    tags = [int(t) for t in tags]
    if len(tags) != n:
        raise ValueError(f"tag sequence length {len(tags)} != {n} positions")
    if any(t < 0 or t >= k for t in tags):
        raise ValueError(f"tag id out of range [0, {k}): {tags}")
    score = float(transitions[start_id(k), tags[0]])
    for a, b in zip(tags, tags[1:]):
        score += float(transitions[a, b])
    score += float(transitions[tags[-1], stop_id(k)])
    for i, t in enumerate(tags):
        score += float(emissions[i, t])
    return score


def _forward_alphas(emissions, transitions):
    n, k = emissions.shape
    A = transitions[:k, :k]
    alphas = np.empty((n, k))
    alphas[0] = transitions[start_id(k), :k] + emissions[0]
    for i in range(1, n):
        alphas[i] = _logsumexp(alphas[i - 1][:, None] + A, axis=0) + emissions[i]
    return alphas


def _backward_betas(emissions, transitions):
    n, k = emissions.shape
    A = transitions[:k, :k]
    betas = np.empty((n, k))
    betas[-1] = transitions[:k, stop_id(k)]
    for i in range(n - 2, -1, -1):
        betas[i] = _logsumexp(A + (emissions[i + 1] + betas[i + 1])[None, :], axis=1)
    return betas


def log_partition(emissions, transitions) -> float:
    """log of the summed exponentiated score of every tag sequence."""
    emissions, transitions = _check(emissions, transitions)
    k = emissions.shape[1]
    alphas = _forward_alphas(emissions, transitions)
    return _logsumexp(alphas[-1] + transitions[:k, stop_id(k)])


def marginals(emissions, transitions):
    """Posterior tag marginals ``(n, K)`` and expected transition counts
    ``(K + 2, K + 2)`` under the CRF distribution."""
    emissions, transitions = _check(emissions, transitions)
    n, k = emissions.shape
    alphas = _forward_alphas(emissions, transitions)
    betas = _backward_betas(emissions, transitions)
    log_z = _logsumexp(alphas[-1] + transitions[:k, stop_id(k)])
    unary = np.exp(alphas + betas - log_z)
    pair = np.zeros((k + 2, k + 2))
    pair[start_id(k), :k] = unary[0]
    pair[:k, stop_id(k)] = unary[-1]
    A = transitions[:k, :k]
    for i in range(1, n):
        pair[:k, :k] += np.exp(
            alphas[i - 1][:, None] + A + (emissions[i] + betas[i])[None, :] - log_z
        )
    return unary, pair, log_z


def viterbi(emissions, transitions, constraints=None):
    """Highest-scoring tag path and its score.

    Ties go to the lowest tag id.  ``constraints`` is an optional additive
    ``(K + 2, K + 2)`` matrix (e.g. from :func:`iob_constraints`).
    """
    emissions, transitions = _check(emissions, transitions)
    if constraints is not None:
        transitions = transitions + constraints
    n, k = emissions.shape
    A = transitions[:k, :k]
    delta = transitions[start_id(k), :k] + emissions[0]
    backptr = np.zeros((n, k), dtype=np.intp)
    for i in range(1, n):
        cand = delta[:, None] + A
        backptr[i] = np.argmax(cand, axis=0)
        delta = cand[backptr[i], np.arange(k)] + emissions[i]
    final = delta + transitions[:k, stop_id(k)]
    best = int(np.argmax(final))
    path = [best]
    for i in range(n - 1, 0, -1):
        best = int(backptr[i, best])
        path.append(best)
    path.reverse()
    return path, sentence_score(emissions, transitions, path)


def iob_constraints(labels) -> np.ndarray:
    """Additive mask forbidding ``I-X`` after anything but ``B-X``/``I-X``."""
    k = len(labels)
    mask = np.zeros((k + 2, k + 2))
    for j, to in enumerate(labels):
        if not to.startswith("I-"):
            continue
        kind = to[2:]
        mask[start_id(k), j] = NEG_INF
        for i, frm in enumerate(labels):
            if frm[2:] != kind or frm == "O":
                mask[i, j] = NEG_INF
    return mask


def nll_loss(emissions: Tensor, transitions: Tensor, gold) -> Tensor:
    """``log_partition - sentence_score(gold)`` as a differentiable scalar."""
    xi, A = emissions.value, transitions.value
    n, k = xi.shape
    gold = [int(t) for t in gold]
    gold_score = sentence_score(xi, A, gold)
    unary, pair, log_z = marginals(xi, A)
    value = max(log_z - gold_score, 0.0)

    def backward(g):
        if emissions.grad is not None:
            d_xi = unary.copy()
            d_xi[np.arange(n), gold] -= 1.0
            emissions.grad += g * d_xi
        if transitions.grad is not None:
            d_a = pair.copy()
            d_a[start_id(k), gold[0]] -= 1.0
            for a, b in zip(gold, gold[1:]):
                d_a[a, b] -= 1.0
            d_a[gold[-1], stop_id(k)] -= 1.0
            transitions.grad += g * d_a

    return _result(np.array(value), (emissions, transitions), backward)
