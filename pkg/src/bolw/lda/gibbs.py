"""Collapsed Gibbs sampling for LDA, used as a small-corpus oracle for VB."""

from __future__ import annotations

import numpy as np

from ..errors import NonIntegerWeights
from ..seeding import substream
from ..weighting import ImageLabelMatrix
from .config import LdaConfig
from .model import TopicModel
from .vb import _check_matrix


def _tokens(matrix: ImageLabelMatrix) -> tuple[np.ndarray, np.ndarray]:
    x = matrix.data
    if not matrix.is_integral():
        raise NonIntegerWeights(
            f"Gibbs sampling needs integer label counts; the {matrix.mode.value} matrix has "
            "fractional weights. Use binary weighting."
        )
    rows = np.repeat(np.arange(x.shape[0]), np.diff(x.indptr))
    reps = x.data.astype(np.int64)
    return np.repeat(rows, reps), np.repeat(x.indices, reps)


def gibbs_sweeps(docs, words, n_docs: int, m: int, k: int, alpha: float, beta: float, rng, iterations: int):
    """Run collapsed Gibbs sweeps over tokens ``(docs[t], words[t])``.

    Yields ``(z, cond)`` after every sweep: the current assignments and each
    token's full conditional over topics at the moment it was resampled.
    Both arrays are reused between sweeps.
    """
    z = rng.integers(k, size=len(docs))
    n_dk = np.zeros((n_docs, k))
    n_kw = np.zeros((k, m))
    np.add.at(n_dk, (docs, z), 1)
    np.add.at(n_kw, (z, words), 1)
    n_k = n_kw.sum(axis=1)
    cond = np.zeros((len(docs), k))
    for _ in range(iterations):
        u = rng.random(len(docs))
        for t in range(len(docs)):
            d, w, old = docs[t], words[t], z[t]
            n_dk[d, old] -= 1
            n_kw[old, w] -= 1
            n_k[old] -= 1
            p = (n_dk[d] + alpha) * (n_kw[:, w] + beta) / (n_k + m * beta)
            p /= p.sum()
            new = min(int(np.searchsorted(np.cumsum(p), u[t], side="right")), k - 1)
            z[t] = new
            n_dk[d, new] += 1
            n_kw[new, w] += 1
            n_k[new] += 1
            cond[t] = p
        yield z, cond


def fit_gibbs(matrix: ImageLabelMatrix, config: LdaConfig) -> TopicModel:
    """Posterior-mean topics and mixtures from collapsed Gibbs sampling.

    After burn-in, every sweep adds each token's full conditional over topics
    to running expected counts (a Rao-Blackwellized average); the smoothed
    means of those counts give ``theta`` and ``phi``.
    """
    _check_matrix(matrix)
    docs, words = _tokens(matrix)
    n_docs, m = matrix.shape
    k, alpha, beta = config.k, config.alpha, config.beta
    settings = config.gibbs
    rng = substream(config.seed, "fit-gibbs")

    acc_dk = np.zeros((n_docs, k))
    acc_kw = np.zeros((k, m))
    samples = 0
    chain = gibbs_sweeps(docs, words, n_docs, m, k, alpha, beta, rng, settings.iterations)
    for sweep, (_, cond) in enumerate(chain):
        if sweep < settings.burn_in:
            continue
        np.add.at(acc_dk, docs, cond)
        np.add.at(acc_kw.T, words, cond)
        samples += 1

    mean_dk = acc_dk / samples
    mean_kw = acc_kw / samples
    theta = (mean_dk + alpha) / (mean_dk.sum(axis=1, keepdims=True) + k * alpha)
    params = mean_kw + beta
    phi = params / params.sum(axis=1, keepdims=True)
    theta /= theta.sum(axis=1, keepdims=True)
    return TopicModel(
        phi=phi,
        theta=theta,
        topic_word_params=params,
        config=config,
        words=tuple(matrix.vocab.rendered()),
        vocab_digest=matrix.vocab.digest(),
        weighting=matrix.mode.value,
        method="gibbs",
    )
