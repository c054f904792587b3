"""Online variational Bayes for LDA over weighted sparse rows.

Entry weights act as (possibly fractional) label counts, so tf-idf matrices
can be fitted directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.special import gammaln, logsumexp, psi

from ..errors import EmptyCorpus, NonFiniteWeight, UserError, VocabularyMismatch
from ..seeding import substream
from ..weighting import ImageLabelMatrix
from .config import LdaConfig, VbSettings
from .model import TopicModel

logger = logging.getLogger(__name__)


def dirichlet_expectation(alpha: np.ndarray) -> np.ndarray:
    """E[log x] for x ~ Dirichlet(alpha), row-wise for 2-D input."""
    if alpha.ndim == 1:
        return psi(alpha) - psi(np.sum(alpha))
    return psi(alpha) - psi(np.sum(alpha, axis=1))[:, np.newaxis]


def _check_matrix(matrix: ImageLabelMatrix) -> sparse.csr_matrix:
    x = matrix.data
    if x.shape[0] == 0:
        raise EmptyCorpus("matrix has no rows")
    if not np.all(np.isfinite(x.data)):
        raise NonFiniteWeight("matrix contains NaN or infinite weights")
    if np.any(x.data < 0):
        raise UserError("matrix contains negative weights")
    if x.nnz == 0:
        raise EmptyCorpus("every row of the matrix is empty")
    return x


def _nz_rows(x: sparse.csr_matrix) -> np.ndarray:
    return np.repeat(np.arange(x.shape[0]), np.diff(x.indptr))


def _initial_gamma(x: sparse.csr_matrix, k: int, alpha: float) -> np.ndarray:
    weights = np.asarray(x.sum(axis=1)).ravel()
    return np.repeat((alpha + weights / k)[:, None], k, axis=1)


def e_step(
    x: sparse.csr_matrix,
    exp_elog_beta: np.ndarray,
    alpha: float,
    gamma: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-document updates for a block of rows, all rows at once.

    A row stops updating once the mean absolute change of its gamma drops
    below ``tol``. Returns the gammas and the K x M sufficient statistics.
    """
    rows, cols, cts = _nz_rows(x), x.indices, x.data
    gamma = gamma.copy()
    exp_elog_theta = np.exp(dirichlet_expectation(gamma))
    beta_nz = exp_elog_beta[:, cols].T
    active = np.ones(x.shape[0], dtype=bool)

    def ratio() -> sparse.csr_matrix:
        phinorm = np.einsum("nk,nk->n", exp_elog_theta[rows], beta_nz) + 1e-100
        return sparse.csr_matrix((cts / phinorm, cols, x.indptr), shape=x.shape)

    for _ in range(max_iter):
        new_gamma = alpha + exp_elog_theta * (ratio() @ exp_elog_beta.T)
        change = np.mean(np.abs(new_gamma - gamma), axis=1)
        gamma[active] = new_gamma[active]
        exp_elog_theta[active] = np.exp(dirichlet_expectation(gamma[active]))
        active &= change >= tol
        if not active.any():
            break
    sstats = np.asarray((ratio().T @ exp_elog_theta).T) * exp_elog_beta
    return gamma, sstats


def document_bound(x: sparse.csr_matrix, gamma: np.ndarray, elog_beta: np.ndarray, alpha: float) -> float:
    """Per-document part of the variational bound, summed over rows."""
    k = gamma.shape[1]
    elog_theta = dirichlet_expectation(gamma)
    rows, cols = _nz_rows(x), x.indices
    score = float(np.dot(x.data, logsumexp(elog_theta[rows] + elog_beta[:, cols].T, axis=1)))
    score += float(np.sum((alpha - gamma) * elog_theta))
    score += float(np.sum(gammaln(gamma) - gammaln(alpha)))
    score += float(np.sum(gammaln(alpha * k) - gammaln(np.sum(gamma, axis=1))))
    return score


def topic_bound(lam: np.ndarray, elog_beta: np.ndarray, eta: float) -> float:
    m = lam.shape[1]
    score = float(np.sum((eta - lam) * elog_beta))
    score += float(np.sum(gammaln(lam) - gammaln(eta)))
    score += float(np.sum(gammaln(eta * m) - gammaln(np.sum(lam, axis=1))))
    return score


@dataclass
class _VbResult:
    lam: np.ndarray
    elbo_trace: list[float]


def run_online_vb(
    x: sparse.csr_matrix,
    k: int,
    alpha: float,
    eta: float,
    settings: VbSettings,
    rng: np.random.Generator,
) -> _VbResult:
    """Fit the topic-label variational parameter on the rows of ``x``.

    Each pass visits the documents in a fresh random order in mini-batches.
    Document gammas are warm-started from the previous pass.
    """
    n_docs, m = x.shape
    lam = rng.gamma(100.0, 1.0 / 100.0, (k, m))
    gamma_cache = _initial_gamma(x, k, alpha)
    trace: list[float] = []
    t = 0
    for pass_no in range(settings.passes):
        order = rng.permutation(n_docs)
        for start in range(0, n_docs, settings.batch_size):
            idx = np.sort(order[start : start + settings.batch_size])
            xb = x[idx]
            exp_elog_beta = np.exp(dirichlet_expectation(lam))
            gamma, sstats = e_step(
                xb, exp_elog_beta, alpha, gamma_cache[idx], settings.doc_update_iters, settings.doc_convergence_tol
            )
            gamma_cache[idx] = gamma
            t += 1
            rho = settings.step_size(t)
            scale = n_docs / len(idx)
            lam = (1.0 - rho) * lam + rho * (eta + scale * sstats)
            elog_beta = dirichlet_expectation(lam)
            elbo = scale * document_bound(xb, gamma, elog_beta, alpha) + topic_bound(lam, elog_beta, eta)
            trace.append(elbo)
        logger.debug("pass %d: elbo %.6g", pass_no + 1, trace[-1])
    return _VbResult(lam, trace)


def infer_gamma(x: sparse.csr_matrix, lam: np.ndarray, alpha: float, settings: VbSettings) -> np.ndarray:
    """Document gammas for fixed topics, from the standard cold start."""
    k = lam.shape[0]
    exp_elog_beta = np.exp(dirichlet_expectation(lam))
    gamma, _ = e_step(
        x, exp_elog_beta, alpha, _initial_gamma(x, k, alpha), settings.doc_update_iters, settings.doc_convergence_tol
    )
    return gamma


def _normalize(a: np.ndarray) -> np.ndarray:
    return a / a.sum(axis=1, keepdims=True)


def fit_vb(matrix: ImageLabelMatrix, config: LdaConfig) -> TopicModel:
    """Fit LDA by online variational Bayes.

    ``theta`` is read off a final per-document pass against the fitted topics,
    so projecting the training matrix again reproduces it.
    """
    x = _check_matrix(matrix)
    rng = substream(config.seed, "fit-vb")
    result = run_online_vb(x, config.k, config.alpha, config.beta, config.vb, rng)
    gamma = infer_gamma(x, result.lam, config.alpha, config.vb)
    return TopicModel(
        phi=_normalize(result.lam),
        theta=_normalize(gamma),
        topic_word_params=result.lam,
        config=config,
        words=tuple(matrix.vocab.rendered()),
        vocab_digest=matrix.vocab.digest(),
        weighting=matrix.mode.value,
        method="vb",
        elbo_trace=result.elbo_trace,
    )


def project(model: TopicModel, matrix: ImageLabelMatrix) -> np.ndarray:
    """Topic mixtures of the matrix rows with the model's topics held fixed."""
    if matrix.vocab.digest() != model.vocab_digest:
        raise VocabularyMismatch("matrix columns do not match the model vocabulary")
    x = matrix.data
    if x.nnz and not np.all(np.isfinite(x.data)):
        raise NonFiniteWeight("matrix contains NaN or infinite weights")
    gamma = infer_gamma(x, model.topic_word_params, model.config.alpha, model.config.vb)
    return _normalize(gamma)


@dataclass(frozen=True)
class LikelihoodRow:
    k: int
    per_token: float
    held_out_docs: int
    held_out_weight: float


def log_likelihood_report(
    matrix: ImageLabelMatrix, config: LdaConfig, k_values: Sequence[int], held_out: float = 0.1
) -> list[LikelihoodRow]:
    """Held-out per-token variational bound for each topic count.

    A seeded split keeps ``held_out`` of the images aside; each K is fitted on
    the rest. ``alpha`` follows ``50 / K`` when the config uses the default,
    otherwise it stays fixed. K = 1 (a single shared label distribution) is
    accepted as a baseline.
    """
    x = _check_matrix(matrix)
    ks = sorted(set(int(k) for k in k_values))
    if not ks:
        raise UserError("no topic counts given")
    if ks[0] < 1:
        raise UserError("topic counts must be >= 1")
    n_docs = x.shape[0]
    if n_docs < 2:
        raise EmptyCorpus("need at least two images to hold some out")
    perm = substream(config.seed, "holdout").permutation(n_docs)
    n_test = min(n_docs - 1, max(1, int(round(held_out * n_docs))))
    test, train = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    x_train, x_test = x[train], x[test]
    test_weight = float(x_test.sum())
    if test_weight <= 0:
        raise EmptyCorpus("held-out images carry no label weight")
    if x_train.nnz == 0:
        raise EmptyCorpus("training images carry no label weight")
    rows = []
    for k in ks:
        alpha = 50.0 / k if config.default_alpha else config.alpha
        fitted = run_online_vb(x_train, k, alpha, config.beta, config.vb, substream(config.seed, f"likelihood-{k}"))
        gamma = infer_gamma(x_test, fitted.lam, alpha, config.vb)
        bound = document_bound(x_test, gamma, dirichlet_expectation(fitted.lam), alpha)
        rows.append(LikelihoodRow(k, bound / test_weight, len(test), test_weight))
    return rows
