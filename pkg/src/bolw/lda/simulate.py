"""Draw synthetic Bag-of-Label-Words corpora from the LDA generative model."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from ..corpus import BagOfLabelWords
from ..errors import InvalidTargetWeight, UserError
from ..seeding import substream
from .config import LdaConfig


def sample_dirichlet(rng: np.random.Generator, alpha, size: tuple[int, ...]) -> np.ndarray:
    """Dirichlet draws from normalized Gamma variates, computed in log space.

    Uses Gamma(a) = Gamma(a + 1) * U**(1/a) so tiny concentrations do not
    underflow every component to zero.
    """
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), size)
    log_g = np.log(rng.standard_gamma(alpha + 1.0)) + np.log(rng.random(size)) / alpha
    log_g -= log_g.max(axis=-1, keepdims=True)
    g = np.exp(log_g)
    return g / g.sum(axis=-1, keepdims=True)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


class SimulatedCorpus(NamedTuple):
    bags: list[BagOfLabelWords]
    theta: np.ndarray
    phi: np.ndarray


def simulate_corpus(config: LdaConfig, target_weights: Sequence[float], vocab) -> SimulatedCorpus:
    """Generate one bag per target weight.

    Topic-label distributions are drawn once per topic and image-topic mixtures
    once per image. Each bag then receives labels, one topic draw followed by
    one label draw at a time, until its weight reaches the target rounded to
    the nearest integer. ``vocab`` only fixes the number of label words.
    """
    m = len(vocab)
    if m == 0:
        raise UserError("vocabulary is empty")
    sizes = []
    for w in target_weights:
        if not math.isfinite(w) or round_half_up(w) <= 0:
            raise InvalidTargetWeight(f"target weight {w!r} does not round to a positive integer")
        sizes.append(round_half_up(w))
    rng = substream(config.seed, "simulate")
    phi = sample_dirichlet(rng, config.beta, (config.k, m))
    theta = sample_dirichlet(rng, config.alpha, (len(sizes), config.k))
    bags = []
    for i, n in enumerate(sizes):
        # the sequential draws of a bag, grouped by topic
        per_topic = rng.multinomial(n, theta[i])
        counts = np.zeros(m, dtype=np.int64)
        for z in np.flatnonzero(per_topic):
            counts += rng.multinomial(per_topic[z], phi[z])
        bags.append(BagOfLabelWords({int(j): float(counts[j]) for j in np.flatnonzero(counts)}))
    return SimulatedCorpus(bags, theta, phi)
