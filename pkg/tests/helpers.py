"""Shared builders for synthetic corpora and topic matching."""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import numpy as np

from bolw.corpus import BagOfLabelWords, ImageRecord, LabelWord, RowMeta, Vocabulary
from bolw.weighting import build_matrix

T0 = datetime(2018, 1, 1, tzinfo=timezone.utc)


def word(rendered: str) -> LabelWord:
    return LabelWord.parse(rendered)


def record(image_id, camera, labels, ts=T0) -> ImageRecord:
    """``labels`` is a list of rendered words or ``(rendered, score)`` pairs."""
    pairs = []
    for item in labels:
        rendered, score = (item, 1.0) if isinstance(item, str) else item
        pairs.append((word(rendered), score))
    return ImageRecord(image_id, camera, ts, tuple(pairs))


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def json_record(image_id, camera="1137-1", ts="2018-01-04T16:57:52Z", labels=()):
    return {
        "image_id": image_id,
        "camera": camera,
        "timestamp": ts,
        "labels": [{"service": s, "text": t, "score": v} for s, t, v in labels],
    }


def synthetic_words(m: int) -> list[LabelWord]:
    return [LabelWord("LS1", f"w{j:03d}") for j in range(m)]


def matrix_from_bags(bags, words, mode="counts", cameras=("cam",), step=timedelta(minutes=5)):
    rows = [RowMeta(f"img{i}", cameras[i % len(cameras)], T0 + i * step) for i in range(len(bags))]
    vocab = Vocabulary.from_bags(words, bags, rows)
    return build_matrix(bags, rows, vocab, mode)


def bags_from_dense(counts) -> list[BagOfLabelWords]:
    return [BagOfLabelWords({int(j): float(v) for j, v in enumerate(row) if v}) for row in counts]


def greedy_match(truth: np.ndarray, fitted: np.ndarray) -> list[tuple[int, int, float]]:
    """Pair rows by repeatedly taking the highest remaining cosine similarity."""
    a = truth / np.linalg.norm(truth, axis=1, keepdims=True)
    b = fitted / np.linalg.norm(fitted, axis=1, keepdims=True)
    sim = a @ b.T
    pairs = sorted(((sim[i, j], i, j) for i in range(len(a)) for j in range(len(b))), reverse=True)
    used_i, used_j, out = set(), set(), []
    for s, i, j in pairs:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        out.append((i, j, float(s)))
    return sorted(out)


def argmax_agreement(theta_a: np.ndarray, theta_b: np.ndarray) -> float:
    """Fraction of rows whose argmax topics agree under the best topic permutation."""
    from itertools import permutations

    k = theta_a.shape[1]
    ia, ib = theta_a.argmax(axis=1), theta_b.argmax(axis=1)
    return max(float(np.mean(np.array(perm)[ia] == ib)) for perm in permutations(range(k)))


def separable_corpus(n_images=50, labels_per_set=8, seed=0):
    """Binary bags, each image drawing only from one of two disjoint label sets."""
    rng = np.random.default_rng(seed)
    m = 2 * labels_per_set
    dense = np.zeros((n_images, m))
    side = np.arange(n_images) % 2
    for i in range(n_images):
        size = rng.integers(3, labels_per_set + 1)
        chosen = rng.choice(labels_per_set, size=size, replace=False) + side[i] * labels_per_set
        dense[i, chosen] = 1
    return bags_from_dense(dense), synthetic_words(m), side
