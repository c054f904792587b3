"""Fitted topic models, their file format and top-label reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import LabelWord
from ..errors import DataError
from .config import LdaConfig

MODEL_FORMAT = "bolw-topic-model"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class TopicModel:
    """Point estimates of a fitted K-topic model.

    ``phi`` is K x M (topic -> label distribution), ``theta`` is N x K (image ->
    topic distribution). ``topic_word_params`` is the Dirichlet parameter whose
    normalization gives ``phi``; projection of new images needs it.
    """

    phi: np.ndarray
    theta: np.ndarray
    topic_word_params: np.ndarray
    config: LdaConfig
    words: tuple[str, ...]
    vocab_digest: str
    weighting: str
    method: str = "vb"
    elbo_trace: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("phi", "theta", "topic_word_params"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "elbo_trace", tuple(float(x) for x in self.elbo_trace))

    @property
    def k(self) -> int:
        return self.phi.shape[0]


def _table(arr: np.ndarray) -> dict:
    return {"rows": int(arr.shape[0]), "cols": int(arr.shape[1]), "values": [float(x) for x in arr.ravel()]}


def _untable(obj: dict) -> np.ndarray:
    values = np.array(obj["values"], dtype=np.float64)
    if values.size != obj["rows"] * obj["cols"]:
        raise DataError("table size does not match its dimensions")
    return values.reshape(obj["rows"], obj["cols"])


def save_model(model: TopicModel, path) -> None:
    """Write a model as one JSON document; identical models give identical bytes."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "method": model.method,
        "weighting": model.weighting,
        "config": model.config.to_dict(),
        "vocabulary_sha256": model.vocab_digest,
        "vocabulary": list(model.words),
        "phi": _table(model.phi),
        "theta": _table(model.theta),
        "topic_word_params": _table(model.topic_word_params),
        "elbo_trace": list(model.elbo_trace),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> TopicModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model file ({exc.msg})") from None
    if payload.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a model file")
    if payload.get("version") != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {payload.get('version')!r}")
    return TopicModel(
        phi=_untable(payload["phi"]),
        theta=_untable(payload["theta"]),
        topic_word_params=_untable(payload["topic_word_params"]),
        config=LdaConfig.from_dict(payload["config"]),
        words=tuple(payload["vocabulary"]),
        vocab_digest=payload["vocabulary_sha256"],
        weighting=payload["weighting"],
        method=payload["method"],
        elbo_trace=payload["elbo_trace"],
    )


@dataclass(frozen=True)
class TopicLabels:
    topic: int
    labels: tuple[tuple[str, float], ...]
    name: str | None = None


@dataclass(frozen=True)
class TopicReport:
    topics: tuple[TopicLabels, ...]

    def named(self, names: dict[int, str]) -> TopicReport:
        """Attach human-chosen names, keyed by 0-based topic index."""
        return TopicReport(tuple(TopicLabels(t.topic, t.labels, names.get(t.topic, t.name)) for t in self.topics))


def top_labels(model: TopicModel, n: int) -> TopicReport:
    """The ``n`` most probable labels of every topic, ties by vocabulary order."""
    m = model.phi.shape[1]
    if not 1 <= n <= m:
        raise ValueError(f"n must lie in [1, {m}]")
    topics = []
    for z, row in enumerate(model.phi):
        order = np.lexsort((np.arange(m), -row))[:n]
        topics.append(TopicLabels(z, tuple((model.words[j], float(row[j])) for j in order)))
    return TopicReport(tuple(topics))


def write_report_csv(report: TopicReport, path) -> None:
    """CSV ``topic,rank,service,text,probability``; topic and rank count from 1."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["topic", "rank", "service", "text", "probability"])
        for entry in report.topics:
            for rank, (rendered, prob) in enumerate(entry.labels, start=1):
                word = LabelWord.parse(rendered)
                writer.writerow([entry.topic + 1, rank, word.service.value, word.text, repr(prob)])


def write_elbo_csv(trace: Sequence[float], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["update", "elbo"])
        for t, value in enumerate(trace, start=1):
            writer.writerow([t, repr(float(value))])
