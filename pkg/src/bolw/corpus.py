"""Label records, the unified label vocabulary and Bag-of-Label-Words vectors.

Images arrive as JSON lines, one per image, carrying the labels returned by
two labeling services. Labels from the two services are kept apart by
prefixing the service name, so ``LS1: car`` and ``LS2: Car`` are different
vocabulary entries.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import logging
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    AllWordsFiltered,
    DataError,
    DuplicateImageId,
    EmptyCorpus,
    IndexOutOfRange,
    MalformedRecord,
    UnknownCamera,
    UserError,
)

logger = logging.getLogger(__name__)

DEFAULT_BLACKLIST = ("massachusetts department of transportation",)
DEFAULT_CUTOFF = 1e-5

CORPUS_FORMAT = "bolw-corpus"
CORPUS_VERSION = 1


class Service(str, enum.Enum):
    LS1 = "LS1"
    LS2 = "LS2"


@dataclass(frozen=True, order=True)
class LabelWord:
    service: Service
    text: str

    def __post_init__(self):
        object.__setattr__(self, "service", Service(self.service))
        text = self.text.strip()
        if not text:
            raise ValueError("label text is empty")
        object.__setattr__(self, "text", text)

    def __str__(self):
        return f"{self.service.value}: {self.text}"

    @classmethod
    def parse(cls, rendered: str) -> LabelWord:
        """Inverse of ``str(word)``, e.g. ``LabelWord.parse("LS1: snow")``."""
        service, sep, text = rendered.partition(":")
        if not sep:
            raise ValueError(f"not a rendered label word: {rendered!r}")
        try:
            return cls(Service(service.strip()), text)
        except ValueError as exc:
            raise ValueError(f"not a rendered label word: {rendered!r}") from exc


_FRACTION = re.compile(r"(?<=:\d\d)\.\d+")


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime, second resolution.

    Naive timestamps are taken to be UTC already.
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # sub-second digits are dropped anyway; fromisoformat only takes 3 or 6 of them
    text = _FRACTION.sub("", text)
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class RowMeta(NamedTuple):
    image_id: str
    camera: str
    timestamp: datetime


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    camera: str
    timestamp: datetime
    raw_labels: tuple[tuple[LabelWord, float], ...] = ()

    @property
    def meta(self) -> RowMeta:
        return RowMeta(self.image_id, self.camera, self.timestamp)

    def words(self) -> list[LabelWord]:
        return [word for word, _ in self.raw_labels]


def _collapse_labels(pairs: Iterable[tuple[LabelWord, float]]) -> tuple[tuple[LabelWord, float], ...]:
    # first-seen order, max score per word
    best: dict[LabelWord, float] = {}
    for word, score in pairs:
        if word not in best or score > best[word]:
            best[word] = score
    return tuple(best.items())


def _parse_record(obj, lineno: int) -> ImageRecord:
    if not isinstance(obj, dict):
        raise MalformedRecord(lineno, "record is not a JSON object")
    for key in ("image_id", "camera", "timestamp", "labels"):
        if key not in obj:
            raise MalformedRecord(lineno, f"missing field {key!r}")
    image_id, camera = obj["image_id"], obj["camera"]
    if not isinstance(image_id, str) or not image_id:
        raise MalformedRecord(lineno, "image_id must be a non-empty string")
    if not isinstance(camera, str) or not camera:
        raise MalformedRecord(lineno, "camera must be a non-empty string")
    try:
        timestamp = parse_timestamp(obj["timestamp"])
    except (TypeError, ValueError, AttributeError):
        raise MalformedRecord(lineno, f"bad timestamp {obj['timestamp']!r}") from None
    labels = obj["labels"]
    if not isinstance(labels, list):
        raise MalformedRecord(lineno, "labels must be an array")
    pairs = []
    for k, item in enumerate(labels):
        if not isinstance(item, dict):
            raise MalformedRecord(lineno, f"label {k} is not an object")
        try:
            word = LabelWord(item["service"], item["text"])
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise MalformedRecord(lineno, f"label {k}: bad service or text ({exc})") from None
        score = item.get("score")
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise MalformedRecord(lineno, f"label {k}: score must be a number")
        if not math.isfinite(score) or score < 0:
            raise MalformedRecord(lineno, f"label {k}: score must be finite and >= 0")
        pairs.append((word, float(score)))
    return ImageRecord(image_id, camera, timestamp, _collapse_labels(pairs))


def ingest(path, *, strict: bool = True, report: list | None = None) -> list[ImageRecord]:
    """Read a label-record file (one JSON object per line).

    With ``strict`` the first bad line raises. Otherwise bad lines are skipped
    and appended to ``report`` when a list is given.
    """
    path = Path(path)
    records: list[ImageRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(lineno, f"invalid JSON ({exc.msg})") from None
                record = _parse_record(obj, lineno)
                if record.image_id in seen:
                    raise DuplicateImageId(record.image_id, lineno)
            except DataError as exc:
                if strict:
                    raise
                logger.info("skipping %s: %s", path, exc)
                if report is not None:
                    report.append(exc)
                continue
            seen.add(record.image_id)
            records.append(record)
    return records


def binarize(records: Sequence[ImageRecord]) -> list[ImageRecord]:
    """Map every positive score to 1 and drop zero-score labels."""
    out = []
    for rec in records:
        labels = tuple((word, 1.0) for word, score in rec.raw_labels if score > 0)
        out.append(ImageRecord(rec.image_id, rec.camera, rec.timestamp, labels))
    return out


def _blacklisted(word: LabelWord, patterns: Sequence[str]) -> bool:
    rendered = str(word).casefold()
    return any(p.casefold() in rendered for p in patterns)


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Ordered label words plus their document counts.

    Indices are 0-based positions in ``words``; words are kept sorted by their
    rendered form. ``camera_doc_count`` has one row per word and one column per
    camera in ``cameras`` (sorted).
    """

    words: tuple[LabelWord, ...]
    doc_count: np.ndarray
    cameras: tuple[str, ...]
    camera_doc_count: np.ndarray
    camera_images: Mapping[str, int]
    total_images: int
    _index: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        rendered = [str(w) for w in self.words]
        if rendered != sorted(rendered) or len(set(rendered)) != len(rendered):
            raise ValueError("vocabulary words must be unique and sorted")
        doc_count = np.asarray(self.doc_count, dtype=np.int64)
        cam_count = np.asarray(self.camera_doc_count, dtype=np.int64).reshape(len(rendered), len(self.cameras))
        doc_count.setflags(write=False)
        cam_count.setflags(write=False)
        object.__setattr__(self, "doc_count", doc_count)
        object.__setattr__(self, "camera_doc_count", cam_count)
        object.__setattr__(self, "camera_images", MappingProxyType(dict(self.camera_images)))
        object.__setattr__(self, "_index", MappingProxyType({r: j for j, r in enumerate(rendered)}))

    def __len__(self):
        return len(self.words)

    def __contains__(self, word) -> bool:
        return str(word) in self._index

    def index(self, word) -> int:
        """Index of a word given as :class:`LabelWord` or rendered string."""
        try:
            return self._index[str(word)]
        except KeyError:
            raise IndexOutOfRange(f"{str(word)!r} is not in the vocabulary") from None

    def check_index(self, j: int) -> int:
        if isinstance(j, bool) or not isinstance(j, (int, np.integer)) or not 0 <= j < len(self.words):
            raise IndexOutOfRange(f"word index {j!r} outside [0, {len(self.words)})")
        return int(j)

    def camera_column(self, camera: str) -> int:
        try:
            return self.cameras.index(camera)
        except ValueError:
            raise UnknownCamera(f"unknown camera {camera!r}") from None

    def per_camera_doc_count(self, j: int, camera: str) -> int:
        return int(self.camera_doc_count[self.check_index(j), self.camera_column(camera)])

    def rendered(self) -> list[str]:
        return [str(w) for w in self.words]

    def digest(self) -> str:
        """SHA-256 over the rendered words; identifies column layout."""
        return hashlib.sha256("\n".join(self.rendered()).encode("utf-8")).hexdigest()

    def subset(self, keep: Sequence[int]) -> Vocabulary:
        keep = sorted(keep)
        return Vocabulary(
            words=tuple(self.words[j] for j in keep),
            doc_count=self.doc_count[keep],
            cameras=self.cameras,
            camera_doc_count=self.camera_doc_count[keep],
            camera_images=self.camera_images,
            total_images=self.total_images,
        )

    @classmethod
    def from_bags(cls, words: Sequence[LabelWord], bags: Sequence[BagOfLabelWords], rows: Sequence[RowMeta]) -> Vocabulary:
        """Recount document frequencies for a fixed word list over bags."""
        if len(bags) != len(rows):
            raise ValueError("bags and rows differ in length")
        cameras = tuple(sorted({r.camera for r in rows}))
        col = {c: k for k, c in enumerate(cameras)}
        counts = np.zeros((len(words), len(cameras)), dtype=np.int64)
        for bag, row in zip(bags, rows):
            for j, value in bag.entries.items():
                if value > 0:
                    counts[j, col[row.camera]] += 1
        return cls(
            words=tuple(words),
            doc_count=counts.sum(axis=1),
            cameras=cameras,
            camera_doc_count=counts,
            camera_images=Counter(r.camera for r in rows),
            total_images=len(rows),
        )


def build_vocabulary(records: Sequence[ImageRecord], blacklist: Sequence[str] = DEFAULT_BLACKLIST) -> Vocabulary:
    """Collect every non-blacklisted word with global and per-camera counts."""
    if not records:
        raise EmptyCorpus("cannot build a vocabulary from zero records")
    per_word: dict[LabelWord, Counter] = defaultdict(Counter)
    for rec in records:
        for word, score in rec.raw_labels:
            if score > 0 and not _blacklisted(word, blacklist):
                per_word[word][rec.camera] += 1
    cameras = tuple(sorted({r.camera for r in records}))
    words = sorted(per_word, key=str)
    counts = np.array([[per_word[w][c] for c in cameras] for w in words], dtype=np.int64)
    counts = counts.reshape(len(words), len(cameras))
    return Vocabulary(
        words=tuple(words),
        doc_count=counts.sum(axis=1),
        cameras=cameras,
        camera_doc_count=counts,
        camera_images=Counter(r.camera for r in records),
        total_images=len(records),
    )


def document_frequency(vocab: Vocabulary, j: int) -> float:
    """Fraction of all images that carry word ``j``."""
    j = vocab.check_index(j)
    return int(vocab.doc_count[j]) / vocab.total_images


def frequency_filter(vocab: Vocabulary, cutoff: float) -> Vocabulary:
    """Keep words whose document frequency is at least ``cutoff``."""
    if not 0.0 <= cutoff <= 1.0:
        raise UserError(f"cutoff {cutoff} outside [0, 1]")
    # isclose: cutoff * N can land one ulp above an integer n_j
    threshold = cutoff * vocab.total_images
    keep = [j for j, n in enumerate(vocab.doc_count) if n >= threshold or math.isclose(n, threshold)]
    if not keep:
        raise AllWordsFiltered(f"no word reaches document frequency {cutoff}")
    return vocab.subset(keep)


@dataclass(frozen=True)
class BagOfLabelWords:
    """Sparse non-negative label vector; ``weight`` is its L1 norm."""

    entries: Mapping[int, float] = field(default_factory=dict)
    weight: float = field(init=False)

    def __post_init__(self):
        entries = {int(j): float(v) for j, v in sorted(self.entries.items()) if v != 0}
        if any(v < 0 or not math.isfinite(v) for v in entries.values()):
            raise ValueError("bag weights must be finite and non-negative")
        object.__setattr__(self, "entries", MappingProxyType(entries))
        object.__setattr__(self, "weight", math.fsum(entries.values()))

    def __len__(self):
        return len(self.entries)


def to_bags(records: Sequence[ImageRecord], vocab: Vocabulary) -> list[BagOfLabelWords]:
    bags = []
    for rec in records:
        entries = {}
        for word, score in rec.raw_labels:
            if score > 0 and word in vocab:
                entries[vocab.index(word)] = 1.0
        bags.append(BagOfLabelWords(entries))
    return bags


@dataclass(frozen=True)
class Corpus:
    """Cleaned corpus: vocabulary, one bag per image, row metadata."""

    vocab: Vocabulary
    bags: tuple[BagOfLabelWords, ...]
    rows: tuple[RowMeta, ...]

    def __len__(self):
        return len(self.rows)


def build_corpus(
    records: Sequence[ImageRecord],
    *,
    blacklist: Sequence[str] = DEFAULT_BLACKLIST,
    cutoff: float = DEFAULT_CUTOFF,
) -> Corpus:
    """Binarize, build the vocabulary, filter by frequency and bag the records."""
    records = binarize(records)
    vocab = frequency_filter(build_vocabulary(records, blacklist), cutoff)
    return Corpus(vocab, tuple(to_bags(records, vocab)), tuple(r.meta for r in records))


def save_corpus(corpus: Corpus, path) -> None:
    """Write the corpus artifact: JSON, 1-based word indices, sorted keys."""
    payload = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "vocabulary": corpus.vocab.rendered(),
        "vocabulary_sha256": corpus.vocab.digest(),
        "images": [
            {
                "image_id": row.image_id,
                "camera": row.camera,
                "timestamp": format_timestamp(row.timestamp),
                "bag": [[j + 1, v] for j, v in bag.entries.items()],
            }
            for bag, row in zip(corpus.bags, corpus.rows)
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_corpus(path) -> Corpus:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a corpus artifact ({exc.msg})") from None
    if payload.get("format") != CORPUS_FORMAT or payload.get("version") != CORPUS_VERSION:
        raise DataError(f"{path}: unsupported corpus artifact")
    words = [LabelWord.parse(r) for r in payload["vocabulary"]]
    rows, bags = [], []
    for item in payload["images"]:
        rows.append(RowMeta(item["image_id"], item["camera"], parse_timestamp(item["timestamp"])))
        bags.append(BagOfLabelWords({j - 1: v for j, v in item["bag"]}))
    vocab = Vocabulary.from_bags(words, bags, rows)
    if vocab.digest() != payload.get("vocabulary_sha256"):
        raise DataError(f"{path}: vocabulary hash mismatch")
    return Corpus(vocab, tuple(bags), tuple(rows))


def write_vocabulary_csv(vocab: Vocabulary, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "service", "text", "n_j", "f_j"])
        for j, word in enumerate(vocab.words):
            writer.writerow([j + 1, word.service.value, word.text, int(vocab.doc_count[j]), repr(document_frequency(vocab, j))])
