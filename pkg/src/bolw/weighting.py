"""tf, idf variants and the sparse image-label matrix."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .corpus import BagOfLabelWords, Corpus, RowMeta, Vocabulary, format_timestamp
from .errors import IndexOutOfRange, LengthMismatch, UserError


class WeightingMode(str, enum.Enum):
    BINARY = "binary"
    PER_CAMERA_TFIDF = "per-camera-tf-idf"
    GLOBAL_TFIDF = "global-tf-idf"
    # raw bag weights, for simulated corpora where a label can be drawn twice
    COUNTS = "counts"


def tf(bag: BagOfLabelWords, j: int, vocab: Vocabulary | None = None) -> int:
    """1 if the bag carries word ``j``, else 0. Pass ``vocab`` to range-check ``j``."""
    if vocab is not None:
        j = vocab.check_index(j)
    elif j < 0:
        raise IndexOutOfRange(f"word index {j} is negative")
    return 1 if bag.entries.get(j, 0.0) > 0 else 0


def per_camera_idf(vocab: Vocabulary, j: int, camera: str) -> float:
    """``log(N_c / n_j)`` with the camera's image count and the global count.

    Negative whenever the word is globally more common than the camera has
    images. The sign is kept here; :func:`build_matrix` clamps it.
    """
    j = vocab.check_index(j)
    vocab.camera_column(camera)
    n_j = int(vocab.doc_count[j])
    if n_j == 0:
        return math.inf
    return math.log(vocab.camera_images[camera] / n_j)


def global_idf(vocab: Vocabulary, j: int) -> float:
    j = vocab.check_index(j)
    n_j = int(vocab.doc_count[j])
    if n_j == 0:
        return math.inf
    return math.log(vocab.total_images / n_j)


def _idf_table(vocab: Vocabulary, mode: WeightingMode) -> np.ndarray:
    """Per (word, camera) multiplier, clamped at zero.

    Built with :func:`math.log` so entries equal the scalar idf functions bit for bit.
    """
    if mode is WeightingMode.PER_CAMERA_TFIDF:
        sizes = [vocab.camera_images[c] for c in vocab.cameras]
    else:
        sizes = [vocab.total_images] * len(vocab.cameras)
    table = np.zeros((len(vocab), len(sizes)))
    for j, n_j in enumerate(vocab.doc_count.tolist()):
        if n_j == 0:
            table[j] = math.inf
            continue
        for c, size in enumerate(sizes):
            table[j, c] = max(0.0, math.log(size / n_j))
    return table


@dataclass(frozen=True, eq=False)
class ImageLabelMatrix:
    """N x M sparse matrix of label weights, one row per image.

    ``data`` is CSR with sorted column indices and no stored zeros.
    """

    data: sparse.csr_matrix
    rows: tuple[RowMeta, ...]
    vocab: Vocabulary
    mode: WeightingMode

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __len__(self):
        return self.data.shape[0]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        start, stop = self.data.indptr[i], self.data.indptr[i + 1]
        return self.data.indices[start:stop], self.data.data[start:stop]

    def row_weights(self) -> np.ndarray:
        return np.asarray(self.data.sum(axis=1)).ravel()

    def is_integral(self) -> bool:
        values = self.data.data
        return bool(np.all(values >= 0) and np.all(values == np.round(values)))

    def take(self, rows: Sequence[int]) -> ImageLabelMatrix:
        rows = list(rows)
        return ImageLabelMatrix(self.data[rows], tuple(self.rows[i] for i in rows), self.vocab, self.mode)


def build_matrix(
    bags: Sequence[BagOfLabelWords],
    row_meta: Sequence[RowMeta],
    vocab: Vocabulary,
    mode: WeightingMode | str = WeightingMode.PER_CAMERA_TFIDF,
) -> ImageLabelMatrix:
    mode = WeightingMode(mode)
    if len(bags) != len(row_meta):
        raise LengthMismatch(f"{len(bags)} bags but {len(row_meta)} metadata rows")
    m = len(vocab)
    table = None if mode in (WeightingMode.BINARY, WeightingMode.COUNTS) else _idf_table(vocab, mode)
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    for bag, meta in zip(bags, row_meta):
        cols = [j for j, v in bag.entries.items() if v > 0]
        if cols and (cols[0] < 0 or cols[-1] >= m):
            raise UserError(f"image {meta.image_id}: word index outside vocabulary")
        if mode is WeightingMode.COUNTS:
            vals = [bag.entries[j] for j in cols]
        elif mode is WeightingMode.BINARY:
            vals = [1.0] * len(cols)
        else:
            col = vocab.camera_column(meta.camera)
            vals = [float(table[j, col]) for j in cols]
        for j, v in zip(cols, vals):
            if v != 0.0:
                indices.append(j)
                values.append(v)
        indptr.append(len(indices))
    data = sparse.csr_matrix(
        (np.array(values, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(bags), m),
    )
    data.has_sorted_indices = True
    return ImageLabelMatrix(data, tuple(row_meta), vocab, mode)


def corpus_matrix(corpus: Corpus, mode: WeightingMode | str = WeightingMode.PER_CAMERA_TFIDF) -> ImageLabelMatrix:
    return build_matrix(corpus.bags, corpus.rows, corpus.vocab, mode)


def label_column_series(matrix: ImageLabelMatrix, j: int) -> dict[str, list[tuple]]:
    """Per camera, ``(timestamp, weight)`` for every row, zeros included, in time order."""
    j = matrix.vocab.check_index(j)
    column = matrix.data.getcol(j).toarray().ravel()
    out: dict[str, list[tuple]] = {}
    for i, meta in enumerate(matrix.rows):
        out.setdefault(meta.camera, []).append((meta.timestamp, float(column[i])))
    return {cam: sorted(points, key=lambda p: p[0]) for cam, points in sorted(out.items())}


def write_matrix(matrix: ImageLabelMatrix, path, rows_path=None) -> None:
    """Coordinate text export (``i j value``, 1-based) plus row-metadata CSV."""
    path = Path(path)
    coo = matrix.data.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with path.open("w", encoding="utf-8") as fh:
        for k in order:
            fh.write(f"{coo.row[k] + 1} {coo.col[k] + 1} {float(coo.data[k])!r}\n")
    rows_path = Path(rows_path) if rows_path is not None else path.with_suffix(".rows.csv")
    with rows_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "image_id", "camera", "timestamp"])
        for i, meta in enumerate(matrix.rows, start=1):
            writer.writerow([i, meta.image_id, meta.camera, format_timestamp(meta.timestamp)])


def read_matrix_entries(path) -> dict[tuple[int, int], float]:
    """Read a coordinate export back as ``{(i, j): value}`` with 0-based keys."""
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            i, j, v = line.split()
            entries[int(i) - 1, int(j) - 1] = float(v)
    return entries
