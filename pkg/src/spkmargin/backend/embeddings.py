"""Embedding sets and their on-disk form (SPKF archives with one frame per utterance)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.errors import DataFormatError, DimensionError
from ..dataio.archive import FeatureArchive, Utterance, read_archive, write_archive
from ..numeric import Matrix, as_matrix


@dataclass(slots=True, eq=False)
class EmbeddingSet:
    ids: list[str]
    vectors: Matrix
    labels: list[str] | None = None
    processed: bool = False
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.vectors = as_matrix(self.vectors, name="embeddings")
        if len(self.ids) != self.vectors.shape[0]:
            raise DimensionError(f"{len(self.ids)} ids for {self.vectors.shape[0]} embedding rows")
        if self.labels is not None and len(self.labels) != len(self.ids):
            raise DimensionError(f"{len(self.labels)} labels for {len(self.ids)} embeddings")
        self._index = {}
        for row, utt_id in enumerate(self.ids):
            if utt_id in self._index:
                raise DataFormatError(f"duplicate embedding id {utt_id!r}")
            self._index[utt_id] = row

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, utt_id: object) -> bool:
        return utt_id in self._index

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def vector(self, utt_id: str) -> NDArray[np.float64]:
        return self.vectors[self._index[utt_id]]

    def label_indices(self) -> NDArray[np.int64]:
        if self.labels is None:
            raise DataFormatError("embedding set carries no speaker labels")
        _, inverse = np.unique(np.asarray(self.labels), return_inverse=True)
        return inverse.astype(np.int64)

    def speaker_mean(self, speaker: str) -> NDArray[np.float64] | None:
        """Average of every embedding labelled *speaker*, or ``None``."""

        if self.labels is None:
            return None
        rows = [row for row, label in enumerate(self.labels) if label == speaker]
        if not rows:
            return None
        return self.vectors[rows].mean(axis=0)

    def with_vectors(self, vectors: ArrayLike, *, processed: bool) -> EmbeddingSet:
        return EmbeddingSet(list(self.ids), as_matrix(vectors), self.labels, processed)


def embeddings_to_archive(embs: EmbeddingSet) -> FeatureArchive:
    labels = embs.labels or embs.ids
    return FeatureArchive(
        dim=embs.dim,
        utterances=[Utterance(u, s, v[None, :]) for u, s, v in zip(embs.ids, labels, embs.vectors, strict=True)],
    )


def embeddings_from_archive(archive: FeatureArchive) -> EmbeddingSet:
    rows = []
    for utt in archive.utterances:
        if utt.num_frames != 1:
            raise DataFormatError(f"embedding {utt.utt_id!r} has {utt.num_frames} frames, expected 1")
        rows.append(utt.frames[0])
    vectors = np.vstack(rows) if rows else np.zeros((0, archive.dim))
    return EmbeddingSet(
        [utt.utt_id for utt in archive.utterances],
        vectors,
        [utt.speaker_id for utt in archive.utterances],
    )


def write_embeddings(path: Path, embs: EmbeddingSet) -> Path:
    return write_archive(path, embeddings_to_archive(embs))


def read_embeddings(path: Path) -> EmbeddingSet:
    return embeddings_from_archive(read_archive(path))


__all__ = [
    "EmbeddingSet",
    "embeddings_from_archive",
    "embeddings_to_archive",
    "read_embeddings",
    "write_embeddings",
]
