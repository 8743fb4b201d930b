"""SPKF feature archives: per-utterance frame matrices with speaker labels.

Layout (little-endian)::

    b"SPKF" | u32 version=1 | u32 dim | u64 count
    count × ( u16 len | utf-8 utt_id | u16 len | utf-8 speaker_id | u32 T | T×dim f32 )
"""

from __future__ import annotations

import struct
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from ..core.errors import DataFormatError, DimensionError
from ..core.logging import get_logger
from ..numeric import Matrix

MAGIC = b"SPKF"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIIQ")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_FRAME_DTYPE = np.dtype("<f4")

_logger = get_logger("dataio.archive")


@dataclass(slots=True, eq=False)
class Utterance:
    """One utterance; frames are held at the archive's float32 precision."""

    utt_id: str
    speaker_id: str
    frames: Matrix

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise DimensionError(f"utterance {self.utt_id!r}: frames must be T×D with T >= 1, got {frames.shape}")
        self.frames = frames.astype(np.float32).astype(np.float64)

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Utterance):
            return NotImplemented
        return (
            self.utt_id == other.utt_id
            and self.speaker_id == other.speaker_id
            and self.frames.shape == other.frames.shape
            and bool(np.array_equal(self.frames, other.frames))
        )


@dataclass(slots=True, eq=False)
class FeatureArchive:
    dim: int
    utterances: list[Utterance] = field(default_factory=list)
    speaker_index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionError(f"archive dim must be positive, got {self.dim}")
        seen: set[str] = set()
        for utt in self.utterances:
            if utt.frames.shape[1] != self.dim:
                raise DimensionError(
                    f"utterance {utt.utt_id!r} has {utt.frames.shape[1]} columns, archive dim is {self.dim}"
                )
            if utt.utt_id in seen:
                raise DataFormatError(f"duplicate utterance id {utt.utt_id!r}")
            seen.add(utt.utt_id)
        speakers = sorted({utt.speaker_id for utt in self.utterances})
        self.speaker_index = {speaker: index for index, speaker in enumerate(speakers)}

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureArchive):
            return NotImplemented
        return self.dim == other.dim and self.utterances == other.utterances

    @property
    def num_speakers(self) -> int:
        return len(self.speaker_index)

    def label_of(self, utt: Utterance) -> int:
        return self.speaker_index[utt.speaker_id]

    def labels(self) -> np.ndarray:
        return np.array([self.speaker_index[utt.speaker_id] for utt in self.utterances], dtype=np.int64)

    @classmethod
    def from_matrices(
        cls, dim: int, items: Iterable[tuple[str, str, ArrayLike]]
    ) -> FeatureArchive:
        return cls(dim=dim, utterances=[Utterance(u, s, np.asarray(f)) for u, s, f in items])


def _encode_id(value: str, what: str) -> bytes:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise DataFormatError(f"{what} {value[:32]!r}... is longer than 65535 bytes")
    return _U16.pack(len(raw)) + raw


def encode_archive(archive: FeatureArchive) -> bytes:
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, archive.dim, len(archive.utterances))]
    for utt in archive.utterances:
        chunks.append(_encode_id(utt.utt_id, "utterance id"))
        chunks.append(_encode_id(utt.speaker_id, "speaker id"))
        chunks.append(_U32.pack(utt.num_frames))
        chunks.append(np.ascontiguousarray(utt.frames, dtype=_FRAME_DTYPE).tobytes())
    return b"".join(chunks)


class _Cursor:
    def __init__(self, payload: bytes) -> None:
        self.payload = payload
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise DataFormatError(
                f"truncated record at byte {self.offset}: need {size} bytes for {what}, "
                f"{len(self.payload) - self.offset} left"
            )
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def text(self, what: str) -> str:
        start = self.offset
        (length,) = _U16.unpack(self.take(_U16.size, f"{what} length"))
        try:
            return self.take(length, what).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataFormatError(f"invalid UTF-8 in {what} at byte {start}") from exc


def decode_archive(payload: bytes, *, expected_dim: int | None = None) -> FeatureArchive:
    cursor = _Cursor(payload)
    magic, version, dim, count = _HEADER.unpack(cursor.take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r} at byte 0, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported format version {version} at byte 4")
    if dim < 1:
        raise DataFormatError(f"dim must be positive at byte 8, got {dim}")
    if expected_dim is not None and dim != expected_dim:
        raise DataFormatError(f"dim mismatch at byte 8: archive has {dim}, expected {expected_dim}")

    utterances: list[Utterance] = []
    for _ in range(count):
        record_start = cursor.offset
        utt_id = cursor.text("utterance id")
        speaker_id = cursor.text("speaker id")
        (num_frames,) = _U32.unpack(cursor.take(_U32.size, "frame count"))
        if num_frames < 1:
            raise DataFormatError(f"utterance {utt_id!r} at byte {record_start} has no frames")
        raw = cursor.take(num_frames * dim * _FRAME_DTYPE.itemsize, f"frames of {utt_id!r}")
        frames = np.frombuffer(raw, dtype=_FRAME_DTYPE).reshape(num_frames, dim)
        utterances.append(Utterance(utt_id, speaker_id, frames))
    if cursor.offset != len(payload):
        raise DataFormatError(f"trailing {len(payload) - cursor.offset} bytes at byte {cursor.offset}")
    try:
        return FeatureArchive(dim=dim, utterances=utterances)
    except DimensionError as exc:  # pragma: no cover - frames are reshaped to dim above
        raise DataFormatError(str(exc)) from exc


def write_archive(path: Path, archive: FeatureArchive) -> Path:
    payload = encode_archive(archive)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    _logger.debug("archive.written", file=str(path), utterances=len(archive), dim=archive.dim)
    return path


def read_archive(path: Path, *, expected_dim: int | None = None) -> FeatureArchive:
    archive = decode_archive(path.read_bytes(), expected_dim=expected_dim)
    _logger.debug("archive.read", file=str(path), utterances=len(archive), dim=archive.dim)
    return archive


__all__ = [
    "FORMAT_VERSION",
    "FeatureArchive",
    "MAGIC",
    "Utterance",
    "decode_archive",
    "encode_archive",
    "read_archive",
    "write_archive",
]
