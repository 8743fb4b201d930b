import hashlib
from pathlib import Path

import numpy as np
import pytest

from spkmargin.core.errors import DataFormatError, DimensionError
from spkmargin.dataio import FeatureArchive, Utterance, decode_archive, encode_archive, read_archive, write_archive
from spkmargin.numeric import Rng


def _random_archive(seed: int, count: int, dim: int = 6) -> FeatureArchive:
    rng = Rng(seed)
    items = []
    for index in range(count):
        frames = rng.normal((int(rng.integers(1, 20)), dim))
        items.append((f"utt{index:03d}", f"спк{index % 7}", frames))
    return FeatureArchive.from_matrices(dim, items)


def test_empty_archive_round_trips(tmp_path: Path) -> None:
    archive = FeatureArchive(dim=30)
    path = write_archive(tmp_path / "empty.spkf", archive)
    assert read_archive(path) == archive
    assert len(path.read_bytes()) == 20


def test_single_frame_round_trips_bit_exactly(tmp_path: Path) -> None:
    archive = FeatureArchive.from_matrices(3, [("u", "s", [[0.1, -2.5, 1e-30]])])
    loaded = read_archive(write_archive(tmp_path / "one.spkf", archive))
    assert loaded == archive
    assert loaded.utterances[0].frames.tobytes() == archive.utterances[0].frames.tobytes()


def test_random_archives_round_trip_and_hash_stable(tmp_path: Path) -> None:
    archive = _random_archive(11, 100)
    first = write_archive(tmp_path / "a.spkf", archive)
    second = write_archive(tmp_path / "b.spkf", archive)
    assert hashlib.sha256(first.read_bytes()).digest() == hashlib.sha256(second.read_bytes()).digest()
    assert read_archive(first) == archive


def test_speaker_index_is_dense_and_sorted() -> None:
    archive = FeatureArchive.from_matrices(2, [("a", "zed", [[0, 0]]), ("b", "amy", [[1, 1]]), ("c", "zed", [[2, 2]])])
    assert archive.speaker_index == {"amy": 0, "zed": 1}
    assert archive.labels().tolist() == [1, 0, 1]
    assert archive.num_speakers == 2


def test_duplicate_ids_and_wrong_width_are_rejected() -> None:
    with pytest.raises(DataFormatError, match="duplicate"):
        FeatureArchive.from_matrices(1, [("a", "s", [[0]]), ("a", "s", [[1]])])
    with pytest.raises(DimensionError):
        FeatureArchive.from_matrices(2, [("a", "s", [[0, 1, 2]])])
    with pytest.raises(DimensionError):
        Utterance("a", "s", np.zeros((0, 2)))


def test_bad_magic_names_offset() -> None:
    payload = bytearray(encode_archive(_random_archive(1, 2)))
    payload[:4] = b"XXXX"
    with pytest.raises(DataFormatError, match="byte 0"):
        decode_archive(bytes(payload))


def test_dim_mismatch_is_reported() -> None:
    payload = encode_archive(_random_archive(2, 2, dim=6))
    with pytest.raises(DataFormatError, match="byte 8"):
        decode_archive(payload, expected_dim=30)


def test_truncated_record_names_offset() -> None:
    payload = encode_archive(_random_archive(3, 3))
    with pytest.raises(DataFormatError, match="truncated record at byte"):
        decode_archive(payload[:-5])


def test_trailing_bytes_are_rejected() -> None:
    payload = encode_archive(_random_archive(4, 1))
    with pytest.raises(DataFormatError, match="trailing 2 bytes"):
        decode_archive(payload + b"\0\0")
