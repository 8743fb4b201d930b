"""``extract``: embeddings for every utterance of an archive."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..backend import EmbeddingSet, embeddings_to_archive
from ..checkpoint import SpeakerModel, load_checkpoint
from ..core.errors import DimensionError
from ..core.logging import get_logger
from ..dataio import FeatureArchive, encode_archive, read_archive
from .common import json_bytes, log_written

_logger = get_logger("commands.extract")


@dataclass(slots=True)
class ExtractResult:
    embeddings: EmbeddingSet
    skipped: list[dict[str, Any]] = field(default_factory=list)


def skipped_report_path(out: Path) -> Path:
    return out.with_name(out.name + ".skipped.json")


def extract_embeddings(model: SpeakerModel, archive: FeatureArchive) -> ExtractResult:
    if archive.dim != model.net.cfg.feat_dim:
        raise DimensionError(
            f"archive dim {archive.dim} does not match the checkpoint's feat_dim {model.net.cfg.feat_dim}"
        )
    minimum = model.net.min_frames
    ids: list[str] = []
    labels: list[str] = []
    rows: list[np.ndarray] = []
    skipped: list[dict[str, Any]] = []
    for utt in archive:
        if utt.num_frames < minimum:
            _logger.warning("extract.skipped", utt_id=utt.utt_id, frames=utt.num_frames, minimum=minimum)
            skipped.append({"utt_id": utt.utt_id, "frames": utt.num_frames, "minimum": minimum})
            continue
        ids.append(utt.utt_id)
        labels.append(utt.speaker_id)
        rows.append(model.net.extract_embedding(utt.frames))
    vectors = np.vstack(rows) if rows else np.zeros((0, model.net.embedding_dim))
    return ExtractResult(EmbeddingSet(ids, vectors, labels), skipped)


def write_extract_result(out: Path, result: ExtractResult) -> None:
    payload = encode_archive(embeddings_to_archive(result.embeddings))
    sidecar = json_bytes({"skipped": result.skipped})
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    skipped_report_path(out).write_bytes(sidecar)
    log_written("embeddings", out, count=len(result.embeddings), skipped=len(result.skipped))


def cmd_extract(checkpoint: Path, archive_path: Path, out: Path) -> ExtractResult:
    model = load_checkpoint(checkpoint)
    result = extract_embeddings(model, read_archive(archive_path))
    write_extract_result(out, result)
    return result


__all__ = ["ExtractResult", "cmd_extract", "extract_embeddings", "skipped_report_path", "write_extract_result"]
