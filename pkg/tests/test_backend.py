from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from structlog.testing import capture_logs

from spkmargin.backend import (
    EmbeddingSet,
    apply_backend,
    decode_backend,
    encode_backend,
    fit_backend,
    load_backend,
    read_embeddings,
    save_backend,
    score_trials,
    write_embeddings,
)
from spkmargin.core.errors import DataFormatError, DimensionError, UsageError
from spkmargin.dataio.trials import Trial, TrialLabel, TrialList
from spkmargin.domain.configs import BackendConfig

SPEAKERS = 20
PER_SPEAKER = 10
DIM = 16
CFG = BackendConfig(lda_dim=8, plda_iters=5)


def _embeddings(seed: int = 0, rotation: np.ndarray | None = None) -> EmbeddingSet:
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=2.0, size=(SPEAKERS, DIM))
    labels = np.repeat(np.arange(SPEAKERS), PER_SPEAKER)
    vectors = 3.0 + centers[labels] + rng.normal(size=(labels.size, DIM))
    if rotation is not None:
        vectors = vectors @ rotation.T
    ids = [f"s{label:02d}-u{i % PER_SPEAKER:02d}" for i, label in enumerate(labels)]
    return EmbeddingSet(ids, vectors, [f"s{label:02d}" for label in labels])


def _trials() -> TrialList:
    rows = []
    for spk in range(SPEAKERS):
        rows.append(Trial(f"s{spk:02d}-u00", f"s{spk:02d}-u01", TrialLabel.TARGET))
        rows.append(Trial(f"s{spk:02d}-u00", f"s{(spk + 1) % SPEAKERS:02d}-u02", TrialLabel.NONTARGET))
    return TrialList(rows)


def test_apply_backend_projects_and_length_normalizes() -> None:
    embs = _embeddings()
    model = fit_backend(embs, CFG)

    processed = apply_backend(model, embs)

    assert processed.processed
    assert processed.dim == 8
    assert processed.ids == embs.ids
    np.testing.assert_allclose(np.linalg.norm(processed.vectors, axis=1), 1.0, atol=1e-12)
    single = model.transform(embs.vectors[3:4])
    np.testing.assert_allclose(single[0], processed.vectors[3], rtol=1e-12, atol=1e-14)


def test_backend_refuses_processed_embeddings() -> None:
    embs = _embeddings()
    model = fit_backend(embs, CFG)
    processed = apply_backend(model, embs)

    with pytest.raises(UsageError, match="already"):
        apply_backend(model, processed)
    with pytest.raises(UsageError):
        fit_backend(processed, CFG)
    with pytest.raises(UsageError):
        score_trials(model, processed, _trials())


def test_lda_dim_is_capped_by_speaker_count() -> None:
    with capture_logs() as logs:
        model = fit_backend(_embeddings(), BackendConfig(lda_dim=128, plda_iters=2))

    assert model.dim == DIM
    assert any(entry["event"] == "backend.lda_capped" and entry["used"] == DIM for entry in logs)


def test_targets_score_higher_than_nontargets() -> None:
    embs = _embeddings()
    model = fit_backend(embs, CFG)
    trials = _trials()

    scores = score_trials(model, embs, trials)

    targets = scores[[trial.is_target for trial in trials]]
    nontargets = scores[[not trial.is_target for trial in trials]]
    assert targets.mean() > nontargets.mean()
    assert scores.shape == (len(trials),)


def test_speaker_enrollment_uses_the_mean_embedding() -> None:
    embs = _embeddings()
    model = fit_backend(embs, CFG)
    trials = TrialList([Trial("s04", "s04-u07", TrialLabel.TARGET)])

    score = score_trials(model, embs, trials)[0]

    mean = embs.speaker_mean("s04")
    assert mean is not None
    expected = model.plda.scorer().score_many(model.transform(mean[None, :]), model.transform(embs.vectors[47:48]))
    assert score == pytest.approx(float(expected[0]), rel=1e-12)


def test_missing_trial_ids_are_listed() -> None:
    embs = _embeddings()
    model = fit_backend(embs, CFG)
    trials = TrialList(
        [
            Trial("ghost-1", "s00-u01", TrialLabel.TARGET),
            Trial("s00-u00", "ghost-2", TrialLabel.NONTARGET),
        ]
    )

    with pytest.raises(DataFormatError, match="2 trial id.*ghost-1, ghost-2"):
        score_trials(model, embs, trials)


def test_scores_survive_a_rotation_of_the_embedding_space() -> None:
    rotation, _ = np.linalg.qr(np.random.default_rng(9).normal(size=(DIM, DIM)))
    plain = _embeddings(seed=1)
    rotated = _embeddings(seed=1, rotation=rotation)
    trials = _trials()

    plain_scores = score_trials(fit_backend(plain, CFG), plain, trials)
    rotated_scores = score_trials(fit_backend(rotated, CFG), rotated, trials)

    np.testing.assert_allclose(rotated_scores, plain_scores, rtol=1e-6, atol=1e-6)


def test_backend_binary_round_trip(tmp_path: Path) -> None:
    embs = _embeddings()
    model = fit_backend(embs, CFG)

    path = save_backend(tmp_path / "backend.bin", model)
    loaded = load_backend(path)

    assert encode_backend(loaded) == encode_backend(model)
    np.testing.assert_array_equal(score_trials(loaded, embs, _trials()), score_trials(model, embs, _trials()))


def test_backend_decode_errors() -> None:
    payload = encode_backend(fit_backend(_embeddings(), CFG))

    with pytest.raises(DataFormatError, match="bad magic"):
        decode_backend(b"XXXX" + payload[4:])
    with pytest.raises(DataFormatError, match="truncated back-end blob"):
        decode_backend(payload[:-8])
    with pytest.raises(DataFormatError, match="trailing 4 bytes"):
        decode_backend(payload + b"\0" * 4)
    with pytest.raises(DataFormatError, match="truncated"):
        decode_backend(payload[:10])


def test_backend_rejects_wrong_embedding_dim() -> None:
    model = fit_backend(_embeddings(), CFG)

    with pytest.raises(DimensionError):
        model.transform(np.zeros((2, DIM + 1)))


def test_embedding_set_validation() -> None:
    with pytest.raises(DataFormatError, match="duplicate embedding id 'a'"):
        EmbeddingSet(["a", "a"], np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        EmbeddingSet(["a", "b"], np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        EmbeddingSet(["a", "b"], np.zeros((2, 3)), ["x"])


def test_embeddings_archive_round_trip(tmp_path: Path) -> None:
    embs = _embeddings()

    loaded = read_embeddings(write_embeddings(tmp_path / "emb.spkf", embs))

    assert loaded.ids == embs.ids
    assert loaded.labels == embs.labels
    np.testing.assert_allclose(loaded.vectors, embs.vectors, rtol=1e-6)
