"""Text trial lists (``enroll_id test_id target|nontarget``) and score files."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

from ..core.errors import DataFormatError, DomainError
from ..numeric import Rng
from .archive import FeatureArchive


class TrialLabel(StrEnum):
    TARGET = "target"
    NONTARGET = "nontarget"


@dataclass(frozen=True, slots=True)
class Trial:
    enroll_id: str
    test_id: str
    label: TrialLabel

    @property
    def key(self) -> tuple[str, str]:
        return self.enroll_id, self.test_id

    @property
    def is_target(self) -> bool:
        return self.label is TrialLabel.TARGET


@dataclass(slots=True)
class TrialList:
    trials: list[Trial] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self) -> Iterator[Trial]:
        return iter(self.trials)

    @property
    def n_target(self) -> int:
        return sum(1 for trial in self.trials if trial.is_target)

    @property
    def n_nontarget(self) -> int:
        return len(self.trials) - self.n_target


def parse_trials_text(text: str, *, source: str = "<trials>") -> TrialList:
    trials: list[Trial] = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataFormatError(f"{source}:{number}: expected 3 fields, got {len(parts)}")
        enroll_id, test_id, token = parts
        try:
            label = TrialLabel(token)
        except ValueError as exc:
            raise DataFormatError(
                f"{source}:{number}: unknown label {token!r}, expected target or nontarget"
            ) from exc
        trials.append(Trial(enroll_id, test_id, label))
    return TrialList(trials)


def _read_utf8_text(path: Path) -> str:
    try:
        return path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path}: invalid UTF-8 at byte {exc.start}") from exc


def parse_trials(path: Path) -> TrialList:
    return parse_trials_text(_read_utf8_text(path), source=str(path))


def format_trials(trials: TrialList) -> str:
    return "".join(f"{t.enroll_id} {t.test_id} {t.label.value}\n" for t in trials.trials)


def write_trials(path: Path, trials: TrialList) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_trials(trials), encoding="utf-8")
    return path


def generate_trials(
    archive: FeatureArchive, n_target: int, n_nontarget: int, rng: Rng
) -> TrialList:
    """Sample distinct utterance pairs; targets share a speaker, nontargets do not."""

    if n_target < 1 or n_nontarget < 1:
        raise DomainError("need at least one target and one nontarget trial")
    utterances = archive.utterances
    by_speaker: dict[str, list[int]] = {}
    for index, utt in enumerate(utterances):
        by_speaker.setdefault(utt.speaker_id, []).append(index)
    multi = [indices for _, indices in sorted(by_speaker.items()) if len(indices) >= 2]
    if not multi:
        raise DomainError("target trials need a speaker with at least two utterances")
    if len(by_speaker) < 2:
        raise DomainError("nontarget trials need at least two speakers")

    target_pairs: set[tuple[int, int]] = set()
    max_target = sum(len(ix) * (len(ix) - 1) for ix in multi)
    if n_target > max_target:
        raise DomainError(f"only {max_target} distinct target pairs are available")
    while len(target_pairs) < n_target:
        indices = multi[int(rng.integers(0, len(multi) - 1))]
        a, b = (int(i) for i in rng.generator.choice(indices, size=2, replace=False))
        target_pairs.add((a, b))

    nontarget_pairs: set[tuple[int, int]] = set()
    total = len(utterances)
    max_nontarget = total * total - sum(len(ix) * len(ix) for ix in by_speaker.values())
    if n_nontarget > max_nontarget:
        raise DomainError(f"only {max_nontarget} distinct nontarget pairs are available")
    while len(nontarget_pairs) < n_nontarget:
        a, b = (int(i) for i in rng.integers(0, total - 1, size=2))
        if utterances[a].speaker_id != utterances[b].speaker_id:
            nontarget_pairs.add((a, b))

    trials = [
        Trial(utterances[a].utt_id, utterances[b].utt_id, TrialLabel.TARGET)
        for a, b in sorted(target_pairs)
    ]
    trials += [
        Trial(utterances[a].utt_id, utterances[b].utt_id, TrialLabel.NONTARGET)
        for a, b in sorted(nontarget_pairs)
    ]
    order = rng.permutation(len(trials))
    return TrialList([trials[int(i)] for i in order])


def parse_scores(path: Path) -> dict[tuple[str, str], float]:
    """Read ``enroll_id test_id score`` lines into a mapping keyed by the pair."""

    scores: dict[tuple[str, str], float] = {}
    for number, line in enumerate(_read_utf8_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{number}: expected 3 fields, got {len(parts)}")
        try:
            value = float(parts[2])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{number}: score {parts[2]!r} is not a number") from exc
        scores[(parts[0], parts[1])] = value
    return scores


def write_scores(path: Path, trials: TrialList, scores: list[float]) -> Path:
    lines = [f"{t.enroll_id} {t.test_id} {float(score)!r}\n" for t, score in zip(trials.trials, scores, strict=True)]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(lines), encoding="utf-8")
    return path


__all__ = [
    "Trial",
    "TrialLabel",
    "TrialList",
    "format_trials",
    "generate_trials",
    "parse_scores",
    "parse_trials",
    "parse_trials_text",
    "write_scores",
    "write_trials",
]
