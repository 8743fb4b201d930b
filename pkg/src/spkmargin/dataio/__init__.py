"""Feature archives, trial lists and synthetic speaker data."""

from .archive import (
    FeatureArchive,
    Utterance,
    decode_archive,
    encode_archive,
    read_archive,
    write_archive,
)
from .features import apply_cmn_to_archive, apply_sliding_cmn
from .synthetic import generate_synthetic, utterance_means
from .trials import (
    Trial,
    TrialLabel,
    TrialList,
    format_trials,
    generate_trials,
    parse_scores,
    parse_trials,
    parse_trials_text,
    write_scores,
    write_trials,
)

__all__ = [
    "FeatureArchive",
    "Trial",
    "TrialLabel",
    "TrialList",
    "Utterance",
    "apply_cmn_to_archive",
    "apply_sliding_cmn",
    "decode_archive",
    "encode_archive",
    "format_trials",
    "generate_synthetic",
    "generate_trials",
    "parse_scores",
    "parse_trials",
    "parse_trials_text",
    "read_archive",
    "utterance_means",
    "write_archive",
    "write_scores",
    "write_trials",
]
