"""``evaluate``: EER and minDCF of a score file against its trial list."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from ..core.logging import get_logger
from ..dataio import parse_scores, parse_trials
from ..metrics import ScoredTrials, build_report, det_curve
from ..utils.tables import det_to_df, save_df_csv
from .common import json_bytes, log_written

_logger = get_logger("commands.evaluate")


def cmd_evaluate(scores_path: Path, trials_path: Path, out: Path, *, det_csv: Path | None = None) -> dict[str, Any]:
    scored = ScoredTrials.join(parse_trials(trials_path), parse_scores(scores_path))
    report = build_report(scored)
    payload = json_bytes(report)
    det = det_to_df(det_curve(scored)) if det_csv is not None else None

    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    log_written("report", out)
    if det is not None and det_csv is not None:
        save_df_csv(det, det_csv)
        log_written("det", det_csv, points=len(det))
    _logger.info(
        "evaluate.done",
        stage="evaluate",
        eer=round(report["eer"], 5),
        min_dcf_p01=round(report["min_dcf_p01"], 5),
        min_dcf_p001=round(report["min_dcf_p001"], 5),
    )
    return report


__all__ = ["cmd_evaluate"]
