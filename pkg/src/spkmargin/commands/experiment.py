"""``run-experiment`` (the whole chain in one work directory) and ``sweep``."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter
from typing import Any

import pandas as pd

from ..core.errors import ConfigError
from ..core.logging import get_logger
from ..domain.configs import LossKind, normalize_loss_kind
from ..domain.experiment import ExperimentConfig, load_experiment_config
from ..utils.tables import render_table, save_df_csv, summarize_sweep, sweep_to_df
from .backend import cmd_score, cmd_train_backend
from .common import write_json
from .data import cmd_gen_data, cmd_make_trials
from .evaluate import cmd_evaluate
from .extract import cmd_extract
from .train import TRAIN_LOG_NAME, cmd_train

_logger = get_logger("commands.experiment")


@dataclass(frozen=True, slots=True)
class ExperimentLayout:
    """File names inside one experiment work directory."""

    root: Path

    @property
    def config(self) -> Path:
        return self.root / "config.json"

    @property
    def train_archive(self) -> Path:
        return self.root / "train.spkf"

    @property
    def eval_archive(self) -> Path:
        return self.root / "eval.spkf"

    @property
    def trials(self) -> Path:
        return self.root / "eval_trials.txt"

    @property
    def model(self) -> Path:
        return self.root / "model.spkn"

    @property
    def train_log(self) -> Path:
        return self.root / TRAIN_LOG_NAME

    @property
    def train_embeddings(self) -> Path:
        return self.root / "train_emb.spkf"

    @property
    def eval_embeddings(self) -> Path:
        return self.root / "eval_emb.spkf"

    @property
    def backend(self) -> Path:
        return self.root / "backend.bin"

    @property
    def scores(self) -> Path:
        return self.root / "scores.txt"

    @property
    def report(self) -> Path:
        return self.root / "report.json"

    @property
    def det(self) -> Path:
        return self.root / "det.csv"


def _stage(name: str, started: float, **fields: Any) -> None:
    _logger.info("perf.stage", stage=name, duration_ms=round((perf_counter() - started) * 1000, 2), **fields)


def cmd_run_experiment(cfg: ExperimentConfig, work_dir: Path) -> dict[str, Any]:
    """gen-data → make-trials → train → extract → train-backend → score → evaluate.

    The back-end is fitted on the training-set embeddings.
    """

    layout = ExperimentLayout(work_dir)
    write_json(layout.config, cfg.model_dump(mode="json"))

    started = perf_counter()
    cmd_gen_data(cfg, layout.train_archive, split="train")
    cmd_gen_data(cfg, layout.eval_archive, split="eval")
    cmd_make_trials(cfg, layout.eval_archive, layout.trials)
    _stage("data", started)

    started = perf_counter()
    result = cmd_train(cfg, layout.train_archive, layout.model, log_path=layout.train_log, epoch_dir=work_dir)
    _stage("train", started, epochs=len(result.epochs), steps=result.steps)

    started = perf_counter()
    cmd_extract(layout.model, layout.train_archive, layout.train_embeddings)
    cmd_extract(layout.model, layout.eval_archive, layout.eval_embeddings)
    _stage("extract", started)

    started = perf_counter()
    cmd_train_backend(cfg, layout.train_embeddings, layout.backend)
    cmd_score(layout.backend, layout.eval_embeddings, layout.trials, layout.scores)
    report = cmd_evaluate(layout.scores, layout.trials, layout.report, det_csv=layout.det)
    _stage("backend", started)

    _logger.info(
        "experiment.done",
        command="run-experiment",
        loss_kind=cfg.loss.value,
        seed=cfg.seed,
        eer=round(report["eer"], 5),
        outcome="success",
    )
    return report


def parse_margins(text: str | None) -> dict[LossKind, list[float]]:
    """``"a_softmax=3,aam=0.25"`` → extra margins per loss kind."""

    margins: dict[LossKind, list[float]] = {}
    if not text:
        return margins
    for item in text.split(","):
        if not item.strip():
            continue
        kind_text, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"margin entry {item!r} must look like kind=value")
        try:
            kind = LossKind(normalize_loss_kind(kind_text))
            margins.setdefault(kind, []).append(float(value))
        except ValueError as exc:
            raise ConfigError(f"bad margin entry {item!r}: {exc}") from exc
    return margins


def parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"seeds must be comma-separated integers, got {text!r}") from exc
    if not seeds:
        raise ConfigError("at least one seed is required")
    return seeds


def _sweep_configs(
    cfg: ExperimentConfig, seeds: Sequence[int], extra_margins: Mapping[LossKind, Sequence[float]]
) -> list[ExperimentConfig]:
    base = cfg.model_dump()
    configs = []
    for kind in LossKind:
        for margin in [None, *extra_margins.get(kind, ())]:
            for seed in seeds:
                configs.append(load_experiment_config(None, {**base, "loss": kind, "m": margin, "seed": seed}))
    return configs


def cmd_sweep(
    cfg: ExperimentConfig,
    work_dir: Path,
    seeds: Sequence[int],
    extra_margins: Mapping[LossKind, Sequence[float]] | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Every loss kind (default margin plus *extra_margins*) for every seed."""

    configs = _sweep_configs(cfg, seeds, extra_margins or {})
    rows: list[dict[str, object]] = []
    for run_cfg in configs:
        margin = run_cfg.loss_config().m
        run_dir = work_dir / f"{run_cfg.loss.value}_m{margin:g}_seed{run_cfg.seed}"
        report = cmd_run_experiment(run_cfg, run_dir)
        rows.append(
            {
                "loss": run_cfg.loss.value,
                "m": margin,
                "seed": run_cfg.seed,
                "eer": report["eer"],
                "min_dcf_p01": report["min_dcf_p01"],
                "min_dcf_p001": report["min_dcf_p001"],
            }
        )
    runs = sweep_to_df(rows)
    summary = summarize_sweep(runs)
    save_df_csv(runs, work_dir / "sweep_runs.csv")
    save_df_csv(summary, work_dir / "sweep_summary.csv")
    render_table(summary, title="Median EER / minDCF per loss")
    return runs, summary


__all__ = [
    "ExperimentLayout",
    "cmd_run_experiment",
    "cmd_sweep",
    "parse_margins",
    "parse_seeds",
]
