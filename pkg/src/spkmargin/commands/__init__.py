"""Command-line surface: one sub-command per pipeline stage."""

from __future__ import annotations

import argparse
from collections.abc import Callable
from pathlib import Path
from typing import Any

from ..core.config import Settings
from ..domain.configs import NetworkConfig
from .backend import cmd_score, cmd_train_backend
from .common import add_experiment_flags, experiment_from_args
from .data import cmd_gen_data, cmd_make_trials
from .describe import cmd_describe_net
from .evaluate import cmd_evaluate
from .experiment import cmd_run_experiment, cmd_sweep, parse_margins, parse_seeds
from .extract import cmd_extract
from .train import cmd_train

Handler = Callable[[argparse.Namespace], Any]


def _gen_data(args: argparse.Namespace) -> None:
    cmd_gen_data(experiment_from_args(args), args.out, split=args.split)


def _make_trials(args: argparse.Namespace) -> None:
    cmd_make_trials(experiment_from_args(args), args.archive, args.out)


def _train(args: argparse.Namespace) -> None:
    cmd_train(experiment_from_args(args), args.archive, args.out, log_path=args.log, epoch_dir=args.epoch_dir)


def _extract(args: argparse.Namespace) -> None:
    cmd_extract(args.checkpoint, args.archive, args.out)


def _train_backend(args: argparse.Namespace) -> None:
    cmd_train_backend(experiment_from_args(args), args.embeddings, args.out)


def _score(args: argparse.Namespace) -> None:
    cmd_score(args.backend, args.embeddings, args.trials, args.out)


def _evaluate(args: argparse.Namespace) -> None:
    cmd_evaluate(args.scores, args.trials, args.out, det_csv=args.det_csv)


def _run_experiment(args: argparse.Namespace) -> None:
    cmd_run_experiment(experiment_from_args(args), args.work_dir)


def _sweep(args: argparse.Namespace) -> None:
    cfg = experiment_from_args(args)
    cmd_sweep(cfg, args.work_dir, parse_seeds(args.seeds), parse_margins(args.margins))


def _describe_net(args: argparse.Namespace) -> None:
    cfg = experiment_from_args(args)
    net_cfg = NetworkConfig.full_scale(feat_dim=cfg.feat_dim) if args.full_scale else cfg.network_config()
    n_classes = args.classes if args.classes is not None else cfg.n_train_speakers
    cmd_describe_net(net_cfg, n_classes, with_bias=cfg.loss_config().has_bias)


def _command(
    sub: argparse._SubParsersAction[argparse.ArgumentParser],
    name: str,
    handler: Handler,
    help_text: str,
    *,
    experiment: bool = False,
) -> argparse.ArgumentParser:
    parser = sub.add_parser(name, help=help_text, description=help_text, allow_abbrev=False)
    parser.set_defaults(handler=handler, command=name)
    if experiment:
        add_experiment_flags(parser)
    return parser


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spkmargin",
        description="x-vector speaker embeddings with margin softmax losses and a PLDA back-end",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = _command(sub, "gen-data", _gen_data, "generate a synthetic feature archive", experiment=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--split", choices=("train", "eval"), default="train")

    p = _command(sub, "make-trials", _make_trials, "sample a trial list over an archive", experiment=True)
    p.add_argument("--archive", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = _command(sub, "train", _train, "train the network with the selected loss", experiment=True)
    p.add_argument("--archive", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="final checkpoint")
    p.add_argument("--log", type=Path, default=None, help="JSON-lines training log")
    p.add_argument("--epoch-dir", type=Path, default=None, help="directory for epoch_<k>.spkn")

    p = _command(sub, "extract", _extract, "extract embeddings from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--archive", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = _command(sub, "train-backend", _train_backend, "fit LDA and PLDA on embeddings", experiment=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = _command(sub, "score", _score, "score a trial list with PLDA")
    p.add_argument("--backend", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--trials", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = _command(sub, "evaluate", _evaluate, "compute EER and minDCF")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--trials", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="JSON report")
    p.add_argument("--det-csv", type=Path, default=None)

    p = _command(sub, "run-experiment", _run_experiment, "run the whole pipeline", experiment=True)
    p.add_argument("--work-dir", type=Path, default=settings.work_dir)

    p = _command(sub, "sweep", _sweep, "compare every loss over several seeds", experiment=True)
    p.add_argument("--work-dir", type=Path, default=settings.work_dir)
    p.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p.add_argument("--margins", default=None, help="extra margins, e.g. a_softmax=3,aam=0.25")

    p = _command(sub, "describe-net", _describe_net, "print the layer table", experiment=True)
    p.add_argument("--full-scale", action="store_true", help="use the full-size layer widths")
    p.add_argument("--classes", type=int, default=None, help="projection size for the parameter count")

    return parser


__all__ = ["build_parser"]
