from __future__ import annotations

from pathlib import Path

import pytest

from spkmargin.core.config import get_settings
from spkmargin.core.errors import ConfigError
from spkmargin.domain.configs import (
    DEFAULT_MARGINS,
    DcfParams,
    LossConfig,
    LossKind,
    NetworkConfig,
    TrainConfig,
    build_config,
)
from spkmargin.domain.experiment import (
    EVAL_PREFIX,
    ExperimentConfig,
    coerce_flag_value,
    load_experiment_config,
)


def test_default_margins_follow_the_loss() -> None:
    for kind, margin in DEFAULT_MARGINS.items():
        cfg = LossConfig(kind=kind)
        assert cfg.m == margin
        assert cfg.s == 32.0
    assert LossConfig(kind=LossKind.SOFTMAX).has_bias
    assert not LossConfig(kind=LossKind.AM_SOFTMAX).has_bias
    assert LossConfig(kind=LossKind.SOFTMAX, m=0.0).m == 0.0


@pytest.mark.parametrize(
    ("alias", "kind"),
    [("aam", LossKind.AAM_SOFTMAX), ("AM-Softmax", LossKind.AM_SOFTMAX), ("a", LossKind.A_SOFTMAX)],
)
def test_loss_aliases(alias: str, kind: LossKind) -> None:
    assert load_experiment_config(None, {"loss": alias}).loss_config().kind is kind


@pytest.mark.parametrize(
    ("overrides", "message"),
    [
        ({"loss": "softmax", "m": 0.35}, "softmax takes no margin"),
        ({"loss": "a_softmax", "m": 1.5}, "integer margin"),
        ({"loss": "a_softmax", "m": 0}, "integer margin"),
        ({"loss": "am_softmax", "m": -0.1}, "m >= 0"),
        ({"loss": "aam_softmax", "m": 3.2}, r"\[0, pi\)"),
        ({"feat_dim": 0}, "feat_dim"),
        ({"min_frames": 400, "max_frames": 300}, "min_frames"),
        ({"max_segment": 10, "min_segment": 5}, "receptive field"),
        ({"no_such_knob": 1}, "no_such_knob"),
    ],
)
def test_invalid_experiment_values_are_config_errors(overrides: dict[str, object], message: str) -> None:
    with pytest.raises(ConfigError, match=message):
        load_experiment_config(None, overrides)


def test_config_file_then_overrides(tmp_path: Path) -> None:
    path = tmp_path / "exp.toml"
    path.write_text('loss = "aam"\nepochs = 5\nframe_widths = [32, 32, 32, 32, 48]\n', encoding="utf-8")

    cfg = load_experiment_config(path, {"epochs": "2"})

    assert cfg.loss is LossKind.AAM_SOFTMAX
    assert cfg.epochs == 2
    assert cfg.network_config().frame_widths == (32, 32, 32, 32, 48)
    assert cfg.loss_config().m == pytest.approx(0.3)


def test_config_file_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="does not exist"):
        load_experiment_config(tmp_path / "missing.toml")

    broken = tmp_path / "broken.toml"
    broken.write_text("epochs = = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="broken.toml"):
        load_experiment_config(broken)


def test_flag_values_are_coerced_for_validation() -> None:
    assert coerce_flag_value("frame_widths", "16, 16,16,16,32") == ("16", "16", "16", "16", "32")
    assert coerce_flag_value("cmn_window", "none") is None
    assert coerce_flag_value("m", " 0.25 ") == "0.25"

    cfg = load_experiment_config(None, {"frame_widths": coerce_flag_value("frame_widths", "16,16,16,16,32")})
    assert cfg.frame_widths == (16, 16, 16, 16, 32)


def test_split_configs_use_disjoint_speaker_prefixes() -> None:
    cfg = ExperimentConfig(seed=5)

    train = cfg.synth_config("train")
    evaluation = cfg.synth_config("eval")

    assert train.seed == 5
    assert evaluation.seed != train.seed
    assert evaluation.id_prefix == EVAL_PREFIX != train.id_prefix
    assert evaluation.n_speakers == cfg.n_eval_speakers
    with pytest.raises(ConfigError, match="unknown split"):
        cfg.synth_config("test")


def test_stage_configs_share_the_experiment_values() -> None:
    cfg = ExperimentConfig(epochs=1, lr_peak=0.5, lda_dim=16, plda_iters=3, seed=9)

    assert cfg.train_config().lr_peak == 0.5
    assert cfg.train_config().seed == 9
    assert cfg.backend_config().lda_dim == 16
    assert cfg.network_config().receptive_field == NetworkConfig().receptive_field == 15
    assert cfg.model_rng().seed != cfg.trials_rng().seed


def test_build_config_wraps_validation_errors() -> None:
    with pytest.raises(ConfigError, match="min_segment"):
        build_config(TrainConfig, min_segment=80, max_segment=60)
    with pytest.raises(ConfigError, match="p_target"):
        build_config(DcfParams, p_target=1.0)


def test_settings_read_the_environment(tmp_path: Path) -> None:
    settings = get_settings()

    assert settings.work_dir == tmp_path / "experiments"
    assert settings.log_rich is False
    assert settings.log_level == "WARNING"
