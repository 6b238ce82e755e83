import json

import pytest

from ldgan.config import (
    OptimizerConfig,
    TrainConfig,
    default_config,
    load_config,
    validate_config,
    write_config_echo,
)
from ldgan.errors import FormatError


def test_unsup_defaults():
    cfg = default_config("train-unsup")
    assert cfg.iterations == 2000
    assert cfg.schedule.mode == "dynamic"
    assert cfg.real_classes == 1 and cfg.gen_classes == 1
    assert cfg.dataset.means == [[2.0, -1.0]]
    assert cfg.gen_optimizer.alpha == pytest.approx(5e-3)
    assert cfg.disc_optimizer.alpha == pytest.approx(2e-3)


def test_conditional_defaults():
    cfg = default_config("train-cond")
    assert cfg.iterations == 3000
    assert cfg.eta == 1.0
    assert cfg.schedule.mode == "fixed"
    assert cfg.schedule.fixed_id == 2 and cfg.schedule.fixed_ig == 2
    assert cfg.real_classes == 3 and cfg.gen_classes == 3
    means = cfg.dataset.means
    assert len(means) == 3
    for mean in means:
        assert sum(v * v for v in mean) == pytest.approx(9.0)


def test_wgan_defaults():
    cfg = default_config("train-wgan")
    assert cfg.schedule.fixed_id == 5 and cfg.schedule.fixed_ig == 1
    assert cfg.gen_optimizer.alpha == pytest.approx(5e-5)
    assert cfg.disc_optimizer.alpha == pytest.approx(5e-5)
    assert cfg.clip == pytest.approx(0.01)


def test_unknown_verb_rejected():
    with pytest.raises(FormatError):
        default_config("train-nonsense")


def test_load_merges_over_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"iterations": 7, "schedule": {"mode": "fixed"}}))
    cfg = load_config(str(path), "train-unsup")
    assert cfg.iterations == 7
    assert cfg.schedule.mode == "fixed"
    # untouched defaults survive
    assert cfg.batch_size == 64
    assert cfg.schedule.fixed_id == 1


def test_unknown_key_rejected_with_path(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"schedule": {"mod": "fixed"}}))
    with pytest.raises(FormatError, match="schedule.mod"):
        load_config(str(path), "train-unsup")


def test_unknown_top_level_key_rejected(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"iterationz": 7}))
    with pytest.raises(FormatError, match="iterationz"):
        load_config(str(path), "train-unsup")


def test_scalar_for_section_rejected(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"schedule": 3}))
    with pytest.raises(FormatError, match="schedule"):
        load_config(str(path), "train-unsup")


def test_malformed_json_rejected(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(FormatError, match="JSON"):
        load_config(str(path), "train-unsup")


def test_non_object_root_rejected(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("[1, 2]")
    with pytest.raises(FormatError):
        load_config(str(path), "train-unsup")


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_config(str(tmp_path / "absent.json"), "train-unsup")


@pytest.mark.parametrize(
    "field,value",
    [
        ("iterations", -1),
        ("batch_size", 1),
        ("eta", 0.0),
        ("eta", 1.5),
        ("epsilon", -1e-9),
        ("feature_dim", 0),
        ("z_dim", 0),
        ("clip", 0.0),
        ("generator_output", "softmax"),
        ("generator_gain", 0.0),
    ],
)
def test_validate_rejects_bad_values(field, value):
    cfg = default_config("train-unsup")
    setattr(cfg, field, value)
    with pytest.raises(FormatError):
        validate_config(cfg)


def test_validate_rejects_bad_schedule_mode():
    cfg = default_config("train-unsup")
    cfg.schedule.mode = "adaptive"
    with pytest.raises(FormatError):
        validate_config(cfg)


def test_validate_rejects_nonpositive_lr():
    cfg = default_config("train-unsup")
    cfg.gen_optimizer = OptimizerConfig(alpha=1e-3)
    cfg.gen_optimizer.alpha = 0.0
    with pytest.raises(FormatError):
        validate_config(cfg)


def test_echo_round_trips(tmp_path):
    cfg = default_config("train-cond")
    cfg.iterations = 11
    echo = tmp_path / "echo.json"
    write_config_echo(cfg, str(echo))
    back = load_config(str(echo), "train-cond")
    assert back.to_dict() == cfg.to_dict()


def test_echo_materializes_every_default(tmp_path):
    echo = tmp_path / "echo.json"
    write_config_echo(default_config("train-unsup"), str(echo))
    data = json.loads(echo.read_text())
    expected = set(TrainConfig.__dataclass_fields__)
    assert set(data) == expected
    assert "seed" not in data["dataset"]


def test_echo_is_sorted_and_indented(tmp_path):
    echo = tmp_path / "echo.json"
    write_config_echo(default_config("train-unsup"), str(echo))
    text = echo.read_text()
    assert text.startswith("{\n  ")
    keys = [line.split('"')[1] for line in text.splitlines() if line.startswith('  "')]
    assert keys == sorted(keys)
