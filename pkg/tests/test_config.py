import pathlib

import pydantic
import pytest

from hana_jscc import config
from hana_jscc.errors import ConfigurationError, ResourceError
from hana_jscc.stages.common import TrainStage

CONFIGS_DIR = pathlib.Path(__file__).parent.parent / "configs"


def _write(tmpdir, text):
    path = pathlib.Path(tmpdir) / "run.yml"
    path.write_text(text)
    return path


def test_load_smoke_config():
    run = config.load_config(CONFIGS_DIR / "smoke.yml")

    assert run.model.n_tx == 4
    assert run.model.image_shape == (3, 16, 16)
    assert run.train.steps == 50
    assert run.eval.sigma_e == [0.02, 0.05, 0.1]
    assert run.output_dir == pathlib.Path("out/smoke")
    assert run.train.stages == list(TrainStage)


def test_load_desk_config():
    run = config.load_config(CONFIGS_DIR / "desk.yml")

    assert run.model.n_tx == 16
    assert run.train.snr_set_db == config.DEFAULT_SNR_SET_DB


def test_missing_config(tmpdir):
    path = pathlib.Path(tmpdir) / "absent.yml"

    with pytest.raises(ResourceError, match="absent.yml"):
        config.load_config(path)


def test_invalid_yaml(tmpdir):
    with pytest.raises(ConfigurationError, match="Unable to parse"):
        config.load_config(_write(tmpdir, "model: [unclosed\n"))


def test_top_level_must_be_mapping(tmpdir):
    with pytest.raises(ConfigurationError, match="mapping"):
        config.load_config(_write(tmpdir, "- 1\n- 2\n"))


def test_unknown_keys_rejected(tmpdir):
    with pytest.raises(ConfigurationError, match="modle"):
        config.load_config(_write(tmpdir, "modle:\n  n_tx: 4\n"))

    with pytest.raises(ConfigurationError, match="antennas"):
        config.load_config(_write(tmpdir, "model:\n  antennas: 4\n"))


def test_empty_file_uses_defaults(tmpdir):
    assert config.load_config(_write(tmpdir, "")) == config.RunConfig()


def test_invalid_values(tmpdir):
    with pytest.raises(ConfigurationError, match="beta"):
        config.load_config(_write(tmpdir, "train:\n  beta: -1\n"))

    with pytest.raises(ConfigurationError, match="sigma_e"):
        config.load_config(_write(tmpdir, "eval:\n  sigma_e: [0.1, -0.1]\n"))


def test_train_config_validation():
    with pytest.raises(pydantic.ValidationError):
        config.TrainConfig(adam_betas=[0.9])
    with pytest.raises(pydantic.ValidationError):
        config.TrainConfig(clip_norm=0.0)
    with pytest.raises(pydantic.ValidationError):
        config.TrainConfig(sigma_e_sq_range={"minimum": -0.1, "maximum": 0.1})

    assert config.TrainConfig(clip_norm=None).clip_norm is None


def test_directory_dataset_needs_path():
    with pytest.raises(pydantic.ValidationError, match="needs a path"):
        config.DatasetConfig(source=config.DatasetSource.DIRECTORY)


def test_config_hash_is_stable():
    assert config.RunConfig().config_hash() == config.RunConfig().config_hash()
    assert config.RunConfig(master_seed=1).config_hash() != config.RunConfig().config_hash()


def test_training_hash_ignores_eval_and_output():
    base = config.RunConfig()
    moved = config.RunConfig(output_dir="elsewhere", eval=config.EvalGrid(seeds=[7]))
    retrained = config.RunConfig(train=config.TrainConfig(steps=10))

    assert moved.training_hash() == base.training_hash()
    assert moved.config_hash() != base.config_hash()
    assert retrained.training_hash() != base.training_hash()


def test_stage_seeds():
    run = config.RunConfig(master_seed=3)

    seeds = {run.stage_seed(stage) for stage in TrainStage}
    assert len(seeds) == len(TrainStage)
    assert run.stage_seed(TrainStage.STAGE1) == config.RunConfig(master_seed=3).stage_seed(TrainStage.STAGE1)

    pinned = config.RunConfig(master_seed=3, train=config.TrainConfig(seed=11))
    assert pinned.stage_seed(TrainStage.STAGE1) != run.stage_seed(TrainStage.STAGE1)
