import numpy as np
import pytest

from hana_jscc.config import DatasetConfig, EvalGrid, RunConfig, TrainConfig
from hana_jscc.diagnostics import MINIATURE_CONFIG
from hana_jscc.ingestors.images import procedural_images
from hana_jscc.model import HanaJSCC, ResidualInit


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mini_config():
    """Miniature 64-bit HANA config with random residual branches."""
    return MINIATURE_CONFIG


@pytest.fixture
def mini_config_zero_init():
    return MINIATURE_CONFIG.copy(update={"residual_init": ResidualInit.ZERO})


@pytest.fixture
def mini_model(mini_config):
    return HanaJSCC.build(mini_config, np.random.default_rng(7))


@pytest.fixture
def tiny_images(mini_config):
    return procedural_images(8, mini_config.image_shape, np.random.default_rng(99))


@pytest.fixture
def tiny_train_config():
    return TrainConfig(steps=3, batch_size=2, log_every=1)


@pytest.fixture
def tiny_run_config(mini_config, tiny_train_config, tmpdir):
    return RunConfig(
        model=mini_config,
        train=tiny_train_config,
        eval=EvalGrid(
            snr_db=[0.0, 10.0],
            sigma_e=[0.0, 0.1],
            seeds=[0, 1],
            images_per_cell=4,
            realizations=1,
            batch_size=4,
        ),
        dataset=DatasetConfig(train_count=8, eval_count=4),
        output_dir=str(tmpdir),
        master_seed=5,
    )
