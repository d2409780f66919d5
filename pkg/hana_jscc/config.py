"""Run configuration documents

A run is fully described by one YAML document parsed into `RunConfig`.
Unknown keys are rejected at every level so a typo never silently falls
back to a default.
"""

import enum
import hashlib
import pathlib
from typing import List, Optional, Set

import orjson
import pydantic
import yaml
from pydantic import BaseModel, root_validator, validator

from .errors import ConfigurationError, ResourceError
from .model import ModelConfig
from .stages.common import STAGE_SEED_KEY, TrainStage
from .utils.misc import derive_seed
from .utils.validation import SIGMA_E_SQ_RANGE, MinMax

DEFAULT_SNR_SET_DB = [1.0, 3.0, 5.0, 7.0, 9.0]
DEFAULT_EVAL_SNR_DB = [float(snr) for snr in range(-6, 19, 3)]
DEFAULT_EVAL_SIGMA_E = [round(0.01 * step, 2) for step in range(1, 11)]


@enum.unique
class LrSchedule(str, enum.Enum):
    COSINE = "cosine"
    CONSTANT = "constant"


@enum.unique
class KlOrder(str, enum.Enum):
    """Operand order of the feature KL terms."""

    STUDENT_FIRST = "student_first"
    TEACHER_FIRST = "teacher_first"


@enum.unique
class Condition(str, enum.Enum):
    """Evaluation conditions compared in a sweep."""

    PERFECT = "perfect"
    DIRECT = "direct"
    NAIVE_FT = "naive_ft"
    HANA = "hana"
    HANA_NO_DISTILL = "hana_no_distill"
    NO_SNR_ADAPT = "no_snr_adapt"


@enum.unique
class DatasetSource(str, enum.Enum):
    PROCEDURAL = "procedural"
    DIRECTORY = "directory"


class StrictModel(BaseModel):
    class Config:
        extra = "forbid"


class TrainConfig(StrictModel):
    stages: List[TrainStage] = list(TrainStage)
    snr_set_db: List[float] = DEFAULT_SNR_SET_DB
    sigma_e_sq_range: MinMax = SIGMA_E_SQ_RANGE
    beta: float = 1.0
    kl_order: KlOrder = KlOrder.STUDENT_FIRST
    batch_size: int = 32
    steps: int = 2000
    lr: float = 1e-3
    lr_schedule: LrSchedule = LrSchedule.COSINE
    clip_norm: Optional[float] = 1.0
    adam_betas: List[float] = [0.9, 0.999]
    adam_eps: float = 1e-8
    seed: Optional[int] = None
    log_every: int = 50

    @validator("beta")
    def _non_negative_beta(cls, value):
        if value < 0:
            raise ValueError(f"beta must be >= 0, got {value}")
        return value

    @validator("batch_size", "steps", "log_every")
    def _positive(cls, value, field):
        if value <= 0:
            raise ValueError(f"{field.name} must be positive, got {value}")
        return value

    @validator("lr", "adam_eps")
    def _positive_real(cls, value, field):
        if value <= 0:
            raise ValueError(f"{field.name} must be positive, got {value}")
        return value

    @validator("clip_norm")
    def _positive_clip(cls, value):
        if value is not None and value <= 0:
            raise ValueError(f"clip_norm must be positive or null, got {value}")
        return value

    @validator("snr_set_db")
    def _snr_set(cls, value):
        if not value:
            raise ValueError("snr_set_db needs at least one value")
        return value

    @validator("sigma_e_sq_range")
    def _sigma_range(cls, value):
        if value.minimum < 0:
            raise ValueError("sigma_e_sq_range must be non-negative")
        return value

    @validator("adam_betas")
    def _betas(cls, value):
        if len(value) != 2 or not all(0 <= beta < 1 for beta in value):
            raise ValueError(f"adam_betas must be two values in [0, 1), got {value}")
        return value

    def batch_size_for(self, stage: TrainStage) -> int:
        """Stage-II doubles the Stage-I batch."""
        return 2 * self.batch_size if stage == TrainStage.STAGE2 else self.batch_size


class EvalGrid(StrictModel):
    conditions: List[Condition] = list(Condition)
    snr_db: List[float] = DEFAULT_EVAL_SNR_DB
    sigma_e: List[float] = DEFAULT_EVAL_SIGMA_E
    seeds: List[int] = [0, 1, 2]
    images_per_cell: int = 256
    realizations: int = 4
    batch_size: int = 64
    curve_sigma_e: float = 0.05
    curve_snr_db: float = 6.0

    @validator("sigma_e", each_item=True)
    def _sigma(cls, value):
        if value < 0:
            raise ValueError(f"sigma_e must be >= 0, got {value}")
        return value

    @validator("images_per_cell", "realizations", "batch_size")
    def _positive(cls, value, field):
        if value <= 0:
            raise ValueError(f"{field.name} must be positive, got {value}")
        return value


class DatasetConfig(StrictModel):
    source: DatasetSource = DatasetSource.PROCEDURAL
    path: Optional[pathlib.Path] = None
    train_count: int = 1024
    eval_count: int = 256
    kinds: List[str] = ["gradient", "checkerboard", "noise", "disc"]
    shuffle: bool = True

    @root_validator(skip_on_failure=True)
    def _directory_has_path(cls, values):
        if values["source"] == DatasetSource.DIRECTORY and values.get("path") is None:
            raise ValueError("dataset source 'directory' needs a path")
        return values


class RunConfig(StrictModel):
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    eval: EvalGrid = EvalGrid()
    dataset: DatasetConfig = DatasetConfig()
    output_dir: pathlib.Path = pathlib.Path("out")
    master_seed: int = 0

    def config_hash(self) -> str:
        return config_hash(self)

    def training_hash(self) -> str:
        """Hash of the settings a checkpoint depends on; eval and output paths excluded."""
        return config_hash(self, exclude={"eval", "output_dir"})

    def stage_seed(self, stage: TrainStage) -> int:
        if self.train.seed is not None:
            return derive_seed(self.train.seed, STAGE_SEED_KEY[stage])
        return derive_seed(self.master_seed, STAGE_SEED_KEY[stage])


def config_hash(config: BaseModel, exclude: Optional[Set[str]] = None) -> str:
    """md5 over the sorted-key JSON encoding of `config`."""
    canonical = orjson.dumps(
        orjson.loads(config.json(exclude=exclude)), option=orjson.OPT_SORT_KEYS
    )
    return hashlib.md5(canonical).hexdigest()


def load_config(path: pathlib.Path) -> RunConfig:
    if not path.exists():
        raise ResourceError(f"Config file {path} does not exist")

    try:
        with path.open() as config_file:
            document = yaml.safe_load(config_file) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Unable to parse {path}: {e}")

    if not isinstance(document, dict):
        raise ConfigurationError(f"{path} must contain a mapping at the top level")

    try:
        return RunConfig.parse_obj(document)
    except pydantic.ValidationError as e:
        raise ConfigurationError(f"Invalid config {path}:\n{e}")
