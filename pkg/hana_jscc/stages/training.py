"""Code for running the training stages

Every stage shares one loop. Each step draws, from a generator keyed by
(stage seed, step) and in this order: the image batch, the SNR, sigma_e^2
and then the channel realization. Two runs with the same seed therefore see
the same data whatever else changes in the stage.
"""

import math
import pathlib
from typing import List, NamedTuple, Optional

import ndjson
import numpy as np
import orjson
from pydantic import BaseModel
from sentry_sdk import set_tag

from ..channel import ChannelRealization, sample_channel_realization
from ..config import LrSchedule, TrainConfig
from ..engine import Tensor, backward, no_grad
from ..errors import ConfigurationError, ResourceError, TrainingDivergenceError
from ..model import SEMANTIC_GROUPS, HanaJSCC, ModelConfig, ParameterStore, Variant
from ..utils.log import getLogger
from ..utils.misc import derive_rng
from .common import TrainStage
from .losses import KdLoss, kd_loss, l1_loss
from .optim import Adam, cosine_lr

logger = getLogger(__file__)

# Spawn key of the parameter-initialization stream within a stage seed
INIT_STREAM_KEY = 2**31 - 1


class StepRecord(BaseModel):
    step: int
    stage: TrainStage
    loss: float
    l1: float
    kl: Optional[float] = None
    lr: float
    seed: int


class StageOutcome(NamedTuple):
    store: ParameterStore
    history: List[StepRecord]


class TrainingBatch(NamedTuple):
    images: np.ndarray
    realization: ChannelRealization


def sample_training_step(
    rng: np.random.Generator,
    images: np.ndarray,
    batch_size: int,
    train_config: TrainConfig,
    model_config: ModelConfig,
) -> TrainingBatch:
    if len(images) == 0:
        raise ConfigurationError("training needs at least one image")

    indices = rng.choice(len(images), size=batch_size, replace=len(images) < batch_size)
    snr_db = float(rng.choice(train_config.snr_set_db))
    sigma_e_sq = float(
        rng.uniform(train_config.sigma_e_sq_range.minimum, train_config.sigma_e_sq_range.maximum)
    )
    realization = sample_channel_realization(
        batch_size,
        model_config.n_rx,
        model_config.n_tx,
        model_config.d,
        snr_db,
        sigma_e_sq,
        rng,
    )
    return TrainingBatch(images=images[indices].astype(model_config.dtype), realization=realization)


def _learning_rate(train_config: TrainConfig, step: int) -> float:
    if train_config.lr_schedule == LrSchedule.COSINE:
        return cosine_lr(step, train_config.steps, train_config.lr)
    return train_config.lr


def _write_record(log_file, record: StepRecord) -> None:
    log_file.write(orjson.dumps(record.dict()))
    log_file.write(b"\n")


def read_training_log(log_path: pathlib.Path) -> List[StepRecord]:
    """Step records written by `run_training_loop`, oldest first."""
    if not log_path.exists():
        raise ResourceError(f"No training log at {log_path}")

    with log_path.open() as log_file:
        return [StepRecord.parse_obj(record) for record in ndjson.load(log_file)]


def run_training_loop(
    stage: TrainStage,
    model: HanaJSCC,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    perfect_csi: bool = False,
    teacher: Optional[HanaJSCC] = None,
    log_path: Optional[pathlib.Path] = None,
) -> List[StepRecord]:
    """Optimize the trainable groups of `model.store` for `train_config.steps` steps.

    With `perfect_csi` the estimate is replaced by the true channel. With a
    `teacher` the loss is the distillation loss against the teacher's
    features on the same batch and channel with perfect CSI.
    """
    set_tag("hana.stage", stage.value)

    batch_size = train_config.batch_size_for(stage)
    optimizer = Adam(
        model.store,
        betas=tuple(train_config.adam_betas),
        eps=train_config.adam_eps,
        clip_norm=train_config.clip_norm,
    )

    history: List[StepRecord] = []
    log_file = None
    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        log_file = log_path.open("wb")

    logger.info(
        "Running %s for %d steps with batch size %d", stage.value, train_config.steps, batch_size
    )

    try:
        for step in range(train_config.steps):
            rng = derive_rng(seed, step)
            batch = sample_training_step(rng, images, batch_size, train_config, model.config)
            realization = batch.realization.perfect() if perfect_csi else batch.realization
            lr = _learning_rate(train_config, step)

            model.store.zero_grad()
            x = Tensor(batch.images)
            result = model.forward(x, realization)
            l1 = l1_loss(result.x_hat, x)

            if teacher is None:
                parts = KdLoss(total=l1, l1=l1)
            else:
                with no_grad():
                    target = teacher.forward(x, batch.realization.perfect())
                parts = kd_loss(
                    l1,
                    (result.z_c, result.z_hat_s),
                    (target.z_c, target.z_hat_s),
                    train_config.beta,
                    train_config.kl_order,
                )

            loss = parts.total.item()
            if not math.isfinite(loss):
                raise TrainingDivergenceError(stage.value, step, loss)

            backward(parts.total)
            optimizer.step(lr)

            record = StepRecord(
                step=step,
                stage=stage,
                loss=loss,
                l1=parts.l1.item(),
                kl=parts.kl.item() if parts.kl is not None else None,
                lr=lr,
                seed=seed,
            )
            history.append(record)
            if log_file is not None:
                _write_record(log_file, record)

            if step % train_config.log_every == 0 or step == train_config.steps - 1:
                logger.info(
                    "%s step %d/%d loss=%.5f lr=%.2e",
                    stage.value,
                    step,
                    train_config.steps,
                    loss,
                    lr,
                )
    finally:
        if log_file is not None:
            log_file.close()

    model.store.zero_grad()
    return history


def init_hana_from(
    baseline: ParameterStore, model_config: ModelConfig, seed: int
) -> HanaJSCC:
    """HANA model carrying the baseline's shared parameters and fresh adaptors."""
    model = HanaJSCC.build(
        model_config.with_variant(Variant.HANA), derive_rng(seed, INIT_STREAM_KEY)
    )
    transferred = model.store.transfer_from(baseline)
    logger.info("Transferred %d baseline tensors into the HANA model", len(transferred))
    return model


def _train_from_scratch(
    stage: TrainStage,
    variant: Variant,
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path],
) -> StageOutcome:
    model = HanaJSCC.build(model_config.with_variant(variant), derive_rng(seed, INIT_STREAM_KEY))
    history = run_training_loop(stage, model, train_config, images, seed, log_path=log_path)
    return StageOutcome(store=model.store, history=history)


def pretrain_baseline(
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path] = None,
) -> StageOutcome:
    """End-to-end training of the adaptor-free codec under imperfect CSI."""
    return _train_from_scratch(
        TrainStage.PRETRAIN_BASELINE,
        Variant.NO_ADAPTOR,
        model_config,
        train_config,
        images,
        seed,
        log_path,
    )


def pretrain_no_snr_adapt(
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path] = None,
) -> StageOutcome:
    """Same as `pretrain_baseline` with the SNR modulation removed."""
    return _train_from_scratch(
        TrainStage.PRETRAIN_NO_SNR_ADAPT,
        Variant.NO_SNR_ADAPT,
        model_config,
        train_config,
        images,
        seed,
        log_path,
    )


def naive_finetune(
    baseline: ParameterStore,
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path] = None,
) -> StageOutcome:
    """Stage-I procedure on the adaptor-free codec."""
    store = baseline.copy()
    store.unfreeze()
    store.freeze(*SEMANTIC_GROUPS)
    model = HanaJSCC(model_config.with_variant(Variant.NO_ADAPTOR), store)

    history = run_training_loop(
        TrainStage.NAIVE_FINETUNE, model, train_config, images, seed, log_path=log_path
    )
    store.unfreeze()
    return StageOutcome(store=store, history=history)


def train_teacher(
    baseline: ParameterStore,
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path] = None,
) -> StageOutcome:
    """Stage-I procedure with H_est := H_p; the returned store is frozen."""
    model = init_hana_from(baseline, model_config, seed)
    model.store.freeze(*SEMANTIC_GROUPS)

    history = run_training_loop(
        TrainStage.TEACHER,
        model,
        train_config,
        images,
        seed,
        perfect_csi=True,
        log_path=log_path,
    )
    model.store.freeze()
    return StageOutcome(store=model.store, history=history)


def stage1(
    init: ParameterStore,
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path] = None,
    freeze_semantic: bool = True,
) -> StageOutcome:
    """Fine-tune channel codecs and adaptors with the semantic codecs frozen.

    `init` is either the adaptor-free baseline, whose shared parameters are
    transferred into a fresh HANA model, or a HANA store that is copied.
    """
    hana_config = model_config.with_variant(Variant.HANA)
    if all(spec.name in init for spec in HanaJSCC.declare(hana_config)):
        store = init.copy()
        store.unfreeze()
        model = HanaJSCC(hana_config, store)
    else:
        model = init_hana_from(init, model_config, seed)

    if freeze_semantic:
        model.store.freeze(*SEMANTIC_GROUPS)

    history = run_training_loop(
        TrainStage.STAGE1, model, train_config, images, seed, log_path=log_path
    )
    model.store.unfreeze()
    return StageOutcome(store=model.store, history=history)


def stage2(
    student: ParameterStore,
    teacher: ParameterStore,
    model_config: ModelConfig,
    train_config: TrainConfig,
    images: np.ndarray,
    seed: int,
    log_path: Optional[pathlib.Path] = None,
) -> StageOutcome:
    """Train every student group on L1 plus the feature KL against the frozen teacher."""
    hana_config = model_config.with_variant(Variant.HANA)

    student_store = student.copy()
    student_store.unfreeze()
    student_model = HanaJSCC(hana_config, student_store)

    teacher.freeze()
    teacher_model = HanaJSCC(hana_config, teacher)

    history = run_training_loop(
        TrainStage.STAGE2,
        student_model,
        train_config,
        images,
        seed,
        teacher=teacher_model,
        log_path=log_path,
    )
    return StageOutcome(store=student_store, history=history)
