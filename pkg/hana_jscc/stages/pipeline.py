"""Run the training stages in dependency order, resuming completed ones"""

import pathlib
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config import RunConfig
from ..errors import CheckpointMismatchError
from ..model import ParameterStore, Variant
from ..utils.log import getLogger
from . import outputs, training
from .checkpoint import MANIFEST_NAME, load_checkpoint, read_manifest, save_checkpoint
from .common import STAGE_DEPENDENCIES, STAGE_ORDER, TrainStage

logger = getLogger(__file__)

STAGE_VARIANT = {
    TrainStage.PRETRAIN_BASELINE: Variant.NO_ADAPTOR,
    TrainStage.NAIVE_FINETUNE: Variant.NO_ADAPTOR,
    TrainStage.TEACHER: Variant.HANA,
    TrainStage.STAGE1: Variant.HANA,
    TrainStage.STAGE2: Variant.HANA,
    TrainStage.PRETRAIN_NO_SNR_ADAPT: Variant.NO_SNR_ADAPT,
}


def resolve_stages(requested: Sequence[TrainStage]) -> List[TrainStage]:
    """Requested stages plus everything they depend on, in execution order."""
    needed = set()
    pending = list(requested)
    while pending:
        stage = TrainStage(pending.pop())
        if stage in needed:
            continue
        needed.add(stage)
        pending.extend(STAGE_DEPENDENCIES[stage])

    return [stage for stage in STAGE_ORDER if stage in needed]


def _completed(checkpoint_dir: pathlib.Path, training_hash: str, force: bool) -> bool:
    """True when a checkpoint for the current config already exists."""
    if not (checkpoint_dir / MANIFEST_NAME).exists():
        return False

    manifest = read_manifest(checkpoint_dir)
    if manifest.config_hash == training_hash:
        return True

    if not force:
        raise CheckpointMismatchError(
            f"{checkpoint_dir} holds a checkpoint for config {manifest.config_hash}; "
            "pass --force to retrain and overwrite it"
        )
    logger.warning("Overwriting stale checkpoint %s", checkpoint_dir)
    return False


def _run_stage(
    stage: TrainStage,
    config: RunConfig,
    stores: Dict[TrainStage, ParameterStore],
    images: np.ndarray,
    log_path: pathlib.Path,
) -> training.StageOutcome:
    seed = config.stage_seed(stage)
    common = dict(
        model_config=config.model,
        train_config=config.train,
        images=images,
        seed=seed,
        log_path=log_path,
    )

    if stage == TrainStage.PRETRAIN_BASELINE:
        return training.pretrain_baseline(**common)
    if stage == TrainStage.PRETRAIN_NO_SNR_ADAPT:
        return training.pretrain_no_snr_adapt(**common)
    if stage == TrainStage.NAIVE_FINETUNE:
        return training.naive_finetune(stores[TrainStage.PRETRAIN_BASELINE], **common)
    if stage == TrainStage.TEACHER:
        return training.train_teacher(stores[TrainStage.PRETRAIN_BASELINE], **common)
    if stage == TrainStage.STAGE1:
        return training.stage1(stores[TrainStage.PRETRAIN_BASELINE], **common)
    return training.stage2(stores[TrainStage.STAGE1], stores[TrainStage.TEACHER], **common)


def _log_final_loss(stage: TrainStage, log_path: pathlib.Path) -> None:
    if not log_path.exists():
        return
    history = training.read_training_log(log_path)
    if history:
        logger.info(
            "%s finished after %d steps with loss %.5f", stage.value, len(history), history[-1].loss
        )


def run_pipeline(
    config: RunConfig,
    output_dir: pathlib.Path,
    images: np.ndarray,
    stages: Optional[Sequence[TrainStage]] = None,
    force: bool = False,
) -> Dict[TrainStage, pathlib.Path]:
    """Train the requested stages and return the checkpoint directory of each."""
    training_hash = config.training_hash()
    stores: Dict[TrainStage, ParameterStore] = {}
    checkpoints: Dict[TrainStage, pathlib.Path] = {}

    for stage in resolve_stages(stages if stages is not None else config.train.stages):
        checkpoint_dir = outputs.generate_stage_dir(output_dir, stage)
        log_path = outputs.generate_log_path(output_dir, stage)

        if _completed(checkpoint_dir, training_hash, force):
            logger.warning("Skipping %s, checkpoint at %s is up to date", stage.value, checkpoint_dir)
            _log_final_loss(stage, log_path)
            stores[stage] = load_checkpoint(checkpoint_dir, training_hash).store
        else:
            outcome = _run_stage(stage, config, stores, images, log_path)
            save_checkpoint(
                outcome.store,
                checkpoint_dir,
                stage,
                config.model.with_variant(STAGE_VARIANT[stage]),
                training_hash,
            )
            stores[stage] = outcome.store

        checkpoints[stage] = checkpoint_dir

    return checkpoints
