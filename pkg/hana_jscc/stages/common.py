"""Shared constants for running the training stages"""

import enum


@enum.unique
class TrainStage(str, enum.Enum):
    """Stages of the training pipeline."""

    PRETRAIN_BASELINE = "pretrain-baseline"
    NAIVE_FINETUNE = "naive-finetune"
    TEACHER = "teacher"
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    PRETRAIN_NO_SNR_ADAPT = "pretrain-no-snr-adapt"


# Execution order; every stage appears after the stages it depends on
STAGE_ORDER = [
    TrainStage.PRETRAIN_BASELINE,
    TrainStage.NAIVE_FINETUNE,
    TrainStage.TEACHER,
    TrainStage.STAGE1,
    TrainStage.STAGE2,
    TrainStage.PRETRAIN_NO_SNR_ADAPT,
]


STAGE_DEPENDENCIES = {
    TrainStage.PRETRAIN_BASELINE: (),
    TrainStage.NAIVE_FINETUNE: (TrainStage.PRETRAIN_BASELINE,),
    TrainStage.TEACHER: (TrainStage.PRETRAIN_BASELINE,),
    TrainStage.STAGE1: (TrainStage.PRETRAIN_BASELINE,),
    TrainStage.STAGE2: (TrainStage.STAGE1, TrainStage.TEACHER),
    TrainStage.PRETRAIN_NO_SNR_ADAPT: (),
}


# Directory name for the checkpoint written by each stage
STAGE_OUTPUT_NAME = {
    TrainStage.PRETRAIN_BASELINE: "baseline",
    TrainStage.NAIVE_FINETUNE: "naive_finetune",
    TrainStage.TEACHER: "teacher",
    TrainStage.STAGE1: "stage1",
    TrainStage.STAGE2: "stage2",
    TrainStage.PRETRAIN_NO_SNR_ADAPT: "no_snr_adapt",
}


# Spawn key for the per-stage random stream
STAGE_SEED_KEY = {stage: index for index, stage in enumerate(STAGE_ORDER)}


STAGE_LOG_SUFFIX = ".train.ndjson"
