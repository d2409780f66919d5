"""Paired PSNR sweeps over SNR and channel-estimation error

For a given master seed every condition is evaluated on the same images and
the same unit-variance draws of H_p, the estimation error and N. Grid
points only rescale those draws (by sigma_e and by the noise level), so
differences between conditions, and between neighbouring grid points, are
paired comparisons.
"""

import pathlib
from typing import Dict, List, Mapping, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, validator
from sentry_sdk import set_tag

from ..channel import sample_channel_realization
from ..config import Condition, EvalGrid
from ..engine import Tensor, no_grad
from ..errors import ConfigurationError
from ..ingestors.images import iter_image_batches
from ..model import HanaJSCC
from ..stages.common import TrainStage
from ..utils.log import getLogger
from ..utils.misc import derive_rng
from .metrics import batch_psnr

logger = getLogger(__file__)

SIGNIFICANT_DIGITS = 6

# Checkpoint behind each condition
CONDITION_STAGE = {
    Condition.PERFECT: TrainStage.TEACHER,
    Condition.DIRECT: TrainStage.TEACHER,
    Condition.NAIVE_FT: TrainStage.NAIVE_FINETUNE,
    Condition.HANA: TrainStage.STAGE2,
    Condition.HANA_NO_DISTILL: TrainStage.STAGE1,
    Condition.NO_SNR_ADAPT: TrainStage.PRETRAIN_NO_SNR_ADAPT,
}

# Conditions evaluated with the estimate replaced by the true channel
PERFECT_CSI_CONDITIONS = {Condition.PERFECT}


def round_significant(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    if not np.isfinite(value):
        return float(value)
    return float(f"{value:.{digits}g}")


class SweepCell(BaseModel):
    condition: Condition
    snr_db: float
    sigma_e: float
    seed: int
    psnr_db: float
    psnr_std: float
    samples: int

    @validator("snr_db", "sigma_e", "psnr_db", "psnr_std")
    def _round(cls, value):
        return round_significant(value)


class SweepMetadata(BaseModel):
    config_hash: str
    master_seed: int
    seeds: List[int]
    snr_db: List[float]
    sigma_e: List[float]
    sigma_e_sq_rule: str = "sigma_e_sq = sigma_e ** 2"
    curve_sigma_e: float
    curve_snr_db: float
    images_per_cell: int
    realizations: int
    checkpoints: Dict[str, str] = {}


class SweepReport(BaseModel):
    metadata: SweepMetadata
    cells: List[SweepCell] = []

    @property
    def conditions(self) -> List[Condition]:
        seen: List[Condition] = []
        for cell in self.cells:
            if cell.condition not in seen:
                seen.append(cell.condition)
        return seen

    def to_frame(self) -> pd.DataFrame:
        columns = list(SweepCell.__fields__)
        if not self.cells:
            return pd.DataFrame(columns=columns)
        frame = pd.DataFrame([cell.dict() for cell in self.cells], columns=columns)
        frame["condition"] = frame["condition"].map(lambda condition: Condition(condition).value)
        return frame

    def summary(self) -> pd.DataFrame:
        """Mean, std and count of the per-seed PSNR for each grid point."""
        frame = self.to_frame()
        if frame.empty:
            return pd.DataFrame(columns=["condition", "snr_db", "sigma_e", "mean", "std", "count"])
        return (
            frame.groupby(["condition", "snr_db", "sigma_e"])["psnr_db"]
            .agg(["mean", "std", "count"])
            .reset_index()
        )


def build_metadata(
    grid: EvalGrid,
    config_hash: str,
    master_seed: int,
    checkpoints: Optional[Mapping[Condition, pathlib.Path]] = None,
) -> SweepMetadata:
    return SweepMetadata(
        config_hash=config_hash,
        master_seed=master_seed,
        seeds=grid.seeds,
        snr_db=grid.snr_db,
        sigma_e=grid.sigma_e,
        curve_sigma_e=grid.curve_sigma_e,
        curve_snr_db=grid.curve_snr_db,
        images_per_cell=grid.images_per_cell,
        realizations=grid.realizations,
        checkpoints={
            Condition(condition).value: str(path) for condition, path in (checkpoints or {}).items()
        },
    )


def _cell_images(images: np.ndarray, count: int) -> np.ndarray:
    if len(images) == 0:
        raise ConfigurationError("evaluation needs at least one image")
    if len(images) < count:
        logger.warning("Only %d evaluation images for %d per cell; reusing images", len(images), count)
        images = np.resize(images, (count,) + images.shape[1:])
    return images[:count]


def evaluate_cell(
    model: HanaJSCC,
    condition: Condition,
    images: np.ndarray,
    snr_db: float,
    sigma_e: float,
    seed: int,
    master_seed: int,
    realizations: int,
    batch_size: int,
) -> np.ndarray:
    """Per-image PSNR for every realization of one grid point."""
    config = model.config
    scores = []

    with no_grad():
        for realization_index in range(realizations):
            batches = iter_image_batches(images, batch_size, seed, shuffle=False)
            for batch_index, batch in enumerate(batches):
                batch = batch.astype(config.dtype)
                rng = derive_rng(master_seed, seed, realization_index, batch_index)
                realization = sample_channel_realization(
                    len(batch),
                    config.n_rx,
                    config.n_tx,
                    config.d,
                    snr_db,
                    sigma_e**2,
                    rng,
                    seed=seed,
                )
                if condition in PERFECT_CSI_CONDITIONS:
                    realization = realization.perfect()

                result = model.forward(Tensor(batch), realization)
                scores.append(batch_psnr(batch, result.x_hat.data))

    return np.concatenate(scores)


def evaluate_condition(
    model: HanaJSCC,
    condition: Condition,
    grid: EvalGrid,
    images: np.ndarray,
    master_seed: int,
    metadata: Optional[SweepMetadata] = None,
) -> SweepReport:
    """Sweep one condition over every (snr, sigma_e, seed) cell of `grid`."""
    condition = Condition(condition)
    set_tag("hana.condition", condition.value)

    cell_images = _cell_images(images, grid.images_per_cell)
    cells = []

    for snr_db in grid.snr_db:
        for sigma_e in grid.sigma_e:
            for seed in grid.seeds:
                scores = evaluate_cell(
                    model,
                    condition,
                    cell_images,
                    snr_db,
                    sigma_e,
                    seed,
                    master_seed,
                    grid.realizations,
                    grid.batch_size,
                )
                cells.append(
                    SweepCell(
                        condition=condition,
                        snr_db=snr_db,
                        sigma_e=sigma_e,
                        seed=seed,
                        psnr_db=float(np.mean(scores)),
                        psnr_std=float(np.std(scores)),
                        samples=int(scores.size),
                    )
                )

            logger.info(
                "%s snr=%.1f dB sigma_e=%.3f mean PSNR %.3f dB",
                condition.value,
                snr_db,
                sigma_e,
                np.mean([cell.psnr_db for cell in cells[-len(grid.seeds) :]]),
            )

    if metadata is None:
        metadata = build_metadata(grid, config_hash="", master_seed=master_seed)
    return SweepReport(metadata=metadata, cells=cells)


def run_sweep(
    models: Mapping[Condition, HanaJSCC],
    grid: EvalGrid,
    images: np.ndarray,
    master_seed: int,
    metadata: SweepMetadata,
) -> SweepReport:
    """Evaluate every condition of `grid` and merge the cells into one report."""
    cells: List[SweepCell] = []
    for condition in grid.conditions:
        report = evaluate_condition(models[condition], condition, grid, images, master_seed, metadata)
        cells.extend(report.cells)
    return SweepReport(metadata=metadata, cells=cells)
