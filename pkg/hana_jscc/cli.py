#!/usr/bin/env python

"""
Entry point for training and evaluating the HANA-JSCC codec
"""
import enum
import functools
import os
import pathlib
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import click
import dotenv
import numpy as np
import sentry_sdk

from hana_jscc.utils.log import getLogger

from . import errors
from .channel import sample_channel_realization
from .config import Condition, RunConfig, load_config
from .diagnostics import run_gradient_suite
from .engine import Tensor, no_grad
from .evaluation import (
    CONDITION_STAGE,
    build_metadata,
    compare_trends,
    emit_all,
    hypotheses_for,
    psnr,
    run_sweep,
    verdict_table,
)
from .ingestors.images import fit_image, load_images, read_netpbm
from .model import HanaJSCC
from .stages import outputs, pipeline
from .stages.checkpoint import load_checkpoint
from .stages.common import TrainStage

logger = getLogger(__file__)

VERSION = "0.1.0"


@enum.unique
class ExitCode(enum.IntEnum):
    OK = 0
    TRAINING = 1
    USAGE = 2
    CONFIG = 3
    RESOURCE = 4
    CHECKPOINT_MISMATCH = 5
    INGESTION = 6
    GRADCHECK_FAILED = 7
    NUMERIC = 8


# First match wins, so subclasses come before their bases
ERROR_EXIT_CODES: List[Tuple[type, ExitCode]] = [
    (errors.TrainingDivergenceError, ExitCode.TRAINING),
    (errors.CheckpointMismatchError, ExitCode.CHECKPOINT_MISMATCH),
    (errors.IngestionError, ExitCode.INGESTION),
    (errors.InputRangeError, ExitCode.INGESTION),
    (errors.ResourceError, ExitCode.RESOURCE),
    (errors.TrendValidationError, ExitCode.RESOURCE),
    (errors.ConfigurationError, ExitCode.CONFIG),
    (errors.DimensionError, ExitCode.CONFIG),
    (errors.NumericDomainError, ExitCode.NUMERIC),
    (errors.ConvergenceError, ExitCode.NUMERIC),
    (errors.DegenerateInputError, ExitCode.NUMERIC),
    (errors.ContractError, ExitCode.NUMERIC),
    (errors.HanaError, ExitCode.TRAINING),
]


def exit_code_for(error: errors.HanaError) -> ExitCode:
    for error_type, code in ERROR_EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return ExitCode.TRAINING


def _exit_on_error(command: Callable) -> Callable:
    """Log library errors and exit with the code of their family."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except errors.HanaError as e:
            code = exit_code_for(e)
            logger.error("%s failed (%s): %s", command.__name__, code.name.lower(), e)
            click.get_current_context().exit(int(code))

    return wrapper


def _path_or_none(ctx, param, value) -> Optional[pathlib.Path]:
    return pathlib.Path(value) if value else None


def _parse_stages(ctx, param, value) -> Optional[List[TrainStage]]:
    """Parameter callback turning a comma-separated stage list into stages."""
    stages = []
    for item in (value or "").split(","):
        if not item.strip():
            continue
        try:
            stages.append(TrainStage(item.strip().lower()))
        except ValueError:
            choices = ", ".join(stage.value for stage in TrainStage)
            raise click.BadParameter(f"unknown stage {item.strip()!r}, pick from {choices}")
    return stages or None


def _parse_checkpoints(ctx, param, values) -> Dict[Condition, pathlib.Path]:
    """Parameter callback turning CONDITION=PATH pairs into a mapping."""
    checkpoints = {}
    for value in values:
        name, sep, path = value.partition("=")
        if not sep or not path:
            raise click.BadParameter(f"expected CONDITION=PATH, got {value!r}")
        try:
            checkpoints[Condition(name.strip().lower())] = pathlib.Path(path)
        except ValueError:
            choices = ", ".join(condition.value for condition in Condition)
            raise click.BadParameter(f"unknown condition {name!r}, pick one of {choices}")
    return checkpoints


# --- Common Click options --- #


def _config_option() -> Callable:
    return click.option(
        "--config",
        "config_path",
        type=str,
        default=None,
        callback=_path_or_none,
        help="YAML run config; built-in defaults when omitted",
    )


def _output_dir_option() -> Callable:
    return click.option(
        "--out",
        "output_dir",
        type=str,
        default=lambda: os.environ.get("HANA_OUTPUT_DIR", ""),
        callback=_path_or_none,
        help="Overrides output_dir of the config",
    )


def _seed_option() -> Callable:
    return click.option(
        "--seed",
        "seed",
        type=int,
        default=None,
        help="Overrides master_seed of the config",
    )


def _force_option() -> Callable:
    return click.option("--force/--no-force", type=bool, default=False)


def _checkpoint_option() -> Callable:
    return click.option(
        "--checkpoint",
        "checkpoints",
        type=str,
        multiple=True,
        callback=_parse_checkpoints,
        help="CONDITION=PATH, repeatable; defaults to the stage checkpoints under --out",
    )


def _stages_option() -> Callable:
    return click.option(
        "--stages",
        type=str,
        default="",
        callback=_parse_stages,
        help="Comma-separated stages to train along with their dependencies",
    )


def _resolve_run(
    config_path: Optional[pathlib.Path],
    seed: Optional[int],
    output_dir: Optional[pathlib.Path],
) -> Tuple[RunConfig, pathlib.Path]:
    config = load_config(config_path) if config_path is not None else RunConfig()
    if seed is not None:
        config = config.copy(update={"master_seed": seed})
    return config, output_dir or config.output_dir


def _load_models(
    config: RunConfig,
    output_dir: pathlib.Path,
    conditions: Sequence[Condition],
    explicit: Dict[Condition, pathlib.Path],
    force: bool,
) -> Tuple[Dict[Condition, HanaJSCC], Dict[Condition, pathlib.Path]]:
    """One model per condition; conditions sharing a checkpoint share the model."""
    paths = {
        condition: explicit.get(
            condition, outputs.generate_stage_dir(output_dir, CONDITION_STAGE[condition])
        )
        for condition in conditions
    }

    loaded: Dict[pathlib.Path, HanaJSCC] = {}
    models = {}
    for condition, path in paths.items():
        if path not in loaded:
            checkpoint = load_checkpoint(path, config.training_hash(), force=force)
            loaded[path] = HanaJSCC(checkpoint.manifest.model, checkpoint.store)
        models[condition] = loaded[path]

    return models, paths


@click.group()
def cli():
    """Train and evaluate the HANA-JSCC MIMO codec"""
    dotenv.load_dotenv()

    sentry_enabled = os.environ.get("SENTRY_ENABLE", False)
    sentry_path = os.environ.get("SENTRY_DSN")
    if sentry_enabled:
        if sentry_path:
            sentry_sdk.init(
                dsn=sentry_path,
                traces_sample_rate=0.0,
            )
        else:
            logger.error("Sentry enabled but no config provided. Disabling Sentry.")
    else:
        logger.info("Sentry disabled by environment variable.")


@cli.command()
@_config_option()
@_output_dir_option()
@_seed_option()
@_stages_option()
@_force_option()
@_exit_on_error
def train(
    config_path: Optional[pathlib.Path],
    output_dir: Optional[pathlib.Path],
    seed: Optional[int],
    stages: Optional[List[TrainStage]],
    force: bool,
) -> None:
    """Run the training stages, resuming from completed checkpoints."""
    config, output_dir = _resolve_run(config_path, seed, output_dir)
    split = load_images(config.dataset, config.model, config.master_seed)

    checkpoints = pipeline.run_pipeline(config, output_dir, split.train, stages=stages, force=force)

    for stage, path in checkpoints.items():
        click.echo(f"{stage.value} {path}")


@cli.command(name="eval")
@_config_option()
@_checkpoint_option()
@_output_dir_option()
@_seed_option()
@_force_option()
@_exit_on_error
def evaluate(
    config_path: Optional[pathlib.Path],
    checkpoints: Dict[Condition, pathlib.Path],
    output_dir: Optional[pathlib.Path],
    seed: Optional[int],
    force: bool,
) -> None:
    """Sweep every condition over the evaluation grid and check the trends."""
    config, output_dir = _resolve_run(config_path, seed, output_dir)
    grid = config.eval

    models, paths = _load_models(config, output_dir, grid.conditions, checkpoints, force)
    split = load_images(config.dataset, config.model, config.master_seed)

    metadata = build_metadata(grid, config.config_hash(), config.master_seed, paths)
    report = run_sweep(models, grid, split.eval, config.master_seed, metadata)

    report_dir = outputs.generate_report_dir(output_dir)
    for kind, path in emit_all(report, report_dir).items():
        logger.info("Wrote %s to %s", kind, path)

    click.echo(report.summary().to_string())
    verdicts = compare_trends(report, hypotheses_for(grid.conditions))
    click.echo(verdict_table(verdicts).to_string(index=False))


@cli.command()
@click.option("--seed", "seed", type=int, default=0)
@click.option("--entries", "max_entries", type=int, default=4, help="Coordinates probed per tensor")
def gradcheck(seed: int, max_entries: int) -> None:
    """Compare every analytic gradient with central finite differences."""
    result = run_gradient_suite(seed=seed, max_entries=max_entries)

    for check in result.components:
        status = "ok" if check.passed else "FAIL"
        click.echo(
            f"{check.component:<16} {check.max_rel_error:.3e} < {check.tolerance:.0e} {status}"
        )

    if not result.passed:
        click.get_current_context().exit(int(ExitCode.GRADCHECK_FAILED))


@cli.command()
@_config_option()
@_checkpoint_option()
@_output_dir_option()
@_seed_option()
@_force_option()
@click.option(
    "--condition",
    type=click.Choice([condition.value for condition in Condition]),
    default=Condition.HANA.value,
)
@click.option("--snr", "snr_db", type=float, default=6.0)
@click.option("--sigma-e", "sigma_e", type=float, default=0.05)
@click.option("--image", "image_path", type=str, default=None, callback=_path_or_none)
@_exit_on_error
def demo(
    config_path: Optional[pathlib.Path],
    checkpoints: Dict[Condition, pathlib.Path],
    output_dir: Optional[pathlib.Path],
    seed: Optional[int],
    force: bool,
    condition: str,
    snr_db: float,
    sigma_e: float,
    image_path: Optional[pathlib.Path],
) -> None:
    """Send one image through the codec and print its PSNR."""
    config, output_dir = _resolve_run(config_path, seed, output_dir)
    condition = Condition(condition)
    if sigma_e < 0:
        raise errors.ConfigurationError(f"sigma_e must be >= 0, got {sigma_e}")

    models, _ = _load_models(config, output_dir, [condition], checkpoints, force)
    model = models[condition]

    if image_path is not None:
        image = fit_image(read_netpbm(image_path), model.config.image_shape)
    else:
        image = load_images(config.dataset, config.model, config.master_seed).eval[0]
    batch = image[np.newaxis].astype(model.config.dtype)

    realization = sample_channel_realization(
        1,
        model.config.n_rx,
        model.config.n_tx,
        model.config.d,
        snr_db,
        sigma_e**2,
        np.random.default_rng(config.master_seed),
    )
    if condition == Condition.PERFECT:
        realization = realization.perfect()

    with no_grad():
        result = model(Tensor(batch), realization)

    click.echo(
        f"{condition.value} snr={snr_db:g} dB sigma_e={sigma_e:g} "
        f"PSNR {psnr(batch, result.x_hat.data):.3f} dB"
    )


@cli.command()
def version() -> None:
    """Get the library version."""
    click.echo(click.style(VERSION, bold=True))


if __name__ == "__main__":
    cli()
