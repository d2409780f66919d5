"""Helper methods for managing data for each stage"""

import pathlib
from typing import Iterator, Optional

from .common import STAGE_LOG_SUFFIX, STAGE_OUTPUT_NAME, TrainStage

CHECKPOINTS_DIR_NAME = "checkpoints"
LOGS_DIR_NAME = "logs"
REPORTS_DIR_NAME = "reports"


def generate_stage_dir(base_output_dir: pathlib.Path, stage: TrainStage) -> pathlib.Path:
    """Generate checkpoint path for a training stage."""
    return base_output_dir / CHECKPOINTS_DIR_NAME / STAGE_OUTPUT_NAME[stage]


def generate_log_path(base_output_dir: pathlib.Path, stage: TrainStage) -> pathlib.Path:
    """Generate path of the line-delimited training log of a stage."""
    return base_output_dir / LOGS_DIR_NAME / f"{STAGE_OUTPUT_NAME[stage]}{STAGE_LOG_SUFFIX}"


def generate_report_dir(base_output_dir: pathlib.Path) -> pathlib.Path:
    return base_output_dir / REPORTS_DIR_NAME


def iter_data_paths(
    data_dir: pathlib.Path, suffix: Optional[str] = None
) -> Iterator[pathlib.Path]:
    """Return paths to data files in data_dir with suffix, sorted by name.

    Directories and files that start with `_` or `.` are ignored.
    """
    for filepath in sorted(data_dir.iterdir()):
        if filepath.name.startswith("_") or filepath.name.startswith("."):
            continue

        if filepath.is_dir():
            continue

        if suffix and not filepath.name.endswith(suffix):
            continue

        yield filepath


def copy_files(src_dir: pathlib.Path, dst_dir: pathlib.Path) -> None:
    """Copy all files in src_dir to dst_dir.

    Directories and files that start with `_` or `.` are ignored.
    """
    dst_dir.mkdir(parents=True, exist_ok=True)

    for filepath in iter_data_paths(src_dir):
        with filepath.open("rb") as src_file:
            with (dst_dir / filepath.name).open("wb") as dst_file:
                for content in src_file:
                    dst_file.write(content)
