"""Write sweep reports as CSV, JSON and gnuplot curve files"""

import enum
import pathlib
from typing import Dict, List

import numpy as np
import orjson
import pandas as pd

from ..errors import ResourceError
from ..utils.log import getLogger
from .sweep import SweepReport

logger = getLogger(__file__)

CSV_COLUMNS = ["condition", "snr_db", "sigma_e", "seed", "psnr_db"]
FLOAT_FORMAT = "%.6g"

REPORT_STEM = "sweep"
CURVE_SNR_NAME = "psnr_vs_snr.dat"
CURVE_SIGMA_NAME = "psnr_vs_sigma_e.dat"


@enum.unique
class ReportFormat(str, enum.Enum):
    CSV = "csv"
    JSON = "json"


def emit_report(report: SweepReport, path: pathlib.Path, report_format: ReportFormat) -> pathlib.Path:
    """Write `report` to `path` in the given format and return the path."""
    path.parent.mkdir(parents=True, exist_ok=True)

    if ReportFormat(report_format) == ReportFormat.CSV:
        frame = report.to_frame()
        frame = frame[CSV_COLUMNS] if not frame.empty else pd.DataFrame(columns=CSV_COLUMNS)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    else:
        with path.open("wb") as report_file:
            report_file.write(
                orjson.dumps(orjson.loads(report.json()), option=orjson.OPT_INDENT_2)
            )

    logger.info(
        "Wrote %s report with %d cells to %s",
        ReportFormat(report_format).value,
        len(report.cells),
        path,
    )
    return path


def read_report(path: pathlib.Path) -> SweepReport:
    if not path.exists():
        raise ResourceError(f"No report at {path}")
    return SweepReport.parse_obj(orjson.loads(path.read_bytes()))


def _nearest(values: List[float], target: float, axis: str) -> float:
    if not values:
        return target
    nearest = min(values, key=lambda value: abs(value - target))
    if not np.isclose(nearest, target):
        logger.warning("%s slice %.4g is not on the grid, using %.4g", axis, target, nearest)
    return nearest


def _write_curve(frame: pd.DataFrame, axis: str, path: pathlib.Path) -> None:
    means = frame.groupby(["condition", axis])["psnr_db"].mean().unstack("condition")
    header = " ".join([axis] + [str(column) for column in means.columns])

    with path.open("w") as curve_file:
        curve_file.write(f"# {header}\n")
        means.to_csv(
            curve_file,
            sep=" ",
            header=False,
            float_format=FLOAT_FORMAT,
            na_rep="nan",
        )


def write_curves(report: SweepReport, output_dir: pathlib.Path) -> Dict[str, pathlib.Path]:
    """Gnuplot-ready PSNR curves: against SNR at a fixed sigma_e, and against sigma_e at a fixed SNR.

    Each file has one column per condition, averaged over seeds.
    """
    output_dir.mkdir(parents=True, exist_ok=True)
    frame = report.to_frame()
    if frame.empty:
        return {}

    metadata = report.metadata
    sigma_slice = _nearest(sorted(frame["sigma_e"].unique()), metadata.curve_sigma_e, "sigma_e")
    snr_slice = _nearest(sorted(frame["snr_db"].unique()), metadata.curve_snr_db, "snr_db")

    paths = {
        "snr": output_dir / CURVE_SNR_NAME,
        "sigma_e": output_dir / CURVE_SIGMA_NAME,
    }
    _write_curve(frame[np.isclose(frame["sigma_e"], sigma_slice)], "snr_db", paths["snr"])
    _write_curve(frame[np.isclose(frame["snr_db"], snr_slice)], "sigma_e", paths["sigma_e"])
    return paths


def emit_all(report: SweepReport, output_dir: pathlib.Path) -> Dict[str, pathlib.Path]:
    """CSV, JSON and both curve files under `output_dir`."""
    paths = {
        "csv": emit_report(report, output_dir / f"{REPORT_STEM}.csv", ReportFormat.CSV),
        "json": emit_report(report, output_dir / f"{REPORT_STEM}.json", ReportFormat.JSON),
    }
    paths.update(write_curves(report, output_dir))
    return paths
