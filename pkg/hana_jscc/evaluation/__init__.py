from .metrics import PSNR_CAP_DB, batch_psnr, mse, psnr
from .report import ReportFormat, emit_all, emit_report, read_report, write_curves
from .sweep import (
    CONDITION_STAGE,
    SweepCell,
    SweepMetadata,
    SweepReport,
    build_metadata,
    evaluate_condition,
    run_sweep,
)
from .trends import TrendVerdict, Verdict, compare_trends, hypotheses_for, verdict_table

__all__ = [
    "CONDITION_STAGE",
    "PSNR_CAP_DB",
    "ReportFormat",
    "SweepCell",
    "SweepMetadata",
    "SweepReport",
    "TrendVerdict",
    "Verdict",
    "batch_psnr",
    "build_metadata",
    "compare_trends",
    "emit_all",
    "emit_report",
    "evaluate_condition",
    "hypotheses_for",
    "mse",
    "psnr",
    "read_report",
    "run_sweep",
    "verdict_table",
    "write_curves",
]
