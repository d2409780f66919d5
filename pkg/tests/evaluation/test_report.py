import pathlib

import pandas as pd
import pytest

from hana_jscc.config import Condition
from hana_jscc.errors import ResourceError
from hana_jscc.evaluation import report


def test_emit_all(ordered_report, tmpdir):
    output_dir = pathlib.Path(tmpdir) / "reports"

    paths = report.emit_all(ordered_report, output_dir)

    assert set(paths) == {"csv", "json", "snr", "sigma_e"}
    assert all(path.exists() for path in paths.values())


def test_csv(ordered_report, tmpdir):
    path = report.emit_report(
        ordered_report, pathlib.Path(tmpdir) / "sweep.csv", report.ReportFormat.CSV
    )

    frame = pd.read_csv(path)

    assert list(frame.columns) == report.CSV_COLUMNS
    assert len(frame) == len(ordered_report.cells)
    assert set(frame["condition"]) == {condition.value for condition in Condition}


def test_json_round_trip(ordered_report, tmpdir):
    path = report.emit_report(
        ordered_report, pathlib.Path(tmpdir) / "sweep.json", report.ReportFormat.JSON
    )

    assert report.read_report(path) == ordered_report


def test_missing_report(tmpdir):
    with pytest.raises(ResourceError):
        report.read_report(pathlib.Path(tmpdir) / "sweep.json")


def test_curves(ordered_report, tmpdir):
    paths = report.write_curves(ordered_report, pathlib.Path(tmpdir))

    snr_lines = paths["snr"].read_text().splitlines()
    assert snr_lines[0].startswith("# snr_db ")
    assert len(snr_lines) == 1 + 2
    assert len(snr_lines[1].split()) == 1 + len(Condition)

    sigma_lines = paths["sigma_e"].read_text().splitlines()
    assert sigma_lines[0].startswith("# sigma_e ")
    assert [float(line.split()[0]) for line in sigma_lines[1:]] == [0.01, 0.05]


def test_curves_at_the_configured_slice(ordered_report, tmpdir):
    paths = report.write_curves(ordered_report, pathlib.Path(tmpdir))

    header, first, _ = paths["snr"].read_text().splitlines()
    columns = header[2:].split()
    values = dict(zip(columns, first.split()))

    # snr 0, sigma_e 0.05, averaged over seeds 0 and 1
    assert float(values["perfect"]) == pytest.approx(30.0 - 1.0 + 0.05)


def test_empty_report(ordered_report, tmpdir):
    empty = ordered_report.copy(update={"cells": []})

    assert report.write_curves(empty, pathlib.Path(tmpdir)) == {}
    path = report.emit_report(empty, pathlib.Path(tmpdir) / "sweep.csv", report.ReportFormat.CSV)
    assert path.read_text().strip() == ",".join(report.CSV_COLUMNS)
