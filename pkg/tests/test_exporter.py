import csv
import io
import math

from mpcc_newton.exporter import CSV_COLUMNS, format_summary, records_to_csv, write_csv
from mpcc_newton.harness import summarize
from mpcc_newton.model import RunRecord


def _records():
    return [
        RunRecord(0, 11, "converged_residual", 7, 0.125, 0.0078125, 0.5, "M", 1.23456),
        RunRecord(1, 12, "stationary_merit", 40, 0.25, 8e-10, math.nan, "weakly", 3.0),
        RunRecord(2, 13, "error", 0, math.nan, math.nan, math.nan, "", 0.0, "boom"),
    ]


def test_csv_header_and_rows():
    rows = list(csv.reader(io.StringIO(records_to_csv(_records()))))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1] == ["0", "11", "converged_residual", "7", "0.125",
                       "0.0078125", "0.5", "M", "1.235"]
    assert rows[2][6] == "nan"
    assert rows[3][2] == "error"
    assert len(rows) == 4


def test_floats_round_trip_exactly():
    rows = list(csv.reader(io.StringIO(records_to_csv(_records()))))
    assert float(rows[1][5]) == 0.0078125
    assert float(rows[2][4]) == 0.25


def test_write_csv(tmp_path):
    path = tmp_path / "runs.csv"
    write_csv(_records(), str(path))
    assert path.read_text(encoding="utf-8") == records_to_csv(_records())


def test_summary_statistics():
    summary = summarize("toy", _records())
    assert summary.runs == 3
    assert summary.converged == 1
    assert summary.stationary == 1
    assert summary.errors == 1
    assert summary.mean_iterations == 23.5
    assert summary.median_iterations == 23.5
    assert summary.mean_error == 0.5
    assert summary.label_counts == {"M": 1, "weakly": 1}
    text = format_summary(summary)
    assert "converged          1 (33.3%)" in text
    assert "status             converged_residual=1, error=1, stationary_merit=1" in text
