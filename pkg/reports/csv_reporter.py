"""
CSV Reporter
============
Writes simulation trajectories, sweep outcomes and convergence tables.
File names are fixed (no timestamps) so repeated runs with the same inputs
produce byte-identical files.

Usage:
    reporter = CSVReporter("reports/csv")
    reporter.write_trajectory(result)
    reporter.write_sweep_report(report)
"""

import csv
import logging
import os
from typing import Any, Dict, List

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class CSVReporter:
    """
    Generates CSV files from simulation results.

    Creates separate files for:
        - Trajectory (t, outputs, reference, error)
        - Robustness sweep per-sample outcomes
        - Transfer-function convergence tables
    """

    def __init__(self, output_dir: str = "reports/csv"):
        """
        Args:
            output_dir: Directory to write CSV files to.
        """
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def _write_rows(self, filename: str, fieldnames: List[str], rows: List[Dict[str, Any]]) -> str:
        filepath = os.path.join(self.output_dir, filename)
        with open(filepath, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _cell(value) for key, value in row.items()})
        return filepath

    def write_frame(self, frame: pd.DataFrame, filename: str) -> str:
        """Write a DataFrame with round-trip float formatting."""
        rows = frame.to_dict(orient="records")
        filepath = self._write_rows(filename, [str(c) for c in frame.columns], rows)
        logger.info(f"CSV written: {filepath} ({len(rows)} rows)")
        return filepath

    def write_trajectory(self, result, filename: str = "trajectory.csv") -> str:
        """
        Header t,y1..yp,yref1..yrefp,e1..ep (real parts; _re/_im pairs when complex).

        Args:
            result: SimResult from simulate().

        Returns:
            Path to the generated CSV file.
        """
        frame = result.to_dataframe()
        rows = [
            {col: float(v) for col, v in zip(frame.columns, values)}
            for values in frame.itertuples(index=False, name=None)
        ]
        filepath = self._write_rows(filename, list(frame.columns), rows)
        logger.info(f"Trajectory written: {filepath} ({len(rows)} rows)")
        return filepath

    def write_sweep_report(self, report, filename: str = "sweep.csv") -> str:
        """
        Per-sample outcomes of a robustness sweep.

        Args:
            report: RobustnessReport from robustness_sweep().
        """
        if not report.outcomes:
            logger.warning("No sweep outcomes to write")
            return ""
        fieldnames = ["sample", "hurwitz", "abscissa", "admissible", "alpha", "terminal_error", "tracks"]
        rows = [
            {
                "sample": o.index,
                "hurwitz": o.hurwitz,
                "abscissa": o.abscissa,
                "admissible": o.admissible,
                "alpha": "" if o.alpha is None else o.alpha,
                "terminal_error": "" if o.terminal_error is None else o.terminal_error,
                "tracks": "" if o.tracks is None else o.tracks,
            }
            for o in report.outcomes
        ]
        filepath = self._write_rows(filename, fieldnames, rows)
        logger.info(f"Sweep report written: {filepath} ({len(rows)} rows)")
        return filepath
