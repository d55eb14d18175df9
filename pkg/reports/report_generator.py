"""
Report Generator
================
Orchestrates CSV, SVG and JSON summary output for a CLI run.

Usage:
    generator = ReportGenerator(config, output_dir="out")
    files = generator.generate_all(summary, result=result, sweep=report)
"""

import logging
import os
from typing import Any, Dict, List, Optional

from reports.csv_reporter import CSVReporter
from reports.visual_reporter import VisualReporter
from sysmodel.serialization import write_json

logger = logging.getLogger(__name__)


class ReportGenerator:
    """
    Runs the CSV and visual reporters and writes the summary JSON.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None, output_dir: Optional[str] = None):
        """
        Args:
            config: Configuration dict. Keys under 'reports':
                - output_dir: Base directory (overridden by `output_dir`)
                - generate_csv / generate_charts: Enable each reporter
                - chart_style: Matplotlib style
            output_dir: Directory for this run; CSV and SVG files go to
                its csv/ and charts/ subdirectories.
        """
        reports_config = (config or {}).get("reports", {})
        self.output_dir = output_dir or reports_config.get("output_dir", "reports/output")
        self.generate_csv = reports_config.get("generate_csv", True)
        self.generate_charts = reports_config.get("generate_charts", True)
        os.makedirs(self.output_dir, exist_ok=True)

        csv_dir = os.path.join(self.output_dir, reports_config.get("csv_dir", "csv"))
        charts_dir = os.path.join(self.output_dir, reports_config.get("charts_dir", "charts"))
        style = reports_config.get("chart_style", "default")
        self.csv_reporter = CSVReporter(csv_dir) if self.generate_csv else None
        self.visual_reporter = VisualReporter(charts_dir, style) if self.generate_charts else None

    def generate_all(
        self,
        summary: Dict[str, Any],
        result=None,
        sweep=None,
        field=None,
        tables: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, List[str]]:
        """
        Generate all configured reports.

        Args:
            summary: JSON-safe summary dict, written to summary.json.
            result: SimResult to write as trajectory CSV and charts.
            sweep: RobustnessReport to write as sweep CSV.
            field: (xi1, xi2, T, t) of a temperature field to plot.
            tables: Named DataFrames written as <name>.csv.

        Returns:
            Dictionary mapping report type to list of generated file paths.
        """
        generated_files: Dict[str, List[str]] = {"csv": [], "charts": [], "json": []}

        if self.csv_reporter:
            if result is not None:
                generated_files["csv"].append(self.csv_reporter.write_trajectory(result))
            if sweep is not None:
                path = self.csv_reporter.write_sweep_report(sweep)
                if path:
                    generated_files["csv"].append(path)
            for name, frame in (tables or {}).items():
                generated_files["csv"].append(self.csv_reporter.write_frame(frame, f"{name}.csv"))

        if self.visual_reporter:
            if result is not None:
                generated_files["charts"].append(self.visual_reporter.plot_outputs(result))
                generated_files["charts"].append(self.visual_reporter.plot_error_norm(result))
            if field is not None:
                xi1, xi2, T, t = field
                generated_files["charts"].append(self.visual_reporter.plot_temperature_field(xi1, xi2, T, t))

        generated_files["json"].append(write_json(os.path.join(self.output_dir, "summary.json"), summary))

        total_files = sum(len(v) for v in generated_files.values())
        logger.info(f"Report generation complete: {total_files} files generated")
        return generated_files
