"""Tests for the CSV and visual reporting modules."""

import json
import os

import numpy as np
import pandas as pd
import pytest

from controllers.minimal import minimal_controller
from heat2d.heat_plant import temperature_field
from reports.csv_reporter import CSVReporter
from reports.report_generator import ReportGenerator
from reports.visual_reporter import VisualReporter
from simulation.robustness import RobustnessReport, SampleOutcome
from simulation.simulator import simulate
from sysmodel.state_space import assemble_closed_loop


@pytest.fixture
def scalar_result(scalar_plant, scalar_exo):
    """Short simulation of the scalar example."""
    ctrl = minimal_controller(scalar_plant, scalar_exo, 0.25)
    cl = assemble_closed_loop(scalar_plant, ctrl, scalar_exo)
    return simulate(cl, scalar_exo, t_final=2.0, dt=0.5)


@pytest.fixture
def sweep_report():
    """Two in-class samples and one out-of-class sample."""
    return RobustnessReport(delta=0.1, threshold=0.05, seed=0, outcomes=[
        SampleOutcome(index=0, hurwitz=True, abscissa=-0.4, admissible=True,
                      alpha=0.45, terminal_error=1e-4, below_threshold=True),
        SampleOutcome(index=1, hurwitz=False, abscissa=0.2, admissible=True),
        SampleOutcome(index=2, hurwitz=True, abscissa=-0.1, admissible=True,
                      alpha=0.01, terminal_error=0.3, below_threshold=False),
    ])


class TestCSVReporter:
    """Test CSVReporter file generation."""

    def test_write_trajectory(self, temp_dir, scalar_result):
        """Test the trajectory header and one row per sample."""
        reporter = CSVReporter(os.path.join(temp_dir, "csv"))
        path = reporter.write_trajectory(scalar_result)
        assert path.endswith("trajectory.csv")
        with open(path) as f:
            lines = f.read().splitlines()
        assert lines[0] == "t,y1,yref1,e1"
        assert len(lines) == 6  # header + 5 samples
        assert lines[1].split(",")[:3] == ["0.0", "0.0", "1.0"]

    def test_trajectory_round_trip_floats(self, temp_dir, scalar_result):
        """Test that written values parse back exactly."""
        reporter = CSVReporter(os.path.join(temp_dir, "csv"))
        frame = pd.read_csv(reporter.write_trajectory(scalar_result), float_precision="round_trip")
        assert np.array_equal(frame["e1"].to_numpy(), np.real(scalar_result.error[:, 0]))

    def test_write_sweep_report(self, temp_dir, sweep_report):
        """Test that out-of-class samples have empty tracking cells."""
        reporter = CSVReporter(os.path.join(temp_dir, "csv"))
        frame = pd.read_csv(reporter.write_sweep_report(sweep_report))
        assert len(frame) == 3
        assert frame["tracks"].isna().tolist() == [False, True, False]
        assert frame.loc[0, "terminal_error"] == pytest.approx(1e-4)

    def test_empty_sweep(self, temp_dir):
        """An empty sweep should not create a file."""
        reporter = CSVReporter(os.path.join(temp_dir, "csv"))
        report = RobustnessReport(delta=0.1, threshold=0.05, seed=0)
        assert reporter.write_sweep_report(report) == ""

    def test_write_frame(self, temp_dir):
        """Test writing an arbitrary table."""
        reporter = CSVReporter(os.path.join(temp_dir, "csv"))
        path = reporter.write_frame(pd.DataFrame({"frequency": [0.0, 1.0], "difference": [0.1, 0.2]}), "table.csv")
        with open(path) as f:
            assert f.readline().strip() == "frequency,difference"

    def test_repeat_is_identical(self, temp_dir, scalar_result):
        """Test that rewriting the same result gives the same bytes."""
        reporter = CSVReporter(os.path.join(temp_dir, "csv"))
        with open(reporter.write_trajectory(scalar_result), "rb") as f:
            first = f.read()
        with open(reporter.write_trajectory(scalar_result), "rb") as f:
            assert f.read() == first


class TestVisualReporter:
    """Test VisualReporter chart generation."""

    def test_plot_outputs(self, temp_dir, scalar_result):
        """Test the output chart."""
        reporter = VisualReporter(os.path.join(temp_dir, "charts"))
        path = reporter.plot_outputs(scalar_result)
        assert os.path.exists(path)
        assert path.endswith("outputs.svg")

    def test_plot_error_norm(self, temp_dir, scalar_result):
        """Test the log-scale error chart."""
        reporter = VisualReporter(os.path.join(temp_dir, "charts"))
        path = reporter.plot_error_norm(scalar_result)
        with open(path) as f:
            assert "<svg" in f.read()

    def test_plot_temperature_field(self, temp_dir):
        """Test the temperature contour."""
        reporter = VisualReporter(os.path.join(temp_dir, "charts"))
        x = np.zeros(9)
        x[0], x[4] = 1.0, 0.5
        xi1, xi2, T = temperature_field(x, 3, grid=9)
        path = reporter.plot_temperature_field(xi1, xi2, T, 1.0)
        assert os.path.exists(path)


class TestReportGenerator:
    """Test the full report orchestration."""

    def test_generate_all(self, temp_dir, scalar_result, sweep_report):
        """Test that every requested report type is written."""
        generator = ReportGenerator({}, output_dir=temp_dir)
        files = generator.generate_all(
            {"command": "simulate"},
            result=scalar_result,
            sweep=sweep_report,
            tables={"convergence": pd.DataFrame({"a": [1.0]})},
        )
        assert len(files["csv"]) == 3
        assert len(files["charts"]) == 2
        with open(os.path.join(temp_dir, "summary.json")) as f:
            assert json.load(f) == {"command": "simulate"}

    def test_charts_disabled(self, temp_dir, scalar_result):
        """Test that the chart reporter can be switched off."""
        config = {"reports": {"generate_charts": False}}
        files = ReportGenerator(config, output_dir=temp_dir).generate_all({}, result=scalar_result)
        assert files["charts"] == []
        assert os.path.exists(os.path.join(temp_dir, "csv", "trajectory.csv"))
