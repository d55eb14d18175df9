"""Tests for the 2D heat benchmark model."""

import numpy as np
import pytest

from heat2d.heat_plant import (
    HeatModelConfig,
    benchmark_exosystem,
    benchmark_reference,
    build_heat_plant,
    temperature_field,
    transfer_convergence,
)
from numerics.errors import ValidationError
from numerics.linalg import eigvals, is_hurwitz


class TestHeatMatrices:
    """Test the Galerkin matrices."""

    def test_input_entries(self, heat):
        """Test closed-form boundary integrals of the first modes."""
        B = heat.raw.B
        N = heat.config.modes
        assert B[0, 0] == pytest.approx(0.5)
        assert B[0, 1] == pytest.approx(0.5)
        assert B[N, 0] == pytest.approx(np.sqrt(2.0) / np.pi)
        assert B[N, 1] == pytest.approx(-np.sqrt(2.0) / np.pi)
        # sin(pi) = 0 for m = 2
        assert B[2 * N, 0] == pytest.approx(0.0, abs=1e-15)

    def test_output_is_scaled_adjoint(self, heat):
        """Test C = 2 B^T."""
        assert np.allclose(heat.raw.C, 2.0 * heat.raw.B.T)

    def test_diagonal_generator(self, heat):
        """Test A at index m N + n equals -(m^2 + n^2) pi^2."""
        N = heat.config.modes
        assert heat.raw.A[N + 1, N + 1] == pytest.approx(-2.0 * np.pi ** 2)
        assert heat.raw.A[3 * N + 2, 3 * N + 2] == pytest.approx(-13.0 * np.pi ** 2)
        assert np.count_nonzero(heat.raw.A - np.diag(np.diag(heat.raw.A))) == 0

    def test_raw_has_zero_eigenvalue(self, heat):
        """Test that the uncontrolled model is only marginally stable."""
        assert np.min(np.abs(eigvals(heat.raw.A))) == pytest.approx(0.0, abs=1e-12)
        assert not is_hurwitz(heat.raw.A)

    @pytest.mark.parametrize("modes", [4, 8, 12, 16])
    def test_stabilized_is_hurwitz(self, modes):
        """Test that u = -y + u_new stabilizes every truncation."""
        plant = build_heat_plant(HeatModelConfig(modes=modes, kappa=1.0))
        assert plant.stabilized.n == modes * modes
        assert is_hurwitz(plant.stabilized.A)

    def test_labels(self, heat):
        """Test that states are labelled by mode."""
        assert heat.raw.state_labels[heat.config.modes + 2] == "mode(1,2)"
        assert heat.raw.output_labels == ["y1", "y2"]

    def test_invalid_config(self):
        """Test that zero modes and negative gains are rejected."""
        with pytest.raises(ValidationError):
            HeatModelConfig(modes=0)
        with pytest.raises(ValidationError):
            HeatModelConfig(modes=4, kappa=-1.0)


class TestBenchmarkSignals:
    """Test the reference generator and field reconstruction."""

    def test_exosystem(self, heat_exo, heat):
        """Test frequencies (-pi, 0, pi) and the output generator."""
        assert np.allclose(heat_exo.frequencies, [-np.pi, 0.0, np.pi])
        assert heat_exo.E.shape == (heat.stabilized.n, 3)
        assert heat_exo.is_diagonal

    def test_reference_matches_exosystem(self, heat_exo):
        """Test that -F e^{S t} v0 equals (-1, cos pi t)."""
        t = np.linspace(0.0, 4.0, 17)
        expected = benchmark_reference(t)
        assert expected.shape == (2, 17)
        for i, ti in enumerate(t):
            assert np.allclose(heat_exo.reference(ti, np.ones(3)), expected[:, i], atol=1e-12)

    def test_constant_mode_field(self):
        """Test that the (0, 0) mode is a uniform field."""
        x = np.zeros(16)
        x[0] = 2.5
        xi1, xi2, T = temperature_field(x, 4, grid=11)
        assert T.shape == (11, 11)
        assert xi1[0] == 0.0 and xi2[-1] == 1.0
        assert np.allclose(T, 2.5)

    def test_first_horizontal_mode(self):
        """Test that mode (1, 0) varies along xi1 only."""
        x = np.zeros(9)
        x[3] = 1.0
        xi1, _, T = temperature_field(x, 3, grid=5)
        assert np.allclose(T[:, 0], np.sqrt(2.0) * np.cos(np.pi * xi1))
        assert np.allclose(T, T[:, [0]])

    def test_field_size_mismatch(self):
        """Test that a state of the wrong length is rejected."""
        with pytest.raises(ValidationError):
            temperature_field(np.zeros(10), 3)

    def test_transfer_convergence(self):
        """Test the truncation comparison table."""
        table = transfer_convergence(6, 12)
        assert list(table.columns) == [
            "frequency", "modes", "modes_check", "norm_P", "norm_P_check", "difference",
        ]
        assert len(table) == 3
        assert (table["difference"] < table["norm_P"]).all()
