"""Tests for the triangular controller family."""

import numpy as np
import pytest

from controllers.stabilize import lqr_gain, output_injection_gain
from controllers.triangular import (
    observer_transfer,
    sylvester_structured_5,
    triangular_controller,
    triangular_controller_diag,
    triangularize_closed_loop,
)
from internal_model.builders import InternalModelSpec, build_jordan_internal_model
from internal_model.certificate import certify_rorp
from numerics.equations import sylvester_kronecker
from numerics.errors import DimensionError, NumericalError, PreconditionError
from numerics.linalg import matrix_norm
from sysmodel.state_space import assemble_closed_loop, transfer_eval


class TestStructuredSylvester:
    """Test the chain-wise solution of H G1 = A_L H + B_L K1."""

    def test_matches_kronecker(self, square_plant, jordan_exo, rng):
        """Test against the dense Kronecker oracle for a Jordan internal model."""
        L1 = output_injection_gain(square_plant.A, square_plant.C)
        A_L = square_plant.A + L1 @ square_plant.C
        B_L = square_plant.B
        spec = InternalModelSpec.from_exosystem(jordan_exo, 2)
        G1 = build_jordan_internal_model(spec)
        K1 = rng.standard_normal((2, spec.dimension))
        H = sylvester_structured_5(A_L, B_L, K1, jordan_exo)
        # H G1 - A_L H = B_L K1
        assert np.allclose(H, sylvester_kronecker(A_L, G1, B_L @ K1), atol=1e-9)

    def test_column_count(self, square_plant, jordan_exo):
        """Test that K1 must have p * r columns."""
        with pytest.raises(DimensionError):
            sylvester_structured_5(square_plant.A - 5 * np.eye(4), square_plant.B, np.ones((2, 4)), jordan_exo)


class TestTriangularController:
    """Test the general triangular construction."""

    def test_jordan_exosystem(self, square_plant, jordan_exo):
        """Test stability, certificate and block triangular structure."""
        ctrl, record = triangular_controller(square_plant, jordan_exo)
        assert ctrl.dimension == 6 + square_plant.n
        cl = assemble_closed_loop(square_plant, ctrl, jordan_exo)
        assert cl.is_hurwitz
        assert record.residual < 1e-10
        cert = certify_rorp(square_plant, ctrl, jordan_exo)
        assert cert.solves_rorp
        assert cert.regulates

        form = triangularize_closed_loop(cl, record)
        assert form.lower_norm <= 1e-9 * matrix_norm(cl.Ae)
        A, B, C = square_plant.A, square_plant.B, square_plant.C
        assert np.allclose(form.diagonal_blocks[0], A + B @ record.K2)
        assert np.allclose(form.diagonal_blocks[1], record.G1 + record.G2 @ record.C1)
        assert np.allclose(form.diagonal_blocks[2], A + record.L1 @ C)

    def test_given_gains(self, square_plant, diagonal_exo):
        """Test that supplied K2 and L1 are used unchanged."""
        K2 = lqr_gain(square_plant.A, square_plant.B, Q=10 * np.eye(4))
        L1 = output_injection_gain(square_plant.A, square_plant.C)
        _, record = triangular_controller(square_plant, diagonal_exo, K2=K2, L1=L1)
        assert np.array_equal(record.K2, K2)
        assert np.array_equal(record.L1, L1)

    def test_non_stabilizing_gain(self, square_plant, diagonal_exo):
        """Test that a non-stabilizing K2 is rejected."""
        with pytest.raises(PreconditionError):
            triangular_controller(square_plant, diagonal_exo, K2=np.zeros((2, 4)))

    def test_record_serializes(self, square_plant, diagonal_exo):
        """Test that the synthesis record is JSON friendly."""
        _, record = triangular_controller(square_plant, diagonal_exo)
        data = record.to_dict()
        assert data["variant"] == "triangular"
        assert len(data["H"]) == square_plant.n


class TestTriangularDiagonal:
    """Test the closed-form diagonal variant."""

    def test_identity_injection(self, square_plant, diagonal_exo):
        """Test that K1 = P_L^+ makes C1 = I and G2 = -I."""
        ctrl, record = triangular_controller_diag(square_plant, diagonal_exo)
        stacked = np.vstack([np.eye(2), np.eye(2)])
        assert np.allclose(record.C1, stacked.T, atol=1e-9)
        assert np.array_equal(record.G2, -stacked)
        cl = assemble_closed_loop(square_plant, ctrl, diagonal_exo)
        assert cl.is_hurwitz
        assert certify_rorp(square_plant, ctrl, diagonal_exo).solves_rorp

    def test_closed_form_matches_identity(self, square_plant, diagonal_exo):
        """Test that -C1* from the Sylvester solution agrees with -I."""
        _, record = triangular_controller_diag(square_plant, diagonal_exo)
        assert record.identity_gap is not None
        assert record.identity_gap < 1e-8
        assert record.to_dict()["identity_gap"] == record.identity_gap

    def test_closed_form_mismatch(self, square_plant, diagonal_exo, mocker):
        """Test that -C1* far from -I is a numerical error."""
        mocker.patch(
            "controllers.triangular.observer_transfer",
            side_effect=lambda *args: 2.0 * observer_transfer(*args),
        )
        with pytest.raises(NumericalError):
            triangular_controller_diag(square_plant, diagonal_exo)

    def test_plant_pseudoinverse(self, square_plant, diagonal_exo):
        """Test G2 = -C1* for K1 = P^+."""
        ctrl, record = triangular_controller_diag(square_plant, diagonal_exo, k1_choice="pseudoinverse")
        assert np.allclose(record.G2, -record.C1.conj().T)
        assert record.identity_gap is None
        assert assemble_closed_loop(square_plant, ctrl, diagonal_exo).is_hurwitz

    def test_observer_transfer_identity(self, square_plant):
        """Test P_L(i w) = (I - C R(i w, A) L1)^-1 P(i w)."""
        L1 = output_injection_gain(square_plant.A, square_plant.C)
        PL = observer_transfer(square_plant, L1, 2.0, 0)
        R = np.linalg.inv(2j * np.eye(4) - square_plant.A)
        expected = np.linalg.solve(np.eye(2) - square_plant.C @ R @ L1, transfer_eval(square_plant, 2j))
        assert np.allclose(PL, expected)

    def test_unknown_choice(self, square_plant, diagonal_exo):
        """Test that an unknown K1 choice is rejected."""
        with pytest.raises(PreconditionError):
            triangular_controller_diag(square_plant, diagonal_exo, k1_choice="random")
