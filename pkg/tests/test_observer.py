"""Tests for the observer-based controller family."""

import numpy as np
import pytest

from controllers.observer import (
    closed_loop_transfer,
    default_g2,
    observer_controller,
    observer_controller_diag,
    sylvester_structured_6,
    triangularize_closed_loop,
)
from controllers.stabilize import lqr_gain
from internal_model.builders import InternalModelSpec, build_jordan_internal_model
from internal_model.certificate import certify_rorp
from numerics.equations import sylvester_kronecker
from numerics.errors import DimensionError, NumericalError, PreconditionError, ShapeError
from numerics.linalg import matrix_norm
from sysmodel.state_space import StateSpace, assemble_closed_loop, exosystem_from_frequencies, transfer_eval


class TestStructuredSylvester:
    """Test the chain-wise solution of G1 H = H A_K + G2 C_K."""

    def test_matches_kronecker(self, square_plant, jordan_exo, rng):
        """Test against the dense Kronecker oracle."""
        K21 = lqr_gain(square_plant.A, square_plant.B)
        A_K = square_plant.A + square_plant.B @ K21
        C_K = square_plant.C
        spec = InternalModelSpec.from_exosystem(jordan_exo, 2)
        G1 = build_jordan_internal_model(spec)
        G2 = rng.standard_normal((spec.dimension, 2))
        H = sylvester_structured_6(A_K, C_K, G2, jordan_exo)
        # H A_K - G1 H = -G2 C_K
        assert np.allclose(H, sylvester_kronecker(G1, A_K, -G2 @ C_K), atol=1e-9)

    def test_scalar_worked_example(self):
        """Test H = (-1, 1) for A_K = -1, C_K = 1 and a size-2 chain at 0 with G2 = (0, 1)."""
        exo = exosystem_from_frequencies([0.0], [2], state_dim=1, output_dim=1)
        H = sylvester_structured_6([[-1.0]], [[1.0]], np.array([[0.0], [1.0]]), exo)
        assert np.allclose(H, [[-1.0], [1.0]])

    def test_wrong_g2_shape(self, square_plant, diagonal_exo):
        """Test that G2 must be (p r) x p."""
        with pytest.raises(DimensionError):
            sylvester_structured_6(square_plant.A, square_plant.C, np.ones((3, 2)), diagonal_exo)


class TestObserverController:
    """Test the general observer-based construction."""

    def test_jordan_exosystem(self, square_plant, jordan_exo):
        """Test stability, certificate and the triangular similarity."""
        ctrl, record = observer_controller(square_plant, jordan_exo)
        cl = assemble_closed_loop(square_plant, ctrl, jordan_exo)
        assert cl.is_hurwitz
        assert record.residual < 1e-10
        cert = certify_rorp(square_plant, ctrl, jordan_exo)
        assert cert.solves_rorp
        assert cert.regulates

        form = triangularize_closed_loop(cl, record)
        assert form.lower_norm <= 1e-9 * matrix_norm(cl.Ae)
        A, B, C = square_plant.A, square_plant.B, square_plant.C
        assert np.allclose(form.diagonal_blocks[0], A + B @ record.K21)
        assert np.allclose(form.diagonal_blocks[1], record.G1 + record.B1 @ record.K1)
        assert np.allclose(form.diagonal_blocks[2], A + record.L @ C)

    def test_gain_relations(self, square_plant, jordan_exo):
        """Test B1 = H B + G2 D and K2 = K21 + K1 H."""
        _, record = observer_controller(square_plant, jordan_exo)
        assert np.allclose(record.B1, record.H @ square_plant.B + record.G2 @ square_plant.D)
        assert np.allclose(record.K2, record.K21 + record.K1 @ record.H)

    def test_default_g2(self):
        """Test that the identity sits in the last block of each chain."""
        G2 = default_g2(InternalModelSpec((0.0, 1.0), (2, 1), 1))
        assert np.allclose(G2[:, 0], [0.0, 1.0, 1.0])

    def test_singular_last_block(self, square_plant, jordan_exo):
        """Test that a singular last chain block is rejected."""
        with pytest.raises(PreconditionError):
            observer_controller(square_plant, jordan_exo, G2=np.zeros((6, 2)))

    def test_non_square_plant(self, random_plant, diagonal_exo):
        """Test that m != p is rejected."""
        plant = random_plant(4, 3, 2, seed=4)
        with pytest.raises(ShapeError):
            observer_controller(plant, diagonal_exo)


class TestObserverDiagonal:
    """Test the diagonal variant with K1 = -B1*."""

    def test_inverse_transfer_choice(self, square_plant, diagonal_exo):
        """Test G2^k = P_K^-1 giving B1 = I and K1 = -I exactly."""
        ctrl, record = observer_controller_diag(square_plant, diagonal_exo)
        stacked = np.vstack([np.eye(2), np.eye(2)])
        assert np.allclose(record.B1, stacked, atol=1e-9)
        assert np.array_equal(record.K1, -stacked.T)
        for k, w in enumerate(diagonal_exo.frequencies):
            PK = closed_loop_transfer(square_plant, record.K21, w, k)
            assert np.allclose(record.G2[2 * k:2 * k + 2] @ PK, np.eye(2), atol=1e-9)
        cl = assemble_closed_loop(square_plant, ctrl, diagonal_exo)
        assert cl.is_hurwitz
        assert certify_rorp(square_plant, ctrl, diagonal_exo).solves_rorp

    def test_closed_form_matches_identity(self, square_plant, diagonal_exo):
        """Test that -B1* from the Sylvester solution agrees with -I."""
        _, record = observer_controller_diag(square_plant, diagonal_exo)
        assert record.identity_gap is not None
        assert record.identity_gap < 1e-8

    def test_closed_form_mismatch(self, square_plant, diagonal_exo, mocker):
        """Test that -B1* far from -I is a numerical error."""
        mocker.patch(
            "controllers.observer.closed_loop_transfer",
            side_effect=lambda *args: 2.0 * closed_loop_transfer(*args),
        )
        with pytest.raises(NumericalError):
            observer_controller_diag(square_plant, diagonal_exo)

    def test_identity_choice(self, square_plant, diagonal_exo):
        """Test K1 = -B1* with G2^k = I."""
        ctrl, record = observer_controller_diag(square_plant, diagonal_exo, g2_choice="identity")
        assert np.allclose(record.K1, -record.B1.conj().T)
        assert record.identity_gap is None
        assert assemble_closed_loop(square_plant, ctrl, diagonal_exo).is_hurwitz

    def test_closed_loop_transfer_identity(self, square_plant):
        """Test P_K(i w) = P(i w) (I - K21 R(i w, A) B)^-1."""
        K21 = lqr_gain(square_plant.A, square_plant.B)
        PK = closed_loop_transfer(square_plant, K21, 1.0, 0)
        R = np.linalg.inv(1j * np.eye(4) - square_plant.A)
        expected = transfer_eval(square_plant, 1j) @ np.linalg.inv(np.eye(2) - K21 @ R @ square_plant.B)
        assert np.allclose(PK, expected)

    def test_wrong_block_count(self, square_plant, diagonal_exo):
        """Test that custom G2 blocks must match the frequency count."""
        with pytest.raises(DimensionError):
            observer_controller_diag(square_plant, diagonal_exo, g2_choice=[np.eye(2)])

    def test_scalar_plant(self):
        """Test the diagonal variant on an unstable scalar plant."""
        plant = StateSpace(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]])
        exo = exosystem_from_frequencies([0.0, 1.0, -1.0], [1, 1, 1], E=np.zeros((1, 3)), F=[[-1.0, 0.5, 0.5]])
        ctrl, _ = observer_controller_diag(plant, exo)
        assert ctrl.dimension == 4
        assert certify_rorp(plant, ctrl, exo).solves_rorp
